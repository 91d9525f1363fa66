"""Corpus mining: run extraction over many reports and aggregate support.

The catalog counts, per rendered label, the distinct sentences, reports,
and images that produced it. Aggregation is a commutative merge of sets,
so report order and worker count never change the result.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .labeler import label_record
from .pipeline import Extractor, ParseMap, ReportStats
from .textprep import Report

_VIEWPOINT_HEAD = "views"


@dataclass
class LabelAggregate:
    sentence_keys: set[tuple[str, int]] = field(default_factory=set)
    report_ids: set[str] = field(default_factory=set)
    image_ids: set[str] = field(default_factory=set)

    @property
    def sentence_count(self) -> int:
        return len(self.sentence_keys)

    @property
    def report_count(self) -> int:
        return len(self.report_ids)

    @property
    def image_support(self) -> int:
        return len(self.image_ids)


@dataclass
class LabelCatalog:
    aggregates: dict[str, LabelAggregate] = field(default_factory=dict)
    sentences_processed: int = 0
    sentences_with_finding: int = 0
    sentences_skipped: int = 0

    def add(
        self,
        label: str,
        report_id: str,
        sentence_index: int,
        image_ids: Iterable[str] = (),
    ) -> None:
        aggregate = self.aggregates.setdefault(label, LabelAggregate())
        aggregate.sentence_keys.add((report_id, sentence_index))
        aggregate.report_ids.add(report_id)
        aggregate.image_ids.update(image_ids)

    def add_totals(self, stats: ReportStats) -> None:
        self.sentences_processed += stats.sentences_processed
        self.sentences_with_finding += stats.sentences_with_finding
        self.sentences_skipped += stats.sentences_skipped

    def merge(self, other: "LabelCatalog") -> "LabelCatalog":
        """Combine two partial catalogs; image and report sets deduplicate."""
        result = LabelCatalog(
            sentences_processed=self.sentences_processed + other.sentences_processed,
            sentences_with_finding=self.sentences_with_finding + other.sentences_with_finding,
            sentences_skipped=self.sentences_skipped + other.sentences_skipped,
        )
        for source in (self.aggregates, other.aggregates):
            for label, aggregate in source.items():
                target = result.aggregates.setdefault(label, LabelAggregate())
                target.sentence_keys |= aggregate.sentence_keys
                target.report_ids |= aggregate.report_ids
                target.image_ids |= aggregate.image_ids
        return result

    def to_dict(self) -> dict:
        return {
            "labels": {
                label: {
                    "sentence_count": agg.sentence_count,
                    "report_count": agg.report_count,
                    "image_support": agg.image_support,
                }
                for label, agg in sorted(self.aggregates.items())
            },
            "totals": {
                "sentences_processed": self.sentences_processed,
                "sentences_with_finding": self.sentences_with_finding,
                "sentences_skipped": self.sentences_skipped,
                "distinct_labels": len(self.aggregates),
            },
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Mining
# ---------------------------------------------------------------------------

_worker_state: dict = {}


def _init_worker(extractor: Extractor, parses: Optional[ParseMap]) -> None:
    _worker_state["extractor"] = extractor
    _worker_state["parses"] = parses


def _extract_one(report: Report):
    extractor: Extractor = _worker_state["extractor"]
    labels, stats = extractor.report_labels(report, _worker_state["parses"])
    records = [label_record(label, extractor.lexicon) for label in labels]
    return report.report_id, records, stats


def mine_corpus(
    reports: Iterable[Report],
    parses: Optional[ParseMap],
    extractor: Extractor,
    image_map: Optional[Mapping[str, Iterable[str]]] = None,
    jobs: int = 1,
) -> tuple[list[dict], LabelCatalog]:
    """Extract every report and aggregate the label catalog.

    Reports are processed in report_id order so the label stream is
    byte-identical however the input was ordered and whatever jobs is.
    Image support counts distinct image ids, pooled from the reports'
    inline ids and the optional manifest mapping.
    """
    ordered = sorted(reports, key=lambda r: r.report_id)
    images_by_report = {
        report.report_id: set(report.image_ids)
        | set(image_map.get(report.report_id, ()) if image_map else ())
        for report in ordered
    }

    if jobs <= 1:
        _init_worker(extractor, parses)
        results = [_extract_one(report) for report in ordered]
    else:
        with multiprocessing.Pool(
            processes=jobs, initializer=_init_worker, initargs=(extractor, parses)
        ) as pool:
            results = pool.map(_extract_one, ordered)

    catalog = LabelCatalog()
    records: list[dict] = []
    for report_id, report_records, stats in results:
        catalog.add_totals(stats)
        for record in report_records:
            records.append(record)
            catalog.add(
                record["label"],
                report_id,
                record["sentence_index"],
                images_by_report.get(report_id, ()),
            )
    return records, catalog


def catalog_from_records(
    records: Iterable[dict],
    image_map: Optional[Mapping[str, Iterable[str]]] = None,
    totals: Optional[ReportStats] = None,
) -> LabelCatalog:
    """Rebuild a catalog from a stored label stream.

    Without a manifest every report counts as one image, a documented
    fallback for corpora distributed without image lists.
    """
    catalog = LabelCatalog()
    for record in records:
        report_id = record["report_id"]
        if image_map is not None:
            image_ids: Iterable[str] = image_map.get(report_id, ())
        else:
            image_ids = (f"report:{report_id}",)
        catalog.add(record["label"], report_id, record["sentence_index"], image_ids)
    if totals is not None:
        catalog.add_totals(totals)
    return catalog


def filter_support(catalog: LabelCatalog, min_support: int) -> list[str]:
    """Labels whose image support reaches min_support, best supported
    first, ties alphabetical."""
    selected = [
        (label, agg.image_support)
        for label, agg in catalog.aggregates.items()
        if agg.image_support >= min_support
    ]
    selected.sort(key=lambda item: (-item[1], item[0]))
    return [label for label, _ in selected]


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass
class CoverageReport:
    sentences_processed: int
    sentences_with_finding: int
    sentences_skipped: int
    finding_fraction: Optional[float]
    distinct_labels: int
    per_type: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {
            "sentences_processed": self.sentences_processed,
            "sentences_with_finding": self.sentences_with_finding,
            "sentences_skipped": self.sentences_skipped,
            "finding_fraction": self.finding_fraction,
            "distinct_labels": self.distinct_labels,
            "per_type": self.per_type,
        }

    def to_text(self) -> str:
        fraction = (
            f"{self.finding_fraction:.4f}" if self.finding_fraction is not None else "n/a"
        )
        lines = [
            f"sentences processed:    {self.sentences_processed}",
            f"sentences with finding: {self.sentences_with_finding}",
            f"sentences skipped:      {self.sentences_skipped}",
            f"finding fraction:       {fraction}",
            f"distinct labels:        {self.distinct_labels}",
            "labels by finding type:",
        ]
        if not self.per_type:
            lines.append("  (none)")
        for name, counts in sorted(self.per_type.items()):
            lines.append(
                f"  {name}: {counts['distinct_labels']} labels, "
                f"{counts['sentence_occurrences']} sentence occurrences"
            )
        return "\n".join(lines) + "\n"


def coverage_stats(catalog: LabelCatalog) -> CoverageReport:
    """Sentence coverage and per-finding-type label histograms."""
    return coverage_from_counts(catalog.to_dict())


def coverage_from_counts(data: dict) -> CoverageReport:
    """Coverage report from a serialized catalog (the catalog JSON form)."""
    per_type: dict[str, dict[str, int]] = {}
    for label, counts in data.get("labels", {}).items():
        head = label.split("|", 1)[0]
        type_name = "viewpoint" if head == _VIEWPOINT_HEAD else head
        bucket = per_type.setdefault(
            type_name, {"distinct_labels": 0, "sentence_occurrences": 0}
        )
        bucket["distinct_labels"] += 1
        bucket["sentence_occurrences"] += counts.get("sentence_count", 0)
    totals = data.get("totals", {})
    processed = totals.get("sentences_processed", 0)
    with_finding = totals.get("sentences_with_finding", 0)
    return CoverageReport(
        sentences_processed=processed,
        sentences_with_finding=with_finding,
        sentences_skipped=totals.get("sentences_skipped", 0),
        finding_fraction=(with_finding / processed) if processed > 0 else None,
        distinct_labels=len(data.get("labels", {})),
        per_type=per_type,
    )


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def read_manifest(path: Union[str, Path]) -> dict[str, set[str]]:
    """CSV of report_id,image_id rows, an optional header tolerated."""
    mapping: dict[str, set[str]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            if lineno == 1 and [c.strip().lower() for c in row] == ["report_id", "image_id"]:
                continue
            if len(row) != 2:
                raise ValueError(
                    f"{path}:{lineno}: manifest rows need exactly report_id,image_id"
                )
            mapping.setdefault(row[0].strip(), set()).add(row[1].strip())
    return mapping


def write_label_stream(records: Sequence[dict], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def read_label_stream(path: Union[str, Path]) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed label record: {exc.msg}") from exc
    return records
