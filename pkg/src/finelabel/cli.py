"""Command line entry point.

Subcommands: validate-lexicon, extract, mine, stats. Exit codes: 0 on
success, 1 for usage or configuration problems, 2 for fatal data problems.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corpus import (
    catalog_from_records,
    coverage_from_counts,
    filter_support,
    mine_corpus,
    read_label_stream,
    read_manifest,
    write_label_stream,
)
from .lexicon import LexiconError, load_lexicon
from .matcher import MatchParams
from .parsegraph import DEFAULT_GROUPING_RELATIONS, ParseError, read_parses
from .negation import DEFAULT_SCOPE_RELATIONS
from .pipeline import DEFAULT_SECTIONS, Extractor, ReportStats
from .textprep import read_reports

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2

logger = logging.getLogger(__name__)


class _ConfigProblem(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # usage problems are configuration problems, not data problems
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="finelabel",
        description="Fine-grained finding label extraction from report text.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate-lexicon", help="check a lexicon file")
    p_validate.add_argument("lexicon", help="lexicon JSON path")
    p_validate.set_defaults(func=cmd_validate_lexicon)

    p_extract = sub.add_parser("extract", help="extract labels from reports")
    p_extract.add_argument("--lexicon", required=True, help="lexicon JSON path")
    p_extract.add_argument("--reports", required=True, help="reports JSONL path")
    p_extract.add_argument("--parses", help="dependency parse file (CoNLL-U style)")
    p_extract.add_argument("--flat", action="store_true",
                           help="no-parse mode: one group per sentence (lower fidelity)")
    p_extract.add_argument("--no-parse-negation", action="store_true",
                           help="skip parse-based negation scope; vocabulary rules only")
    p_extract.add_argument("--tau", type=float, default=None, help="word similarity threshold")
    p_extract.add_argument("--gamma", type=float, default=None, help="phrase match threshold")
    p_extract.add_argument("--delta", type=float, default=None, help="interior gap penalty")
    p_extract.add_argument("--sections", default=None,
                           help="comma-separated section filter, or 'all' (default findings,impression)")
    p_extract.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_extract.add_argument("--config", help="JSON config file; flags override its values")
    p_extract.add_argument("--out", required=True, help="labels JSONL output path")
    p_extract.add_argument("--stats-out", help="extraction totals JSON output path")
    p_extract.set_defaults(func=cmd_extract)

    p_mine = sub.add_parser("mine", help="aggregate a label catalog and select labels")
    p_mine.add_argument("--labels", required=True, help="labels JSONL path (extract output)")
    p_mine.add_argument("--manifest", help="CSV of report_id,image_id rows")
    p_mine.add_argument("--extract-stats", help="totals JSON written by extract --stats-out")
    p_mine.add_argument("--min-support", type=int, default=100,
                        help="minimum image support for selection (default 100)")
    p_mine.add_argument("--catalog-out", required=True, help="catalog JSON output path")
    p_mine.add_argument("--selected-out", help="selected label list output path")
    p_mine.set_defaults(func=cmd_mine)

    p_stats = sub.add_parser("stats", help="coverage statistics for a catalog")
    p_stats.add_argument("--catalog", required=True, help="catalog JSON path")
    p_stats.add_argument("--json-out", help="also write the report as JSON")
    p_stats.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _ConfigProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LexiconError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def cmd_validate_lexicon(args) -> int:
    path = Path(args.lexicon)
    if not path.exists():
        print(f"error: lexicon file not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        lexicon = load_lexicon(path)
    except LexiconError as exc:
        print(f"invalid lexicon: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(
        f"lexicon OK: {len(lexicon.core_findings)} core findings, "
        f"{len(lexicon.modifiers)} modifier terms, {len(lexicon.templates)} templates"
    )
    return EXIT_OK


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    config_path = Path(path)
    if not config_path.exists():
        raise _ConfigProblem(f"config file not found: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _ConfigProblem(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise _ConfigProblem("config file must hold a JSON object")
    return data


def _sections_value(raw) -> tuple[str, ...] | None:
    if raw is None:
        return DEFAULT_SECTIONS
    if isinstance(raw, str):
        if raw.strip().lower() == "all":
            return None
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    return tuple(raw)


def cmd_extract(args) -> int:
    config = _load_config(args.config)

    def setting(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return config.get(key, default)

    lexicon_path = Path(args.lexicon)
    reports_path = Path(args.reports)
    for path, what in ((lexicon_path, "lexicon"), (reports_path, "reports")):
        if not path.exists():
            raise _ConfigProblem(f"{what} file not found: {path}")

    flat = args.flat or bool(config.get("flat", False))
    parses_path = args.parses or config.get("parses")
    if not flat and parses_path is None:
        raise _ConfigProblem("no parse file given; pass --parses or use --flat")
    if parses_path is not None and not Path(parses_path).exists():
        raise _ConfigProblem(f"parse file not found: {parses_path}")

    try:
        params = MatchParams(
            tau=float(setting(args.tau, "tau", 0.5)),
            gamma=float(setting(args.gamma, "gamma", 0.7)),
            delta=float(setting(args.delta, "delta", 0.05)),
        )
    except ValueError as exc:
        raise _ConfigProblem(str(exc)) from exc

    lexicon = load_lexicon(lexicon_path)
    extractor = Extractor(
        lexicon=lexicon,
        params=params,
        grouping_relations=frozenset(config.get("grouping_relations", DEFAULT_GROUPING_RELATIONS)),
        scope_relations=frozenset(config.get("scope_relations", DEFAULT_SCOPE_RELATIONS)),
        sections=_sections_value(setting(args.sections, "sections", None)),
        flat=flat,
        parse_negation=not (args.no_parse_negation or bool(config.get("no_parse_negation", False))),
    )
    parses = read_parses(parses_path) if parses_path else None
    reports = list(read_reports(reports_path))
    jobs = args.jobs if args.jobs and args.jobs > 0 else 1

    records, catalog = mine_corpus(reports, parses, extractor, jobs=jobs)
    write_label_stream(records, args.out)
    if args.stats_out:
        totals = {
            "sentences_processed": catalog.sentences_processed,
            "sentences_with_finding": catalog.sentences_with_finding,
            "sentences_skipped": catalog.sentences_skipped,
        }
        Path(args.stats_out).write_text(
            json.dumps(totals, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    logger.info("wrote %d label records to %s", len(records), args.out)
    return EXIT_OK


def cmd_mine(args) -> int:
    labels_path = Path(args.labels)
    if not labels_path.exists():
        raise _ConfigProblem(f"labels file not found: {labels_path}")
    image_map = None
    if args.manifest:
        manifest_path = Path(args.manifest)
        if not manifest_path.exists():
            raise _ConfigProblem(f"manifest file not found: {manifest_path}")
        image_map = read_manifest(manifest_path)

    totals = None
    if args.extract_stats:
        stats_path = Path(args.extract_stats)
        if not stats_path.exists():
            raise _ConfigProblem(f"extract stats file not found: {stats_path}")
        raw = json.loads(stats_path.read_text(encoding="utf-8"))
        totals = ReportStats(
            sentences_processed=int(raw.get("sentences_processed", 0)),
            sentences_with_finding=int(raw.get("sentences_with_finding", 0)),
            sentences_skipped=int(raw.get("sentences_skipped", 0)),
        )

    records = read_label_stream(labels_path)
    catalog = catalog_from_records(records, image_map, totals)
    Path(args.catalog_out).write_text(catalog.to_json_text(), encoding="utf-8")

    selected = filter_support(catalog, args.min_support)
    if args.selected_out:
        Path(args.selected_out).write_text(
            "".join(label + "\n" for label in selected), encoding="utf-8"
        )
    print(f"{len(selected)} labels at image support >= {args.min_support}")
    return EXIT_OK


def cmd_stats(args) -> int:
    catalog_path = Path(args.catalog)
    if not catalog_path.exists():
        raise _ConfigProblem(f"catalog file not found: {catalog_path}")
    data = json.loads(catalog_path.read_text(encoding="utf-8"))
    report = coverage_from_counts(data)
    sys.stdout.write(report.to_text())
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
