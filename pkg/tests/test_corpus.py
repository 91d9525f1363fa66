import random

import pytest

from finelabel.corpus import (
    LabelCatalog,
    catalog_from_records,
    coverage_stats,
    filter_support,
    mine_corpus,
    read_manifest,
)
from finelabel.pipeline import ReportStats
from finelabel.textprep import Report

R1_LABELS = {
    "anatomicalfinding|yes|normal anatomically|lungs",
    "disease|no|airspace disease||||||||focal",
    "anatomicalfinding|no|pleural effusion",
    "anatomicalfinding|no|pneumothorax",
}


def test_fixture_corpus_catalog(extractor, fixture_reports, fixture_parses):
    records, catalog = mine_corpus(fixture_reports, fixture_parses, extractor)
    assert len(records) == 10
    assert catalog.sentences_processed == 5
    assert catalog.sentences_with_finding == 4
    assert catalog.sentences_skipped == 0
    assert set(catalog.aggregates) >= R1_LABELS
    for label in R1_LABELS:
        agg = catalog.aggregates[label]
        assert agg.sentence_count == 1
        assert agg.report_count == 1
        assert agg.image_support == 2  # two frontal images on that report
    assert catalog.aggregates["disease|no|cancer"].image_support == 1


def test_empty_corpus(extractor):
    records, catalog = mine_corpus([], None, extractor)
    assert records == []
    assert catalog.aggregates == {}
    assert catalog.sentences_processed == 0


def test_non_indicative_corpus_zero_coverage(extractor):
    reports = [
        Report(report_id=f"r{i}", text="FINDINGS: chest comparison.") for i in range(4)
    ]
    _, catalog = mine_corpus(reports, None, extractor)
    report = coverage_stats(catalog)
    assert report.sentences_processed == 4
    assert report.finding_fraction == 0.0
    assert report.distinct_labels == 0


def test_order_independence(extractor, fixture_reports, fixture_parses):
    records_a, catalog_a = mine_corpus(fixture_reports, fixture_parses, extractor)
    shuffled = list(fixture_reports)
    random.Random(5).shuffle(shuffled)
    records_b, catalog_b = mine_corpus(shuffled, fixture_parses, extractor)
    assert records_a == records_b
    assert catalog_a.to_json_text() == catalog_b.to_json_text()


def test_split_merge_equals_whole(extractor, fixture_reports, fixture_parses):
    _, whole = mine_corpus(fixture_reports, fixture_parses, extractor)
    _, left = mine_corpus(fixture_reports[:2], fixture_parses, extractor)
    _, right = mine_corpus(fixture_reports[2:], fixture_parses, extractor)
    merged = left.merge(right)
    assert merged.to_json_text() == whole.to_json_text()


def test_merge_deduplicates_shared_reports(extractor, fixture_reports, fixture_parses):
    _, part = mine_corpus(fixture_reports[:1], fixture_parses, extractor)
    doubled = part.merge(part)
    for label, agg in part.aggregates.items():
        assert doubled.aggregates[label].image_support == agg.image_support
        assert doubled.aggregates[label].report_count == agg.report_count


def _catalog_with_supports(supports):
    catalog = LabelCatalog()
    for label, support in supports.items():
        for k in range(support):
            catalog.add(label, f"{label}-r{k}", 0, [f"{label}-img{k}"])
    return catalog


def test_filter_support_boundary():
    catalog = _catalog_with_supports({"A": 150, "B": 99, "C": 100})
    assert filter_support(catalog, 100) == ["A", "C"]


def test_filter_support_zero_keeps_all():
    catalog = _catalog_with_supports({"A": 3, "B": 1})
    assert set(filter_support(catalog, 0)) == {"A", "B"}


def test_filter_support_planted_catalog():
    rng = random.Random(11)
    supports = {}
    for i in range(7):
        supports[f"high{i}"] = rng.randint(5, 12)
    for i in range(13):
        supports[f"low{i}"] = rng.randint(0, 4)
    supports = {k: v for k, v in supports.items() if v > 0}
    catalog = _catalog_with_supports(supports)
    selected = filter_support(catalog, 5)
    assert sorted(selected) == sorted(f"high{i}" for i in range(7))


def test_filter_support_monotone():
    catalog = _catalog_with_supports({"A": 10, "B": 5, "C": 2, "D": 7})
    for low, high in [(0, 3), (3, 6), (5, 11)]:
        assert set(filter_support(catalog, high)) <= set(filter_support(catalog, low))


def test_filter_support_ordering():
    catalog = _catalog_with_supports({"zed": 5, "alpha": 5, "big": 9})
    assert filter_support(catalog, 1) == ["big", "alpha", "zed"]


def test_coverage_fraction():
    catalog = LabelCatalog(sentences_processed=10, sentences_with_finding=9)
    catalog.add("anatomicalfinding|yes|scarring", "r", 0, ["i"])
    report = coverage_stats(catalog)
    assert report.finding_fraction == pytest.approx(0.9)
    assert "0.9000" in report.to_text()


def test_coverage_empty_catalog():
    report = coverage_stats(LabelCatalog())
    assert report.finding_fraction is None
    assert report.distinct_labels == 0
    assert "n/a" in report.to_text()
    assert report.to_dict()["finding_fraction"] is None


def test_coverage_single_sentence_corpus(extractor, fixture_reports, fixture_parses):
    first = [r for r in fixture_reports if r.report_id == "R1"]
    _, catalog = mine_corpus(first, fixture_parses, extractor)
    report = coverage_stats(catalog)
    assert report.sentences_processed == 1
    assert report.distinct_labels == 4
    polarities = [label.split("|")[1] for label in catalog.aggregates]
    assert sorted(polarities) == ["no", "no", "no", "yes"]


def test_coverage_histogram_by_type(extractor, fixture_reports, fixture_parses):
    _, catalog = mine_corpus(fixture_reports, fixture_parses, extractor)
    per_type = coverage_stats(catalog).per_type
    assert per_type["anatomicalfinding"]["distinct_labels"] == 6
    assert per_type["disease"]["distinct_labels"] == 2
    assert per_type["tubesandlines"]["distinct_labels"] == 1
    assert per_type["tubesandlinesfinding"]["distinct_labels"] == 1


def test_parallel_jobs_identical(extractor, fixture_reports, fixture_parses):
    records_1, catalog_1 = mine_corpus(fixture_reports, fixture_parses, extractor, jobs=1)
    records_4, catalog_4 = mine_corpus(fixture_reports, fixture_parses, extractor, jobs=4)
    assert records_1 == records_4
    assert catalog_1.to_json_text() == catalog_4.to_json_text()


def test_catalog_from_records_with_manifest(extractor, fixture_reports, fixture_parses):
    records, direct = mine_corpus(fixture_reports, fixture_parses, extractor)
    image_map = {r.report_id: set(r.image_ids) for r in fixture_reports}
    rebuilt = catalog_from_records(
        records,
        image_map,
        totals=ReportStats(
            sentences_processed=direct.sentences_processed,
            sentences_with_finding=direct.sentences_with_finding,
            sentences_skipped=direct.sentences_skipped,
        ),
    )
    assert rebuilt.to_json_text() == direct.to_json_text()


def test_catalog_from_records_report_fallback():
    records = [
        {"report_id": "a", "sentence_index": 0, "label": "L"},
        {"report_id": "b", "sentence_index": 0, "label": "L"},
    ]
    catalog = catalog_from_records(records)
    assert catalog.aggregates["L"].image_support == 2


def test_skipped_sentences_counted(extractor, fixture_reports):
    # no parses at all in strict mode: every finding sentence is skipped
    with_findings = [r for r in fixture_reports if r.report_id != "R5"]
    records, catalog = mine_corpus(with_findings, {}, extractor)
    assert records == []
    assert catalog.sentences_skipped == 4


def test_read_manifest(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("report_id,image_id\nr1,i1\nr1,i2\nr2,i3\n", encoding="utf-8")
    mapping = read_manifest(path)
    assert mapping == {"r1": {"i1", "i2"}, "r2": {"i3"}}


def test_read_manifest_without_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("r1,i1\n", encoding="utf-8")
    assert read_manifest(path) == {"r1": {"i1"}}


def test_read_manifest_malformed(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("r1,i1,extra\n", encoding="utf-8")
    with pytest.raises(ValueError, match="manifest"):
        read_manifest(path)


def test_image_support_bounded_by_contributing_reports(extractor, fixture_reports, fixture_parses):
    _, catalog = mine_corpus(fixture_reports, fixture_parses, extractor)
    images_by_report = {r.report_id: set(r.image_ids) for r in fixture_reports}
    for aggregate in catalog.aggregates.values():
        ceiling = sum(len(images_by_report[rid]) for rid in aggregate.report_ids)
        assert aggregate.image_support <= ceiling


def test_image_support_counts_distinct_images(extractor, fixture_reports, fixture_parses):
    # inline ids and manifest ids overlap; support still counts each image once
    image_map = {"R1": {"img-r1-a", "img-r1-b"}}
    _, catalog = mine_corpus(fixture_reports, fixture_parses, extractor, image_map=image_map)
    assert catalog.aggregates["anatomicalfinding|no|pneumothorax"].image_support == 2
