"""End-to-end extraction: detection, grouping, negation, completion.

The Extractor bundles a validated lexicon with matching parameters and
runs the four per-sentence stages. FindingLabelExtractor wraps it in a
scikit-learn transformer so extraction composes with ordinary pipelines:
fit binds the lexicon and builds the vocabulary index, transform maps
report records to label records.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .labeler import (
    FineGrainedLabel,
    associate_modifiers,
    complete_pattern,
    label_record,
)
from .lexicon import Lexicon, load_lexicon
from .matcher import MatchParams, VocabularyIndex, build_index, detect_phrases
from .negation import (
    DEFAULT_FLAT_WINDOW,
    DEFAULT_SCOPE_RELATIONS,
    negation_scope,
    polarity,
)
from .parsegraph import (
    DEFAULT_GROUPING_RELATIONS,
    ParseError,
    ParseMismatchError,
    ParseNode,
    classify_and_merge,
    flat_groups,
    node_tuples,
    phrasal_groups,
    read_parses,
)
from .textprep import Report, Sentence, report_sentences

logger = logging.getLogger(__name__)

DEFAULT_SECTIONS = ("findings", "impression")

ParseMap = Mapping[tuple[str, int], Sequence[ParseNode]]


@dataclass
class ReportStats:
    sentences_processed: int = 0
    sentences_with_finding: int = 0
    sentences_skipped: int = 0

    def merge(self, other: "ReportStats") -> None:
        self.sentences_processed += other.sentences_processed
        self.sentences_with_finding += other.sentences_with_finding
        self.sentences_skipped += other.sentences_skipped


@dataclass
class Extractor:
    """The extraction engine for one lexicon and parameter set."""

    lexicon: Lexicon
    params: MatchParams = field(default_factory=MatchParams)
    grouping_relations: frozenset[str] = DEFAULT_GROUPING_RELATIONS
    scope_relations: frozenset[str] = DEFAULT_SCOPE_RELATIONS
    sections: Optional[tuple[str, ...]] = DEFAULT_SECTIONS
    flat: bool = False
    parse_negation: bool = True
    flat_window: int = DEFAULT_FLAT_WINDOW
    index: VocabularyIndex = None  # built in __post_init__

    def __post_init__(self) -> None:
        if self.index is None:
            self.index = build_index(self.lexicon)

    def sentence_labels(
        self, sentence: Sentence, parse_nodes: Optional[Sequence[ParseNode]] = None
    ) -> list[FineGrainedLabel]:
        """Labels for one sentence; parse_nodes may be omitted in flat mode."""
        mentions = detect_phrases(sentence, self.index, self.params)
        core_mentions = [m for m in mentions if m.is_core]
        if not core_mentions:
            return []
        modifier_mentions = [m for m in mentions if not m.is_core]

        if self.flat:
            groups = flat_groups(len(sentence.tokens))
            scope = None
            polarity_groups = None
        else:
            if parse_nodes is None:
                raise ParseMismatchError(
                    f"no parse for ({sentence.report_id}, {sentence.sentence_index}) "
                    "and flat mode is off"
                )
            if len(parse_nodes) != len(sentence.tokens):
                raise ParseMismatchError(
                    f"parse for ({sentence.report_id}, {sentence.sentence_index}) has "
                    f"{len(parse_nodes)} rows but the sentence has {len(sentence.tokens)} tokens"
                )
            groups = phrasal_groups(
                node_tuples(parse_nodes, self.grouping_relations), len(sentence.tokens)
            )
            scope = None
            if self.parse_negation:
                scope = negation_scope(
                    parse_nodes, self.lexicon.negation_cues, self.scope_relations
                )

        classified = classify_and_merge(groups, mentions)
        if not self.flat:
            polarity_groups = classified
        attached = associate_modifiers(classified, core_mentions, modifier_mentions)

        labels = []
        for mention in core_mentions:
            answer = polarity(
                mention, scope, polarity_groups, self.lexicon, self.flat_window
            )
            label = complete_pattern(mention, attached[mention], answer, self.lexicon)
            if label is not None:
                labels.append(label)
        labels.sort(
            key=lambda l: (l.provenance.token_positions, l.finding_type.value, l.core_finding)
        )
        return labels

    def report_labels(
        self, report: Report, parses: Optional[ParseMap] = None
    ) -> tuple[list[FineGrainedLabel], ReportStats]:
        """Labels and sentence accounting for one report.

        Sentences whose parse is missing or inconsistent are skipped with
        a log line; a corpus run never aborts on one bad record.
        """
        stats = ReportStats()
        labels: list[FineGrainedLabel] = []
        for sentence in report_sentences(report):
            if self.sections is not None and sentence.section not in self.sections:
                continue
            parse_nodes = None
            if not self.flat and parses is not None:
                parse_nodes = parses.get((report.report_id, sentence.sentence_index))
            try:
                found = self.sentence_labels(sentence, parse_nodes)
            except ParseError as exc:
                logger.warning("skipping sentence: %s", exc)
                stats.sentences_skipped += 1
                continue
            stats.sentences_processed += 1
            if found:
                stats.sentences_with_finding += 1
                labels.extend(found)
        return labels, stats


class FindingLabelExtractor(BaseEstimator, TransformerMixin):
    """scikit-learn transformer over report records.

    Parameters mirror the extraction engine: the lexicon (path or loaded
    Lexicon), the matching thresholds, the section filter, and either a
    parse source or flat mode. fit builds the vocabulary index; transform
    maps an iterable of reports (Report objects or dicts with report_id,
    text, image_ids) to a list of label records.
    """

    def __init__(
        self,
        lexicon=None,
        tau: float = 0.5,
        gamma: float = 0.7,
        delta: float = 0.05,
        sections: Optional[tuple[str, ...]] = DEFAULT_SECTIONS,
        flat: bool = False,
        parses=None,
        grouping_relations: Optional[frozenset[str]] = None,
        scope_relations: Optional[frozenset[str]] = None,
        parse_negation: bool = True,
        flat_window: int = DEFAULT_FLAT_WINDOW,
    ):
        self.lexicon = lexicon
        self.tau = tau
        self.gamma = gamma
        self.delta = delta
        self.sections = sections
        self.flat = flat
        self.parses = parses
        self.grouping_relations = grouping_relations
        self.scope_relations = scope_relations
        self.parse_negation = parse_negation
        self.flat_window = flat_window

    def fit(self, X=None, y=None):
        if self.lexicon is None:
            raise ValueError("a lexicon (path or Lexicon) is required")
        if isinstance(self.lexicon, Lexicon):
            lexicon = self.lexicon
        else:
            lexicon = load_lexicon(self.lexicon)
        if not self.flat and self.parses is None:
            raise ValueError("parses are required unless flat=True")
        self.lexicon_ = lexicon
        self.extractor_ = Extractor(
            lexicon=lexicon,
            params=MatchParams(tau=self.tau, gamma=self.gamma, delta=self.delta),
            grouping_relations=(
                frozenset(self.grouping_relations)
                if self.grouping_relations is not None
                else DEFAULT_GROUPING_RELATIONS
            ),
            scope_relations=(
                frozenset(self.scope_relations)
                if self.scope_relations is not None
                else DEFAULT_SCOPE_RELATIONS
            ),
            sections=tuple(self.sections) if self.sections is not None else None,
            flat=self.flat,
            parse_negation=self.parse_negation,
            flat_window=self.flat_window,
        )
        self.parses_ = self._resolve_parses()
        return self

    def _resolve_parses(self) -> Optional[ParseMap]:
        if self.parses is None:
            return None
        if isinstance(self.parses, (str, Path)):
            return read_parses(self.parses)
        return self.parses

    def _check_fitted(self) -> None:
        if not hasattr(self, "extractor_"):
            raise NotFittedError(
                "This FindingLabelExtractor instance is not fitted yet; call fit first."
            )

    def transform(self, X: Iterable[Union[Report, dict]]) -> list[dict]:
        """Label records for every report, ordered by (report_id, sentence)."""
        self._check_fitted()
        records: list[dict] = []
        for item in X:
            report = self._as_report(item)
            labels, _ = self.extractor_.report_labels(report, self.parses_)
            records.extend(label_record(label, self.lexicon_) for label in labels)
        records.sort(key=lambda r: (r["report_id"], r["sentence_index"]))
        return records

    @staticmethod
    def _as_report(item: Union[Report, dict]) -> Report:
        if isinstance(item, Report):
            return item
        return Report(
            report_id=str(item["report_id"]),
            text=item["text"],
            image_ids=tuple(item.get("image_ids", [])),
        )
