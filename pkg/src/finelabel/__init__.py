"""Fine-grained finding label extraction from radiology-style report text."""

from importlib import resources
from pathlib import Path

from .corpus import (
    LabelCatalog,
    catalog_from_records,
    coverage_stats,
    filter_support,
    mine_corpus,
    read_manifest,
)
from .labeler import FineGrainedLabel, parse_label, render_label
from .lexicon import (
    CoreFinding,
    FindingType,
    Lexicon,
    LexiconError,
    ModifierCategory,
    ModifierTerm,
    SlotTemplate,
    allowed_modifiers,
    load_lexicon,
    lookup_core,
)
from .matcher import (
    Alignment,
    ConceptMention,
    MatchParams,
    VocabularyIndex,
    build_index,
    candidate_phrases,
    detect_phrases,
    lcf_align,
    smallest_prefix,
)
from .negation import NegationScope, negation_scope, polarity
from .parsegraph import (
    NodeTuple,
    ParseNode,
    PhrasalGroup,
    classify_and_merge,
    ingest_parse,
    node_tuples,
    phrasal_groups,
    read_parses,
)
from .pipeline import Extractor, FindingLabelExtractor
from .textprep import Report, Sentence, read_reports, report_sentences, segment_sections, split_sentences

__version__ = "0.1.0"


def bundled_lexicon_path() -> Path:
    """Path of the small lexicon shipped for tests and demos."""
    return Path(resources.files("finelabel") / "data" / "test_lexicon.json")


__all__ = [
    "Alignment",
    "ConceptMention",
    "CoreFinding",
    "Extractor",
    "FindingLabelExtractor",
    "FindingType",
    "FineGrainedLabel",
    "LabelCatalog",
    "Lexicon",
    "LexiconError",
    "MatchParams",
    "ModifierCategory",
    "ModifierTerm",
    "NegationScope",
    "NodeTuple",
    "ParseNode",
    "PhrasalGroup",
    "Report",
    "Sentence",
    "SlotTemplate",
    "VocabularyIndex",
    "allowed_modifiers",
    "build_index",
    "candidate_phrases",
    "catalog_from_records",
    "classify_and_merge",
    "coverage_stats",
    "detect_phrases",
    "filter_support",
    "ingest_parse",
    "lcf_align",
    "load_lexicon",
    "lookup_core",
    "mine_corpus",
    "negation_scope",
    "node_tuples",
    "parse_label",
    "phrasal_groups",
    "polarity",
    "read_manifest",
    "read_parses",
    "read_reports",
    "render_label",
    "report_sentences",
    "segment_sections",
    "smallest_prefix",
    "split_sentences",
    "bundled_lexicon_path",
    "__version__",
]
