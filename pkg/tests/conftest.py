import copy
import json
from pathlib import Path

import pytest

from finelabel import load_lexicon, bundled_lexicon_path
from finelabel.lexicon import CoreFinding, ModifierTerm
from finelabel.matcher import Alignment, ConceptMention, IndexedPhrase, build_index, family_of
from finelabel.parsegraph import read_parses
from finelabel.pipeline import Extractor
from finelabel.textprep import Report, read_reports, report_sentences

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(bundled_lexicon_path())


@pytest.fixture(scope="session")
def index(lexicon):
    return build_index(lexicon)


@pytest.fixture(scope="session")
def extractor(lexicon):
    return Extractor(lexicon=lexicon)


@pytest.fixture(scope="session")
def fixture_reports():
    return list(read_reports(FIXTURES / "reports.jsonl"))


@pytest.fixture(scope="session")
def fixture_parses():
    return read_parses(FIXTURES / "parses.conllu")


@pytest.fixture(scope="session")
def base_lexicon_dict():
    return json.loads(bundled_lexicon_path().read_text(encoding="utf-8"))


@pytest.fixture
def lexicon_dict(base_lexicon_dict):
    return copy.deepcopy(base_lexicon_dict)


def sentence_of(text, report_id="t", section="findings"):
    """Single test sentence from raw text via the real tokenizer."""
    sentences = report_sentences(Report(report_id=report_id, text=text))
    assert len(sentences) == 1, f"expected one sentence in {text!r}"
    sentence = sentences[0]
    return sentence if section is None else sentence


def mention_at(concept, sentence, positions, score=None):
    """Hand-built mention for association and polarity tests."""
    positions = tuple(sorted(positions))
    pairs = tuple((i, j, 1.0) for i, j in enumerate(positions))
    if isinstance(concept, CoreFinding):
        tokens = tuple(concept.canonical_name.lower().split())
    else:
        assert isinstance(concept, ModifierTerm)
        tokens = concept.phrase
    phrase = IndexedPhrase(
        phrase_id=f"{family_of(concept)}#test",
        tokens=tokens,
        required_prefixes=frozenset(),
        concept=concept,
        family_id=family_of(concept),
        source_text=" ".join(tokens),
    )
    return ConceptMention(
        concept=concept,
        sentence=sentence,
        alignment=Alignment(
            matched_pairs=pairs,
            score=score if score is not None else float(len(positions)),
        ),
        token_span=frozenset(positions),
        phrase=phrase,
    )
