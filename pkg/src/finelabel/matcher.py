"""Vocabulary phrase detection in sentences.

Two stages: a cheap candidate filter keyed on the smallest distinguishable
prefix of every vocabulary word, then a dynamic program that aligns each
candidate phrase to the sentence. The alignment maximizes the sum of
per-word prefix similarities minus a penalty for unmatched sentence tokens
between the first and last matched positions, over all order-preserving
partial matchings whose pairs clear the similarity threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .lexicon import (
    CoreFinding,
    Lexicon,
    LexiconValidationError,
    ModifierTerm,
    Phrase,
    normalize_phrase,
)
from .textprep import Sentence

MIN_PREFIX_LEN = 3


@dataclass(frozen=True)
class MatchParams:
    """Alignment thresholds.

    tau: minimum prefix similarity for a word pair to count as matched.
    gamma: minimum matched fraction of the phrase for a detection.
    delta: penalty per unmatched sentence token inside the matched extent.
    """

    tau: float = 0.5
    gamma: float = 0.7
    delta: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")


def prefix_similarity(a: str, b: str) -> float:
    """Longest common prefix length over the longer word length, case-folded."""
    a = a.lower()
    b = b.lower()
    limit = min(len(a), len(b))
    lcp = 0
    while lcp < limit and a[lcp] == b[lcp]:
        lcp += 1
    return lcp / max(len(a), len(b)) if a or b else 0.0


@dataclass(frozen=True)
class PrefixEntry:
    prefix: str
    word: str
    family_id: str


@dataclass(frozen=True)
class IndexedPhrase:
    """One vocabulary phrase variant ready for matching."""

    phrase_id: str
    tokens: Phrase
    required_prefixes: frozenset[str]
    concept: Union[CoreFinding, ModifierTerm]
    family_id: str
    source_text: str


@dataclass
class VocabularyIndex:
    prefix_map: dict[str, tuple[PrefixEntry, ...]]
    phrase_table: dict[str, IndexedPhrase]
    _phrases_by_prefix: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._phrases_by_prefix:
            by_prefix: dict[str, list[str]] = {}
            for pid, phrase in self.phrase_table.items():
                for prefix in phrase.required_prefixes:
                    by_prefix.setdefault(prefix, []).append(pid)
            self._phrases_by_prefix = {k: tuple(v) for k, v in by_prefix.items()}


def smallest_prefix(
    word: str, family_id: str, word_map: Iterable[tuple[str, str]]
) -> str:
    """Shortest prefix of word, at least 3 characters, that no word of a
    different concept family shares.

    Words shorter than 3 characters, and words whose every prefix collides
    with another family, come back whole.
    """
    families = _prefix_families(word_map)
    return _smallest_prefix_indexed(word.lower(), family_id, families)


def _prefix_families(word_map: Iterable[tuple[str, str]]) -> dict[str, set[str]]:
    families: dict[str, set[str]] = {}
    for raw_word, family in word_map:
        word = raw_word.lower()
        for length in range(MIN_PREFIX_LEN, len(word) + 1):
            families.setdefault(word[:length], set()).add(family)
    return families


def _smallest_prefix_indexed(
    word: str, family_id: str, families: dict[str, set[str]]
) -> str:
    for length in range(MIN_PREFIX_LEN, len(word) + 1):
        owners = families.get(word[:length], set())
        if owners <= {family_id}:
            return word[:length]
    return word


def family_of(concept: Union[CoreFinding, ModifierTerm]) -> str:
    if isinstance(concept, CoreFinding):
        return f"core:{concept.id}"
    return f"mod:{concept.category.value}:{concept.canonical_text}"


def build_index(lexicon: Lexicon) -> VocabularyIndex:
    """Index every core finding and modifier phrase for detection.

    Stopwords are removed from phrases first; a phrase left empty by that
    is a lexicon defect and rejected. Prefix families follow concept
    ownership, so word-form variants of one concept never push each
    other's prefixes longer.
    """
    concepts: list[Union[CoreFinding, ModifierTerm]] = list(lexicon.core_findings.values())
    concepts.extend(lexicon.modifiers)

    prepared: list[tuple[str, Phrase, Union[CoreFinding, ModifierTerm], str, str]] = []
    word_pairs: list[tuple[str, str]] = []
    for concept in concepts:
        family = family_of(concept)
        for variant_idx, raw_phrase in enumerate(concept.all_phrases()):
            tokens = normalize_phrase(raw_phrase, lexicon.stopwords)
            if not tokens:
                raise LexiconValidationError(
                    f"phrase '{' '.join(raw_phrase)}' is empty after stopword removal"
                )
            phrase_id = f"{family}#{variant_idx}"
            prepared.append((phrase_id, tokens, concept, family, " ".join(raw_phrase)))
            word_pairs.extend((token, family) for token in tokens)

    families = _prefix_families(word_pairs)

    prefix_entries: dict[str, list[PrefixEntry]] = {}
    phrase_table: dict[str, IndexedPhrase] = {}
    for phrase_id, tokens, concept, family, source in prepared:
        required = set()
        for token in tokens:
            prefix = _smallest_prefix_indexed(token, family, families)
            required.add(prefix)
            entry = PrefixEntry(prefix=prefix, word=token, family_id=family)
            bucket = prefix_entries.setdefault(prefix, [])
            if entry not in bucket:
                bucket.append(entry)
        phrase_table[phrase_id] = IndexedPhrase(
            phrase_id=phrase_id,
            tokens=tokens,
            required_prefixes=frozenset(required),
            concept=concept,
            family_id=family,
            source_text=source,
        )

    return VocabularyIndex(
        prefix_map={k: tuple(v) for k, v in prefix_entries.items()},
        phrase_table=phrase_table,
    )


def candidate_phrases(
    tokens: Sequence[str], index: VocabularyIndex
) -> set[str]:
    """Phrase ids whose every required prefix starts some sentence token."""
    satisfied: set[str] = set()
    touched: set[str] = set()
    for raw in tokens:
        token = raw.lower()
        for length in range(1, len(token) + 1):
            prefix = token[:length]
            if prefix in index._phrases_by_prefix and prefix not in satisfied:
                satisfied.add(prefix)
                touched.update(index._phrases_by_prefix[prefix])
    return {
        pid
        for pid in touched
        if index.phrase_table[pid].required_prefixes <= satisfied
    }


@dataclass(frozen=True)
class Alignment:
    """Order-preserving partial matching of phrase words to sentence tokens.

    matched_pairs holds (phrase index, sentence index, similarity) triples,
    strictly increasing in both indices.
    """

    matched_pairs: tuple[tuple[int, int, float], ...]
    score: float

    @property
    def cardinality(self) -> int:
        return len(self.matched_pairs)

    @property
    def sentence_positions(self) -> tuple[int, ...]:
        return tuple(j for _, j, _ in self.matched_pairs)

    def gap(self) -> int:
        """Unmatched sentence tokens strictly inside the matched extent."""
        if not self.matched_pairs:
            return 0
        js = self.sentence_positions
        return (js[-1] - js[0] + 1) - len(js)


_EMPTY_ALIGNMENT = Alignment(matched_pairs=(), score=0.0)


class _Chain:
    __slots__ = ("score", "pairs")

    def __init__(self, score: float, pairs: tuple[tuple[int, int, float], ...]):
        self.score = score
        self.pairs = pairs

    def sort_key(self):
        # Higher score, then more matched words, then leftmost sentence
        # positions, then leftmost phrase positions.
        return (
            -self.score,
            -len(self.pairs),
            tuple(j for _, j, _ in self.pairs),
            tuple(i for i, _, _ in self.pairs),
        )


def lcf_align(
    phrase_tokens: Sequence[str],
    sentence_tokens: Sequence[str],
    params: MatchParams,
) -> Alignment:
    """Best-scoring order-preserving alignment of a phrase to a sentence.

    score = sum of pair similarities minus delta per unmatched sentence
    token between the first and last matched positions. Only pairs with
    similarity >= tau participate; tau = 1.0 reduces matching to exact
    word equality. End gaps are free, so the phrase may land anywhere in
    a long sentence. Ties resolve to more matched words, then leftmost
    sentence positions.
    """
    S = [w.lower() for w in phrase_tokens]
    T = [w.lower() for w in sentence_tokens]
    tau, delta = params.tau, params.delta

    admissible: dict[tuple[int, int], float] = {}
    for i, s_word in enumerate(S):
        for j, t_word in enumerate(T):
            rho = prefix_similarity(s_word, t_word)
            if rho >= tau:
                admissible[(i, j)] = rho
    if not admissible:
        return _EMPTY_ALIGNMENT

    # best[(i, j)] is the best chain whose last pair is (i, j); the interior
    # gap penalty decomposes over consecutive matched pairs, so extending a
    # chain only needs the previous pair's sentence position.
    best: dict[tuple[int, int], _Chain] = {}
    for i in range(len(S)):
        for j in range(len(T)):
            rho = admissible.get((i, j))
            if rho is None:
                continue
            choice = _Chain(rho, ((i, j, rho),))
            for (pi, pj), prev in best.items():
                if pi < i and pj < j:
                    extended = _Chain(
                        prev.score + rho - delta * (j - pj - 1),
                        prev.pairs + ((i, j, rho),),
                    )
                    if extended.sort_key() < choice.sort_key():
                        choice = extended
            best[(i, j)] = choice

    winner = min(best.values(), key=_Chain.sort_key)
    if winner.score < 0.0:
        return _EMPTY_ALIGNMENT
    return Alignment(matched_pairs=winner.pairs, score=winner.score)


@dataclass(frozen=True)
class ConceptMention:
    """A detected core finding or modifier occurrence in one sentence."""

    concept: Union[CoreFinding, ModifierTerm]
    sentence: Sentence
    alignment: Alignment
    token_span: frozenset[int]
    phrase: IndexedPhrase

    @property
    def is_core(self) -> bool:
        return isinstance(self.concept, CoreFinding)

    @property
    def family_id(self) -> str:
        return self.phrase.family_id

    @property
    def start(self) -> int:
        return min(self.token_span)

    @property
    def end(self) -> int:
        return max(self.token_span)

    def sort_key(self):
        return (self.start, self.end, 0 if self.is_core else 1, self.family_id)


def detect_phrases(
    sentence: Sentence,
    index: VocabularyIndex,
    params: Optional[MatchParams] = None,
) -> list[ConceptMention]:
    """All concept mentions in a sentence.

    Each candidate phrase is aligned; it is a detection when the matched
    fraction of the phrase reaches gamma. Overlapping detections of the
    same concept collapse to the best-scoring one; detections of distinct
    concepts may overlap freely.
    """
    params = params or MatchParams()
    raw: list[ConceptMention] = []
    for pid in sorted(candidate_phrases(sentence.tokens, index)):
        phrase = index.phrase_table[pid]
        alignment = lcf_align(phrase.tokens, sentence.tokens, params)
        if alignment.cardinality == 0:
            continue
        if alignment.cardinality / len(phrase.tokens) < params.gamma:
            continue
        raw.append(
            ConceptMention(
                concept=phrase.concept,
                sentence=sentence,
                alignment=alignment,
                token_span=frozenset(alignment.sentence_positions),
                phrase=phrase,
            )
        )

    by_family: dict[str, list[ConceptMention]] = {}
    for mention in raw:
        by_family.setdefault(mention.family_id, []).append(mention)

    kept: list[ConceptMention] = []
    for family in sorted(by_family):
        group = sorted(
            by_family[family],
            key=lambda m: (-m.alignment.score, m.start, m.end, m.phrase.phrase_id),
        )
        chosen: list[ConceptMention] = []
        for mention in group:
            if all(not (mention.token_span & c.token_span) for c in chosen):
                chosen.append(mention)
        kept.extend(chosen)

    kept.sort(key=ConceptMention.sort_key)
    return kept
