"""Polarity resolution for core-finding mentions.

Primary mechanism: expand a scope set from negation cue tokens through the
dependency parse (cue to its governor, then downward along designated
relations) until stable. A data-driven vocabulary of pre/post negation
phrases acts as a safety net, and substitutes entirely when no parse is
available.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .lexicon import Lexicon, Phrase, POLARITY_NO, POLARITY_YES
from .matcher import ConceptMention
from .parsegraph import GROUP_HELPER, ParseNode, PhrasalGroup

logger = logging.getLogger(__name__)

# Relations a negation scope flows through, governor to dependent. Chosen
# so a cue on a verb reaches its object, clausal complements under it,
# nominal/adjectival modifiers, and coordinated siblings of a negated noun.
DEFAULT_SCOPE_RELATIONS = frozenset(
    {"neg", "obj", "dobj", "iobj", "obl", "ccomp", "xcomp", "acl", "nmod", "amod", "conj"}
)

DEFAULT_FLAT_WINDOW = 6


@dataclass(frozen=True)
class NegationScope:
    scoped_tokens: frozenset[int]
    seed_cues: frozenset[int]


EMPTY_SCOPE = NegationScope(frozenset(), frozenset())


def _phrase_occurrences(tokens: Sequence[str], phrase: Phrase) -> list[tuple[int, int]]:
    """(start, end) inclusive token ranges where phrase occurs, case-folded."""
    folded = [t.lower() for t in tokens]
    target = [w.lower() for w in phrase]
    width = len(target)
    if width == 0 or width > len(folded):
        return []
    return [
        (i, i + width - 1)
        for i in range(len(folded) - width + 1)
        if folded[i:i + width] == target
    ]


def negation_scope(
    nodes: Sequence[ParseNode],
    cues: Sequence[Phrase],
    scope_relations: frozenset[str] = DEFAULT_SCOPE_RELATIONS,
) -> NegationScope:
    """Fixpoint of scope expansion from cue tokens.

    Every cue occurrence seeds the scope together with its governor; the
    scope then grows downward, adding any token hanging off a scoped token
    by a designated relation, until nothing changes.
    """
    forms = [node.headword for node in nodes]
    seeds: set[int] = set()
    for cue in cues:
        for start, end in _phrase_occurrences(forms, cue):
            seeds.update(range(start, end + 1))

    scoped = set(seeds)
    for position in seeds:
        head = nodes[position].head_index
        if head > 0:
            scoped.add(head - 1)

    changed = True
    while changed:
        changed = False
        for node in nodes:
            position = node.token_index - 1
            if position in scoped:
                continue
            if node.head_index > 0 and (node.head_index - 1) in scoped \
                    and node.relation in scope_relations:
                scoped.add(position)
                changed = True
    return NegationScope(scoped_tokens=frozenset(scoped), seed_cues=frozenset(seeds))


def expand_once(
    scope: NegationScope,
    nodes: Sequence[ParseNode],
    scope_relations: frozenset[str] = DEFAULT_SCOPE_RELATIONS,
) -> frozenset[int]:
    """One additional expansion step over an existing scope."""
    scoped = set(scope.scoped_tokens)
    for node in nodes:
        position = node.token_index - 1
        if node.head_index > 0 and (node.head_index - 1) in scoped \
                and node.relation in scope_relations:
            scoped.add(position)
    return frozenset(scoped)


def polarity(
    mention: ConceptMention,
    scope: Optional[NegationScope],
    groups: Optional[Sequence[PhrasalGroup]],
    lexicon: Lexicon,
    flat_window: int = DEFAULT_FLAT_WINDOW,
) -> str:
    """yes or no for one mention.

    A mention is negative when its tokens intersect the parse-derived
    scope, or when a prior-negation phrase precedes it within its group
    (or the helper group immediately before), or when a post-negation
    phrase follows it within its group. Without groups, a token window
    of flat_window stands in for group containment. Several triggers do
    not flip the answer back; double negation stays negative.
    """
    triggers = []
    if scope is not None and mention.token_span & scope.scoped_tokens:
        triggers.append("parse-scope")

    tokens = mention.sentence.tokens
    prior_zone, post_zone = _containment_zones(mention, groups, flat_window, len(tokens))
    for phrase in lexicon.negation_prior:
        for start, end in _phrase_occurrences(tokens, phrase):
            if end < mention.start and set(range(start, end + 1)) <= prior_zone:
                triggers.append(f"prior:{' '.join(phrase)}")
    for phrase in lexicon.negation_post:
        for start, end in _phrase_occurrences(tokens, phrase):
            if start > mention.end and set(range(start, end + 1)) <= post_zone:
                triggers.append(f"post:{' '.join(phrase)}")

    if len(triggers) > 1:
        logger.debug(
            "multiple negation triggers for '%s': %s (kept negative)",
            " ".join(mention.phrase.tokens),
            ", ".join(triggers),
        )
    return POLARITY_NO if triggers else POLARITY_YES


def _containment_zones(
    mention: ConceptMention,
    groups: Optional[Sequence[PhrasalGroup]],
    flat_window: int,
    n_tokens: int,
) -> tuple[set[int], set[int]]:
    if groups is None:
        prior = set(range(max(0, mention.start - flat_window), mention.start))
        post = set(range(mention.end + 1, min(n_tokens, mention.end + 1 + flat_window)))
        return prior, post

    ordered = sorted(groups, key=lambda g: g.extent)
    own: set[int] = set()
    prior: set[int] = set()
    for idx, group in enumerate(ordered):
        if mention.token_span & group.token_indices:
            own |= group.token_indices
            if idx > 0 and ordered[idx - 1].kind == GROUP_HELPER:
                prior |= ordered[idx - 1].token_indices
    return own | prior, set(own)
