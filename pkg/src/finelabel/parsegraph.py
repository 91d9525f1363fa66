"""Phrasal grouping over third-party dependency parses.

Parses arrive precomputed in a CoNLL-U-style four-column format. Edges
whose relation is on the grouping whitelist produce per-head tuples; the
connected components of those tuples partition the sentence tokens into
phrasal groups. Groups holding a core-finding mention become core groups,
and a single mention spanning adjacent groups merges them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .matcher import ConceptMention

# Noun-phrase-local relations. Subjects, clausal links, and conjunction
# stay out so conjoined findings land in separate groups.
DEFAULT_GROUPING_RELATIONS = frozenset(
    {"amod", "compound", "det", "nummod", "nmod", "flat", "fixed", "goeswith"}
)

GROUP_CORE = "core"
GROUP_HELPER = "helper"


class ParseError(ValueError):
    """Base class for dependency parse input problems."""


class ParseFormatError(ParseError):
    """A parse block does not follow the expected row format."""


class ParseMismatchError(ParseError):
    """A parse block disagrees with the sentence it should describe."""


@dataclass(frozen=True)
class ParseNode:
    """One dependency node, mirroring the file convention: token_index is
    1-based and head_index 0 means the root."""

    token_index: int
    headword: str
    head_index: int
    relation: str


@dataclass(frozen=True)
class NodeTuple:
    """A head token grouped with its whitelisted dependents, 0-based."""

    elements: tuple[int, ...]


@dataclass(frozen=True)
class PhrasalGroup:
    token_indices: frozenset[int]
    kind: Optional[str] = None
    mentions: tuple[ConceptMention, ...] = ()

    @property
    def extent(self) -> tuple[int, int]:
        return (min(self.token_indices), max(self.token_indices))

    @property
    def is_core(self) -> bool:
        return self.kind == GROUP_CORE


# ---------------------------------------------------------------------------
# Parse ingestion
# ---------------------------------------------------------------------------

_META_RE = re.compile(r"^#\s*(\w+)\s*=\s*(.*?)\s*$")


def ingest_parse(
    rows: Sequence[Sequence[str]], expected_token_count: Optional[int] = None
) -> list[ParseNode]:
    """Validate one parse block into nodes.

    Rows carry (index, form, head, relation). Indices must run 1..n,
    exactly one row may point at the root, and when the caller knows the
    sentence tokenization the row count must agree with it.
    """
    nodes: list[ParseNode] = []
    for row in rows:
        if len(row) < 4:
            raise ParseFormatError(f"parse row needs 4 fields, got {len(row)}: {row!r}")
        try:
            index = int(row[0])
            head = int(row[2])
        except ValueError as exc:
            raise ParseFormatError(f"non-numeric index or head in row {row!r}") from exc
        nodes.append(ParseNode(token_index=index, headword=row[1], head_index=head, relation=row[3]))

    n = len(nodes)
    if expected_token_count is not None and n != expected_token_count:
        raise ParseMismatchError(
            f"parse has {n} rows but the sentence has {expected_token_count} tokens"
        )
    if [node.token_index for node in nodes] != list(range(1, n + 1)):
        raise ParseFormatError("parse row indices must run 1..n in order")
    roots = [node for node in nodes if node.head_index == 0]
    if len(roots) != 1:
        raise ParseMismatchError(f"parse must have exactly one root, found {len(roots)}")
    for node in nodes:
        if not 0 <= node.head_index <= n:
            raise ParseFormatError(
                f"head index {node.head_index} out of range for {n} tokens"
            )
        if node.head_index == node.token_index:
            raise ParseFormatError(f"node {node.token_index} may not head itself")
    return nodes


def iter_parse_blocks(text: str) -> Iterator[tuple[dict[str, str], list[list[str]]]]:
    """Yield (metadata, rows) per blank-line-separated parse block."""
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            if rows or meta:
                yield meta, rows
                meta, rows = {}, []
            continue
        if stripped.startswith("#"):
            match = _META_RE.match(stripped)
            if match:
                meta[match.group(1)] = match.group(2)
            continue
        rows.append(stripped.split("\t"))
    if rows or meta:
        yield meta, rows


def read_parses(path: Union[str, Path]) -> dict[tuple[str, int], list[ParseNode]]:
    """Load a parse file keyed by (report_id, sentence_index) comments."""
    text = Path(path).read_text(encoding="utf-8")
    parses: dict[tuple[str, int], list[ParseNode]] = {}
    for meta, rows in iter_parse_blocks(text):
        if "report_id" not in meta or "sentence_index" not in meta:
            raise ParseFormatError(
                "parse block missing '# report_id = ...' or '# sentence_index = ...'"
            )
        try:
            key = (meta["report_id"], int(meta["sentence_index"]))
        except ValueError as exc:
            raise ParseFormatError(f"sentence_index must be an integer: {meta}") from exc
        parses[key] = ingest_parse(rows)
    return parses


# ---------------------------------------------------------------------------
# Grouping
# ---------------------------------------------------------------------------


def node_tuples(
    nodes: Sequence[ParseNode],
    grouping_relations: frozenset[str] = DEFAULT_GROUPING_RELATIONS,
) -> list[NodeTuple]:
    """Group each head with its whitelisted dependents, 0-based.

    Edges outside the whitelist contribute nothing, which is what keeps
    the tree from collapsing into a single component.
    """
    deps: dict[int, list[int]] = {}
    for node in nodes:
        if node.head_index > 0 and node.relation in grouping_relations:
            deps.setdefault(node.head_index - 1, []).append(node.token_index - 1)
    tuples = []
    for head in sorted(deps):
        tuples.append(NodeTuple(elements=(head, *sorted(deps[head]))))
    return tuples


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression."""

    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def components(self) -> list[frozenset[int]]:
        buckets: dict[int, set[int]] = {}
        for x in range(len(self.parent)):
            buckets.setdefault(self.find(x), set()).add(x)
        return [frozenset(members) for _, members in sorted(buckets.items())]


def phrasal_groups(tuples: Iterable[NodeTuple], n_tokens: int) -> list[PhrasalGroup]:
    """Connected components of the tuples, plus singletons for uncovered
    tokens. Groups come back ordered by their smallest token index."""
    uf = UnionFind(n_tokens)
    for node_tuple in tuples:
        first = node_tuple.elements[0]
        for other in node_tuple.elements[1:]:
            uf.union(first, other)
    groups = [PhrasalGroup(token_indices=component) for component in uf.components()]
    groups.sort(key=lambda g: g.extent)
    return groups


def flat_groups(n_tokens: int) -> list[PhrasalGroup]:
    """Degraded no-parse mode: the whole sentence is one group."""
    if n_tokens == 0:
        return []
    return [PhrasalGroup(token_indices=frozenset(range(n_tokens)))]


def _adjacent(a: PhrasalGroup, b: PhrasalGroup, others: Sequence[PhrasalGroup]) -> bool:
    lo = min(a.extent[1], b.extent[1])
    hi = max(a.extent[0], b.extent[0])
    for group in others:
        if group is a or group is b:
            continue
        if any(lo < token < hi for token in group.token_indices):
            return False
    return True


def classify_and_merge(
    groups: Sequence[PhrasalGroup], mentions: Sequence[ConceptMention]
) -> list[PhrasalGroup]:
    """Assign core/helper kinds and merge adjacent groups spanned by one
    core-finding mention. Idempotent; the output still partitions the
    tokens of the input groups."""
    groups = sorted(groups, key=lambda g: g.extent)
    core_mentions = [m for m in mentions if m.is_core]

    uf = UnionFind(len(groups))
    for mention in core_mentions:
        hit = [
            idx for idx, group in enumerate(groups)
            if mention.token_span & group.token_indices
        ]
        for left, right in zip(hit, hit[1:]):
            if _adjacent(groups[left], groups[right], groups):
                uf.union(left, right)

    merged: list[PhrasalGroup] = []
    for component in uf.components():
        tokens = frozenset().union(*(groups[idx].token_indices for idx in component))
        inside = tuple(
            m for m in sorted(mentions, key=ConceptMention.sort_key)
            if m.token_span & tokens
        )
        kind = GROUP_CORE if any(m.is_core for m in inside) else GROUP_HELPER
        merged.append(PhrasalGroup(token_indices=tokens, kind=kind, mentions=inside))
    merged.sort(key=lambda g: g.extent)
    return merged
