"""Report segmentation: section isolation, sentence splitting, tokenization.

Character offsets into the original report text are kept at every level so
extracted labels stay traceable to their source spans.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

SECTION_FINDINGS = "findings"
SECTION_IMPRESSION = "impression"
SECTION_OTHER = "other"

# Heading word (case-insensitive) -> canonical section name. Only listed
# headings start a section; anything before the first one is "other".
DEFAULT_HEADINGS = {
    "findings": SECTION_FINDINGS,
    "finding": SECTION_FINDINGS,
    "impression": SECTION_IMPRESSION,
    "impressions": SECTION_IMPRESSION,
    "conclusion": SECTION_IMPRESSION,
    "conclusions": SECTION_IMPRESSION,
}

# Words before a period that never end a sentence. Single letters are
# deliberately absent: "A. B." is two sentences.
DEFAULT_ABBREVIATIONS = frozenset(
    ["dr", "mr", "mrs", "ms", "st", "vs", "etc", "cf", "approx", "resp"]
)

# Decimal numbers stay whole; hyphenated tokens stay whole; other
# punctuation delimits.
_TOKEN_RE = re.compile(r"\d+\.\d+|[A-Za-z0-9]+(?:['-][A-Za-z0-9]+)*")

_ABBREV_LOOKBACK_RE = re.compile(r"[A-Za-z][A-Za-z.]*$")


@dataclass(frozen=True)
class Report:
    report_id: str
    text: str
    image_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class Section:
    """A report section. span covers the heading too; body_span is the text
    after the heading colon."""

    name: str
    span: tuple[int, int]
    body_span: tuple[int, int]

    def body_text(self, report_text: str) -> str:
        return report_text[self.body_span[0]:self.body_span[1]]


@dataclass(frozen=True)
class Sentence:
    report_id: str
    section: str
    sentence_index: int
    tokens: tuple[str, ...]
    char_span: tuple[int, int]
    token_spans: tuple[tuple[int, int], ...]


def read_reports(path: Union[str, Path]) -> Iterator[Report]:
    """Stream reports from a JSON-lines file with report_id/text/image_ids."""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed report record: {exc.msg}") from exc
            if "report_id" not in record or "text" not in record:
                raise ValueError(f"{path}:{lineno}: report record needs report_id and text")
            yield Report(
                report_id=str(record["report_id"]),
                text=record["text"],
                image_ids=tuple(record.get("image_ids", [])),
            )


def segment_sections(
    report: Report, headings: Optional[dict[str, str]] = None
) -> list[Section]:
    """Split a report into heading-delimited sections.

    Section spans are disjoint, ordered, and cover the whole text. Text
    before the first recognized heading (or all of a heading-free report)
    is one "other" section. Empty text yields no sections.
    """
    text = report.text
    if not text:
        return []
    headings = DEFAULT_HEADINGS if headings is None else {
        k.lower(): v for k, v in headings.items()
    }
    names = sorted(headings, key=len, reverse=True)
    pattern = re.compile(
        r"\b(" + "|".join(re.escape(n) for n in names) + r")\s*:", re.IGNORECASE
    )
    matches = list(pattern.finditer(text))
    sections: list[Section] = []
    if not matches or matches[0].start() > 0:
        end = matches[0].start() if matches else len(text)
        sections.append(Section(SECTION_OTHER, (0, end), (0, end)))
    for pos, match in enumerate(matches):
        end = matches[pos + 1].start() if pos + 1 < len(matches) else len(text)
        name = headings[match.group(1).lower()]
        sections.append(Section(name, (match.start(), end), (match.end(), end)))
    return sections


def split_sentences(
    text: str,
    base_offset: int = 0,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[tuple[tuple[str, ...], tuple[int, int], tuple[tuple[int, int], ...]]]:
    """Split section text into (tokens, char_span, token_spans) triples.

    Sentences end at runs of terminal punctuation or at newlines. A period
    does not split when it sits inside a decimal number or follows a word
    on the abbreviation guard list. Fragments without any token are
    dropped. Offsets are absolute when base_offset points into the
    enclosing report text.
    """
    pieces: list[tuple[int, int]] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        ch = text[i]
        if ch in ".!?":
            j = i + 1
            while j < n and text[j] in ".!?":
                j += 1
            if j - i == 1 and ch == "." and _period_guarded(text, i, abbreviations):
                i = j
                continue
            pieces.append((start, j))
            start = j
            i = j
        elif ch == "\n":
            pieces.append((start, i))
            start = i + 1
            i += 1
        else:
            i += 1
    if start < n:
        pieces.append((start, n))

    sentences = []
    for lo, hi in pieces:
        chunk = text[lo:hi]
        stripped_lo = lo + (len(chunk) - len(chunk.lstrip()))
        stripped_hi = hi - (len(chunk) - len(chunk.rstrip()))
        if stripped_lo >= stripped_hi:
            continue
        token_spans = tuple(
            (base_offset + lo + m.start(), base_offset + lo + m.end())
            for m in _TOKEN_RE.finditer(chunk)
        )
        if not token_spans:
            continue
        tokens = tuple(text[s - base_offset:e - base_offset] for s, e in token_spans)
        sentences.append(
            (tokens, (base_offset + stripped_lo, base_offset + stripped_hi), token_spans)
        )
    return sentences


def _period_guarded(text: str, i: int, abbreviations: frozenset[str]) -> bool:
    if 0 < i < len(text) - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
        return True
    match = _ABBREV_LOOKBACK_RE.search(text[:i])
    return bool(match) and match.group(0).lower() in abbreviations


def report_sentences(
    report: Report,
    headings: Optional[dict[str, str]] = None,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[Sentence]:
    """All sentences of a report across all sections, globally indexed.

    Sentence indices count every sentence in document order regardless of
    any later section filtering, so parse fixtures keyed by
    (report_id, sentence_index) stay valid under different filters.
    """
    sentences: list[Sentence] = []
    index = 0
    for section in segment_sections(report, headings):
        body = section.body_text(report.text)
        for tokens, span, token_spans in split_sentences(
            body, base_offset=section.body_span[0], abbreviations=abbreviations
        ):
            sentences.append(
                Sentence(
                    report_id=report.report_id,
                    section=section.name,
                    sentence_index=index,
                    tokens=tokens,
                    char_span=span,
                    token_spans=token_spans,
                )
            )
            index += 1
    return sentences
