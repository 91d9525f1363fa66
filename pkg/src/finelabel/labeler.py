"""Label assembly: modifier association, pattern completion, rendering.

Modifiers attach to core findings through the phrasal groups. Completed
labels fill the slot template of the finding's type and render as a
'|'-joined string; within one slot, several values join with ';'.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .lexicon import (
    CoreFinding,
    FindingType,
    Lexicon,
    ModifierCategory,
    ModifierTerm,
    POLARITY_NO,
    POLARITY_YES,
    _slot_category,
)
from .matcher import ConceptMention
from .parsegraph import PhrasalGroup

logger = logging.getLogger(__name__)

MULTI_VALUE_SEPARATOR = ";"


class LabelGrammarError(ValueError):
    """A rendered label string cannot be parsed back against the templates."""


@dataclass(frozen=True)
class Provenance:
    report_id: str
    sentence_index: int
    token_positions: tuple[int, ...]


@dataclass
class FineGrainedLabel:
    finding_type: FindingType
    polarity: str
    core_finding: str
    core_name: str
    slots: dict[ModifierCategory, list[str]] = field(default_factory=dict)
    provenance: Optional[Provenance] = None


def associate_modifiers(
    groups: Sequence[PhrasalGroup],
    core_mentions: Sequence[ConceptMention],
    modifier_mentions: Sequence[ConceptMention],
) -> dict[ConceptMention, list[ConceptMention]]:
    """Attach modifier mentions to core mentions through the groups.

    Modifiers in a core group attach to every core finding in that group.
    Modifiers in helper groups attach to the core findings of the nearest
    core group by token distance, the following one on a tie. Modifiers
    with no core group anywhere are dropped with a diagnostic.
    """
    ordered = sorted(groups, key=lambda g: g.extent)
    core_groups = [g for g in ordered if g.is_core]
    attached: dict[ConceptMention, list[ConceptMention]] = {cm: [] for cm in core_mentions}

    def cores_in(group: PhrasalGroup) -> list[ConceptMention]:
        return [cm for cm in core_mentions if cm.token_span & group.token_indices]

    for modifier in modifier_mentions:
        homes = [g for g in ordered if modifier.token_span & g.token_indices]
        targets: list[ConceptMention] = []
        for group in homes:
            if group.is_core:
                targets.extend(cores_in(group))
            elif core_groups:
                nearest = min(
                    core_groups,
                    key=lambda c: (_group_distance(group, c), -c.extent[0]),
                )
                targets.extend(cores_in(nearest))
        if not targets:
            logger.debug(
                "modifier '%s' has no core group to attach to; dropped",
                " ".join(modifier.phrase.tokens),
            )
            continue
        for core in targets:
            if modifier not in attached[core]:
                attached[core].append(modifier)
    return attached


def _group_distance(a: PhrasalGroup, b: PhrasalGroup) -> int:
    if b.extent[0] > a.extent[1]:
        return b.extent[0] - a.extent[1]
    if a.extent[0] > b.extent[1]:
        return a.extent[0] - b.extent[1]
    return 0


def complete_pattern(
    core_mention: ConceptMention,
    modifiers: Sequence[ConceptMention],
    polarity: str,
    lexicon: Lexicon,
) -> Optional[FineGrainedLabel]:
    """Build the slotted label for one core mention.

    The matched concept rolls up its ontology parents to the catalog core
    finding, which also fixes the finding type and slot template. An empty
    anatomy slot inherits the finding's default anatomy when the lexicon
    carries one. Modifier categories outside the template are dropped.
    """
    concept = core_mention.concept
    if not isinstance(concept, CoreFinding):
        logger.warning("mention of '%s' is not a core finding; skipped", concept)
        return None
    try:
        target = lexicon.rollup(concept)
    except KeyError as exc:
        logger.warning("core finding '%s' has a dangling parent %s; skipped", concept.id, exc)
        return None

    template = lexicon.templates[target.finding_type]
    allowed = set(template.modifier_positions())

    slots: dict[ModifierCategory, list[str]] = {}
    for modifier in sorted(modifiers, key=ConceptMention.sort_key):
        term = modifier.concept
        if not isinstance(term, ModifierTerm):
            continue
        if term.category not in allowed:
            logger.debug(
                "modifier '%s' (%s) not allowed for %s; dropped",
                term.canonical_text, term.category.value, target.finding_type.value,
            )
            continue
        values = slots.setdefault(term.category, [])
        if term.canonical_text not in values:
            values.append(term.canonical_text)

    if ModifierCategory.ANATOMY_AFFECTED in allowed and not slots.get(ModifierCategory.ANATOMY_AFFECTED):
        default_anatomy = lexicon.default_anatomy_for(concept)
        if default_anatomy is not None:
            slots[ModifierCategory.ANATOMY_AFFECTED] = [" ".join(default_anatomy)]

    sentence = core_mention.sentence
    return FineGrainedLabel(
        finding_type=target.finding_type,
        polarity=polarity,
        core_finding=target.id,
        core_name=target.canonical_name,
        slots=slots,
        provenance=Provenance(
            report_id=sentence.report_id,
            sentence_index=sentence.sentence_index,
            token_positions=tuple(sorted(core_mention.token_span)),
        ),
    )


def render_label(label: FineGrainedLabel, lexicon: Lexicon) -> str:
    """Canonical '|'-joined string in the finding type's slot order.

    Empty slots render as empty fields, several values in one slot join
    with ';', and trailing empty fields are trimmed. Given the template,
    rendering is injective and parse_label inverts it.
    """
    template = lexicon.templates[label.finding_type]
    fields = [template.slot_order[0], label.polarity, label.core_name]
    for name in template.slot_order[3:]:
        category = _slot_category(name)
        values = label.slots.get(category, []) if category is not None else []
        fields.append(MULTI_VALUE_SEPARATOR.join(values))
    while len(fields) > 3 and fields[-1] == "":
        fields.pop()
    return "|".join(fields)


def parse_label(text: str, lexicon: Lexicon) -> FineGrainedLabel:
    """Parse a rendered label string back into its parts."""
    fields = text.split("|")
    if len(fields) < 3:
        raise LabelGrammarError(f"label needs at least 3 fields: {text!r}")

    head_map = {t.slot_order[0]: ft for ft, t in lexicon.templates.items()}
    finding_type = head_map.get(fields[0])
    if finding_type is None:
        raise LabelGrammarError(f"unknown finding type head {fields[0]!r}")
    template = lexicon.templates[finding_type]
    if len(fields) > len(template.slot_order):
        raise LabelGrammarError(f"label has more fields than the template: {text!r}")

    if fields[1] not in (POLARITY_YES, POLARITY_NO):
        raise LabelGrammarError(f"polarity must be yes or no, got {fields[1]!r}")

    core_name = fields[2]
    core = _finding_by_name(core_name, lexicon)
    if core is None:
        raise LabelGrammarError(f"unknown core finding name {core_name!r}")

    slots: dict[ModifierCategory, list[str]] = {}
    for idx in range(3, len(fields)):
        if not fields[idx]:
            continue
        category = _slot_category(template.slot_order[idx])
        if category is None:
            raise LabelGrammarError(
                f"field {idx} ({template.slot_order[idx]!r}) cannot carry values: {text!r}"
            )
        slots[category] = fields[idx].split(MULTI_VALUE_SEPARATOR)

    return FineGrainedLabel(
        finding_type=finding_type,
        polarity=fields[1],
        core_finding=core.id,
        core_name=core.canonical_name,
        slots=slots,
    )


def _finding_by_name(name: str, lexicon: Lexicon) -> Optional[CoreFinding]:
    folded = name.lower()
    for finding in lexicon.core_findings.values():
        if finding.canonical_name.lower() == folded:
            return finding
    return None


def label_record(label: FineGrainedLabel, lexicon: Lexicon) -> dict:
    """JSON-lines record for one label."""
    provenance = label.provenance
    return {
        "report_id": provenance.report_id if provenance else None,
        "sentence_index": provenance.sentence_index if provenance else None,
        "label": render_label(label, lexicon),
        "type": label.finding_type.value,
        "polarity": label.polarity,
        "core": label.core_name,
        "slots": {cat.value: values for cat, values in sorted(label.slots.items(), key=lambda kv: kv[0].value)},
    }
