"""Finding/modifier lexicon: schema, loading, validation, and lookups.

The lexicon is a JSON file carrying core findings (with synonyms, default
anatomy, and ontology parents), modifier vocabularies by category, one slot
template per finding type, the stopword list, and the negation word lists.
All matching behavior downstream is driven by this data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union


class LexiconError(ValueError):
    """Base class for lexicon problems."""


class LexiconFormatError(LexiconError):
    """The file is not readable JSON or misses required structure."""


class LexiconValidationError(LexiconError):
    """The file parsed but violates a lexicon invariant."""


class FindingType(str, Enum):
    """The six finding categories a core finding can belong to."""

    ANATOMICAL_FINDING = "anatomicalfinding"
    DISEASE = "disease"
    DEVICE = "device"
    TUBES_AND_LINES = "tubesandlines"
    TUBES_AND_LINES_FINDING = "tubesandlinesfinding"
    VIEWPOINT = "viewpoint"


class ModifierCategory(str, Enum):
    """Closed set of modifier categories a finding description can carry."""

    ANATOMY_AFFECTED = "anatomyaffected"
    SUBANATOMY = "subanatomy"
    LOCATION = "location"
    LATERALITY = "laterality"
    SEVERITY = "severity"
    SIZE = "size"
    HEDGE = "hedge"
    CHARACTER = "character"
    PROCEDURE = "procedure"
    SHAPE = "shape"
    CORRELATION = "correlation"
    MEASURE = "measure"
    CAUSE = "cause"
    SYMPTOM = "symptom"


# For tubes-and-lines finding labels the polarity slot carries placement
# sense: "yes" reads as ill-placed, "no" as well-placed.
POLARITY_YES = "yes"
POLARITY_NO = "no"

# Template slot names that render a modifier category under another label.
# "tubesandlineslocation" is the location slot of the tubes templates.
SLOT_ALIASES = {"tubesandlineslocation": ModifierCategory.LOCATION}

# Slot names carried opaquely in templates: positioned but never filled.
OPAQUE_SLOTS = {"tubesandlines"}

# Used when the lexicon file does not carry a "stopwords" key.
DEFAULT_STOPWORDS = (
    "of", "in", "the", "a", "an", "is", "are", "with", "at", "to", "for", "on",
)

Phrase = tuple[str, ...]


def tokenize_phrase(text: str) -> Phrase:
    """Split a lexicon phrase into tokens on whitespace."""
    return tuple(text.split())


def normalize_phrase(tokens: Iterable[str], stopwords: frozenset[str]) -> Phrase:
    """Case-fold tokens and drop stopwords."""
    return tuple(t.lower() for t in tokens if t.lower() not in stopwords)


@dataclass(frozen=True)
class CoreFinding:
    """A canonical clinical observation that anchors a label."""

    id: str
    canonical_name: str
    finding_type: FindingType
    synonyms: tuple[Phrase, ...] = ()
    default_anatomy: Optional[Phrase] = None
    ontology_parent: Optional[str] = None

    def all_phrases(self) -> tuple[Phrase, ...]:
        return (tokenize_phrase(self.canonical_name),) + self.synonyms


@dataclass(frozen=True)
class ModifierTerm:
    """A qualifier phrase in one modifier category."""

    category: ModifierCategory
    phrase: Phrase
    synonyms: tuple[Phrase, ...] = ()

    @property
    def canonical_text(self) -> str:
        return " ".join(self.phrase)

    def all_phrases(self) -> tuple[Phrase, ...]:
        return (self.phrase,) + self.synonyms


@dataclass(frozen=True)
class SlotTemplate:
    """Ordered slot layout for one finding type.

    slot_order starts with the finding-type head word, then the polarity
    slot, then the core finding slot; the remaining names are modifier
    categories (possibly under an alias) or opaque placeholders.
    """

    finding_type: FindingType
    slot_order: tuple[str, ...]

    def modifier_positions(self) -> dict[ModifierCategory, int]:
        """Map each renderable modifier category to its slot index."""
        positions: dict[ModifierCategory, int] = {}
        for idx, name in enumerate(self.slot_order[3:], start=3):
            cat = _slot_category(name)
            if cat is not None:
                positions[cat] = idx
        return positions


def _slot_category(name: str) -> Optional[ModifierCategory]:
    if name in SLOT_ALIASES:
        return SLOT_ALIASES[name]
    try:
        return ModifierCategory(name)
    except ValueError:
        return None


@dataclass
class Lexicon:
    """Validated lexicon: findings, modifiers, templates, and word lists."""

    core_findings: dict[str, CoreFinding]
    modifiers: tuple[ModifierTerm, ...]
    templates: dict[FindingType, SlotTemplate]
    stopwords: frozenset[str]
    negation_cues: tuple[Phrase, ...] = ()
    negation_prior: tuple[Phrase, ...] = ()
    negation_post: tuple[Phrase, ...] = ()
    ambiguous_phrases: frozenset[Phrase] = frozenset()
    _phrase_map: dict[Phrase, tuple[CoreFinding, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._phrase_map:
            self._phrase_map = _build_phrase_map(self)

    def find(self, finding_id: str) -> CoreFinding:
        return self.core_findings[finding_id]

    def rollup(self, finding: CoreFinding) -> CoreFinding:
        """Follow ontology parents to the root core finding."""
        current = finding
        while current.ontology_parent is not None:
            current = self.core_findings[current.ontology_parent]
        return current

    def default_anatomy_for(self, finding: CoreFinding) -> Optional[Phrase]:
        """Nearest default anatomy walking the matched finding's parent chain."""
        current = finding
        while True:
            if current.default_anatomy is not None:
                return current.default_anatomy
            if current.ontology_parent is None:
                return None
            current = self.core_findings[current.ontology_parent]


def _build_phrase_map(lexicon: Lexicon) -> dict[Phrase, tuple[CoreFinding, ...]]:
    table: dict[Phrase, list[CoreFinding]] = {}
    for finding in lexicon.core_findings.values():
        for phrase in finding.all_phrases():
            key = normalize_phrase(phrase, lexicon.stopwords)
            if not key:
                continue
            owners = table.setdefault(key, [])
            if finding not in owners:
                owners.append(finding)
    return {k: tuple(sorted(v, key=lambda f: f.id)) for k, v in table.items()}


def lookup_core(phrase: Union[str, Sequence[str]], lexicon: Lexicon) -> Optional[CoreFinding]:
    """Resolve a phrase to the core finding it names, or None.

    Comparison is case-insensitive and ignores stopwords; both the canonical
    name and every synonym resolve. Ambiguous phrases resolve to the owner
    with the lexicographically first id.
    """
    tokens = tokenize_phrase(phrase) if isinstance(phrase, str) else tuple(phrase)
    key = normalize_phrase(tokens, lexicon.stopwords)
    owners = lexicon._phrase_map.get(key)
    return owners[0] if owners else None


def lookup_core_all(phrase: Union[str, Sequence[str]], lexicon: Lexicon) -> tuple[CoreFinding, ...]:
    """All core findings a phrase may name (several only when ambiguous)."""
    tokens = tokenize_phrase(phrase) if isinstance(phrase, str) else tuple(phrase)
    key = normalize_phrase(tokens, lexicon.stopwords)
    return lexicon._phrase_map.get(key, ())


def allowed_modifiers(finding_type: FindingType, lexicon: Lexicon) -> SlotTemplate:
    """The slot template governing labels of the given finding type."""
    return lexicon.templates[finding_type]


# ---------------------------------------------------------------------------
# Loading and validation
# ---------------------------------------------------------------------------

_FORBIDDEN_CHARS = "|;"


def load_lexicon(path: Union[str, Path]) -> Lexicon:
    """Load and validate a lexicon JSON file.

    Raises LexiconFormatError for unreadable or structurally wrong files and
    LexiconValidationError when an invariant fails (duplicate names, cyclic
    ontology, missing templates, degenerate phrases).
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LexiconFormatError(f"cannot read lexicon file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LexiconFormatError(
            f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return lexicon_from_dict(data)


def lexicon_from_dict(data: dict) -> Lexicon:
    """Build a validated Lexicon from parsed JSON data."""
    if not isinstance(data, dict):
        raise LexiconFormatError("lexicon root must be a JSON object")

    stopwords = frozenset(w.lower() for w in data.get("stopwords", DEFAULT_STOPWORDS))

    findings = _parse_core_findings(data.get("core_findings", []))
    modifiers = _parse_modifiers(data.get("modifiers", []))
    templates = _parse_templates(data.get("templates", {}))
    negation = data.get("negation", {})
    if not isinstance(negation, dict):
        raise LexiconFormatError("negation must be an object with cues/prior/post")

    ambiguous = frozenset(
        normalize_phrase(tokenize_phrase(p), stopwords) for p in data.get("ambiguous", [])
    )

    lexicon = Lexicon(
        core_findings=findings,
        modifiers=modifiers,
        templates=templates,
        stopwords=stopwords,
        negation_cues=_parse_phrase_list(negation.get("cues", []), "negation.cues"),
        negation_prior=_parse_phrase_list(negation.get("prior", []), "negation.prior"),
        negation_post=_parse_phrase_list(negation.get("post", []), "negation.post"),
        ambiguous_phrases=ambiguous,
    )
    _validate(lexicon)
    return lexicon


def serialize_lexicon(lexicon: Lexicon) -> dict:
    """Inverse of lexicon_from_dict for validated lexicons."""
    return {
        "core_findings": [
            {
                "id": f.id,
                "name": f.canonical_name,
                "type": f.finding_type.value,
                "synonyms": [" ".join(s) for s in f.synonyms],
                **({"default_anatomy": " ".join(f.default_anatomy)} if f.default_anatomy else {}),
                **({"parent": f.ontology_parent} if f.ontology_parent else {}),
            }
            for f in lexicon.core_findings.values()
        ],
        "modifiers": [
            {
                "category": m.category.value,
                "phrase": " ".join(m.phrase),
                "synonyms": [" ".join(s) for s in m.synonyms],
            }
            for m in lexicon.modifiers
        ],
        "templates": {
            ft.value: list(t.slot_order) for ft, t in lexicon.templates.items()
        },
        "stopwords": sorted(lexicon.stopwords),
        "negation": {
            "cues": [" ".join(p) for p in lexicon.negation_cues],
            "prior": [" ".join(p) for p in lexicon.negation_prior],
            "post": [" ".join(p) for p in lexicon.negation_post],
        },
        "ambiguous": sorted(" ".join(p) for p in lexicon.ambiguous_phrases),
    }


def _parse_phrase_list(items, where: str) -> tuple[Phrase, ...]:
    phrases = []
    for item in items:
        if not isinstance(item, str) or not item.strip():
            raise LexiconFormatError(f"{where}: entries must be nonempty strings")
        phrases.append(tokenize_phrase(item))
    return tuple(phrases)


def _parse_core_findings(items) -> dict[str, CoreFinding]:
    findings: dict[str, CoreFinding] = {}
    for idx, item in enumerate(items):
        where = f"core_findings[{idx}]"
        if not isinstance(item, dict):
            raise LexiconFormatError(f"{where}: must be an object")
        for key in ("id", "name", "type"):
            if key not in item:
                raise LexiconFormatError(f"{where}: missing required field '{key}'")
        fid = item["id"]
        if fid in findings:
            raise LexiconValidationError(f"{where}: duplicate core finding id '{fid}'")
        try:
            ftype = FindingType(item["type"])
        except ValueError:
            raise LexiconFormatError(
                f"{where}: unknown finding type '{item['type']}'"
            ) from None
        synonyms = tuple(tokenize_phrase(s) for s in item.get("synonyms", []))
        default_anatomy = item.get("default_anatomy")
        findings[fid] = CoreFinding(
            id=fid,
            canonical_name=item["name"],
            finding_type=ftype,
            synonyms=synonyms,
            default_anatomy=tokenize_phrase(default_anatomy) if default_anatomy else None,
            ontology_parent=item.get("parent"),
        )
    return findings


def _parse_modifiers(items) -> tuple[ModifierTerm, ...]:
    modifiers = []
    for idx, item in enumerate(items):
        where = f"modifiers[{idx}]"
        if not isinstance(item, dict):
            raise LexiconFormatError(f"{where}: must be an object")
        for key in ("category", "phrase"):
            if key not in item:
                raise LexiconFormatError(f"{where}: missing required field '{key}'")
        try:
            category = ModifierCategory(item["category"])
        except ValueError:
            raise LexiconFormatError(
                f"{where}: unknown modifier category '{item['category']}'"
            ) from None
        phrase = tokenize_phrase(item["phrase"])
        if not phrase:
            raise LexiconValidationError(f"{where}: empty modifier phrase")
        synonyms = tuple(tokenize_phrase(s) for s in item.get("synonyms", []))
        modifiers.append(ModifierTerm(category=category, phrase=phrase, synonyms=synonyms))
    return tuple(modifiers)


def _parse_templates(items) -> dict[FindingType, SlotTemplate]:
    if not isinstance(items, dict):
        raise LexiconFormatError("templates must map finding type to a slot list")
    templates: dict[FindingType, SlotTemplate] = {}
    for type_name, slots in items.items():
        try:
            ftype = FindingType(type_name)
        except ValueError:
            raise LexiconFormatError(f"templates: unknown finding type '{type_name}'") from None
        if not isinstance(slots, list) or not all(isinstance(s, str) for s in slots):
            raise LexiconFormatError(f"templates[{type_name}]: must be a list of slot names")
        templates[ftype] = SlotTemplate(finding_type=ftype, slot_order=tuple(slots))
    return templates


def _validate(lexicon: Lexicon) -> None:
    if not lexicon.core_findings:
        raise LexiconValidationError("no core findings")

    seen_names: dict[str, str] = {}
    for finding in lexicon.core_findings.values():
        name = finding.canonical_name.strip()
        if not name:
            raise LexiconValidationError(f"core finding '{finding.id}': empty canonical name")
        folded = name.lower()
        if folded in seen_names:
            raise LexiconValidationError(
                f"duplicate canonical name '{name}' in '{seen_names[folded]}' and '{finding.id}'"
            )
        seen_names[folded] = finding.id

        seen_syn = set()
        for syn in finding.synonyms:
            folded_syn = tuple(t.lower() for t in syn)
            if not folded_syn:
                raise LexiconValidationError(f"core finding '{finding.id}': empty synonym")
            if folded_syn in seen_syn:
                raise LexiconValidationError(
                    f"core finding '{finding.id}': duplicate synonym '{' '.join(syn)}'"
                )
            seen_syn.add(folded_syn)

        for phrase in finding.all_phrases():
            _check_phrase_chars(phrase, f"core finding '{finding.id}'")

        if finding.ontology_parent is not None and finding.ontology_parent not in lexicon.core_findings:
            raise LexiconValidationError(
                f"core finding '{finding.id}': unknown parent '{finding.ontology_parent}'"
            )

    _check_ontology_acyclic(lexicon.core_findings)

    for term in lexicon.modifiers:
        for phrase in term.all_phrases():
            _check_phrase_chars(phrase, f"modifier '{term.canonical_text}'")

    for finding in lexicon.core_findings.values():
        if finding.finding_type not in lexicon.templates:
            raise LexiconValidationError(
                f"missing template for finding type '{finding.finding_type.value}' "
                f"referenced by '{finding.id}'"
            )

    for ftype, template in lexicon.templates.items():
        _validate_template(ftype, template)

    _check_synonym_collisions(lexicon)


def _check_phrase_chars(phrase: Phrase, where: str) -> None:
    for token in phrase:
        if any(ch in token for ch in _FORBIDDEN_CHARS):
            raise LexiconValidationError(
                f"{where}: phrase token '{token}' contains a reserved character (| or ;)"
            )


def _check_ontology_acyclic(findings: dict[str, CoreFinding]) -> None:
    for start in findings.values():
        seen = [start.id]
        current = start
        while current.ontology_parent is not None:
            parent_id = current.ontology_parent
            if parent_id in seen:
                cycle = " -> ".join(seen + [parent_id])
                raise LexiconValidationError(f"ontology parent cycle: {cycle}")
            seen.append(parent_id)
            current = findings[parent_id]


def _validate_template(ftype: FindingType, template: SlotTemplate) -> None:
    slots = template.slot_order
    if len(slots) < 3:
        raise LexiconValidationError(
            f"template for '{ftype.value}': needs head, polarity and core finding slots"
        )
    if ftype is FindingType.VIEWPOINT:
        if slots != ("views", "positive", "findingname"):
            raise LexiconValidationError(
                "template for 'viewpoint' must be exactly [views, positive, findingname]"
            )
        return
    if slots[0] != ftype.value:
        raise LexiconValidationError(
            f"template for '{ftype.value}': first slot must be the head word "
            f"'{ftype.value}', got '{slots[0]}'"
        )
    seen: set[ModifierCategory] = set()
    for name in slots[3:]:
        if name in OPAQUE_SLOTS:
            continue
        cat = _slot_category(name)
        if cat is None:
            raise LexiconValidationError(
                f"template for '{ftype.value}': unknown slot name '{name}'"
            )
        if cat in seen:
            raise LexiconValidationError(
                f"template for '{ftype.value}': modifier category '{cat.value}' repeats"
            )
        seen.add(cat)


def _check_synonym_collisions(lexicon: Lexicon) -> None:
    owners: dict[Phrase, str] = {}
    for finding in lexicon.core_findings.values():
        for phrase in finding.all_phrases():
            key = normalize_phrase(phrase, lexicon.stopwords)
            if not key:
                continue
            prior = owners.get(key)
            if prior is not None and prior != finding.id:
                if key in lexicon.ambiguous_phrases:
                    continue
                raise LexiconValidationError(
                    f"phrase '{' '.join(key)}' names both '{prior}' and '{finding.id}' "
                    "but is not listed under 'ambiguous'"
                )
            owners[key] = finding.id
