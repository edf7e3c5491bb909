"""Extraction items, tolerant answer parsing, and canonical serialization.

Raw model output is free text. ``parse_result`` recovers every well formed
item from it and records a warning for everything it had to skip or guess.
``serialize_items`` renders an item list to the single-line canonical form
that agents exchange with each other:

    NER  [(TYPE, span), ...]
    RE   [(head, relation, tail), ...]
    EE   [{Trigger Type: T, Trigger Word: W, Arguments: (Role, span), ...}, ...]

Parsing inverts serialization: ``parse_result(task, serialize_items(items,
task)).items == items`` whenever the item fields are structurally valid,
meaning non-empty, whitespace-collapsed, with balanced bracket delimiters,
not quote-wrapped, and with no separator characters inside label fields
(entity/relation/role names and the text between them must not contain
top-level commas; EE field keywords must not appear inside field text).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Union

from .errors import MixedItems, TaskMismatch
from .schema import Compliance, SchemaSpec, TaskKind, is_compliant
from .textnorm import collapse_ws

# --- item types -------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EntityMention:
    entity_type: str
    span: str

    def __post_init__(self) -> None:
        _require_field("entity_type", self.entity_type)
        _require_field("span", self.span)


@dataclass(frozen=True, slots=True)
class RelationTriple:
    head: str
    relation: str
    tail: str

    def __post_init__(self) -> None:
        _require_field("head", self.head)
        _require_field("relation", self.relation)
        _require_field("tail", self.tail)


@dataclass(frozen=True, slots=True)
class EventRecord:
    trigger_type: str
    trigger_word: str
    arguments: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        _require_field("trigger_type", self.trigger_type)
        _require_field("trigger_word", self.trigger_word)
        seen: set[tuple[str, str]] = set()
        for pair in self.arguments:
            role, span = pair
            _require_field("role", role)
            _require_field("argument span", span)
            if pair in seen:
                raise ValueError(f"duplicate argument pair: {pair!r}")
            seen.add(pair)


Item = Union[EntityMention, RelationTriple, EventRecord]

_ITEM_TYPES: dict[TaskKind, type] = {
    TaskKind.NER: EntityMention,
    TaskKind.RE: RelationTriple,
    TaskKind.EE: EventRecord,
}


def _require_field(name: str, value: str) -> None:
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"{name} must be a non-empty string, got {value!r}")


def check_items(task: TaskKind, items: Iterable[Item]) -> None:
    """Raise MixedItems unless every item is of the task's item type."""
    expected = _ITEM_TYPES[task]
    for item in items:
        if not isinstance(item, expected):
            raise MixedItems(
                f"{type(item).__name__} does not belong to a {task.value} result"
            )


# --- result containers ------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ExtractionResult:
    """What one agent said in one round, parsed but not yet filtered."""

    task: TaskKind
    items: tuple[Item, ...]
    raw_text: str
    parse_warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        check_items(self.task, self.items)


@dataclass(frozen=True, slots=True)
class Replica:
    """The schema-compliant digest of a result that peers get to see."""

    agent_id: str
    round: int
    task: TaskKind
    items: tuple[Item, ...]
    canonical_text: str

    def __post_init__(self) -> None:
        if not self.agent_id:
            raise ValueError("agent_id must be non-empty")
        if self.round < 0:
            raise ValueError("round must be >= 0")
        check_items(self.task, self.items)
        expected = serialize_items(self.items, self.task)
        if self.canonical_text != expected:
            raise ValueError("canonical_text does not match serialized items")


def make_replica(
    agent_id: str, round: int, task: TaskKind, items: Iterable[Item]
) -> Replica:
    items = tuple(items)
    return Replica(agent_id, round, task, items, serialize_items(items, task))


# --- canonical serialization -------------------------------------------------


def serialize_items(items: Iterable[Item], task: TaskKind) -> str:
    """Render items as one canonical line. An empty list renders as "[]"."""
    seq = tuple(items)
    check_items(task, seq)
    if task is TaskKind.NER:
        body = ", ".join(f"({it.entity_type}, {it.span})" for it in seq)
    elif task is TaskKind.RE:
        body = ", ".join(f"({it.head}, {it.relation}, {it.tail})" for it in seq)
    else:
        blocks = []
        for event in seq:
            core = (
                f"Trigger Type: {event.trigger_type}, "
                f"Trigger Word: {event.trigger_word}"
            )
            if event.arguments:
                args = ", ".join(f"({r}, {s})" for r, s in event.arguments)
                core += f", Arguments: {args}"
            blocks.append("{" + core + "}")
        body = ", ".join(blocks)
    return f"[{body}]"


# --- tolerant parsing --------------------------------------------------------

_OPENERS = "([{"
_CLOSERS = {")": "(", "]": "[", "}": "{"}
_CLOSE_OF = {"(": ")", "[": "]", "{": "}"}

# Surrounding quote pairs stripped from field text, one layer only.
_QUOTE_PAIRS = {
    ('"', '"'),
    ("'", "'"),
    ("“", "”"),
    ("‘", "’"),
    ("„", "“"),
    ("«", "»"),
}

_EVENT_KEYS = (
    ("trigger_type", re.compile(r"trigger[\s_]*type\s*:", re.IGNORECASE)),
    ("trigger_word", re.compile(r"trigger[\s_]*word\s*:", re.IGNORECASE)),
    ("arguments", re.compile(r"arguments\s*:", re.IGNORECASE)),
)


def _scan_groups(text: str, opener: str) -> tuple[list[str], list[str]]:
    """Collect the contents of outermost balanced ``opener`` groups.

    Nested delimiters of any kind are tracked. A closer that matches nothing
    currently open is treated as literal text; a closer that crosses nesting
    abandons the group with a warning.
    """
    groups: list[str] = []
    warnings: list[str] = []
    i, n = 0, len(text)
    while i < n:
        if text[i] != opener:
            i += 1
            continue
        stack = [opener]
        j = i + 1
        end = -1
        while j < n:
            c = text[j]
            if c in _OPENERS:
                stack.append(c)
            elif c in _CLOSERS:
                want = _CLOSERS[c]
                if stack and stack[-1] == want:
                    stack.pop()
                    if not stack:
                        end = j
                        break
                elif want in stack:
                    break
            j += 1
        if end >= 0:
            groups.append(text[i + 1 : end])
            i = end + 1
        else:
            warnings.append(f"unterminated {opener!r} group at offset {i}")
            i += 1
    return groups, warnings


def _top_positions(text: str, chars: frozenset[str]) -> list[int]:
    """Positions of separator characters outside any bracket nesting."""
    out: list[int] = []
    stack: list[str] = []
    for i, c in enumerate(text):
        if c in _OPENERS:
            stack.append(c)
        elif c in _CLOSERS:
            want = _CLOSERS[c]
            if stack and stack[-1] == want:
                stack.pop()
            elif want in stack:
                while stack and stack[-1] != want:
                    stack.pop()
                if stack:
                    stack.pop()
        elif not stack and c in chars:
            out.append(i)
    return out


_COMMA = frozenset(",")
_ARG_SEPS = frozenset(",:")


def _norm_field(text: str) -> str:
    text = collapse_ws(text)
    if len(text) >= 2 and (text[0], text[-1]) in _QUOTE_PAIRS:
        text = collapse_ws(text[1:-1])
    return text


def _parse_entities(raw: str) -> tuple[list[EntityMention], list[str]]:
    items: list[EntityMention] = []
    groups, warnings = _scan_groups(raw, "(")
    for content in groups:
        commas = _top_positions(content, _COMMA)
        if not commas:
            warnings.append(f"ignored fragment without separator: ({content})")
            continue
        if len(commas) > 1:
            warnings.append(f"ambiguous pair, keeping longest span: ({content})")
        entity_type = _norm_field(content[: commas[0]])
        span = _norm_field(content[commas[0] + 1 :])
        if not entity_type or not span:
            warnings.append(f"ignored pair with empty field: ({content})")
            continue
        items.append(EntityMention(entity_type, span))
    return items, warnings


def _parse_relations(raw: str) -> tuple[list[RelationTriple], list[str]]:
    items: list[RelationTriple] = []
    groups, warnings = _scan_groups(raw, "(")
    for content in groups:
        commas = _top_positions(content, _COMMA)
        if len(commas) < 2:
            warnings.append(f"ignored fragment that is not a triple: ({content})")
            continue
        if len(commas) > 2:
            warnings.append(f"ambiguous triple, keeping longest tail: ({content})")
        head = _norm_field(content[: commas[0]])
        relation = _norm_field(content[commas[0] + 1 : commas[1]])
        tail = _norm_field(content[commas[1] + 1 :])
        if not head or not relation or not tail:
            warnings.append(f"ignored triple with empty field: ({content})")
            continue
        items.append(RelationTriple(head, relation, tail))
    return items, warnings


def _parse_events(raw: str) -> tuple[list[EventRecord], list[str]]:
    items: list[EventRecord] = []
    groups, warnings = _scan_groups(raw, "{")
    for content in groups:
        hits: list[tuple[int, int, str]] = []
        for name, rx in _EVENT_KEYS:
            m = rx.search(content)
            if m:
                hits.append((m.start(), m.end(), name))
        hits.sort()
        fields: dict[str, str] = {}
        for idx, (_start, end, name) in enumerate(hits):
            until = hits[idx + 1][0] if idx + 1 < len(hits) else len(content)
            fields[name] = content[end:until]
        trigger_type = _norm_field(fields.get("trigger_type", "").strip().rstrip(","))
        trigger_word = _norm_field(fields.get("trigger_word", "").strip().rstrip(","))
        if not trigger_type or not trigger_word:
            warnings.append(f"ignored event without trigger fields: {{{content}}}")
            continue
        arguments: list[tuple[str, str]] = []
        seen: set[tuple[str, str]] = set()
        arg_groups, arg_warnings = _scan_groups(fields.get("arguments", ""), "(")
        warnings.extend(arg_warnings)
        for arg in arg_groups:
            seps = _top_positions(arg, _ARG_SEPS)
            if not seps:
                warnings.append(f"ignored argument without separator: ({arg})")
                continue
            role = _norm_field(arg[: seps[0]])
            span = _norm_field(arg[seps[0] + 1 :])
            if not role or not span:
                warnings.append(f"ignored argument with empty field: ({arg})")
                continue
            pair = (role, span)
            if pair in seen:
                continue
            seen.add(pair)
            arguments.append(pair)
        items.append(EventRecord(trigger_type, trigger_word, tuple(arguments)))
    return items, warnings


def parse_result(task: TaskKind, raw: str) -> ExtractionResult:
    """Parse raw model text into items. Total: never raises on any input.

    Surrounding prose (chain-of-thought, apologies, list brackets) is
    ignored; every malformed fragment is reported in parse_warnings. Exact
    duplicate items are dropped, keeping the first occurrence.
    """
    if task is TaskKind.NER:
        found, warnings = _parse_entities(raw)
    elif task is TaskKind.RE:
        found, warnings = _parse_relations(raw)
    else:
        found, warnings = _parse_events(raw)
    deduped: list[Item] = []
    seen: set[Item] = set()
    for item in found:
        if item not in seen:
            seen.add(item)
            deduped.append(item)
    return ExtractionResult(task, tuple(deduped), raw, tuple(warnings))


# --- replica construction ----------------------------------------------------


def simplify(
    result: ExtractionResult,
    spec: SchemaSpec,
    agent_id: str,
    round: int,
    *,
    entity_types: Mapping[str, str] | None = None,
) -> Replica:
    """Reduce a parsed result to its schema-compliant replica.

    Keeps the compliant subset in order, drops everything else, and fixes
    the canonical text. Applying simplify to the reparse of its own output
    changes nothing.
    """
    if result.task is not spec.task:
        raise TaskMismatch(
            f"result of task {result.task.value} against {spec.task.value} schema"
        )
    kept = tuple(
        item
        for item in result.items
        if is_compliant(spec, item, entity_types=entity_types)
    )
    return make_replica(agent_id, round, spec.task, kept)


def compliance_review(
    result: ExtractionResult,
    spec: SchemaSpec,
    *,
    entity_types: Mapping[str, str] | None = None,
) -> list[tuple[Item, Compliance]]:
    """Per-item compliance outcomes, in result order."""
    return [
        (item, is_compliant(spec, item, entity_types=entity_types))
        for item in result.items
    ]


# --- JSON codec for items -----------------------------------------------------


def item_to_jsonable(item: Item) -> Any:
    if isinstance(item, EntityMention):
        return [item.entity_type, item.span]
    if isinstance(item, RelationTriple):
        return [item.head, item.relation, item.tail]
    return {
        "trigger_type": item.trigger_type,
        "trigger_word": item.trigger_word,
        "arguments": [[r, s] for r, s in item.arguments],
    }


def item_from_jsonable(task: TaskKind, obj: Any) -> Item:
    try:
        if task is TaskKind.NER:
            entity_type, span = obj
            return EntityMention(str(entity_type), str(span))
        if task is TaskKind.RE:
            head, relation, tail = obj
            return RelationTriple(str(head), str(relation), str(tail))
        return EventRecord(
            str(obj["trigger_type"]),
            str(obj["trigger_word"]),
            tuple((str(r), str(s)) for r, s in obj.get("arguments", ())),
        )
    except (TypeError, KeyError, ValueError) as exc:
        raise ValueError(f"malformed {task.value} item: {obj!r} ({exc})") from exc
