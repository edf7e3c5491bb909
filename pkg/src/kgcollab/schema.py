"""Extraction task schemas: what an agent is allowed to answer with.

A schema fixes the label inventory for exactly one task. NER schemas carry
entity types, RE schemas carry named relation constraints with head and tail
entity types, EE schemas carry event types with their role inventories.
Schemas are immutable after loading and hashable, so downstream caches can
key on them directly.

Schema files are JSON documents:

    {"schema_version": 1, "id": "toy-ner", "task": "NER",
     "entity_types": ["PER", "LOC", "ORG", "MISC"]}

    {"schema_version": 1, "id": "toy-re", "task": "RE",
     "relation_constraints": [["person-nationality", "PER", "LOC"]]}

    {"schema_version": 1, "id": "toy-ee", "task": "EE",
     "event_types": [["Movement:Transport", ["Agent", "Artifact"]]]}

Only the list relevant to the task may be present and it must be non-empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping, NamedTuple

from .errors import (
    DuplicateType,
    EmptySchema,
    SchemaFormatError,
    TaskMismatch,
    UnknownTask,
)
from .textnorm import norm_label, norm_match

SCHEMA_VERSION = 1


class TaskKind(str, Enum):
    """The three extraction tasks a team member can specialize in."""

    NER = "NER"
    RE = "RE"
    EE = "EE"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def parse(cls, name: str) -> "TaskKind":
        try:
            return cls(norm_label(name))
        except ValueError:
            raise UnknownTask(f"unknown task: {name!r}") from None


_DISPLAY_NAMES = {
    TaskKind.NER: "named entity recognition",
    TaskKind.RE: "relation extraction",
    TaskKind.EE: "event extraction",
}


class RelationConstraint(NamedTuple):
    relation: str
    head_type: str
    tail_type: str


class EventTypeSpec(NamedTuple):
    name: str
    roles: tuple[str, ...]


class Compliance(NamedTuple):
    """Outcome of a compliance check. Falsy when the item was rejected."""

    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:  # noqa: D105
        return self.ok


@dataclass(frozen=True)
class SchemaSpec:
    """Immutable label inventory for one extraction task."""

    id: str
    task: TaskKind
    entity_types: tuple[str, ...] = ()
    relation_constraints: tuple[RelationConstraint, ...] = ()
    event_types: tuple[EventTypeSpec, ...] = ()

    def __post_init__(self) -> None:
        if not self.id or not self.id.strip():
            raise SchemaFormatError("schema id must be non-empty")
        object.__setattr__(self, "id", norm_label(self.id))
        object.__setattr__(
            self, "entity_types", tuple(norm_label(t) for t in self.entity_types)
        )
        object.__setattr__(
            self,
            "relation_constraints",
            tuple(
                RelationConstraint(norm_label(r), norm_label(h), norm_label(t))
                for r, h, t in self.relation_constraints
            ),
        )
        object.__setattr__(
            self,
            "event_types",
            tuple(
                EventTypeSpec(norm_label(n), tuple(norm_label(x) for x in roles))
                for n, roles in self.event_types
            ),
        )
        relevant = {
            TaskKind.NER: self.entity_types,
            TaskKind.RE: self.relation_constraints,
            TaskKind.EE: self.event_types,
        }
        for task, values in relevant.items():
            if task is not self.task and values:
                raise SchemaFormatError(
                    f"schema for {self.task.value} must not define "
                    f"{_LIST_KEYS[task]}"
                )
        if not relevant[self.task]:
            raise EmptySchema(f"schema {self.id!r} has no {_LIST_KEYS[self.task]}")
        _check_unique(self._names(), self.task)
        for spec in self.event_types:
            if not spec.roles:
                raise EmptySchema(f"event type {spec.name!r} has no roles")
            _check_role_unique(spec)

    def _names(self) -> tuple[str, ...]:
        if self.task is TaskKind.NER:
            return self.entity_types
        if self.task is TaskKind.RE:
            return tuple(c.relation for c in self.relation_constraints)
        return tuple(e.name for e in self.event_types)


_LIST_KEYS = {
    TaskKind.NER: "entity_types",
    TaskKind.RE: "relation_constraints",
    TaskKind.EE: "event_types",
}


def _check_unique(names: tuple[str, ...], task: TaskKind) -> None:
    seen: set[str] = set()
    for name in names:
        if not name:
            raise SchemaFormatError("empty type name")
        if name in seen:
            kind = {
                TaskKind.NER: "entity type",
                TaskKind.RE: "relation",
                TaskKind.EE: "event type",
            }[task]
            raise DuplicateType(f"duplicate {kind}: {name}")
        seen.add(name)


def _check_role_unique(spec: EventTypeSpec) -> None:
    seen: set[str] = set()
    for role in spec.roles:
        if not role:
            raise SchemaFormatError(f"event type {spec.name!r} has an empty role")
        if role in seen:
            raise DuplicateType(f"duplicate role in {spec.name}: {role}")
        seen.add(role)


# --- loading and serialization ---------------------------------------------


def loads_schema(text: str) -> SchemaSpec:
    """Parse a schema document from its JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaFormatError(f"schema is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaFormatError("schema document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaFormatError(f"unsupported schema_version: {version!r}")
    if "task" not in doc or "id" not in doc:
        raise SchemaFormatError("schema document needs 'id' and 'task'")
    task = TaskKind.parse(str(doc["task"]))
    try:
        return SchemaSpec(
            id=str(doc["id"]),
            task=task,
            entity_types=tuple(doc.get("entity_types", ())),
            relation_constraints=tuple(
                RelationConstraint(*c) for c in doc.get("relation_constraints", ())
            ),
            event_types=tuple(
                EventTypeSpec(n, tuple(roles)) for n, roles in doc.get("event_types", ())
            ),
        )
    except TypeError as exc:
        raise SchemaFormatError(f"malformed schema entry: {exc}") from exc


def load_schema(path: str | Path) -> SchemaSpec:
    """Load a schema document from a file."""
    return loads_schema(Path(path).read_text(encoding="utf-8"))


def dumps_schema(spec: SchemaSpec) -> str:
    """Serialize a schema to JSON text. loads_schema inverts this exactly."""
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "id": spec.id,
        "task": spec.task.value,
    }
    if spec.task is TaskKind.NER:
        doc["entity_types"] = list(spec.entity_types)
    elif spec.task is TaskKind.RE:
        doc["relation_constraints"] = [list(c) for c in spec.relation_constraints]
    else:
        doc["event_types"] = [[e.name, list(e.roles)] for e in spec.event_types]
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def save_schema(spec: SchemaSpec, path: str | Path) -> None:
    Path(path).write_text(dumps_schema(spec), encoding="utf-8")


# --- prompt rendering -------------------------------------------------------


def render_constraint_list(spec: SchemaSpec) -> str:
    """Render the schema as the constraint sentence shown to the agent."""
    if spec.task is TaskKind.NER:
        inner = ", ".join(spec.entity_types)
        return f"The list of constrained entity types is: [{inner}]"
    if spec.task is TaskKind.RE:
        inner = ", ".join(
            f"{c.relation}: [{c.head_type}, {c.tail_type}]"
            for c in spec.relation_constraints
        )
        return f"The list of constrained relations is: [{inner}]"
    inner = ", ".join(f"{e.name}: [{', '.join(e.roles)}]" for e in spec.event_types)
    return f"The list of constrained event types is: [{inner}]"


# --- compliance -------------------------------------------------------------


@lru_cache(maxsize=None)
def _entity_set(spec: SchemaSpec) -> frozenset[str]:
    return frozenset(spec.entity_types)


@lru_cache(maxsize=None)
def _relation_map(spec: SchemaSpec) -> Mapping[str, RelationConstraint]:
    return {c.relation: c for c in spec.relation_constraints}


@lru_cache(maxsize=None)
def _event_map(spec: SchemaSpec) -> Mapping[str, frozenset[str]]:
    return {e.name: frozenset(e.roles) for e in spec.event_types}


def _item_task(item: Any) -> TaskKind:
    if hasattr(item, "entity_type"):
        return TaskKind.NER
    if hasattr(item, "relation"):
        return TaskKind.RE
    if hasattr(item, "trigger_type"):
        return TaskKind.EE
    raise TypeError(f"not an extraction item: {item!r}")


def is_compliant(
    spec: SchemaSpec,
    item: Any,
    *,
    entity_types: Mapping[str, str] | None = None,
) -> Compliance:
    """Check one item against the schema.

    Returns a Compliance whose reason is a machine-readable code prefix
    followed by the offending label. Raises TaskMismatch when the item kind
    does not match the schema's task.

    For RE, only the relation name is checked by default. When
    ``entity_types`` maps normalized spans to entity type names, head and
    tail types are additionally checked for spans present in the mapping.
    """
    item_task = _item_task(item)
    if item_task is not spec.task:
        raise TaskMismatch(
            f"item of task {item_task.value} checked against {spec.task.value} schema"
        )
    if spec.task is TaskKind.NER:
        name = norm_label(item.entity_type)
        if name not in _entity_set(spec):
            return Compliance(False, f"UnknownEntityType: {name}")
        return Compliance(True)
    if spec.task is TaskKind.RE:
        name = norm_label(item.relation)
        constraint = _relation_map(spec).get(name)
        if constraint is None:
            return Compliance(False, f"UnknownRelation: {name}")
        if entity_types is not None:
            head = entity_types.get(norm_match(item.head))
            tail = entity_types.get(norm_match(item.tail))
            if head is not None and norm_label(head) != constraint.head_type:
                return Compliance(
                    False, f"HeadTypeMismatch: {name} expects {constraint.head_type}"
                )
            if tail is not None and norm_label(tail) != constraint.tail_type:
                return Compliance(
                    False, f"TailTypeMismatch: {name} expects {constraint.tail_type}"
                )
        return Compliance(True)
    name = norm_label(item.trigger_type)
    roles = _event_map(spec).get(name)
    if roles is None:
        return Compliance(False, f"UnknownEventType: {name}")
    for role, _span in item.arguments:
        if norm_label(role) not in roles:
            return Compliance(False, f"UnknownRole: {name}.{norm_label(role)}")
    return Compliance(True)
