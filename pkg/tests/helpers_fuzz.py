"""Random but structurally valid extraction items for round-trip fuzzing.

The canonical grammar only promises parse(serialize(items)) == items for
fields that are non-empty, whitespace-collapsed, bracket-balanced, not
quote-wrapped, and free of separator characters in label positions. The
builders here stay inside that class on purpose: label fields never contain
commas or colons, free-text fields may, bracket chunks are always balanced,
and no field starts and ends with a matching quote pair.
"""

from __future__ import annotations

import random

from kgcollab import (
    EntityMention,
    EventRecord,
    EventTypeSpec,
    Item,
    RelationConstraint,
    RelationTriple,
    SchemaSpec,
    TaskKind,
)

WORDS = [
    "border", "crossing", "officers", "troops", "uprising", "return",
    "north", "harbor", "union", "delta", "mills", "press", "valley",
    "Strasse", "café", "niño", "東京", "α", "It's", "co-op", "No.7",
]

GROUP_PAIRS = ["()", "[]"]


def make_field(
    rng: random.Random,
    *,
    allow_seps: bool = False,
    allow_groups: bool = True,
    max_tokens: int = 4,
) -> str:
    """One whitespace-collapsed field. Separators never lead or trail."""
    parts: list[str] = [rng.choice(WORDS)]
    for _ in range(rng.randint(0, max_tokens - 1)):
        roll = rng.random()
        if allow_groups and roll < 0.15:
            pair = rng.choice(GROUP_PAIRS)
            parts.append(pair[0] + rng.choice(WORDS) + pair[1])
        elif allow_seps and roll < 0.3:
            parts[-1] += rng.choice([",", ":"])
            parts.append(rng.choice(WORDS))
        else:
            parts.append(rng.choice(WORDS))
    return " ".join(parts)


def make_item(rng: random.Random, task: TaskKind) -> Item:
    if task is TaskKind.NER:
        return EntityMention(
            make_field(rng, allow_seps=False),
            make_field(rng, allow_seps=True),
        )
    if task is TaskKind.RE:
        return RelationTriple(
            make_field(rng, allow_seps=False),
            make_field(rng, allow_seps=False, allow_groups=False, max_tokens=2),
            make_field(rng, allow_seps=True),
        )
    args: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for _ in range(rng.randint(0, 3)):
        pair = (
            make_field(rng, allow_seps=False, allow_groups=False, max_tokens=2),
            make_field(rng, allow_seps=True),
        )
        if pair not in seen:
            seen.add(pair)
            args.append(pair)
    return EventRecord(
        make_field(rng, allow_seps=True, max_tokens=2),
        make_field(rng, allow_seps=True, max_tokens=2),
        tuple(args),
    )


def make_items(
    rng: random.Random, task: TaskKind, max_items: int = 5
) -> tuple[Item, ...]:
    """A duplicate-free item list (the parser drops exact duplicates)."""
    items = [make_item(rng, task) for _ in range(rng.randint(0, max_items))]
    return tuple(dict.fromkeys(items))


# --- schema-aware items for compliance fuzzing --------------------------------

ENTITY_POOL = ["PER", "LOC", "ORG", "MISC", "GPE", "FAC", "VEH"]
OFF_ENTITY = ["DATE", "MONEY"]

RELATION_POOL = [
    ("person-nationality", "PER", "LOC"),
    ("location-located_in", "LOC", "LOC"),
    ("org-founded_by", "ORG", "PER"),
    ("person-works_for", "PER", "ORG"),
    ("person-place_lived", "PER", "LOC"),
    ("org-subsidiary_of", "ORG", "ORG"),
]
OFF_RELATION = ["born-in", "married-to"]

EVENT_POOL = [
    "Conflict-Attack",
    "Movement:Transport",
    "Business:Start-Org",
    "Justice:Arrest",
    "Life:Injure",
]
OFF_EVENT = ["Weather:Storm"]

ROLE_POOL = [
    "Attacker", "Target", "Agent", "Artifact", "Destination",
    "Origin", "Place", "Time", "Org", "Vehicle", "Instrument",
]
OFF_ROLE = ["Pilot", "Witness"]


def make_schema(rng: random.Random, task: TaskKind) -> SchemaSpec:
    if task is TaskKind.NER:
        return SchemaSpec(
            id="fuzz-ner",
            task=task,
            entity_types=tuple(rng.sample(ENTITY_POOL, rng.randint(2, 5))),
        )
    if task is TaskKind.RE:
        picked = rng.sample(RELATION_POOL, rng.randint(2, 5))
        return SchemaSpec(
            id="fuzz-re",
            task=task,
            relation_constraints=tuple(RelationConstraint(*r) for r in picked),
        )
    events = tuple(
        EventTypeSpec(name, tuple(rng.sample(ROLE_POOL, rng.randint(2, 5))))
        for name in rng.sample(EVENT_POOL, rng.randint(2, 4))
    )
    return SchemaSpec(id="fuzz-ee", task=task, event_types=events)


def make_schema_item(rng: random.Random, task: TaskKind, schema: SchemaSpec) -> Item:
    """An item whose labels are sometimes in the schema and sometimes not."""
    if task is TaskKind.NER:
        pool = list(schema.entity_types) if rng.random() < 0.6 else OFF_ENTITY
        return EntityMention(rng.choice(pool), make_field(rng, allow_seps=True))
    if task is TaskKind.RE:
        if rng.random() < 0.6:
            relation = rng.choice(schema.relation_constraints).relation
        else:
            relation = rng.choice(OFF_RELATION)
        return RelationTriple(
            make_field(rng), relation, make_field(rng, allow_seps=True)
        )
    if rng.random() < 0.7:
        spec = rng.choice(schema.event_types)
        name, roles = spec.name, list(spec.roles)
    else:
        name, roles = rng.choice(OFF_EVENT), list(ROLE_POOL)
    args: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for _ in range(rng.randint(0, 3)):
        role = rng.choice(roles) if rng.random() < 0.7 else rng.choice(OFF_ROLE)
        pair = (role, make_field(rng, allow_seps=True))
        if pair not in seen:
            seen.add(pair)
            args.append(pair)
    return EventRecord(name, make_field(rng, max_tokens=2), tuple(args))


def make_schema_items(
    rng: random.Random, task: TaskKind, schema: SchemaSpec, max_items: int = 6
) -> tuple[Item, ...]:
    items = [make_schema_item(rng, task, schema) for _ in range(rng.randint(0, max_items))]
    return tuple(dict.fromkeys(items))
