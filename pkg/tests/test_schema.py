"""Schema loading, constraint rendering, and compliance checks."""

from __future__ import annotations

import pytest

from kgcollab import (
    Compliance,
    EntityMention,
    EventRecord,
    EventTypeSpec,
    RelationConstraint,
    RelationTriple,
    SchemaSpec,
    TaskKind,
    dumps_schema,
    is_compliant,
    load_schema,
    loads_schema,
    render_constraint_list,
    save_schema,
)
from kgcollab.errors import (
    DuplicateType,
    EmptySchema,
    SchemaFormatError,
    TaskMismatch,
    UnknownTask,
)


def test_task_parse_and_display_names():
    assert TaskKind.parse("NER") is TaskKind.NER
    assert TaskKind.parse(" RE ") is TaskKind.RE
    assert TaskKind.NER.display_name == "named entity recognition"
    assert TaskKind.RE.display_name == "relation extraction"
    assert TaskKind.EE.display_name == "event extraction"
    with pytest.raises(UnknownTask):
        TaskKind.parse("summarization")


def test_schema_files_round_trip(tmp_path, ner_schema, re_schema, ee_schema):
    for spec in (ner_schema, re_schema, ee_schema):
        assert loads_schema(dumps_schema(spec)) == spec
        path = tmp_path / f"{spec.task.value}.json"
        save_schema(spec, path)
        assert load_schema(path) == spec


def test_labels_are_normalized():
    spec = SchemaSpec(id="  padded  ", task=TaskKind.NER, entity_types=(" PER ", "LOC"))
    assert spec.id == "padded"
    assert spec.entity_types == ("PER", "LOC")


def test_duplicate_entity_type():
    with pytest.raises(DuplicateType, match="duplicate entity type: PER"):
        SchemaSpec(id="x", task=TaskKind.NER, entity_types=("PER", "LOC", "PER"))


def test_duplicate_relation_and_event_and_role():
    constraint = RelationConstraint("person-nationality", "PER", "LOC")
    with pytest.raises(DuplicateType, match="duplicate relation"):
        SchemaSpec(id="x", task=TaskKind.RE, relation_constraints=(constraint, constraint))
    event = EventTypeSpec("Conflict-Attack", ("Attacker",))
    with pytest.raises(DuplicateType, match="duplicate event type"):
        SchemaSpec(id="x", task=TaskKind.EE, event_types=(event, event))
    with pytest.raises(DuplicateType, match="duplicate role"):
        SchemaSpec(
            id="x",
            task=TaskKind.EE,
            event_types=(EventTypeSpec("Conflict-Attack", ("Attacker", "Attacker")),),
        )


def test_empty_schema_rejected():
    with pytest.raises(EmptySchema):
        SchemaSpec(id="x", task=TaskKind.NER)
    with pytest.raises(EmptySchema, match="has no roles"):
        SchemaSpec(id="x", task=TaskKind.EE, event_types=(EventTypeSpec("E", ()),))


def test_irrelevant_list_rejected():
    with pytest.raises(SchemaFormatError, match="must not define"):
        SchemaSpec(
            id="x",
            task=TaskKind.NER,
            entity_types=("PER",),
            relation_constraints=(RelationConstraint("r", "PER", "PER"),),
        )


def test_loads_schema_rejects_bad_documents():
    with pytest.raises(SchemaFormatError, match="not valid JSON"):
        loads_schema("{nope")
    with pytest.raises(SchemaFormatError, match="JSON object"):
        loads_schema("[1, 2]")
    with pytest.raises(SchemaFormatError, match="schema_version"):
        loads_schema('{"schema_version": 99, "id": "x", "task": "NER"}')
    with pytest.raises(SchemaFormatError, match="'id' and 'task'"):
        loads_schema('{"schema_version": 1, "task": "NER"}')
    with pytest.raises(UnknownTask):
        loads_schema('{"schema_version": 1, "id": "x", "task": "parsing"}')


def test_render_constraint_list_ner(ner_schema):
    assert render_constraint_list(ner_schema) == (
        "The list of constrained entity types is: [PER, LOC, ORG, MISC]"
    )


def test_render_constraint_list_re(re_schema):
    assert render_constraint_list(re_schema) == (
        "The list of constrained relations is: ["
        "location-located_in: [LOC, LOC], "
        "person-nationality: [PER, LOC], "
        "person-place_lived: [PER, LOC], "
        "org-founded_by: [ORG, PER], "
        "person-works_for: [PER, ORG]]"
    )


def test_render_constraint_list_ee(ee_schema):
    assert render_constraint_list(ee_schema) == (
        "The list of constrained event types is: ["
        "Conflict-Attack: [Attacker, Target, Instrument, Place, Time], "
        "Movement:Transport: [Agent, Artifact, Vehicle, Origin, Destination, Place, Time], "
        "Business:Start-Org: [Agent, Org, Place, Time]]"
    )


def test_compliance_is_truthy():
    assert bool(Compliance(True)) is True
    assert bool(Compliance(False, "why")) is False


def test_is_compliant_ner(ner_schema):
    assert is_compliant(ner_schema, EntityMention("PER", "Alice"))
    verdict = is_compliant(ner_schema, EntityMention("ANIMAL", "cat"))
    assert not verdict
    assert verdict.reason == "UnknownEntityType: ANIMAL"


def test_is_compliant_re_relation_name_only(re_schema):
    ok = RelationTriple("Alice", "person-nationality", "France")
    assert is_compliant(re_schema, ok)
    verdict = is_compliant(re_schema, RelationTriple("a", "sibling-of", "b"))
    assert verdict.reason == "UnknownRelation: sibling-of"


def test_is_compliant_re_with_entity_types(re_schema):
    types = {"Alice": "PER", "Acme": "ORG", "Paris": "LOC"}
    assert is_compliant(
        re_schema, RelationTriple("Alice", "person-works_for", "Acme"), entity_types=types
    )
    head_bad = is_compliant(
        re_schema, RelationTriple("Acme", "person-works_for", "Alice"), entity_types=types
    )
    assert head_bad.reason == "HeadTypeMismatch: person-works_for expects PER"
    tail_bad = is_compliant(
        re_schema, RelationTriple("Alice", "person-works_for", "Paris"), entity_types=types
    )
    assert tail_bad.reason == "TailTypeMismatch: person-works_for expects ORG"
    # spans the map does not know stay unchecked
    assert is_compliant(
        re_schema, RelationTriple("Bob", "person-works_for", "Initech"), entity_types=types
    )


def test_is_compliant_ee(ee_schema):
    ok = EventRecord("Conflict-Attack", "stormed", (("Attacker", "raiders"),))
    assert is_compliant(ee_schema, ok)
    unknown_type = is_compliant(ee_schema, EventRecord("Weather:Storm", "hit"))
    assert unknown_type.reason == "UnknownEventType: Weather:Storm"
    bad_role = is_compliant(
        ee_schema, EventRecord("Conflict-Attack", "stormed", (("Pilot", "x"),))
    )
    assert bad_role.reason == "UnknownRole: Conflict-Attack.Pilot"


def test_is_compliant_task_mismatch(ner_schema):
    with pytest.raises(TaskMismatch):
        is_compliant(ner_schema, RelationTriple("a", "r", "b"))
