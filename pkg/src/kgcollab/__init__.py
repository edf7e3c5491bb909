"""kgcollab: multi-agent collaborative knowledge graph extraction.

A team of task-specialized agents (named entity recognition, relation
extraction, event extraction) works on the same input text in synchronized
rounds, exchanging schema-filtered answer digests over a directed
communication graph and revising until the round budget runs out.
"""

from __future__ import annotations

from . import errors
from .backend import (
    Backend,
    BackendConfig,
    Completion,
    FallbackRule,
    RemoteBackend,
    ScriptedBackend,
    complete,
)
from .config import AgentSpec, TeamConfig, compute_fingerprint, load_team_config
from .evaluate import (
    DatasetRecord,
    EvalReport,
    MatchCounts,
    MatchOptions,
    load_dataset,
    match_event_components,
    match_items,
    micro_f1,
    run_benchmark,
    save_dataset,
)
from .network import (
    AgentNode,
    CollaborationNetwork,
    CommunicationEdge,
    FinalAnswer,
    Transcript,
    TranscriptCell,
    build_network,
    filter_ans,
    run_collaboration,
    transfer,
)
from .prompt import (
    CollabContext,
    DemoExample,
    DemoStore,
    HashingEmbedder,
    PromptBundle,
    RemoteEmbedder,
    assemble_initial,
    assemble_round,
    build_bundle,
    collaboration_prompt,
    load_demo_store,
    opening_statement,
    select_demonstrations,
    task_definition,
)
from .records import (
    EntityMention,
    EventRecord,
    ExtractionResult,
    Item,
    RelationTriple,
    Replica,
    compliance_review,
    item_from_jsonable,
    item_to_jsonable,
    make_replica,
    parse_result,
    serialize_items,
    simplify,
)
from .schema import (
    Compliance,
    EventTypeSpec,
    RelationConstraint,
    SchemaSpec,
    TaskKind,
    dumps_schema,
    is_compliant,
    load_schema,
    loads_schema,
    render_constraint_list,
    save_schema,
)

__version__ = "0.1.0"

__all__ = [
    "AgentNode",
    "AgentSpec",
    "Backend",
    "BackendConfig",
    "CollabContext",
    "CollaborationNetwork",
    "CommunicationEdge",
    "Completion",
    "Compliance",
    "DatasetRecord",
    "DemoExample",
    "DemoStore",
    "EntityMention",
    "EvalReport",
    "EventRecord",
    "EventTypeSpec",
    "ExtractionResult",
    "FallbackRule",
    "FinalAnswer",
    "HashingEmbedder",
    "Item",
    "MatchCounts",
    "MatchOptions",
    "PromptBundle",
    "RelationConstraint",
    "RelationTriple",
    "RemoteBackend",
    "RemoteEmbedder",
    "Replica",
    "SchemaSpec",
    "ScriptedBackend",
    "TaskKind",
    "TeamConfig",
    "Transcript",
    "TranscriptCell",
    "assemble_initial",
    "assemble_round",
    "build_bundle",
    "build_network",
    "collaboration_prompt",
    "complete",
    "compliance_review",
    "compute_fingerprint",
    "dumps_schema",
    "errors",
    "filter_ans",
    "is_compliant",
    "item_from_jsonable",
    "item_to_jsonable",
    "load_dataset",
    "load_demo_store",
    "load_schema",
    "load_team_config",
    "loads_schema",
    "make_replica",
    "match_event_components",
    "match_items",
    "micro_f1",
    "opening_statement",
    "parse_result",
    "render_constraint_list",
    "run_benchmark",
    "run_collaboration",
    "save_dataset",
    "save_schema",
    "select_demonstrations",
    "serialize_items",
    "simplify",
    "task_definition",
    "transfer",
]
