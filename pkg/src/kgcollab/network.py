"""The collaboration network: agents, directed edges, and the round loop.

One run proceeds in synchronized rounds. Round 0 is the initial extraction
from the bare prompt. In every later round each agent receives the previous
round's replicas from the senders wired into it, gets a revision prompt
built from them, and answers again. Rounds are barriers: no agent's prompt
for round t is assembled until every agent's round t-1 replica exists.
After the last round each agent's replica is filtered against its schema
one more time to produce the final answer.

Unless an explicit edge list is given the network is fully connected in
both directions, so n agents have n*(n-1) directed edges.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .backend import Backend, Completion
from .errors import (
    BackendError,
    DuplicateAgentId,
    EmptyInput,
    IncompleteRound,
    SelfLoop,
    UnknownEndpoint,
)
from .prompt import CollabContext, Message, PromptBundle, assemble_initial, assemble_round
from .records import (
    Item,
    Replica,
    compliance_review,
    item_from_jsonable,
    item_to_jsonable,
    make_replica,
    parse_result,
    serialize_items,
    simplify,
)
from .schema import SchemaSpec, TaskKind, is_compliant
from .textnorm import norm_match

logger = logging.getLogger(__name__)

TRANSCRIPT_VERSION = 1


@dataclass(frozen=True)
class AgentNode:
    """One team member: identity, task, schema, prompt parts, backend."""

    agent_id: str
    task: TaskKind
    schema: SchemaSpec
    bundle: PromptBundle
    backend: Backend

    def __post_init__(self) -> None:
        if not self.agent_id or not self.agent_id.strip():
            raise ValueError("agent_id must be non-empty")
        if self.schema.task is not self.task:
            raise ValueError(
                f"agent {self.agent_id!r} does task {self.task.value} but its "
                f"schema is for {self.schema.task.value}"
            )


@dataclass(frozen=True, slots=True)
class CommunicationEdge:
    """Directed channel: from_agent's replica is delivered to to_agent."""

    from_agent: str
    to_agent: str

    def __post_init__(self) -> None:
        if self.from_agent == self.to_agent:
            raise SelfLoop(f"agent {self.from_agent!r} cannot message itself")


@dataclass(frozen=True)
class CollaborationNetwork:
    nodes: tuple[AgentNode, ...]
    edges: frozenset[CommunicationEdge]
    max_rounds: int = 4

    def agent_ids(self) -> list[str]:
        return [node.agent_id for node in self.nodes]

    def node(self, agent_id: str) -> AgentNode:
        for node in self.nodes:
            if node.agent_id == agent_id:
                return node
        raise UnknownEndpoint(f"no agent {agent_id!r} in the network")


def build_network(
    nodes: Sequence[AgentNode],
    edges: Iterable[tuple[str, str]] | None = None,
    max_rounds: int = 4,
) -> CollaborationNetwork:
    """Validate the team and wire it up.

    With edges=None every ordered pair of distinct agents gets an edge.
    An explicit edge list (possibly empty) is used as given.
    """
    if max_rounds < 0:
        raise ValueError("max_rounds must be >= 0")
    ids: set[str] = set()
    for node in nodes:
        if node.agent_id in ids:
            raise DuplicateAgentId(f"duplicate agent id: {node.agent_id}")
        ids.add(node.agent_id)
    edge_set: set[CommunicationEdge] = set()
    if edges is None:
        for a, b in itertools.permutations(sorted(ids), 2):
            edge_set.add(CommunicationEdge(a, b))
    else:
        for from_agent, to_agent in edges:
            if from_agent not in ids:
                raise UnknownEndpoint(f"edge references unknown agent {from_agent!r}")
            if to_agent not in ids:
                raise UnknownEndpoint(f"edge references unknown agent {to_agent!r}")
            edge_set.add(CommunicationEdge(from_agent, to_agent))
    return CollaborationNetwork(tuple(nodes), frozenset(edge_set), max_rounds)


def transfer(
    network: CollaborationNetwork,
    round_replicas: Mapping[str, Replica],
    receiver: str,
) -> list[Replica]:
    """The receiver's incoming replica queue, ordered by sender id.

    Raises IncompleteRound when a wired-in sender has no replica yet; the
    round barrier depends on that never happening mid-run.
    """
    if receiver not in {node.agent_id for node in network.nodes}:
        raise UnknownEndpoint(f"no agent {receiver!r} in the network")
    senders = sorted(
        edge.from_agent for edge in network.edges if edge.to_agent == receiver
    )
    queue: list[Replica] = []
    for sender in senders:
        if sender not in round_replicas:
            raise IncompleteRound(
                f"no replica from {sender!r} for receiver {receiver!r}"
            )
        queue.append(round_replicas[sender])
    return queue


def filter_ans(
    replica: Replica,
    spec: SchemaSpec,
    *,
    entity_types: Mapping[str, str] | None = None,
) -> tuple[Item, ...]:
    """Final filtering pass: the compliant subset of a replica's items."""
    return tuple(
        item
        for item in replica.items
        if is_compliant(spec, item, entity_types=entity_types)
    )


# --- transcripts ------------------------------------------------------------


@dataclass
class TranscriptCell:
    """Everything one agent did in one round."""

    agent_id: str
    task: TaskKind
    messages: list[Message]
    raw_response: str
    replica: Replica
    warnings: list[str] = field(default_factory=list)
    dropped: list[dict[str, Any]] = field(default_factory=list)
    peer_refs: list[dict[str, Any]] = field(default_factory=list)
    failure: str | None = None
    attempts: int = 1
    assembled_seq: int = 0
    completed_seq: int = 0
    elapsed_s: float = 0.0


@dataclass
class FinalAnswer:
    items: tuple[Item, ...]
    canonical_text: str


@dataclass
class Transcript:
    """Complete record of one collaboration run."""

    input_text: str
    rounds: list[dict[str, TranscriptCell]]
    final: dict[str, FinalAnswer]
    meta: dict[str, Any]

    def cell(self, round: int, agent_id: str) -> TranscriptCell:
        try:
            return self.rounds[round][agent_id]
        except (IndexError, KeyError):
            raise KeyError(f"no cell for agent {agent_id!r} in round {round}") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "transcript_version": TRANSCRIPT_VERSION,
            "input_text": self.input_text,
            "rounds": [
                {
                    "round": index,
                    "agents": {
                        agent_id: _cell_to_dict(cell)
                        for agent_id, cell in sorted(cells.items())
                    },
                }
                for index, cells in enumerate(self.rounds)
            ],
            "final": {
                agent_id: {
                    "items": [item_to_jsonable(i) for i in answer.items],
                    "canonical_text": answer.canonical_text,
                }
                for agent_id, answer in sorted(self.final.items())
            },
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Transcript":
        if doc.get("transcript_version") != TRANSCRIPT_VERSION:
            raise ValueError(
                f"unsupported transcript_version: {doc.get('transcript_version')!r}"
            )
        rounds: list[dict[str, TranscriptCell]] = []
        for round_doc in doc["rounds"]:
            cells = {
                agent_id: _cell_from_dict(agent_id, cell_doc)
                for agent_id, cell_doc in round_doc["agents"].items()
            }
            rounds.append(cells)
        final: dict[str, FinalAnswer] = {}
        for agent_id, answer in doc["final"].items():
            task = _final_task(rounds, agent_id)
            items = tuple(item_from_jsonable(task, obj) for obj in answer["items"])
            final[agent_id] = FinalAnswer(items, answer["canonical_text"])
        return cls(
            input_text=doc["input_text"],
            rounds=rounds,
            final=final,
            meta=dict(doc.get("meta", {})),
        )

    def save(self, path: str | Path) -> None:
        import json

        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        import json

        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _final_task(rounds: list[dict[str, TranscriptCell]], agent_id: str) -> TaskKind:
    for cells in rounds:
        if agent_id in cells:
            return cells[agent_id].task
    raise ValueError(f"agent {agent_id!r} appears in final but in no round")


def _cell_to_dict(cell: TranscriptCell) -> dict[str, Any]:
    return {
        "task": cell.task.value,
        "messages": [dict(m) for m in cell.messages],
        "raw_response": cell.raw_response,
        "replica": {
            "agent_id": cell.replica.agent_id,
            "round": cell.replica.round,
            "task": cell.replica.task.value,
            "items": [item_to_jsonable(i) for i in cell.replica.items],
            "canonical_text": cell.replica.canonical_text,
        },
        "warnings": list(cell.warnings),
        "dropped": list(cell.dropped),
        "peer_refs": list(cell.peer_refs),
        "failure": cell.failure,
        "attempts": cell.attempts,
        "assembled_seq": cell.assembled_seq,
        "completed_seq": cell.completed_seq,
        "timing": {"elapsed_s": cell.elapsed_s},
    }


def _cell_from_dict(agent_id: str, doc: Mapping[str, Any]) -> TranscriptCell:
    task = TaskKind.parse(doc["task"])
    replica_doc = doc["replica"]
    items = tuple(item_from_jsonable(task, obj) for obj in replica_doc["items"])
    replica = Replica(
        agent_id=replica_doc["agent_id"],
        round=int(replica_doc["round"]),
        task=task,
        items=items,
        canonical_text=replica_doc["canonical_text"],
    )
    return TranscriptCell(
        agent_id=agent_id,
        task=task,
        messages=[dict(m) for m in doc["messages"]],
        raw_response=doc["raw_response"],
        replica=replica,
        warnings=list(doc.get("warnings", ())),
        dropped=list(doc.get("dropped", ())),
        peer_refs=list(doc.get("peer_refs", ())),
        failure=doc.get("failure"),
        attempts=int(doc.get("attempts", 1)),
        assembled_seq=int(doc.get("assembled_seq", 0)),
        completed_seq=int(doc.get("completed_seq", 0)),
        elapsed_s=float(doc.get("timing", {}).get("elapsed_s", 0.0)),
    )


# --- the round loop -----------------------------------------------------------


def _entity_type_map(
    network: CollaborationNetwork, replicas: Mapping[str, Replica]
) -> dict[str, str]:
    """Span-to-type map from the NER agents' latest replicas. When several
    NER agents type the same span, the lowest agent id wins."""
    mapping: dict[str, str] = {}
    ner_ids = sorted(
        node.agent_id for node in network.nodes if node.task is TaskKind.NER
    )
    for agent_id in ner_ids:
        replica = replicas.get(agent_id)
        if replica is None:
            continue
        for item in replica.items:
            mapping.setdefault(norm_match(item.span), item.entity_type)
    return mapping


def _complete_all(
    network: CollaborationNetwork,
    assembled: Mapping[str, list[Message]],
    round: int,
    jobs: int,
) -> dict[str, tuple[str, int, str | None, float]]:
    """Run every agent's completion; failures become recorded outcomes."""

    def call(node: AgentNode) -> tuple[str, int, str | None, float]:
        start = time.perf_counter()
        try:
            completion: Completion = node.backend.complete(
                assembled[node.agent_id], agent_id=node.agent_id, round=round
            )
            return (
                completion.text,
                completion.attempts,
                None,
                time.perf_counter() - start,
            )
        except BackendError as exc:
            logger.warning(
                "agent %s failed in round %d: %s", node.agent_id, round, exc
            )
            return (
                "",
                getattr(exc, "attempts", 1),
                f"{type(exc).__name__}: {exc}",
                time.perf_counter() - start,
            )

    if jobs > 1 and len(network.nodes) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(network.nodes))) as pool:
            results = list(pool.map(call, network.nodes))
    else:
        results = [call(node) for node in network.nodes]
    return {
        node.agent_id: outcome for node, outcome in zip(network.nodes, results)
    }


def run_collaboration(
    network: CollaborationNetwork,
    input_text: str,
    rounds: int | None = None,
    *,
    jobs: int = 1,
    strict_relation_types: bool = False,
    collab_template: str | None = None,
) -> Transcript:
    """Run the full round loop on one input and return the transcript.

    rounds counts collaboration rounds after the initial extraction, so
    rounds=0 runs the initial extraction only. It must not exceed the
    network's max_rounds. A backend failure leaves that agent with an empty
    replica for the round; peers simply see an empty answer.
    """
    if not input_text or not input_text.strip():
        raise EmptyInput("input text is empty")
    if rounds is None:
        rounds = network.max_rounds
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if rounds > network.max_rounds:
        raise ValueError(
            f"rounds={rounds} exceeds the network's max_rounds={network.max_rounds}"
        )
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    if not network.nodes:
        raise ValueError("network has no agents")

    started_at = datetime.now(timezone.utc).isoformat()
    run_start = time.perf_counter()
    seq = itertools.count()
    all_rounds: list[dict[str, TranscriptCell]] = []
    previous: dict[str, Replica] = {}

    for current_round in range(rounds + 1):
        assembled: dict[str, list[Message]] = {}
        assembled_seq: dict[str, int] = {}
        peer_refs: dict[str, list[dict[str, Any]]] = {}
        for node in network.nodes:
            if current_round == 0:
                messages = assemble_initial(input_text, node.bundle)
                peer_refs[node.agent_id] = []
            else:
                queue = transfer(network, previous, node.agent_id)
                ctx = CollabContext(
                    own_last_replica=previous[node.agent_id],
                    peer_replicas=tuple(queue),
                )
                messages = assemble_round(
                    input_text, ctx, node.bundle, template=collab_template
                )
                peer_refs[node.agent_id] = [
                    {"agent_id": replica.agent_id, "round": replica.round}
                    for replica in queue
                ]
            assembled[node.agent_id] = messages
            assembled_seq[node.agent_id] = next(seq)

        outcomes = _complete_all(network, assembled, current_round, jobs)

        strict_map = (
            _entity_type_map(network, previous)
            if strict_relation_types and current_round > 0
            else None
        )
        cells: dict[str, TranscriptCell] = {}
        current: dict[str, Replica] = {}
        for node in network.nodes:
            raw, attempts, failure, elapsed = outcomes[node.agent_id]
            result = parse_result(node.task, raw)
            entity_types = strict_map if node.task is TaskKind.RE else None
            replica = simplify(
                result,
                node.schema,
                node.agent_id,
                current_round,
                entity_types=entity_types,
            )
            dropped = [
                {"item": item_to_jsonable(item), "reason": verdict.reason}
                for item, verdict in compliance_review(
                    result, node.schema, entity_types=entity_types
                )
                if not verdict.ok
            ]
            cells[node.agent_id] = TranscriptCell(
                agent_id=node.agent_id,
                task=node.task,
                messages=assembled[node.agent_id],
                raw_response=raw,
                replica=replica,
                warnings=list(result.parse_warnings),
                dropped=dropped,
                peer_refs=peer_refs[node.agent_id],
                failure=failure,
                attempts=attempts,
                assembled_seq=assembled_seq[node.agent_id],
                completed_seq=next(seq),
                elapsed_s=elapsed,
            )
            current[node.agent_id] = replica
        all_rounds.append(cells)
        previous = current

    final_map: dict[str, FinalAnswer] = {}
    final_entity_types = (
        _entity_type_map(network, previous) if strict_relation_types else None
    )
    for node in network.nodes:
        entity_types = (
            final_entity_types if node.task is TaskKind.RE else None
        )
        items = filter_ans(previous[node.agent_id], node.schema, entity_types=entity_types)
        final_map[node.agent_id] = FinalAnswer(
            items=items, canonical_text=serialize_items(items, node.task)
        )

    meta: dict[str, Any] = {
        "agents": [
            {"agent_id": node.agent_id, "task": node.task.value, "schema": node.schema.id}
            for node in network.nodes
        ],
        "edges": sorted((e.from_agent, e.to_agent) for e in network.edges),
        "rounds_run": rounds,
        "max_rounds": network.max_rounds,
        "strict_relation_types": strict_relation_types,
        "started_at": started_at,
        "duration_s": time.perf_counter() - run_start,
    }
    return Transcript(
        input_text=input_text, rounds=all_rounds, final=final_map, meta=meta
    )
