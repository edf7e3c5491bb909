"""Team configuration files and run fingerprints.

A team config is a JSON document describing the agents and their wiring:

    {"config_version": 1,
     "max_rounds": 4,
     "strict_relation_types": false,
     "agents": [
        {"id": "ner", "task": "NER", "schema": "schemas/ner.json",
         "demo_store": "demos/ner.jsonl", "n_way": 1, "k_shot": 0},
        ...],
     "edges": [["ner", "re"], ...]}

Relative paths resolve against the config file's directory. When "edges"
is absent the network is fully connected in both directions; an explicit
empty list means no communication at all.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Sequence

from .backend import Backend
from .errors import ConfigError, KgCollabError
from .network import AgentNode, CollaborationNetwork, build_network
from .prompt import DemoStore, EmbeddingProvider, build_bundle, load_demo_store
from .schema import SchemaSpec, TaskKind, dumps_schema, load_schema

CONFIG_VERSION = 1


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    task: TaskKind
    schema: SchemaSpec
    demo_store: DemoStore | None = None
    n_way: int = 1
    k_shot: int = 0

    def __post_init__(self) -> None:
        if self.n_way < 0 or self.k_shot < 0:
            raise ConfigError("n_way and k_shot must be non-negative")
        if self.k_shot > 0 and self.n_way > 0 and self.demo_store is None:
            raise ConfigError(
                f"agent {self.agent_id!r} wants demonstrations but has no demo store"
            )


@dataclass(frozen=True)
class TeamConfig:
    agents: tuple[AgentSpec, ...]
    edges: tuple[tuple[str, str], ...] | None = None
    max_rounds: int = 4
    strict_relation_types: bool = False
    source_path: str | None = None

    def bind(
        self,
        input_text: str,
        backend: Backend,
        embedder: EmbeddingProvider | None = None,
    ) -> CollaborationNetwork:
        """Build a runnable network for one input text."""
        nodes = [
            AgentNode(
                agent_id=spec.agent_id,
                task=spec.task,
                schema=spec.schema,
                bundle=build_bundle(
                    spec.schema,
                    spec.demo_store,
                    input_text,
                    spec.n_way,
                    spec.k_shot,
                    embedder,
                ),
                backend=backend,
            )
            for spec in self.agents
        ]
        return build_network(nodes, self.edges, self.max_rounds)

    def with_shots(self, k_shot: int) -> "TeamConfig":
        """Override every agent's shot count."""
        agents = []
        for spec in self.agents:
            if k_shot > 0 and spec.demo_store is None:
                raise ConfigError(
                    f"agent {spec.agent_id!r} has no demo store, cannot set shots"
                )
            agents.append(replace(spec, k_shot=k_shot))
        return replace(self, agents=tuple(agents))


def load_team_config(
    path: str | Path, embedder: EmbeddingProvider | None = None
) -> TeamConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("config_version") != CONFIG_VERSION:
        raise ConfigError(f"{path}: unsupported config document")
    base = path.parent
    agents: list[AgentSpec] = []
    try:
        for entry in doc["agents"]:
            task = TaskKind.parse(str(entry["task"]))
            schema = load_schema(base / entry["schema"])
            store = None
            if entry.get("demo_store"):
                store = load_demo_store(base / entry["demo_store"], task, embedder)
            agents.append(
                AgentSpec(
                    agent_id=str(entry["id"]),
                    task=task,
                    schema=schema,
                    demo_store=store,
                    n_way=int(entry.get("n_way", 1)),
                    k_shot=int(entry.get("k_shot", 0)),
                )
            )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError, KgCollabError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not agents:
        raise ConfigError(f"{path}: config declares no agents")
    edges = None
    if "edges" in doc and doc["edges"] is not None:
        edges = tuple((str(a), str(b)) for a, b in doc["edges"])
    return TeamConfig(
        agents=tuple(agents),
        edges=edges,
        max_rounds=int(doc.get("max_rounds", 4)),
        strict_relation_types=bool(doc.get("strict_relation_types", False)),
        source_path=str(path),
    )


def compute_fingerprint(
    team: TeamConfig,
    backend_desc: str,
    *,
    rounds: Sequence[int] | int | None = None,
    repetitions: int | None = None,
    seed: int | None = None,
) -> str:
    """Stable digest of everything that determines a run's outputs."""
    doc: dict[str, Any] = {
        "agents": [
            {
                "id": spec.agent_id,
                "task": spec.task.value,
                "schema": dumps_schema(spec.schema),
                "n_way": spec.n_way,
                "k_shot": spec.k_shot,
                "demo_store": sorted(
                    (e.text, e.gold_answer_canonical, e.label)
                    for e in spec.demo_store.examples
                )
                if spec.demo_store
                else None,
            }
            for spec in team.agents
        ],
        "edges": sorted(team.edges) if team.edges is not None else None,
        "max_rounds": team.max_rounds,
        "strict_relation_types": team.strict_relation_types,
        "backend": backend_desc,
        "rounds": list(rounds) if isinstance(rounds, (list, tuple)) else rounds,
        "repetitions": repetitions,
        "seed": seed,
    }
    blob = json.dumps(doc, ensure_ascii=False, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
