"""Prompt assembly: opening statement, task definitions, demonstrations,
and the cross-agent revision prompt.

Message sequences are lists of ``{"role": ..., "content": ...}`` dicts in
the wire shape of a chat completions request. The layouts are fixed:

Initial round:
    system  opening statement
    system  task definition (identity, output format, constraint list)
    user    demonstration input          (repeated per demonstration)
    assistant demonstration gold answer
    user    the input text

Later rounds:
    user    the input text
    user    revision prompt carrying the agent's own last answer and one
            quoted answer per connected peer
    system  opening statement
    system  task definition
    user/assistant demonstration pairs

The input text appears exactly once per sequence and each peer's canonical
answer text is substituted exactly once.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import BackendError, DimensionError, TemplateError
from .records import Replica, parse_result, serialize_items
from .schema import SchemaSpec, TaskKind, render_constraint_list

logger = logging.getLogger(__name__)

Message = dict[str, str]

DEFAULT_OPENING = (
    "You are a knowledge graph constructor, need to synthesise relation "
    "extraction agent, named entity recognition agent, and event extraction "
    "agent to constitute an extraction collaborative team, which guides the "
    "agents to refine their results by referring to the extraction answers "
    "of others."
)

_IDENTITY = {
    TaskKind.NER: "You are an excellent expert in named entity recognition.",
    TaskKind.RE: "You are an excellent expert in relation extraction.",
    TaskKind.EE: "You are an excellent expert in event extraction.",
}

_FORMAT = {
    TaskKind.NER: (
        "Each result is returned as a tuple, "
        "e.g. [(entity type 1, entity span 1), ...]"
    ),
    TaskKind.RE: (
        "Each result is returned as a tuple, "
        "e.g. [(head entity 1, relation type 1, tail entity 1), ...]"
    ),
    TaskKind.EE: (
        "Each result is returned as a record, "
        "e.g. [{Trigger Type: event type 1, Trigger Word: trigger word 1, "
        "Arguments: (role 1, argument span 1), ...}, ...]"
    ),
}

OWN_PLACEHOLDER = "##LAST_ROUND_RESULT##"
_PLACEHOLDER_RX = re.compile(r"##[A-Za-z0-9_.@\-]+##")


def opening_statement(override: str | None = None) -> str:
    """The team-framing system prompt shared by every agent."""
    return DEFAULT_OPENING if override is None else override


def task_definition(spec: SchemaSpec) -> str:
    """Three sentences: who the agent is, the output format, the label set."""
    return f"{_IDENTITY[spec.task]} {_FORMAT[spec.task]}. {render_constraint_list(spec)}."


# --- demonstrations -----------------------------------------------------------


@dataclass(frozen=True)
class DemoExample:
    """One few-shot demonstration: input text and its canonical gold answer."""

    text: str
    gold_answer_canonical: str
    label: str
    embedding: tuple[float, ...]


@dataclass(frozen=True)
class PromptBundle:
    opening: str
    task_definition: str
    demonstrations: tuple[DemoExample, ...] = ()

    def __post_init__(self) -> None:
        if not self.opening.strip():
            raise ValueError("opening must be non-empty")
        if not self.task_definition.strip():
            raise ValueError("task_definition must be non-empty")


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> tuple[float, ...]: ...


@dataclass(frozen=True)
class HashingEmbedder:
    """Deterministic fallback embedder: seeded feature-hashed bag of tokens.

    Tokens are lowercased word character runs. Each token is hashed with
    blake2b over "seed:token"; the hash picks a dimension and a sign, and
    token counts accumulate. The empty string embeds to the zero vector.
    """

    dimension: int = 256
    seed: int = 1

    def embed(self, text: str) -> tuple[float, ...]:
        vec = [0.0] * self.dimension
        for token in re.findall(r"\w+", text.lower()):
            digest = hashlib.blake2b(
                f"{self.seed}:{token}".encode("utf-8"), digest_size=8
            ).digest()
            h = int.from_bytes(digest, "big")
            index = (h >> 1) % self.dimension
            vec[index] += 1.0 if h & 1 == 0 else -1.0
        return tuple(vec)


DEFAULT_EMBEDDER = HashingEmbedder()


class RemoteEmbedder:
    """Embeddings from an OpenAI-style /embeddings endpoint."""

    def __init__(
        self,
        endpoint_url: str,
        model_name: str,
        dimension: int,
        *,
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 60.0,
        client=None,
    ):
        import httpx

        self.endpoint_url = endpoint_url
        self.model_name = model_name
        self.dimension = dimension
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> tuple[float, ...]:
        import os

        key = os.environ.get(self.api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        try:
            resp = self._client.post(
                self.endpoint_url,
                json={"model": self.model_name, "input": text},
                headers=headers,
            )
            resp.raise_for_status()
            values = resp.json()["data"][0]["embedding"]
        except Exception as exc:
            raise BackendError(f"embedding request failed: {exc}") from exc
        vec = tuple(float(v) for v in values)
        if len(vec) != self.dimension:
            raise DimensionError(
                f"endpoint returned dimension {len(vec)}, expected {self.dimension}"
            )
        return vec


def select_demonstrations(
    store: Sequence[DemoExample],
    query_embedding: Sequence[float],
    n_way: int,
    k_shot: int,
) -> list[DemoExample]:
    """Pick n_way * k_shot demonstrations nearest the query.

    Labels are ranked by the Euclidean distance of their closest example;
    the k_shot nearest examples of each of the first n_way labels are taken.
    All ties break by store index ascending and the result is sorted by
    distance ascending. When a chosen label has fewer than k_shot examples,
    the shortfall is filled with the globally nearest remaining examples and
    a warning is logged.
    """
    if n_way < 0 or k_shot < 0:
        raise ValueError("n_way and k_shot must be non-negative")
    want = n_way * k_shot
    if want == 0:
        return []
    if not store:
        raise ValueError("demonstration store is empty")
    dim = len(store[0].embedding)
    for pos, example in enumerate(store):
        if len(example.embedding) != dim:
            raise DimensionError(
                f"store example {pos} has dimension {len(example.embedding)}, "
                f"expected {dim}"
            )
    query = np.asarray(query_embedding, dtype=float)
    if query.shape != (dim,):
        raise DimensionError(
            f"query has dimension {query.shape}, store has {dim}"
        )
    if want > len(store):
        raise ValueError(
            f"requested {want} demonstrations from a store of {len(store)}"
        )
    matrix = np.asarray([e.embedding for e in store], dtype=float)
    dist = np.sqrt(((matrix - query) ** 2).sum(axis=1))
    order = sorted(range(len(store)), key=lambda i: (dist[i], i))

    label_order: list[str] = []
    seen_labels: set[str] = set()
    for i in order:
        label = store[i].label
        if label not in seen_labels:
            seen_labels.add(label)
            label_order.append(label)

    chosen: list[int] = []
    for label in label_order[:n_way]:
        members = [i for i in order if store[i].label == label]
        chosen.extend(members[:k_shot])
    if len(chosen) < want:
        logger.warning(
            "store has too few examples per label (%d of %d); "
            "falling back to globally nearest remaining",
            len(chosen),
            want,
        )
        have = set(chosen)
        for i in order:
            if i not in have:
                chosen.append(i)
                have.add(i)
                if len(chosen) == want:
                    break
    chosen.sort(key=lambda i: (dist[i], i))
    return [store[i] for i in chosen]


# --- demonstration stores ------------------------------------------------------


@dataclass(frozen=True)
class DemoStore:
    task: TaskKind
    examples: tuple[DemoExample, ...]


def _derive_label(task: TaskKind, canonical: str) -> str | None:
    items = parse_result(task, canonical).items
    if not items:
        return None
    first = items[0]
    if task is TaskKind.NER:
        return first.entity_type
    if task is TaskKind.RE:
        return first.relation
    return first.trigger_type


def load_demo_store(
    path: str | Path,
    task: TaskKind,
    embedder: EmbeddingProvider | None = None,
    *,
    vectors_path: str | Path | None = None,
) -> DemoStore:
    """Load demonstrations from a JSONL file.

    Each line holds {"text", "answer", "label"?, "embedding"?}. The answer
    must already be canonical for the task. Missing embeddings come from the
    sidecar vectors file (one JSON array per line, aligned) or are computed
    with the embedder.
    """
    embedder = embedder or DEFAULT_EMBEDDER
    sidecar: list[list[float]] | None = None
    if vectors_path is not None:
        sidecar = [
            json.loads(line)
            for line in Path(vectors_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    examples: list[DemoExample] = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    records = [(n, line) for n, line in enumerate(lines, 1) if line.strip()]
    if sidecar is not None and len(sidecar) != len(records):
        raise DimensionError(
            f"vectors file has {len(sidecar)} rows for {len(records)} examples"
        )
    for position, (line_number, line) in enumerate(records):
        try:
            doc = json.loads(line)
            text = str(doc["text"])
            answer = str(doc["answer"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}, line {line_number}: bad record ({exc})") from exc
        parsed = parse_result(task, answer)
        if parsed.parse_warnings or serialize_items(parsed.items, task) != answer:
            raise ValueError(
                f"{path}, line {line_number}: answer is not canonical {task.value} text"
            )
        label = doc.get("label") or _derive_label(task, answer)
        if not label:
            raise ValueError(
                f"{path}, line {line_number}: empty answer needs an explicit label"
            )
        if "embedding" in doc:
            embedding = tuple(float(v) for v in doc["embedding"])
        elif sidecar is not None:
            embedding = tuple(float(v) for v in sidecar[position])
        else:
            embedding = embedder.embed(text)
        examples.append(DemoExample(text, answer, str(label), embedding))
    if examples:
        dim = len(examples[0].embedding)
        for pos, example in enumerate(examples):
            if len(example.embedding) != dim:
                raise DimensionError(
                    f"{path}: example {pos} has dimension {len(example.embedding)}, "
                    f"expected {dim}"
                )
    return DemoStore(task, tuple(examples))


def build_bundle(
    spec: SchemaSpec,
    store: DemoStore | None,
    input_text: str,
    n_way: int,
    k_shot: int,
    embedder: EmbeddingProvider | None = None,
    *,
    opening: str | None = None,
) -> PromptBundle:
    """Assemble the static prompt parts for one agent and one input."""
    demonstrations: tuple[DemoExample, ...] = ()
    if store is not None and n_way * k_shot > 0:
        embedder = embedder or DEFAULT_EMBEDDER
        demonstrations = tuple(
            select_demonstrations(store.examples, embedder.embed(input_text), n_way, k_shot)
        )
    return PromptBundle(
        opening=opening_statement(opening),
        task_definition=task_definition(spec),
        demonstrations=demonstrations,
    )


# --- collaboration context -------------------------------------------------------


@dataclass(frozen=True)
class CollabContext:
    """An agent's own last replica plus the replicas received from peers."""

    own_last_replica: Replica
    peer_replicas: tuple[Replica, ...] = ()

    def __post_init__(self) -> None:
        own = self.own_last_replica
        seen: set[str] = set()
        for peer in self.peer_replicas:
            if peer.agent_id == own.agent_id:
                raise ValueError(f"peer replica repeats own agent id {own.agent_id!r}")
            if peer.agent_id in seen:
                raise ValueError(f"duplicate peer replica for {peer.agent_id!r}")
            seen.add(peer.agent_id)
            if peer.round != own.round:
                raise ValueError(
                    f"peer {peer.agent_id!r} is from round {peer.round}, "
                    f"own replica is from round {own.round}"
                )


def _peer_names(peers: Sequence[Replica]) -> list[tuple[str, str]]:
    """(display name, placeholder) per peer; duplicate tasks get id suffixes."""
    task_counts: dict[TaskKind, int] = {}
    for peer in peers:
        task_counts[peer.task] = task_counts.get(peer.task, 0) + 1
    out: list[tuple[str, str]] = []
    for peer in peers:
        if task_counts[peer.task] > 1:
            name = f"{peer.task.value} ({peer.agent_id})"
            placeholder = f"##{peer.task.value}_RESULT@{peer.agent_id}##"
        else:
            name = peer.task.value
            placeholder = f"##{peer.task.value}_RESULT##"
        out.append((name, placeholder))
    return out


def collaboration_template(ctx: CollabContext) -> str:
    """The revision prompt with placeholders still in place."""
    own = ctx.own_last_replica
    parts = [
        f"The {own.task.display_name} answer you gave in the last round of "
        f'collaboration was "{OWN_PLACEHOLDER}".'
    ]
    names = _peer_names(ctx.peer_replicas)
    if names:
        segments = []
        for position, (name, placeholder) in enumerate(names):
            lead = "The answer given by the" if position == 0 else ", The"
            segments.append(f'{lead} {name} expert agent was "{placeholder}"')
        parts.append("".join(segments) + ".")
    parts.append("You should refer to other members to revise your answer.")
    return " ".join(parts)


def collaboration_prompt(ctx: CollabContext, template: str | None = None) -> str:
    """Instantiate the revision prompt for one agent.

    Every placeholder in the template must be known and appear exactly once,
    and every replica in the context must be consumed; otherwise
    TemplateError is raised. Custom templates use ##LAST_ROUND_RESULT## for
    the agent's own answer and ##<TASK>_RESULT## (or
    ##<TASK>_RESULT@<agent_id>## when several peers share a task) per peer.
    """
    if template is None:
        template = collaboration_template(ctx)
    substitutions = {OWN_PLACEHOLDER: ctx.own_last_replica.canonical_text}
    for peer, (_name, placeholder) in zip(ctx.peer_replicas, _peer_names(ctx.peer_replicas)):
        substitutions[placeholder] = peer.canonical_text
    found = _PLACEHOLDER_RX.findall(template)
    for placeholder in found:
        if placeholder not in substitutions:
            raise TemplateError(f"unknown placeholder {placeholder}")
    for placeholder in substitutions:
        count = found.count(placeholder)
        if count != 1:
            raise TemplateError(
                f"placeholder {placeholder} appears {count} times, expected once"
            )
    return _PLACEHOLDER_RX.sub(lambda m: substitutions[m.group(0)], template)


# --- message assembly --------------------------------------------------------------


def _demo_messages(bundle: PromptBundle) -> list[Message]:
    messages: list[Message] = []
    for demo in bundle.demonstrations:
        messages.append({"role": "user", "content": demo.text})
        messages.append({"role": "assistant", "content": demo.gold_answer_canonical})
    return messages


def assemble_initial(input_text: str, bundle: PromptBundle) -> list[Message]:
    """Messages for the first extraction round."""
    messages: list[Message] = [
        {"role": "system", "content": bundle.opening},
        {"role": "system", "content": bundle.task_definition},
    ]
    messages.extend(_demo_messages(bundle))
    messages.append({"role": "user", "content": input_text})
    return messages


def assemble_round(
    input_text: str,
    ctx: CollabContext,
    bundle: PromptBundle,
    template: str | None = None,
) -> list[Message]:
    """Messages for a collaboration round: input, revision prompt, then the
    standing instructions and demonstrations."""
    messages: list[Message] = [
        {"role": "user", "content": input_text},
        {"role": "user", "content": collaboration_prompt(ctx, template)},
        {"role": "system", "content": bundle.opening},
        {"role": "system", "content": bundle.task_definition},
    ]
    messages.extend(_demo_messages(bundle))
    return messages
