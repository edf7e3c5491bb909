"""Datasets, answer matching, micro-averaged F1, and benchmark sweeps.

Matching is exact string equality after normalization (NFC, trim, collapse
internal whitespace). Events are scored element-wise: one element for the
trigger (event type plus trigger word) and one per argument (event type,
role, span), so a wrong argument costs exactly one false positive and one
false negative while the trigger still counts.

Counts are pooled micro-style: true/false positives and false negatives are
summed over all records first and precision, recall, and F1 are computed
from the pooled sums. Repeated runs are averaged arithmetically per metric.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .errors import BenchmarkError, DatasetParseError, EmptyDataset, KgCollabError
from .network import CollaborationNetwork, Transcript, run_collaboration
from .records import Item, check_items, item_from_jsonable, item_to_jsonable
from .schema import TaskKind
from .textnorm import fold_fullwidth, norm_match

logger = logging.getLogger(__name__)

DATASET_VERSION = 1


# --- matching -----------------------------------------------------------------


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if self.tp < 0 or self.fp < 0 or self.fn < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class MatchOptions:
    """Optional looser normalization knobs, all off by default."""

    fold_case: bool = False
    strip_leading_articles: bool = False
    fold_fullwidth: bool = False


_ARTICLES = {"the", "a", "an"}


def _norm(text: str, options: MatchOptions) -> str:
    if options.fold_fullwidth:
        text = fold_fullwidth(text)
    text = norm_match(text)
    if options.fold_case:
        text = text.casefold()
    if options.strip_leading_articles:
        first, _, rest = text.partition(" ")
        if rest and first.casefold() in _ARTICLES:
            text = rest
    return text


def _elements(items: Sequence[Item], task: TaskKind, options: MatchOptions) -> Counter:
    counter: Counter = Counter()
    for item in items:
        if task is TaskKind.NER:
            counter[("ent", _norm(item.entity_type, options), _norm(item.span, options))] += 1
        elif task is TaskKind.RE:
            counter[
                (
                    "rel",
                    _norm(item.head, options),
                    _norm(item.relation, options),
                    _norm(item.tail, options),
                )
            ] += 1
        else:
            event_type = _norm(item.trigger_type, options)
            counter[("trg", event_type, _norm(item.trigger_word, options))] += 1
            for role, span in item.arguments:
                counter[
                    ("arg", event_type, _norm(role, options), _norm(span, options))
                ] += 1
    return counter


def _count(pred: Counter, gold: Counter) -> MatchCounts:
    tp = sum(min(count, gold[element]) for element, count in pred.items())
    return MatchCounts(tp, sum(pred.values()) - tp, sum(gold.values()) - tp)


def match_items(
    pred: Sequence[Item],
    gold: Sequence[Item],
    task: TaskKind,
    options: MatchOptions | None = None,
) -> MatchCounts:
    """Count true/false positives and false negatives for one record."""
    check_items(task, pred)
    check_items(task, gold)
    options = options or MatchOptions()
    return _count(_elements(pred, task, options), _elements(gold, task, options))


def match_event_components(
    pred: Sequence[Item],
    gold: Sequence[Item],
    options: MatchOptions | None = None,
) -> dict[str, MatchCounts]:
    """Event scores split into trigger and argument components."""
    check_items(TaskKind.EE, pred)
    check_items(TaskKind.EE, gold)
    options = options or MatchOptions()
    pred_elements = _elements(pred, TaskKind.EE, options)
    gold_elements = _elements(gold, TaskKind.EE, options)
    out: dict[str, MatchCounts] = {}
    for name, tag in (("trigger", "trg"), ("argument", "arg")):
        p = Counter({e: c for e, c in pred_elements.items() if e[0] == tag})
        g = Counter({e: c for e, c in gold_elements.items() if e[0] == tag})
        out[name] = _count(p, g)
    return out


def micro_f1(counts: MatchCounts) -> tuple[float, float, float]:
    """(precision, recall, f1) with the usual zero conventions."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


# --- datasets -----------------------------------------------------------------


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    text: str
    gold: Mapping[TaskKind, tuple[Item, ...]]

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        if not self.text or not self.text.strip():
            raise ValueError(f"record {self.id!r} has empty text")
        for task, items in self.gold.items():
            check_items(task, items)


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Read a JSONL dataset.

    An optional first line {"dataset_version": 1} is allowed. Every other
    non-blank line is one record:

        {"id": ..., "text": ..., "gold": {"NER": [[type, span], ...],
         "RE": [[head, relation, tail], ...], "EE": [{...}, ...]}}

    Any subset of tasks may be present per record.
    """
    records: list[DatasetRecord] = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line_number, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(f"invalid JSON ({exc.msg})", line_number) from exc
        if not isinstance(doc, dict):
            raise DatasetParseError("record must be a JSON object", line_number)
        if "dataset_version" in doc and "id" not in doc:
            if doc["dataset_version"] != DATASET_VERSION:
                raise DatasetParseError(
                    f"unsupported dataset_version: {doc['dataset_version']!r}",
                    line_number,
                )
            continue
        try:
            gold: dict[TaskKind, tuple[Item, ...]] = {}
            for task_name, objs in doc.get("gold", {}).items():
                task = TaskKind.parse(task_name)
                gold[task] = tuple(item_from_jsonable(task, obj) for obj in objs)
            records.append(
                DatasetRecord(id=str(doc["id"]), text=str(doc["text"]), gold=gold)
            )
        except (KeyError, ValueError, TypeError, KgCollabError) as exc:
            raise DatasetParseError(str(exc), line_number) from exc
    if not records:
        raise EmptyDataset(f"no records in {path}")
    return records


def save_dataset(records: Sequence[DatasetRecord], path: str | Path) -> None:
    lines = [json.dumps({"dataset_version": DATASET_VERSION})]
    for record in records:
        lines.append(
            json.dumps(
                {
                    "id": record.id,
                    "text": record.text,
                    "gold": {
                        task.value: [item_to_jsonable(i) for i in items]
                        for task, items in record.gold.items()
                    },
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- benchmark ----------------------------------------------------------------


@dataclass
class ReportRow:
    """Pooled scores for one task at one round budget."""

    task: str
    rounds: int
    agent_id: str
    sample_count: int
    precision: float
    recall: float
    f1: float
    f1_by_repetition: list[float]
    counts_by_repetition: list[dict[str, int]]
    components: dict[str, Any] | None = None


@dataclass
class EvalReport:
    rows: list[ReportRow]
    fingerprint: str
    repetitions: int
    rounds_list: list[int]
    sample_count: int
    generated_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def to_dict(self) -> dict[str, Any]:
        return {
            "report_version": 1,
            "fingerprint": self.fingerprint,
            "repetitions": self.repetitions,
            "rounds_list": list(self.rounds_list),
            "sample_count": self.sample_count,
            "generated_at": self.generated_at,
            "rows": [
                {
                    "task": row.task,
                    "rounds": row.rounds,
                    "agent_id": row.agent_id,
                    "sample_count": row.sample_count,
                    "precision": row.precision,
                    "recall": row.recall,
                    "f1": row.f1,
                    "f1_by_repetition": list(row.f1_by_repetition),
                    "counts_by_repetition": list(row.counts_by_repetition),
                    "components": row.components,
                }
                for row in self.rows
            ],
        }

    def format_table(self) -> str:
        header = (
            f"{'task':<6} {'rounds':>6} {'agent':<12} {'n':>5} "
            f"{'precision':>9} {'recall':>9} {'f1':>9}"
        )
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(
                f"{row.task:<6} {row.rounds:>6} {row.agent_id:<12} "
                f"{row.sample_count:>5} {row.precision:>9.4f} "
                f"{row.recall:>9.4f} {row.f1:>9.4f}"
            )
        return "\n".join(lines)

    def series_rows(self) -> list[tuple[str, int, float]]:
        return [(row.task, row.rounds, row.f1) for row in self.rows]


def _scoring_agents(network: CollaborationNetwork) -> dict[TaskKind, str]:
    """First agent of each task in node order is the one that gets scored."""
    agents: dict[TaskKind, str] = {}
    for node in network.nodes:
        agents.setdefault(node.task, node.agent_id)
    return agents


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def run_benchmark(
    network_factory: Callable[[str], CollaborationNetwork],
    dataset: Sequence[DatasetRecord],
    rounds_list: Sequence[int],
    repetitions: int = 3,
    *,
    jobs: int = 1,
    options: MatchOptions | None = None,
    fingerprint: str = "",
) -> EvalReport:
    """Run the full collaboration over every record and pool the scores.

    network_factory builds a fresh network for a record's text (few-shot
    demonstrations depend on the input). For each round budget and each
    repetition the counts are pooled over all records that carry gold for
    the task; per-repetition F1 values and their arithmetic mean go into
    the report.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not dataset:
        raise EmptyDataset("benchmark needs at least one record")
    if not rounds_list:
        raise ValueError("rounds_list must be non-empty")
    rows: list[ReportRow] = []
    for rounds in rounds_list:
        totals_by_rep: list[dict[TaskKind, MatchCounts]] = []
        components_by_rep: list[dict[str, MatchCounts]] = []
        samples: dict[TaskKind, int] = {}
        agents: dict[TaskKind, str] = {}
        for _rep in range(repetitions):
            totals: dict[TaskKind, MatchCounts] = {}
            component_totals: dict[str, MatchCounts] = {}
            samples = {}

            def run_one(
                record: DatasetRecord,
            ) -> tuple[str, dict[TaskKind, MatchCounts], dict[str, MatchCounts]]:
                try:
                    network = network_factory(record.text)
                    transcript: Transcript = run_collaboration(
                        network, record.text, rounds
                    )
                    scoring = _scoring_agents(network)
                    agents.update(scoring)
                    counts: dict[TaskKind, MatchCounts] = {}
                    component_counts: dict[str, MatchCounts] = {}
                    for task, agent_id in scoring.items():
                        if task not in record.gold:
                            continue
                        pred = transcript.final[agent_id].items
                        counts[task] = match_items(
                            pred, record.gold[task], task, options
                        )
                        if task is TaskKind.EE:
                            for name, c in match_event_components(
                                pred, record.gold[task], options
                            ).items():
                                component_counts[name] = (
                                    component_counts.get(name, MatchCounts()) + c
                                )
                    return record.id, counts, component_counts
                except Exception as exc:
                    raise BenchmarkError(f"record {record.id!r}: {exc}") from exc

            if jobs > 1 and len(dataset) > 1:
                with ThreadPoolExecutor(max_workers=min(jobs, len(dataset))) as pool:
                    outcomes = list(pool.map(run_one, dataset))
            else:
                outcomes = [run_one(record) for record in dataset]
            for _record_id, counts, component_counts in outcomes:
                for task, c in counts.items():
                    totals[task] = totals.get(task, MatchCounts()) + c
                    samples[task] = samples.get(task, 0) + 1
                for name, c in component_counts.items():
                    component_totals[name] = (
                        component_totals.get(name, MatchCounts()) + c
                    )
            totals_by_rep.append(totals)
            components_by_rep.append(component_totals)

        for task in sorted(totals_by_rep[0], key=lambda t: t.value):
            metrics = [micro_f1(rep[task]) for rep in totals_by_rep]
            components: dict[str, Any] | None = None
            if task is TaskKind.EE and components_by_rep[0]:
                components = {}
                for name in sorted(components_by_rep[0]):
                    f1s = [micro_f1(rep[name])[2] for rep in components_by_rep]
                    components[name] = {
                        "f1": _mean(f1s),
                        "f1_by_repetition": f1s,
                        "counts_by_repetition": [
                            {"tp": rep[name].tp, "fp": rep[name].fp, "fn": rep[name].fn}
                            for rep in components_by_rep
                        ],
                    }
            rows.append(
                ReportRow(
                    task=task.value,
                    rounds=rounds,
                    agent_id=agents[task],
                    sample_count=samples.get(task, 0),
                    precision=_mean([m[0] for m in metrics]),
                    recall=_mean([m[1] for m in metrics]),
                    f1=_mean([m[2] for m in metrics]),
                    f1_by_repetition=[m[2] for m in metrics],
                    counts_by_repetition=[
                        {"tp": rep[task].tp, "fp": rep[task].fp, "fn": rep[task].fn}
                        for rep in totals_by_rep
                    ],
                    components=components,
                )
            )
    return EvalReport(
        rows=rows,
        fingerprint=fingerprint,
        repetitions=repetitions,
        rounds_list=list(rounds_list),
        sample_count=len(dataset),
    )
