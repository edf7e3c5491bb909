"""Command line interface.

Subcommands:
    run       collaborate on one input text and print the final answers
    bench     score a team over a dataset, optionally sweeping round budgets
    validate  check a schema file
    inspect   show one agent's cell from a saved transcript

Exit status is 0 on success, 1 on runtime errors, 2 on usage or
configuration errors. API keys are only ever read from the environment
variable named by --api-key-env.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from datetime import datetime, timezone
from pathlib import Path

from .backend import Backend, BackendConfig, RemoteBackend, ScriptedBackend
from .config import TeamConfig, compute_fingerprint, load_team_config
from .errors import (
    ConfigError,
    DatasetParseError,
    DuplicateType,
    EmptyDataset,
    EmptySchema,
    KgCollabError,
    SchemaFormatError,
    UnknownTask,
)
from .evaluate import load_dataset, run_benchmark
from .network import Transcript, run_collaboration
from .schema import TaskKind, load_schema

_USAGE_ERRORS = (
    ConfigError,
    SchemaFormatError,
    DuplicateType,
    EmptySchema,
    UnknownTask,
    DatasetParseError,
    EmptyDataset,
    OSError,
    ValueError,
)

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-3.5-turbo"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgcollab",
        description="Multi-agent collaborative knowledge graph extraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one collaboration and print the answers")
    run.add_argument("text", nargs="?", help="input text ('@path' reads a file)")
    run.add_argument("--input", help="file containing the input text")
    _common_team_args(run)
    run.add_argument("--rounds", type=int, default=None,
                     help="collaboration rounds after the initial extraction")
    run.add_argument("--jobs", type=int, default=1,
                     help="concurrent completions within a round")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="score a team over a dataset")
    bench.add_argument("--dataset", required=True, help="JSONL dataset path")
    _common_team_args(bench)
    bench.add_argument("--rounds", type=int, default=None,
                       help="single round budget (default: the config's max_rounds)")
    bench.add_argument("--sweep", help="comma-separated round budgets, e.g. 0,1,2,4")
    bench.add_argument("--repetitions", type=int, default=3,
                       help="independent repetitions to average over")
    bench.add_argument("--jobs", type=int, default=1,
                       help="concurrent per-record runs")
    bench.set_defaults(func=cmd_bench)

    validate = sub.add_parser("validate", help="check a schema file")
    validate.add_argument("schema", help="schema JSON path")
    validate.set_defaults(func=cmd_validate)

    inspect = sub.add_parser("inspect", help="show one transcript cell")
    inspect.add_argument("transcript", help="transcript JSON path")
    inspect.add_argument("--round", type=int, required=True)
    inspect.add_argument("--agent", required=True)
    inspect.set_defaults(func=cmd_inspect)

    return parser


def _common_team_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="team config JSON path")
    sub.add_argument("--backend", choices=("scripted", "remote"), default="scripted")
    sub.add_argument("--script", help="script JSON for the scripted backend")
    sub.add_argument("--endpoint", default=DEFAULT_ENDPOINT,
                     help="chat completions URL for the remote backend")
    sub.add_argument("--model", default=DEFAULT_MODEL,
                     help="model name for the remote backend")
    sub.add_argument("--api-key-env", default="OPENAI_API_KEY",
                     help="environment variable holding the API key")
    sub.add_argument("--shots", type=int, default=None,
                     help="override every agent's k_shot")
    sub.add_argument("--out", default="runs", help="output directory root")
    sub.add_argument("--seed", type=int, default=None, help="random seed")


def _make_backend(args: argparse.Namespace) -> tuple[Backend, str]:
    if args.backend == "scripted":
        if not args.script:
            raise ConfigError("--backend scripted requires --script")
        script_path = Path(args.script)
        if not script_path.exists():
            raise ConfigError(f"script file not found: {script_path}")
        return ScriptedBackend.from_file(script_path), f"scripted:{script_path.name}"
    config = BackendConfig(
        endpoint_url=args.endpoint,
        model_name=args.model,
        api_key_env=args.api_key_env,
    )
    return RemoteBackend(config), f"remote:{args.model}@{args.endpoint}"


def _load_team(args: argparse.Namespace) -> TeamConfig:
    team = load_team_config(args.config)
    if args.shots is not None:
        team = team.with_shots(args.shots)
    return team


def _make_run_dir(root: str | Path) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    run_dir = root / f"run-{stamp}"
    suffix = 1
    while run_dir.exists():
        suffix += 1
        run_dir = root / f"run-{stamp}-{suffix}"
    run_dir.mkdir()
    latest = root / "latest"
    try:
        if latest.is_symlink() or latest.exists():
            latest.unlink()
        latest.symlink_to(run_dir.name)
    except OSError:
        (root / "latest.txt").write_text(str(run_dir) + "\n", encoding="utf-8")
    return run_dir


def _read_input_text(args: argparse.Namespace) -> str:
    if args.input:
        return Path(args.input).read_text(encoding="utf-8").strip()
    if args.text:
        if args.text.startswith("@"):
            return Path(args.text[1:]).read_text(encoding="utf-8").strip()
        return args.text
    raise ConfigError("no input text given (positional argument or --input)")


def cmd_run(args: argparse.Namespace) -> int:
    if args.seed is not None:
        random.seed(args.seed)
    team = _load_team(args)
    backend, backend_desc = _make_backend(args)
    rounds = args.rounds if args.rounds is not None else team.max_rounds
    if rounds < 0 or rounds > team.max_rounds:
        raise ConfigError(
            f"--rounds {rounds} is outside 0..{team.max_rounds} (the config's max_rounds)"
        )
    input_text = _read_input_text(args)
    if not input_text.strip():
        raise ConfigError("input text is empty")
    network = team.bind(input_text, backend)
    transcript = run_collaboration(
        network,
        input_text,
        rounds,
        jobs=args.jobs,
        strict_relation_types=team.strict_relation_types,
    )
    fingerprint = compute_fingerprint(
        team, backend_desc, rounds=rounds, seed=args.seed
    )
    transcript.meta["fingerprint"] = fingerprint
    run_dir = _make_run_dir(args.out)
    transcript_path = run_dir / "transcript.json"
    transcript.save(transcript_path)
    for node in network.nodes:
        answer = transcript.final[node.agent_id]
        print(f"{node.agent_id} ({node.task.value}): {answer.canonical_text}")
    print(f"transcript: {transcript_path}")
    return 0


def _rounds_list(args: argparse.Namespace, team: TeamConfig) -> list[int]:
    if args.sweep:
        try:
            values = [int(v) for v in args.sweep.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"bad --sweep value: {args.sweep!r}") from exc
        if not values:
            raise ConfigError("--sweep names no round budgets")
    else:
        values = [args.rounds if args.rounds is not None else team.max_rounds]
    for value in values:
        if value < 0 or value > team.max_rounds:
            raise ConfigError(
                f"round budget {value} is outside 0..{team.max_rounds}"
            )
    return values


def cmd_bench(args: argparse.Namespace) -> int:
    if args.seed is not None:
        random.seed(args.seed)
    if args.repetitions < 1:
        raise ConfigError("--repetitions must be >= 1")
    team = _load_team(args)
    backend, backend_desc = _make_backend(args)
    dataset = load_dataset(args.dataset)
    rounds_list = _rounds_list(args, team)
    fingerprint = compute_fingerprint(
        team,
        backend_desc,
        rounds=rounds_list,
        repetitions=args.repetitions,
        seed=args.seed,
    )
    report = run_benchmark(
        lambda text: team.bind(text, backend),
        dataset,
        rounds_list,
        args.repetitions,
        jobs=args.jobs,
        fingerprint=fingerprint,
    )
    run_dir = _make_run_dir(args.out)
    report_doc = report.to_dict()
    (run_dir / "report.json").write_text(
        json.dumps(report_doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    for rounds in rounds_list:
        point = dict(report_doc)
        point["rounds_list"] = [rounds]
        point["rows"] = [r for r in report_doc["rows"] if r["rounds"] == rounds]
        (run_dir / f"report-rounds{rounds}.json").write_text(
            json.dumps(point, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    table = report.format_table()
    (run_dir / "report.txt").write_text(table + "\n", encoding="utf-8")
    with (run_dir / "series.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["task", "rounds", "f1"])
        for task, rounds, f1 in report.series_rows():
            writer.writerow([task, rounds, f"{f1:.6f}"])
    print(table)
    print(f"fingerprint: {fingerprint}")
    print(f"report: {run_dir / 'report.json'}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    spec = load_schema(args.schema)
    if spec.task is TaskKind.NER:
        detail = f"{len(spec.entity_types)} entity types"
    elif spec.task is TaskKind.RE:
        detail = f"{len(spec.relation_constraints)} relation constraints"
    else:
        detail = f"{len(spec.event_types)} event types"
    print(f"OK: schema {spec.id!r} task {spec.task.value}: {detail}")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    transcript = Transcript.load(args.transcript)
    try:
        cell = transcript.cell(args.round, args.agent)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    print(f"=== agent {cell.agent_id} ({cell.task.value}), round {args.round} ===")
    print("-- messages --")
    for message in cell.messages:
        print(f"[{message.get('role', '?')}] {message.get('content', '')}")
    print("-- raw response --")
    print(cell.raw_response)
    if cell.failure:
        print(f"-- failure: {cell.failure} (attempts: {cell.attempts}) --")
    print("-- replica --")
    print(cell.replica.canonical_text)
    if cell.warnings:
        print("-- parse warnings --")
        for warning in cell.warnings:
            print(f"  {warning}")
    if cell.dropped:
        print("-- dropped items --")
        for entry in cell.dropped:
            print(f"  {entry['item']}  reason: {entry['reason']}")
    if cell.peer_refs:
        print(f"-- peer replicas in prompt: {len(cell.peer_refs)} --")
        for ref in cell.peer_refs:
            peer_cell = transcript.cell(ref["round"], ref["agent_id"])
            print(
                f"  peer {ref['agent_id']} (round {ref['round']}): "
                f"{peer_cell.replica.canonical_text}"
            )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KgCollabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
