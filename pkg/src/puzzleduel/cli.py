"""Command-line entry points.

Subcommands: duel, tournament, fit, report, regrade, verify. Validation
failures exit 2 with a one-line JSON error record on stderr so wrappers can
parse outcomes; artifacts are written deterministically to the output
directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence

from . import analytics, fixtures, rating, reports, store
from .agents import Agent, build_agent, validate_roster
from .engine import TournamentPlan, run_tournament
from .sandbox import ExecLimits, SandboxVerifier
from .store import ConfigError, TournamentConfig

logger = logging.getLogger(__name__)


def _error(code: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    return 2


def _load_config(path: Optional[str]) -> TournamentConfig:
    if not path:
        raise ConfigError("this subcommand requires --config")
    return store.load_config(path)


def _build_agents(config: TournamentConfig, only: Optional[Sequence[str]] = None) -> Dict[str, Agent]:
    wanted = set(only) if only is not None else None
    profiles = [p for p in config.roster if wanted is None or p.id in wanted]
    if wanted is not None:
        missing = wanted - {p.id for p in profiles}
        if missing:
            raise ConfigError(f"not in roster: {', '.join(sorted(missing))}")
    report = validate_roster(profiles)
    problems = [f"{r.id}: {'; '.join(r.problems)}" for r in report if not r.ready]
    if problems:
        raise ConfigError("roster not ready: " + " | ".join(problems))
    return {p.id: build_agent(p, seed=config.seed) for p in profiles}


def _verifier(config: TournamentConfig) -> SandboxVerifier:
    return SandboxVerifier(max_workers=config.max_workers)


def _out_dir(args, config: Optional[TournamentConfig] = None) -> str:
    out = getattr(args, "out", None) or (config.out_dir if config else None)
    if not out:
        raise ConfigError("no output directory (--out or config out_dir)")
    os.makedirs(out, exist_ok=True)
    return out


def _existing_duel_ids(directory: str) -> List[str]:
    return [
        name[: -len(".json")]
        for name in os.listdir(directory)
        if name.endswith(".json") and "__vs__" in name
    ]


def cmd_duel(args) -> int:
    config = _load_config(args.config)
    try:
        first, second = (part.strip() for part in args.pair.split(",", 1))
    except ValueError:
        raise ConfigError("--pair expects two comma-separated model ids")
    agents = _build_agents(config, only=[first, second])
    out = _out_dir(args, config)
    stored = store.run_and_store_duel(
        agents[first], agents[second], config, verifier=_verifier(config)
    )
    path = os.path.join(out, f"{stored.duel_id}.json")
    store.save_duel(stored, path)
    store.write_index(out, _existing_duel_ids(out))
    print(path)
    return 0


def cmd_tournament(args) -> int:
    config = _load_config(args.config)
    agents = _build_agents(config)
    out = _out_dir(args, config)
    verifier = _verifier(config)
    plan = TournamentPlan(
        models=tuple(p.id for p in config.roster), rounds_per_side=config.rounds_per_side
    )
    profile_by_id = {p.id: p for p in config.roster}

    def run_one(agent_a: Agent, agent_b: Agent):
        # fresh instances per duel: scripted call counters must not leak
        # across duels, and duel order must not matter when running parallel
        fresh_a = build_agent(profile_by_id[agent_a.model_id], seed=config.seed)
        fresh_b = build_agent(profile_by_id[agent_b.model_id], seed=config.seed)
        stored = store.run_and_store_duel(fresh_a, fresh_b, config, verifier=verifier)
        store.save_duel(stored, os.path.join(out, f"{stored.duel_id}.json"))
        return stored.duel

    skipped: List = []
    run_tournament(
        plan,
        agents,
        config.limits,
        verifier=verifier,
        duel_runner=run_one,
        max_parallel=config.max_parallel_duels,
        skipped=skipped,
    )
    store.write_index(out, _existing_duel_ids(out), skipped)
    print(out)
    return 0


def _load_logs(directory: str):
    if not directory or not os.path.isdir(directory):
        raise ConfigError(f"log directory not found: {directory}")
    return [sd.duel for sd in store.load_duels(directory)]


def cmd_fit(args) -> int:
    logs = _load_logs(args.logs)
    aggregates = rating.aggregate_duels(logs)
    if not aggregates:
        return _error("no_outcomes", f"no duel outcomes under {args.logs}")
    table = rating.fit(aggregates)
    out = args.out or args.logs
    os.makedirs(out, exist_ok=True)
    doc = {
        "anchor_id": table.anchor_id,
        "anchor_value": table.anchor_value,
        "sigma": table.sigma,
        "ratings": table.ratings,
        "diagnostics": {
            "iterations": table.diagnostics.iterations,
            "grad_norm": table.diagnostics.grad_norm,
            "converged": table.diagnostics.converged,
            "degenerate": table.diagnostics.degenerate,
            "degenerate_models": list(table.diagnostics.degenerate_models),
        },
    }
    path = os.path.join(out, "ratings.json")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n")
    reports._write(
        os.path.join(out, "ratings.csv"),
        reports._csv_text(["model", "elo"], [list(r) for r in reports.ratings_rows(table)]),
    )
    print(path)
    return 0


def cmd_report(args) -> int:
    logs = _load_logs(args.logs)
    aggregates = rating.aggregate_duels(logs)
    if not aggregates:
        return _error("no_outcomes", f"no duel outcomes under {args.logs}")
    table = rating.fit(aggregates)
    benchmarks = [analytics.load_benchmark_csv(path) for path in args.benchmarks or []]
    out = args.out or os.path.join(args.logs, "report")
    written = reports.emit_report(out, logs, table, benchmarks, args.exclude or [])
    for path in written:
        print(path)
    return 0


def cmd_regrade(args) -> int:
    config = _load_config(args.config)
    grader_ids = [part.strip() for part in args.graders.split(",") if part.strip()]
    if not grader_ids:
        raise ConfigError("--graders expects a comma-separated id list")
    agents = _build_agents(config, only=grader_ids)

    if args.corpus and os.path.exists(args.corpus):
        corpus = store.load_corpus(args.corpus)
    else:
        if not args.logs or not os.path.isdir(args.logs):
            raise ConfigError(f"log directory not found: {args.logs}")
        stored = store.load_duels(args.logs)
        corpus = analytics.valid_corpus(
            analytics.mine_puzzles([sd.duel for sd in stored], [sd.duel_id for sd in stored])
        )
        if args.corpus:
            store.save_corpus(corpus, args.corpus)
    if not corpus:
        return _error("empty_corpus", "no valid puzzles to regrade")

    graders = [agents[g] for g in grader_ids]
    table = analytics.regrade(corpus, graders, config.limits, _verifier(config))
    for note in table.notes:
        logger.warning("regrade: %s", note)
    out = args.out or args.logs or "."
    os.makedirs(out, exist_ok=True)
    header, rows = reports.regrade_rows(table)
    path = reports._write(
        os.path.join(out, "regrade.csv"), reports._csv_text(header, rows)
    )
    print(path)
    return 0


def cmd_verify(args) -> int:
    if os.path.exists(args.puzzle):
        with open(args.puzzle, encoding="utf-8") as handle:
            source = handle.read()
    else:
        try:
            source = fixtures.get(args.puzzle).source
        except KeyError as exc:
            return _error("no_such_puzzle", exc.args[0])
    limits = ExecLimits()
    if args.config:
        limits = store.load_config(args.config).limits
    verdict = SandboxVerifier().verify(source, args.candidate, limits)
    line = f"verdict: {verdict.kind.value}"
    if verdict.error_kind is not None:
        line += f" ({verdict.error_kind.value})"
    if verdict.detail:
        line += f" - {verdict.detail}"
    print(line)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puzzleduel",
        description="Verifiable code-puzzle duels between language models.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("duel", help="run one duel for an ordered pair")
    p.add_argument("--config", required=True)
    p.add_argument("--pair", required=True, metavar="A,B", help="first listed proposes turn 1")
    p.add_argument("--out", help="log directory (default: config out_dir)")
    p.set_defaults(func=cmd_duel)

    p = sub.add_parser("tournament", help="run every ordered pair in the roster")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="log directory (default: config out_dir)")
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("fit", help="fit ratings from stored duels")
    p.add_argument("--logs", required=True)
    p.add_argument("--out", help="output directory (default: --logs)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="emit leaderboard, role, turn and correlation tables")
    p.add_argument("--logs", required=True)
    p.add_argument("--out", help="output directory (default: <logs>/report)")
    p.add_argument(
        "--benchmarks",
        action="append",
        metavar="CSV",
        help="benchmark column csv (model_id,score); repeatable",
    )
    p.add_argument(
        "--exclude",
        action="append",
        metavar="MODEL",
        help="additionally correlate with MODEL excluded; repeatable",
    )
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("regrade", help="re-solve mined puzzles with fresh graders")
    p.add_argument("--config", required=True)
    p.add_argument("--logs", help="log directory to mine")
    p.add_argument("--graders", required=True, metavar="A,B", help="roster ids to grade with")
    p.add_argument("--corpus", help="corpus json to reuse (or write after mining)")
    p.add_argument("--out", help="output directory (default: --logs)")
    p.set_defaults(func=cmd_regrade)

    p = sub.add_parser("verify", help="evaluate one puzzle against one candidate")
    p.add_argument("--puzzle", required=True, help="path to a puzzle file or a bundled name")
    p.add_argument("--candidate", required=True, help="candidate literal, e.g. '\"d\"'")
    p.add_argument("--config", help="take exec limits from this config")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        return _error("config", str(exc))
    except (store.SchemaMismatch, store.CorruptRecord) as exc:
        return _error("bad_record", str(exc))
    except KeyError as exc:
        # benchmark coverage / lookup misses from the analytics layer
        return _error("invalid", str(exc.args[0]) if exc.args else str(exc))
    except ValueError as exc:
        return _error("invalid", str(exc))


if __name__ == "__main__":
    sys.exit(main())
