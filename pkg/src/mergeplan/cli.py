"""Command line interface.

Subcommands: simulate (one headless trial), replay (verify a log), experiment
(batch over the condition grid), stats (t-test between two condition slices),
serve (live session service), and bench (kernel lane comparison).
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import bench as bench_mod
from . import kernels
from .engine import read_log, replay
from .experiments import (
    Condition,
    ConditionGrid,
    metric_samples,
    read_outcomes,
    run_batch,
    sample_trial,
)
from .model import CarGeometry, PhysicsParams
from .planner import PlannerConfig
from .service import SessionPlan, serve
from .stats import student_t_test
from .engine import build_policies, run_trial, write_log


def _planner_config(args) -> PlannerConfig:
    cfg = PlannerConfig(rng_seed=args.seed)
    if getattr(args, "budget", None) is not None:
        cfg = replace(cfg, time_budget=args.budget, max_expansions=None)
    else:
        cfg = replace(cfg, max_expansions=args.cap)
    return cfg


def _add_planner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cap", type=int, default=600,
                        help="deterministic node-expansion cap per planning "
                        "call (default 600)")
    parser.add_argument("--budget", type=float, default=None,
                        help="wall-clock planning budget in seconds; replaces "
                        "the expansion cap (searches are then not replayable)")


def _cmd_simulate(args) -> int:
    from random import Random

    condition = Condition(road_length=args.road_length, alpha=args.alpha)
    cfg = sample_trial(condition, Random(args.seed), seed=args.seed,
                       human_model=args.human, planner=_planner_config(args))
    human, robot = build_policies(cfg)
    outcome, log = run_trial(cfg, human, robot)
    if args.out:
        write_log(log, args.out)
    json.dump({
        "merged_human": outcome.merged_human,
        "merged_robot": outcome.merged_robot,
        "merge_time_human": outcome.merge_time_human,
        "merge_time_robot": outcome.merge_time_robot,
        "collision": outcome.collision,
        "total_r_H": outcome.total_r_H,
        "total_r_R": outcome.total_r_R,
        "ticks": outcome.ticks,
        "log": args.out,
    }, sys.stdout)
    print()
    return 0


def _cmd_replay(args) -> int:
    log = read_log(args.log)
    states = replay(log)  # raises ReplayDivergenceError on corruption
    result = {"ok": True, "ticks": log.records[-1].tick, "states": len(states)}
    if args.check:
        result["checked"] = "bit-exact"
    json.dump(result, sys.stdout)
    print()
    return 0


def _cmd_experiment(args) -> int:
    grid_kwargs = {}
    if args.grid:
        grid_kwargs = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    if args.roads is not None:
        grid_kwargs["road_lengths"] = tuple(args.roads)
    if args.alphas is not None:
        grid_kwargs["alphas"] = tuple(args.alphas)
    if args.trials is not None:
        grid_kwargs["trials_per_condition"] = args.trials
    if args.seed is not None:
        grid_kwargs["base_seed"] = args.seed
    for key in ("road_lengths", "alphas"):
        if key in grid_kwargs:
            grid_kwargs[key] = tuple(grid_kwargs[key])
    grid = ConditionGrid(**grid_kwargs)

    def progress(done, total):
        if args.verbose and (done % 10 == 0 or done == total):
            print(f"\r{done}/{total} trials", end="", file=sys.stderr, flush=True)

    _, summaries = run_batch(
        grid, args.human, planner=_planner_config(args), jobs=args.jobs,
        out_dir=args.out_dir, progress=progress,
    )
    if args.verbose:
        print(file=sys.stderr)
    print(f"wrote {len(summaries)} condition summaries to "
          f"{Path(args.out_dir) / 'summary.csv'}")
    return 0


def _parse_filter(text: str) -> dict:
    filters = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        if key == "road":
            key = "road_length"
        if key not in ("alpha", "road_length"):
            raise SystemExit(f"unknown filter key: {key!r}")
        filters[key] = float(value)
    return filters


def _cmd_stats(args) -> int:
    filter_a = _parse_filter(args.a)
    filter_b = _parse_filter(args.b)
    rows = read_outcomes(Path(args.dir) / "outcomes.jsonl")
    sample_a = metric_samples(rows, args.metric, args.side, filter_a)
    sample_b = metric_samples(rows, args.metric, args.side, filter_b)
    result = student_t_test(sample_a, sample_b)
    json.dump({
        "metric": args.metric, "side": args.side,
        "a": args.a, "b": args.b,
        "n_a": len(sample_a), "n_b": len(sample_b),
        "t": result.t, "df": result.df, "p": result.p,
    }, sys.stdout)
    print()
    return 0


def _cmd_serve(args) -> int:
    if args.cap is not None:
        planner = replace(PlannerConfig(), time_budget=1e9,
                          max_expansions=args.cap)
    else:
        planner = replace(PlannerConfig(), time_budget=args.budget)
    plan = SessionPlan(
        practice_trials=args.practice,
        recorded_trials=args.trials,
        seed=args.seed,
        planner=planner,
        tick_interval=args.tick_interval,
        questionnaire_timeout=args.questionnaire_timeout,
        lockstep=args.lockstep,
    )
    try:
        asyncio.run(serve(args.host, args.port, plan, args.out_dir))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_bench(args) -> int:
    report = bench_mod.run_benchmark(states=args.states, cap=args.cap,
                                     seed=args.seed)
    print(bench_mod.format_report(report))
    if report.get("lanes_agree") is False:
        print("ERROR: kernel lanes disagree", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mergeplan",
        description="Collaborative two-car lane-merge planner and harness "
        f"(kernel lane: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one headless trial")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--road-length", type=float, default=200.0)
    p.add_argument("--human", default="cooperative:0.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the trial log here")
    _add_planner_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("replay", help="re-simulate a log and verify it")
    p.add_argument("log")
    p.add_argument("--check", action="store_true",
                   help="fail on any divergence (always on; kept for clarity)")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("experiment", help="run a batch over the condition grid")
    p.add_argument("--grid", default=None,
                   help="JSON file with road_lengths/alphas/trials_per_condition/base_seed")
    p.add_argument("--roads", type=float, nargs="+", default=None)
    p.add_argument("--alphas", type=float, nargs="+", default=None)
    p.add_argument("--human", default="cooperative:0.5")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    _add_planner_flags(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("stats", help="t-test between two condition slices")
    p.add_argument("dir", help="experiment output directory")
    p.add_argument("--metric", choices=("merge_time", "reward", "oscillation"),
                   default="merge_time")
    p.add_argument("--side", choices=("human", "robot"), default="human")
    p.add_argument("--a", required=True, help="e.g. alpha=0.6")
    p.add_argument("--b", required=True, help="e.g. alpha=1.0")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--trials", type=int, default=18)
    p.add_argument("--practice", type=int, default=1)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out-dir", default="sessions")
    p.add_argument("--budget", type=float, default=0.2,
                   help="planner wall-clock budget per tick")
    p.add_argument("--cap", type=int, default=None,
                   help="deterministic expansion cap instead of the wall-clock "
                   "budget (for reproducible sessions)")
    p.add_argument("--tick-interval", type=float, default=0.2)
    p.add_argument("--questionnaire-timeout", type=float, default=60.0)
    p.add_argument("--lockstep", action="store_true",
                   help="wait for one action frame per tick (testing)")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("bench", help="compare kernel lanes")
    p.add_argument("--states", type=int, default=20)
    p.add_argument("--cap", type=int, default=600)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
