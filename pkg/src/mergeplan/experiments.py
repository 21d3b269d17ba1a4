"""Batch experiment harness over the road-length x selfishness grid.

Samples trial setups the way the study did (uniform start-lane assignment,
robot speed drawn from N(15, 3) and clamped, human speed fixed at 15 m/s),
runs seeded trials against a scripted human model, and aggregates per-agent
metrics per condition: failure rate, merge time over successful merges only,
accumulated reward, and a lateral-oscillation count that quantifies the
dithering pathology of fully unselfish planners.

Seeding is paired across conditions: trial i of every condition shares
base_seed + i, so condition comparisons see identical start draws.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from random import Random

from .engine import (
    TickRecord,
    TrialConfig,
    TrialLog,
    TrialOutcome,
    build_policies,
    compute_outcome,
    initial_world_state,
    run_trial,
    write_log,
)
from .model import CarGeometry, PhysicsParams, RoadConfig, Side
from .planner import PlannerConfig

SUMMARY_COLUMNS = [
    "road_length", "alpha", "n",
    "hv_failure_rate", "av_failure_rate",
    "hv_merge_time_mean", "hv_merge_time_se",
    "av_merge_time_mean", "av_merge_time_se",
    "hv_reward_mean", "av_reward_mean",
    "hv_osc_mean", "av_osc_mean",
]


@dataclass(frozen=True)
class Condition:
    road_length: float
    alpha: float


@dataclass(frozen=True)
class ConditionGrid:
    road_lengths: tuple[float, ...] = (100.0, 200.0)
    alphas: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    trials_per_condition: int = 100
    base_seed: int = 0

    def __post_init__(self) -> None:
        if not self.road_lengths or not self.alphas:
            raise ValueError("grid must have at least one condition")
        if self.trials_per_condition < 1:
            raise ValueError("trials_per_condition must be positive")

    def conditions(self) -> list[Condition]:
        return [Condition(road_length=r, alpha=a)
                for r in self.road_lengths for a in self.alphas]


@dataclass(frozen=True)
class ConditionSummary:
    road_length: float
    alpha: float
    n: int
    hv_failure_rate: float | None
    av_failure_rate: float | None
    hv_merge_time_mean: float | None
    hv_merge_time_se: float | None
    av_merge_time_mean: float | None
    av_merge_time_se: float | None
    hv_reward_mean: float | None
    hv_reward_se: float | None
    av_reward_mean: float | None
    av_reward_se: float | None
    hv_osc_mean: float | None
    av_osc_mean: float | None


@dataclass
class TrialResult:
    condition: Condition
    index: int
    seed: int
    outcome: TrialOutcome
    osc_human: int
    osc_robot: int
    log: TrialLog | None = None


def sample_trial(
    condition: Condition,
    rng: Random,
    *,
    seed: int = 0,
    human_model: str = "cooperative:0.5",
    planner: PlannerConfig | None = None,
    physics: PhysicsParams | None = None,
    geometry: CarGeometry | None = None,
) -> TrialConfig:
    """Draw one trial setup for a condition.

    Start-lane assignment is uniform over the two possibilities; the robot's
    initial speed is N(15, 3) clamped into [v_min, v_max] while the human's
    stays at 15 m/s. Deterministic given the rng state.
    """
    physics = physics if physics is not None else PhysicsParams()
    geometry = geometry if geometry is not None else CarGeometry()
    planner = planner if planner is not None else PlannerConfig()
    human_start = rng.randrange(2)
    robot_start = 1 - human_start
    v0_robot = rng.gauss(15.0, 3.0)
    if v0_robot < physics.v_min:
        v0_robot = physics.v_min
    if v0_robot > physics.v_max:
        v0_robot = physics.v_max
    road = RoadConfig(
        road_length=condition.road_length,
        goal_lane_robot=human_start,
        goal_lane_human=robot_start,
    )
    return TrialConfig(
        road=road,
        physics=physics,
        geometry=geometry,
        planner=replace(planner, alpha=condition.alpha, rng_seed=seed),
        human_model=human_model,
        start_lane_robot=robot_start,
        start_lane_human=human_start,
        v0_human=15.0,
        v0_robot=v0_robot,
        seed=seed,
    )


def oscillation_count(log: TrialLog, side: Side) -> int:
    """Number of sign changes in the per-tick lateral displacement, ignoring
    ticks with no lateral motion."""
    xs = [(rec.human if side == Side.HUMAN else rec.robot).x
          for rec in log.records]
    deltas = [b - a for a, b in zip(xs, xs[1:]) if b != a]
    return sum(1 for a, b in zip(deltas, deltas[1:]) if (a > 0.0) != (b > 0.0))


def _run_one(cfg: TrialConfig) -> tuple[TrialOutcome, TrialLog]:
    try:
        human, robot = build_policies(cfg)
    except Exception as exc:  # a broken trial setup must not sink the batch
        state = initial_world_state(cfg)
        log = TrialLog(
            config=cfg,
            records=[TickRecord(0, 0.0, state.human, state.robot,
                                None, None, None, None)],
            error=f"policy construction: {exc!r}",
        )
        return compute_outcome(log), log
    return run_trial(cfg, human, robot)


def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var) / math.sqrt(len(values))


def summarize_condition(
    condition: Condition, results: list[TrialResult]
) -> ConditionSummary:
    n = len(results)
    if n == 0:
        return ConditionSummary(
            road_length=condition.road_length, alpha=condition.alpha, n=0,
            hv_failure_rate=None, av_failure_rate=None,
            hv_merge_time_mean=None, hv_merge_time_se=None,
            av_merge_time_mean=None, av_merge_time_se=None,
            hv_reward_mean=None, hv_reward_se=None,
            av_reward_mean=None, av_reward_se=None,
            hv_osc_mean=None, av_osc_mean=None,
        )
    outcomes = [r.outcome for r in results]
    hv_mt = [o.merge_time_human for o in outcomes if o.merge_time_human is not None]
    av_mt = [o.merge_time_robot for o in outcomes if o.merge_time_robot is not None]
    hv_mt_mean, hv_mt_se = _mean_se(hv_mt)
    av_mt_mean, av_mt_se = _mean_se(av_mt)
    hv_rw_mean, hv_rw_se = _mean_se([o.total_r_H for o in outcomes])
    av_rw_mean, av_rw_se = _mean_se([o.total_r_R for o in outcomes])
    return ConditionSummary(
        road_length=condition.road_length,
        alpha=condition.alpha,
        n=n,
        hv_failure_rate=sum(1 for o in outcomes if not o.merged_human) / n,
        av_failure_rate=sum(1 for o in outcomes if not o.merged_robot) / n,
        hv_merge_time_mean=hv_mt_mean,
        hv_merge_time_se=hv_mt_se,
        av_merge_time_mean=av_mt_mean,
        av_merge_time_se=av_mt_se,
        hv_reward_mean=hv_rw_mean,
        hv_reward_se=hv_rw_se,
        av_reward_mean=av_rw_mean,
        av_reward_se=av_rw_se,
        hv_osc_mean=sum(r.osc_human for r in results) / n,
        av_osc_mean=sum(r.osc_robot for r in results) / n,
    )


def run_batch(
    grid: ConditionGrid,
    human_model: str = "cooperative:0.5",
    *,
    planner: PlannerConfig | None = None,
    physics: PhysicsParams | None = None,
    geometry: CarGeometry | None = None,
    jobs: int = 1,
    out_dir: str | Path | None = None,
    keep_logs: bool = False,
    progress=None,
) -> tuple[list[TrialResult], list[ConditionSummary]]:
    """Run the full grid and aggregate per condition.

    Trials may execute in parallel (`jobs`); results are merged in trial-index
    order regardless, so the outputs are deterministic for a given grid. A
    trial whose policy raises is recorded with its error and skipped by no
    one: it still counts as a failure for both agents.
    """
    conditions = grid.conditions()
    configs: list[tuple[Condition, int, TrialConfig]] = []
    for cond in conditions:
        for i in range(grid.trials_per_condition):
            seed = grid.base_seed + i
            cfg = sample_trial(
                cond, Random(seed), seed=seed, human_model=human_model,
                planner=planner, physics=physics, geometry=geometry,
            )
            configs.append((cond, i, cfg))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_one, [c for _, _, c in configs],
                                 chunksize=4))
    else:
        runs = []
        for _, _, cfg in configs:
            runs.append(_run_one(cfg))
            if progress is not None:
                progress(len(runs), len(configs))

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    results: list[TrialResult] = []
    for (cond, i, cfg), (outcome, log) in zip(configs, runs):
        result = TrialResult(
            condition=cond, index=i, seed=cfg.seed, outcome=outcome,
            osc_human=oscillation_count(log, Side.HUMAN),
            osc_robot=oscillation_count(log, Side.ROBOT),
            log=log if keep_logs else None,
        )
        if out_path is not None:
            write_log(log, out_path / _log_name(cond, i))
        results.append(result)

    summaries = []
    by_condition: dict[Condition, list[TrialResult]] = {c: [] for c in conditions}
    for result in results:
        by_condition[result.condition].append(result)
    for cond in conditions:
        summaries.append(summarize_condition(cond, by_condition[cond]))

    if out_path is not None:
        (out_path / "summary.csv").write_text(export_summaries(summaries),
                                              encoding="utf-8")
        write_outcomes(results, out_path / "outcomes.jsonl")
    return results, summaries


def _log_name(cond: Condition, index: int) -> str:
    return f"road{cond.road_length:g}_alpha{cond.alpha:g}_t{index:03d}.jsonl"


def _cell(value) -> str:
    if value is None:
        return ""
    # repr keeps the shortest round-trip form for floats, so the CSV is
    # byte-stable and parses back to the exact same values.
    return repr(value) if isinstance(value, float) else str(value)


def export_summaries(summaries: list[ConditionSummary]) -> str:
    """CSV with one row per condition; column order is part of the contract."""
    lines = [",".join(SUMMARY_COLUMNS)]
    for s in summaries:
        row = [
            _cell(s.road_length), _cell(s.alpha), _cell(s.n),
            _cell(s.hv_failure_rate), _cell(s.av_failure_rate),
            _cell(s.hv_merge_time_mean), _cell(s.hv_merge_time_se),
            _cell(s.av_merge_time_mean), _cell(s.av_merge_time_se),
            _cell(s.hv_reward_mean), _cell(s.av_reward_mean),
            _cell(s.hv_osc_mean), _cell(s.av_osc_mean),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_summaries(text: str) -> list[ConditionSummary]:
    lines = [line for line in text.splitlines() if line]
    if not lines or lines[0] != ",".join(SUMMARY_COLUMNS):
        raise ValueError("unexpected CSV header")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        named = dict(zip(SUMMARY_COLUMNS, cells))

        def fval(name: str) -> float | None:
            return float(named[name]) if named[name] != "" else None

        out.append(ConditionSummary(
            road_length=float(named["road_length"]),
            alpha=float(named["alpha"]),
            n=int(named["n"]),
            hv_failure_rate=fval("hv_failure_rate"),
            av_failure_rate=fval("av_failure_rate"),
            hv_merge_time_mean=fval("hv_merge_time_mean"),
            hv_merge_time_se=fval("hv_merge_time_se"),
            av_merge_time_mean=fval("av_merge_time_mean"),
            av_merge_time_se=fval("av_merge_time_se"),
            hv_reward_mean=fval("hv_reward_mean"),
            hv_reward_se=None,
            av_reward_mean=fval("av_reward_mean"),
            av_reward_se=None,
            hv_osc_mean=fval("hv_osc_mean"),
            av_osc_mean=fval("av_osc_mean"),
        ))
    return out


def write_outcomes(results: list[TrialResult], path: str | Path) -> None:
    lines = []
    for r in results:
        lines.append(json.dumps({
            "road_length": r.condition.road_length,
            "alpha": r.condition.alpha,
            "index": r.index,
            "seed": r.seed,
            "merged_human": r.outcome.merged_human,
            "merged_robot": r.outcome.merged_robot,
            "merge_time_human": r.outcome.merge_time_human,
            "merge_time_robot": r.outcome.merge_time_robot,
            "collision": r.outcome.collision,
            "total_r_H": r.outcome.total_r_H,
            "total_r_R": r.outcome.total_r_R,
            "ticks": r.outcome.ticks,
            "error": r.outcome.error,
            "osc_human": r.osc_human,
            "osc_robot": r.osc_robot,
        }))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_outcomes(path: str | Path) -> list[dict]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def metric_samples(
    rows: list[dict], metric: str, side: str, filters: dict[str, float]
) -> list[float]:
    """Extract one metric's sample set from outcome rows.

    merge_time uses successful merges only; reward and oscillation use every
    trial. Filters match on condition fields, e.g. {"alpha": 0.6}.
    """
    if side not in ("human", "robot"):
        raise ValueError("side must be 'human' or 'robot'")
    keymap = {
        ("merge_time", "human"): "merge_time_human",
        ("merge_time", "robot"): "merge_time_robot",
        ("reward", "human"): "total_r_H",
        ("reward", "robot"): "total_r_R",
        ("oscillation", "human"): "osc_human",
        ("oscillation", "robot"): "osc_robot",
    }
    try:
        key = keymap[(metric, side)]
    except KeyError:
        raise ValueError(f"unknown metric: {metric!r}") from None
    samples = []
    for row in rows:
        if any(row.get(f) != v for f, v in filters.items()):
            continue
        value = row[key]
        if value is None:
            continue
        samples.append(float(value))
    return samples
