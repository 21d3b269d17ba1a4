"""Benchmark of the compiled kernel lane against the pure-Python fallback.

Times the raw 25-way macro expansion and full planning calls on a set of
seeded states, and cross-checks that both lanes return identical actions and
plan values while it is at it.
"""
from __future__ import annotations

import time
from random import Random

from . import kernels
from .model import CarGeometry, CarState, PhysicsParams, RoadConfig, WorldState, is_terminal
from .planner import PlannerConfig, find_optimal_action


def sample_states(n: int, seed: int, road: RoadConfig) -> list[WorldState]:
    rng = Random(seed)
    states = []
    while len(states) < n:
        state = WorldState(
            human=CarState(y=rng.uniform(0.0, road.road_length * 0.5),
                           x=rng.uniform(1.0, road.width - 1.0),
                           v=rng.uniform(5.0, 25.0)),
            robot=CarState(y=rng.uniform(0.0, road.road_length * 0.5),
                           x=rng.uniform(1.0, road.width - 1.0),
                           v=rng.uniform(5.0, 25.0)),
        )
        if not is_terminal(state, road, CarGeometry()):
            states.append(state)
    return states


def run_benchmark(states: int = 20, cap: int = 600, seed: int = 1,
                  expand_repeats: int = 2000) -> dict:
    phys, geom = PhysicsParams(), CarGeometry()
    road = RoadConfig(road_length=200.0)
    cfg = PlannerConfig(alpha=0.6, time_budget=1e9, max_expansions=cap,
                        rng_seed=seed)
    sampled = sample_states(states, seed, road)
    flat = (0.0, 2.0, 15.0, 0.0, 6.0, 15.0)
    acts = (0, 1, 2, 3, 4)

    report: dict = {"states": states, "cap": cap, "lanes": {}}
    plans: dict[str, list] = {}
    for lane in kernels.available():
        kern = kernels.get(lane)
        kp = kern.make_params(phys, road, geom, cfg.alpha)
        t0 = time.perf_counter()
        for _ in range(expand_repeats):
            kern.macro_expand(kp, flat, 5, acts, acts)
        expand_us = (time.perf_counter() - t0) / expand_repeats * 1e6

        results = []
        t0 = time.perf_counter()
        for state in sampled:
            action, plan = find_optimal_action(state, cfg, road, geom, phys,
                                               kernel=kern)
            results.append((action, plan.value))
        plan_ms = (time.perf_counter() - t0) / len(sampled) * 1e3
        plans[lane] = results
        report["lanes"][lane] = {
            "macro_expand_us": expand_us,
            "plan_call_ms": plan_ms,
        }
    if len(plans) == 2:
        report["lanes_agree"] = plans["compiled"] == plans["python"]
        ratio = (report["lanes"]["python"]["plan_call_ms"]
                 / report["lanes"]["compiled"]["plan_call_ms"])
        report["speedup"] = ratio
    return report


def format_report(report: dict) -> str:
    lines = [f"planner benchmark: {report['states']} states, "
             f"expansion cap {report['cap']}"]
    for lane, numbers in report["lanes"].items():
        lines.append(
            f"  {lane:>8}: macro_expand {numbers['macro_expand_us']:8.2f} us"
            f"   plan call {numbers['plan_call_ms']:8.2f} ms"
        )
    if "speedup" in report:
        lines.append(f"  speedup: {report['speedup']:.1f}x"
                     f"   lanes agree: {report['lanes_agree']}")
    return "\n".join(lines)
