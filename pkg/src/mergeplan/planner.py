"""Finite-horizon joint-action planner.

Best-first tree search over the 25-way joint action space of the two cars,
maximizing the scalarized reward alpha * R_robot + (1 - alpha) * R_human
accumulated over a macro-stepped horizon. The search is anytime: it can be
cut off by a wall-clock deadline or a deterministic node-expansion cap and
still returns the best fully evaluated plan. An exhaustive enumerator with
identical stepping semantics serves as the optimality oracle, and a nested
"robot plans first" optimization provides the selfish baseline.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush
from random import Random

from . import kernels
from .model import (
    ALL_ACTIONS,
    Action,
    CarGeometry,
    CarState,
    JointAction,
    PhysicsParams,
    RoadConfig,
    Side,
    WorldState,
    check_collision,
    instantaneous_reward,
)

# Upper bound on the instantaneous joint reward: both agents centered in their
# goal lanes score 1.0 each, and alpha * 1 + (1 - alpha) * 1 == 1.
MAX_SUBSTEP_REWARD = 1.0

# Deallocating the search arena at function exit costs ~0.45 us per generated
# node; the wall-clock deadline must reserve that time (with headroom) or the
# call as a whole overruns its budget on large searches.
_TEARDOWN_SEC_PER_NODE = 9e-7

# Exhaustive enumeration is 25^depth; anything past this is not an oracle.
BRUTE_FORCE_DEPTH_CAP = 3


@dataclass(frozen=True)
class Quantization:
    """Bin sizes used to key continuous states in the search's closed set."""

    dy: float = 0.01
    dx: float = 0.01
    dv: float = 0.01

    def __post_init__(self) -> None:
        if min(self.dy, self.dx, self.dv) <= 0:
            raise ValueError("quantization bins must be positive")


@dataclass(frozen=True)
class PlannerConfig:
    alpha: float = 0.5
    horizon: float = 6.0
    planner_dt: float = 1.0
    sim_dt: float = 0.2
    time_budget: float = 0.2
    rng_seed: int = 0
    quantization: Quantization = field(default_factory=Quantization)
    # Deterministic alternative to the wall-clock budget: stop after this many
    # node expansions. Batch runs use it so truncated searches are replayable.
    max_expansions: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.sim_dt <= 0 or self.planner_dt <= 0 or self.horizon <= 0:
            raise ValueError("time steps must be positive")
        ratio = self.planner_dt / self.sim_dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("planner_dt must be an integer multiple of sim_dt")
        steps = self.horizon / self.planner_dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ValueError("horizon must be an integer multiple of planner_dt")
        if self.max_expansions is not None and self.max_expansions < 1:
            raise ValueError("max_expansions must be positive")

    @property
    def sub_steps(self) -> int:
        return round(self.planner_dt / self.sim_dt)

    @property
    def macro_steps(self) -> int:
        return round(self.horizon / self.planner_dt)


@dataclass
class Plan:
    """Result of one planning call.

    `value` is the accumulated joint reward of `actions` simulated from the
    root state; `value_robot`/`value_human` are the unweighted per-agent
    accumulations along the same path. `complete` is False when the search was
    cut off by its budget before exhausting (or provably pruning) the tree.
    """

    actions: list[JointAction]
    value: float
    value_robot: float
    value_human: float
    trajectory: list[WorldState]
    complete: bool
    diagnostics: dict | None = None


@dataclass(frozen=True)
class SelfishBaselineResult:
    action: Action
    value_robot: float
    value_human: float
    robot_sequence: tuple[Action, ...]
    human_response: tuple[Action, ...]


def joint_reward(
    state: WorldState,
    alpha: float,
    road: RoadConfig,
    geom: CarGeometry,
) -> float:
    """Scalarized instantaneous reward alpha * r_robot + (1 - alpha) * r_human."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    r_r = instantaneous_reward(state, Side.ROBOT, road, geom)
    r_h = instantaneous_reward(state, Side.HUMAN, road, geom)
    return alpha * r_r + (1.0 - alpha) * r_h


def heuristic(remaining_steps: int, sub_steps: int = 5) -> float:
    """Optimistic bound on the reward obtainable in the remaining macro steps.

    Each macro step accrues at most sub_steps * 1.0 joint reward, so this
    never underestimates and keeps the pruning rule sound.
    """
    if remaining_steps < 0:
        raise ValueError("remaining_steps must be non-negative")
    return remaining_steps * (sub_steps * MAX_SUBSTEP_REWARD)


@dataclass
class MacroOutcome:
    state: WorldState
    reward: float
    reward_robot: float
    reward_human: float
    terminal: bool
    sub_steps: int


def _flat(state: WorldState) -> tuple[float, float, float, float, float, float]:
    h, r = state.human, state.robot
    return (h.y, h.x, h.v, r.y, r.x, r.v)


def _world(s6, step: int) -> WorldState:
    return WorldState(
        human=CarState(y=s6[0], x=s6[1], v=s6[2]),
        robot=CarState(y=s6[3], x=s6[4], v=s6[5]),
        step=step,
    )


def macro_step(
    state: WorldState,
    joint: JointAction,
    cfg: PlannerConfig,
    road: RoadConfig,
    geom: CarGeometry,
    phys: PhysicsParams,
    kernel=None,
) -> MacroOutcome:
    """Hold one joint action for a full planner step (sub_steps sim ticks).

    Rewards accumulate on every post-sub-step state; the macro step ends early
    when a terminal state appears. A turn sub-step that is not permitted at
    the current lateral position degrades to `stay` for that sub-step.
    """
    kern = kernel if kernel is not None else kernels.active()
    kp = kern.make_params(phys, road, geom, cfg.alpha)
    s6, g_joint, g_robot, g_human, terminal, subs = kern.macro_step(
        kp, _flat(state), int(joint.human), int(joint.robot), cfg.sub_steps
    )
    return MacroOutcome(
        state=_world(s6, state.step + subs),
        reward=g_joint,
        reward_robot=g_robot,
        reward_human=g_human,
        terminal=terminal,
        sub_steps=subs,
    )


# Arena node layout (plain tuples keep the hot loop lean):
# 0 state6, 1 depth, 2 g, 3 g_robot, 4 g_human, 5 parent index,
# 6 action_human, 7 action_robot, 8 terminal, 9 closed-set key, 10 subs_cum
_STATE, _DEPTH, _G, _GR, _GH, _PARENT, _AH, _AR, _TERM, _KEY, _SUBS = range(11)


def _terminal_state(s6, kp) -> bool:
    if s6[0] + kp.half_length > kp.road_length:
        return True
    if s6[3] + kp.half_length > kp.road_length:
        return True
    return abs(s6[1] - s6[4]) < kp.car_width and abs(s6[0] - s6[3]) < kp.car_length


def _traceback(arena, idx: int, root_state: WorldState) -> Plan:
    chain = []
    while idx != 0:
        chain.append(arena[idx])
        idx = arena[idx][_PARENT]
    chain.reverse()
    actions = [JointAction(Action(n[_AH]), Action(n[_AR])) for n in chain]
    trajectory = [root_state] + [
        _world(n[_STATE], root_state.step + n[_SUBS]) for n in chain
    ]
    last = chain[-1] if chain else arena[0]
    return Plan(
        actions=actions,
        value=last[_G],
        value_robot=last[_GR],
        value_human=last[_GH],
        trajectory=trajectory,
        complete=False,
    )


def find_optimal_action(
    state: WorldState,
    cfg: PlannerConfig,
    road: RoadConfig,
    geom: CarGeometry,
    phys: PhysicsParams,
    *,
    rng: Random | None = None,
    prune: bool = True,
    kernel=None,
    human_actions: tuple[Action, ...] | None = None,
    robot_actions: tuple[Action, ...] | None = None,
    r_max_trace: list | None = None,
) -> tuple[Action, Plan]:
    """Best-first search for the highest-value joint plan from `state`.

    Nodes are ordered by f = accumulated reward + optimistic remainder and
    expanded through the macro-step kernel. Already-seen quantized states are
    re-expanded only via strictly better paths. When the top of the queue has
    f below the best completed value, nothing better remains and the search
    stops (`prune`); a wall-clock deadline or expansion cap stops it early
    with the best fully evaluated node instead. Ties between root actions of
    equal-value complete plans are broken uniformly at random from the seeded
    generator. Only the robot component of the returned joint action is meant
    to be executed; the human component is the collaboration prediction.
    """
    kern = kernel if kernel is not None else kernels.active()
    kp = kern.make_params(phys, road, geom, cfg.alpha)
    n_sub = cfg.sub_steps
    max_depth = cfg.macro_steps
    per_step_max = n_sub * MAX_SUBSTEP_REWARD
    chooser = rng if rng is not None else Random(cfg.rng_seed)
    # Randomize the expansion enumeration order per call. Values are
    # unaffected (the search still proves its optimum), but equal-value
    # plans are then discovered in seeded-random order, which is what makes
    # tie-breaking between them genuinely random rather than a fixed
    # artifact of enumeration order.
    h_order = [int(a) for a in (human_actions or ALL_ACTIONS)]
    r_order = [int(a) for a in (robot_actions or ALL_ACTIONS)]
    if len(h_order) > 1:
        chooser.shuffle(h_order)
    if len(r_order) > 1:
        chooser.shuffle(r_order)
    h_acts = tuple(h_order)
    r_acts = tuple(r_order)
    q = cfg.quantization
    inv_y = 1.0 / q.dy
    inv_x = 1.0 / q.dx
    inv_v = 1.0 / q.dv

    start = time.monotonic()
    deadline = start + cfg.time_budget
    max_expansions = cfg.max_expansions

    root6 = _flat(state)
    empty_plan = Plan(
        actions=[], value=0.0, value_robot=0.0, value_human=0.0,
        trajectory=[state], complete=True,
    )
    if _terminal_state(root6, kp):
        empty_plan.diagnostics = {"stop": "terminal_root", "expanded": 0,
                                  "backend": kern.BACKEND}
        return Action.STAY, empty_plan
    root_key = (0, round(root6[0] * inv_y), round(root6[1] * inv_x),
                round(root6[2] * inv_v), round(root6[3] * inv_y),
                round(root6[4] * inv_x), round(root6[5] * inv_v))
    # Heap order: highest f first, then deepest (so equal-f plateaus are
    # dived through rather than swept breadth-first), then insertion order.
    arena = [(root6, 0, 0.0, 0.0, 0.0, -1, -1, -1, False, root_key, 0)]
    heap = [(-(max_depth * per_step_max), 0, 0, 0)]
    best_g = {root_key: 0.0}
    seq = 1

    r_max = float("-inf")
    tied_roots: dict[tuple[int, int], int] = {}
    best_any_idx = 0
    best_any_g = 0.0
    expanded = 0
    generated = 0
    dominated = 0
    stale = 0
    stop = "exhausted"

    def root_action_of(idx: int) -> tuple[int, int]:
        node = arena[idx]
        while node[_DEPTH] > 1:
            node = arena[node[_PARENT]]
        return (node[_AH], node[_AR])

    while heap:
        if expanded > 0:
            if max_expansions is not None and expanded >= max_expansions:
                stop = "expansion_cap"
                break
            if max_expansions is None and time.monotonic() >= deadline \
                    - generated * _TEARDOWN_SEC_PER_NODE:
                stop = "budget"
                break
        neg_f, _, _, idx = heappop(heap)
        if r_max_trace is not None:
            r_max_trace.append(r_max)
        if prune and -neg_f < r_max:
            # The queue is max-ordered, so nothing left can beat r_max.
            stop = "pruned"
            break
        node = arena[idx]
        if node[_G] < best_g[node[_KEY]]:
            stale += 1
            continue
        if node[_TERM] or node[_DEPTH] == max_depth:
            g = node[_G]
            if g > r_max:
                r_max = g
                tied_roots = {root_action_of(idx): idx}
            elif g == r_max:
                tied_roots.setdefault(root_action_of(idx), idx)
            continue
        depth = node[_DEPTH] + 1
        h_rest = (max_depth - depth) * per_step_max
        g0 = node[_G]
        gr0 = node[_GR]
        gh0 = node[_GH]
        subs0 = node[_SUBS]
        bg_get = best_g.get
        arena_append = arena.append
        neg_depth = -depth
        for a_h, a_r, s6, gj, gr, gh, term, subs in kern.macro_expand(
            kp, node[_STATE], n_sub, h_acts, r_acts
        ):
            g2 = g0 + gj
            key = (depth, round(s6[0] * inv_y), round(s6[1] * inv_x),
                   round(s6[2] * inv_v), round(s6[3] * inv_y),
                   round(s6[4] * inv_x), round(s6[5] * inv_v))
            old = bg_get(key)
            if old is not None and g2 <= old:
                dominated += 1
                continue
            best_g[key] = g2
            arena_append((s6, depth, g2, gr0 + gr, gh0 + gh, idx,
                          a_h, a_r, term, key, subs0 + subs))
            cidx = len(arena) - 1
            generated += 1
            if g2 > best_any_g:
                best_any_g = g2
                best_any_idx = cidx
            f2 = g2 if term else g2 + h_rest
            heappush(heap, (-f2, neg_depth, seq, cidx))
            seq += 1
        expanded += 1

    complete = stop in ("exhausted", "pruned")

    if expanded == 0:
        # Root was terminal or produced nothing: stay put and report it.
        empty_plan.complete = complete
        result_plan = empty_plan
    elif not complete and best_any_g > r_max:
        # Cut off early: fall back on the maximal accumulated reward seen.
        result_plan = _traceback(arena, best_any_idx, state)
    elif not tied_roots:
        empty_plan.complete = complete
        result_plan = empty_plan
    else:
        roots = list(tied_roots)
        chosen = roots[chooser.randrange(len(roots))] if len(roots) > 1 else roots[0]
        result_plan = _traceback(arena, tied_roots[chosen], state)
    result_plan.complete = complete
    result_plan.diagnostics = {
        "expanded": expanded,
        "generated": generated,
        "dominated": dominated,
        "stale": stale,
        "tied_roots": len(tied_roots),
        "r_max": None if r_max == float("-inf") else r_max,
        "stop": stop,
        "complete": complete,
        "wall_time_s": time.monotonic() - start,
        "backend": kern.BACKEND,
    }
    robot_action = (
        result_plan.actions[0].robot if result_plan.actions else Action.STAY
    )
    return robot_action, result_plan


def brute_force_plan(
    state: WorldState,
    depth: int,
    cfg: PlannerConfig,
    road: RoadConfig,
    geom: CarGeometry,
    phys: PhysicsParams,
    kernel=None,
    depth_cap: int = BRUTE_FORCE_DEPTH_CAP,
) -> Plan:
    """Exhaustive 25^depth enumeration with macro-step semantics.

    The independent optimality oracle for the search: identical arithmetic,
    but a plain depth-first sweep over every joint action sequence. Ties are
    resolved first-found in canonical action enumeration order.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth > depth_cap:
        raise ValueError(f"depth {depth} exceeds the oracle cap {depth_cap}")
    kern = kernel if kernel is not None else kernels.active()
    kp = kern.make_params(phys, road, geom, cfg.alpha)
    n_sub = cfg.sub_steps
    acts = tuple(int(a) for a in ALL_ACTIONS)

    best = {
        "value": float("-inf"), "gr": 0.0, "gh": 0.0,
        "path": (), "states": (), "subs": (),
    }

    def sweep(s6, g, gr, gh, d, path, states, subs):
        if d == depth:
            if g > best["value"]:
                best.update(value=g, gr=gr, gh=gh, path=path, states=states,
                            subs=subs)
            return
        for a_h in acts:
            for a_r in acts:
                s2, gj, gr2, gh2, term, n = kern.macro_step(kp, s6, a_h, a_r, n_sub)
                path2 = path + ((a_h, a_r),)
                states2 = states + (s2,)
                subs2 = subs + (n,)
                if term:
                    g2 = g + gj
                    if g2 > best["value"]:
                        best.update(value=g2, gr=gr + gr2, gh=gh + gh2,
                                    path=path2, states=states2, subs=subs2)
                else:
                    sweep(s2, g + gj, gr + gr2, gh + gh2, d + 1,
                          path2, states2, subs2)

    if depth == 0:
        return Plan(actions=[], value=0.0, value_robot=0.0, value_human=0.0,
                    trajectory=[state], complete=True)
    sweep(_flat(state), 0.0, 0.0, 0.0, 0, (), (), ())
    trajectory = [state]
    step = state.step
    for s6, n in zip(best["states"], best["subs"]):
        step += n
        trajectory.append(_world(s6, step))
    return Plan(
        actions=[JointAction(Action(h), Action(r)) for h, r in best["path"]],
        value=best["value"],
        value_robot=best["gr"],
        value_human=best["gh"],
        trajectory=trajectory,
        complete=True,
    )


def selfish_baseline_action(
    state: WorldState,
    depth: int,
    cfg: PlannerConfig,
    road: RoadConfig,
    geom: CarGeometry,
    phys: PhysicsParams,
    kernel=None,
    depth_cap: int = BRUTE_FORCE_DEPTH_CAP,
) -> SelfishBaselineResult:
    """Nested turn-taking optimization: the robot commits to a sequence, the
    human best-responds on their own reward, and the robot keeps the sequence
    whose response yields its highest own reward.

    Ties on both levels resolve first-found in canonical enumeration order.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if depth > depth_cap:
        raise ValueError(f"depth {depth} exceeds the oracle cap {depth_cap}")
    kern = kernel if kernel is not None else kernels.active()
    kp = kern.make_params(phys, road, geom, cfg.alpha)
    n_sub = cfg.sub_steps
    root6 = _flat(state)
    sequences = tuple(itertools.product(ALL_ACTIONS, repeat=depth))

    def rollout(robot_seq, human_seq):
        s6 = root6
        gr = 0.0
        gh = 0.0
        for a_h, a_r in zip(human_seq, robot_seq):
            s6, _, gr2, gh2, term, _ = kern.macro_step(
                kp, s6, int(a_h), int(a_r), n_sub
            )
            gr += gr2
            gh += gh2
            if term:
                break
        return gr, gh

    best_robot = None
    for robot_seq in sequences:
        response = None
        for human_seq in sequences:
            gr, gh = rollout(robot_seq, human_seq)
            if response is None or gh > response[1]:
                response = (gr, gh, human_seq)
        gr, gh, human_seq = response
        if best_robot is None or gr > best_robot[0]:
            best_robot = (gr, gh, robot_seq, human_seq)
    gr, gh, robot_seq, human_seq = best_robot
    return SelfishBaselineResult(
        action=robot_seq[0],
        value_robot=gr,
        value_human=gh,
        robot_sequence=robot_seq,
        human_response=human_seq,
    )
