"""Closed-loop trial engine.

Advances the world at fixed sim ticks, querying one policy per car, and
records a fully replayable log: the header holds the complete trial
configuration, record 0 is the initial state, and every later record carries
the sanitized joint action actually applied plus the post-transition state
and rewards. Replaying the actions through the transition function must
reproduce every logged state bit-exactly; anything else means the log (or the
determinism of the model) is broken.
"""
from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from random import Random
from typing import Protocol

from . import config as config_io
from .model import (
    Action,
    CarGeometry,
    CarState,
    JointAction,
    PhysicsParams,
    RoadConfig,
    Side,
    WorldState,
    allowed_actions,
    check_collision,
    instantaneous_reward,
    is_terminal,
    lane_position,
    transition,
)
from .planner import Plan, PlannerConfig, find_optimal_action

# Offset between the robot's and the scripted human's RNG streams so the two
# planners never share tie-breaking randomness within a trial.
_HUMAN_SEED_OFFSET = 1000003


class AgentPolicy(Protocol):
    def decide(self, state: WorldState, side: Side) -> Action: ...


@dataclass(frozen=True)
class TrialConfig:
    road: RoadConfig
    physics: PhysicsParams
    planner: PlannerConfig
    geometry: CarGeometry = field(default_factory=CarGeometry)
    human_model: str = "cooperative:0.5"
    start_lane_robot: int = 1
    start_lane_human: int = 0
    v0_human: float = 15.0
    v0_robot: float = 15.0
    y0: float = 0.0
    max_ticks: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.start_lane_robot == self.start_lane_human:
            raise ValueError("cars must start in different lanes")
        for lane in (self.start_lane_robot, self.start_lane_human):
            if lane not in (0, 1):
                raise ValueError("start lanes must be 0 or 1")
        # Double merge: each car's goal is the other's start lane.
        if self.road.goal_lane_robot != self.start_lane_human:
            raise ValueError("robot goal lane must be the human start lane")
        if self.road.goal_lane_human != self.start_lane_robot:
            raise ValueError("human goal lane must be the robot start lane")
        for v0 in (self.v0_human, self.v0_robot):
            if not self.physics.v_min <= v0 <= self.physics.v_max:
                raise ValueError("initial speeds must lie in [v_min, v_max]")
        if self.max_ticks is not None and self.max_ticks < 1:
            raise ValueError("max_ticks must be positive")

    @property
    def effective_max_ticks(self) -> int:
        if self.max_ticks is not None:
            return self.max_ticks
        # Safety cap against degenerate crawls: time to cover the road at 5 m/s.
        return int(self.road.road_length / (5.0 * self.physics.dt))


@dataclass(frozen=True)
class TickRecord:
    tick: int
    time_s: float
    human: CarState
    robot: CarState
    action_human: Action | None
    action_robot: Action | None
    r_H: float | None
    r_R: float | None
    diag: dict | None = None


@dataclass
class TrialLog:
    config: TrialConfig
    records: list[TickRecord]
    error: str | None = None


@dataclass(frozen=True)
class TrialOutcome:
    merged_human: bool
    merged_robot: bool
    merge_time_human: float | None
    merge_time_robot: float | None
    collision: bool
    total_r_H: float
    total_r_R: float
    ticks: int
    error: str | None = None


class ReplayDivergenceError(RuntimeError):
    def __init__(self, tick: int, message: str):
        super().__init__(f"replay diverged at tick {tick}: {message}")
        self.tick = tick


def initial_world_state(cfg: TrialConfig) -> WorldState:
    return WorldState(
        human=CarState(y=cfg.y0, x=cfg.road.lane_center(cfg.start_lane_human),
                       v=cfg.v0_human),
        robot=CarState(y=cfg.y0, x=cfg.road.lane_center(cfg.start_lane_robot),
                       v=cfg.v0_robot),
        step=0,
    )


# --------------------------------------------------------------------------
# Policies


class ConstantVelocityPolicy:
    """Holds speed and lane: always `stay`."""

    def decide(self, state: WorldState, side: Side) -> Action:
        return Action.STAY


class PlannerPolicy:
    """Runs the collaborative joint planner and executes its own side of the
    returned joint plan. Used both for the robot and for the cooperative
    scripted human (with that model's own selfishness weight)."""

    def __init__(
        self,
        cfg: PlannerConfig,
        road: RoadConfig,
        geom: CarGeometry,
        phys: PhysicsParams,
        rng: Random | None = None,
    ):
        self.cfg = cfg
        self.road = road
        self.geom = geom
        self.phys = phys
        self.rng = rng if rng is not None else Random(cfg.rng_seed)
        self.last_plan: Plan | None = None

    @property
    def last_diagnostics(self) -> dict | None:
        return self.last_plan.diagnostics if self.last_plan is not None else None

    def decide(self, state: WorldState, side: Side) -> Action:
        robot_action, plan = find_optimal_action(
            state, self.cfg, self.road, self.geom, self.phys, rng=self.rng
        )
        self.last_plan = plan
        if side == Side.ROBOT:
            return robot_action
        return plan.actions[0].human if plan.actions else Action.STAY


class SelfishPlannerPolicy:
    """Scripted human that optimizes only its own reward, predicting the
    robot as a constant-velocity car (all `stay`)."""

    def __init__(
        self,
        cfg: PlannerConfig,
        road: RoadConfig,
        geom: CarGeometry,
        phys: PhysicsParams,
        rng: Random | None = None,
    ):
        self.cfg = replace(cfg, alpha=0.0)
        self.road = road
        self.geom = geom
        self.phys = phys
        self.rng = rng if rng is not None else Random(cfg.rng_seed)
        self.last_plan: Plan | None = None

    @property
    def last_diagnostics(self) -> dict | None:
        return self.last_plan.diagnostics if self.last_plan is not None else None

    def decide(self, state: WorldState, side: Side) -> Action:
        if side != Side.HUMAN:
            raise ValueError("the selfish planner models the human side only")
        _, plan = find_optimal_action(
            state, self.cfg, self.road, self.geom, self.phys,
            rng=self.rng, robot_actions=(Action.STAY,),
        )
        self.last_plan = plan
        return plan.actions[0].human if plan.actions else Action.STAY


class ActionMailbox:
    """Single-slot latch between a session's socket reader and the sim loop.

    Writes overwrite (latest wins); reads never block and consume the slot,
    defaulting to `stay` when no action arrived since the last tick.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._action: Action | None = None

    def put(self, action: Action) -> None:
        with self._lock:
            self._action = action

    def take(self) -> Action:
        with self._lock:
            action, self._action = self._action, None
        return action if action is not None else Action.STAY


class RemotePolicy:
    """Human driven from a session mailbox (keyboard over the wire)."""

    def __init__(self, mailbox: ActionMailbox):
        self.mailbox = mailbox

    def decide(self, state: WorldState, side: Side) -> Action:
        return self.mailbox.take()


def parse_human_model(descriptor: str) -> tuple[str, float | None]:
    """Split a human model descriptor like 'cooperative:0.5' into kind and
    parameter. Known kinds: cooperative[:alpha], selfish, constant, remote."""
    kind, _, arg = descriptor.partition(":")
    kind = kind.strip().lower()
    if kind == "cooperative":
        alpha = float(arg) if arg else 0.5
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("cooperative alpha must lie in [0, 1]")
        return kind, alpha
    if kind in ("selfish", "constant", "remote"):
        if arg:
            raise ValueError(f"human model {kind!r} takes no parameter")
        return kind, None
    raise ValueError(f"unknown human model: {descriptor!r}")


def build_policies(
    cfg: TrialConfig, mailbox: ActionMailbox | None = None
) -> tuple[AgentPolicy, AgentPolicy]:
    """Instantiate the (human, robot) policy pair for one trial."""
    robot = PlannerPolicy(
        cfg.planner, cfg.road, cfg.geometry, cfg.physics, rng=Random(cfg.seed)
    )
    kind, alpha = parse_human_model(cfg.human_model)
    human_rng = Random(cfg.seed + _HUMAN_SEED_OFFSET)
    if kind == "cooperative":
        human_cfg = replace(cfg.planner, alpha=alpha)
        human: AgentPolicy = PlannerPolicy(
            human_cfg, cfg.road, cfg.geometry, cfg.physics, rng=human_rng
        )
    elif kind == "selfish":
        human = SelfishPlannerPolicy(
            cfg.planner, cfg.road, cfg.geometry, cfg.physics, rng=human_rng
        )
    elif kind == "constant":
        human = ConstantVelocityPolicy()
    else:
        if mailbox is None:
            raise ValueError("remote human model needs an action mailbox")
        human = RemotePolicy(mailbox)
    return human, robot


# --------------------------------------------------------------------------
# Trial execution


class TrialRunner:
    """Step-wise trial execution, shared by the batch harness (which drains
    it in a tight loop) and the live session service (which paces it against
    wall-clock ticks)."""

    def __init__(self, cfg: TrialConfig, human: AgentPolicy, robot: AgentPolicy):
        self.cfg = cfg
        self.human = human
        self.robot = robot
        self.state = initial_world_state(cfg)
        self.records: list[TickRecord] = [
            TickRecord(0, 0.0, self.state.human, self.state.robot,
                       None, None, None, None)
        ]
        self.error: str | None = None
        self.done = is_terminal(self.state, cfg.road, cfg.geometry)

    def step(self) -> TickRecord | None:
        """Run one tick; returns the new record, or None once the trial ended."""
        if self.done:
            return None
        cfg = self.cfg
        try:
            a_h = self.human.decide(self.state, Side.HUMAN)
            a_r = self.robot.decide(self.state, Side.ROBOT)
        except Exception as exc:  # policy bugs end the trial, not the batch
            self.error = f"policy failure: {exc!r}"
            self.done = True
            return None
        # The engine never applies a disallowed action; the log records what
        # was actually executed.
        if a_h not in allowed_actions(self.state.human, cfg.road, cfg.geometry,
                                      cfg.physics):
            a_h = Action.STAY
        if a_r not in allowed_actions(self.state.robot, cfg.road, cfg.geometry,
                                      cfg.physics):
            a_r = Action.STAY
        self.state = transition(self.state, JointAction(a_h, a_r),
                                cfg.physics, cfg.road, cfg.geometry)
        diag = getattr(self.robot, "last_diagnostics", None)
        if diag is not None:
            # keep logs byte-reproducible across runs and kernel lanes:
            # drop the wall clock and the lane name
            diag = {k: v for k, v in diag.items()
                    if k not in ("wall_time_s", "backend")}
        tick = len(self.records)
        record = TickRecord(
            tick=tick,
            time_s=tick * cfg.physics.dt,
            human=self.state.human,
            robot=self.state.robot,
            action_human=a_h,
            action_robot=a_r,
            r_H=instantaneous_reward(self.state, Side.HUMAN, cfg.road, cfg.geometry),
            r_R=instantaneous_reward(self.state, Side.ROBOT, cfg.road, cfg.geometry),
            diag=diag,
        )
        self.records.append(record)
        if is_terminal(self.state, cfg.road, cfg.geometry) \
                or tick >= cfg.effective_max_ticks:
            self.done = True
        return record

    def log(self) -> TrialLog:
        return TrialLog(config=self.cfg, records=self.records, error=self.error)

    def finish(self) -> tuple[TrialOutcome, TrialLog]:
        log = self.log()
        return compute_outcome(log), log


def run_trial(
    cfg: TrialConfig, human: AgentPolicy, robot: AgentPolicy
) -> tuple[TrialOutcome, TrialLog]:
    """Run one complete trial to its terminal state or tick cap."""
    runner = TrialRunner(cfg, human, robot)
    while runner.step() is not None:
        pass
    return runner.finish()


def compute_merge_time(log: TrialLog, side: Side) -> float | None:
    """Time of the final entry into the goal lane, or None if the car is not
    in its goal lane when the trial ends.

    Final-entry convention: the car must stay in the goal lane through the
    end of the log, so oscillating in and out is not credited as a merge.
    """
    road = log.config.road
    goal = road.goal_lane(side)
    last_outside = -1
    for i, rec in enumerate(log.records):
        car = rec.human if side == Side.HUMAN else rec.robot
        if lane_position(car.x, road).lane != goal:
            last_outside = i
    if last_outside == len(log.records) - 1:
        return None
    return log.records[last_outside + 1].time_s


def compute_outcome(log: TrialLog) -> TrialOutcome:
    mt_h = compute_merge_time(log, Side.HUMAN)
    mt_r = compute_merge_time(log, Side.ROBOT)
    final = log.records[-1]
    collided = check_collision(
        WorldState(human=final.human, robot=final.robot, step=final.tick),
        log.config.geometry,
    )
    return TrialOutcome(
        merged_human=mt_h is not None,
        merged_robot=mt_r is not None,
        merge_time_human=mt_h,
        merge_time_robot=mt_r,
        collision=collided,
        total_r_H=sum(r.r_H for r in log.records[1:]),
        total_r_R=sum(r.r_R for r in log.records[1:]),
        ticks=final.tick,
        error=log.error,
    )


def replay(log: TrialLog) -> list[WorldState]:
    """Re-simulate the logged actions and assert bit-exact agreement with the
    logged states. Returns the state sequence for rendering or analysis."""
    cfg = log.config
    if not log.records:
        return []
    state = initial_world_state(cfg)
    first = log.records[0]
    if first.human != state.human or first.robot != state.robot:
        raise ReplayDivergenceError(0, "initial state does not match header")
    states = [state]
    for rec in log.records[1:]:
        state = transition(
            state, JointAction(rec.action_human, rec.action_robot),
            cfg.physics, cfg.road, cfg.geometry,
        )
        if rec.human != state.human or rec.robot != state.robot:
            raise ReplayDivergenceError(
                rec.tick, f"expected {rec.human}/{rec.robot}, "
                f"got {state.human}/{state.robot}"
            )
        states.append(state)
    return states


# --------------------------------------------------------------------------
# JSON Lines persistence


def _car_to_dict(car: CarState) -> dict:
    return {"y": car.y, "x": car.x, "v": car.v}


def _record_to_dict(rec: TickRecord) -> dict:
    return {
        "tick": rec.tick,
        "time_s": rec.time_s,
        "human": _car_to_dict(rec.human),
        "robot": _car_to_dict(rec.robot),
        "action_human": rec.action_human.wire if rec.action_human is not None else None,
        "action_robot": rec.action_robot.wire if rec.action_robot is not None else None,
        "r_H": rec.r_H,
        "r_R": rec.r_R,
        "diag": rec.diag,
    }


def trial_config_to_dict(cfg: TrialConfig) -> dict:
    out = config_io.scenario_to_dict(cfg.physics, cfg.road, cfg.geometry,
                                     cfg.planner)
    out.update(
        human_model=cfg.human_model,
        start_lane_robot=cfg.start_lane_robot,
        start_lane_human=cfg.start_lane_human,
        v0_human=cfg.v0_human,
        v0_robot=cfg.v0_robot,
        y0=cfg.y0,
        max_ticks=cfg.max_ticks,
        seed=cfg.seed,
    )
    return out


def trial_config_from_dict(data: dict) -> TrialConfig:
    data = dict(data)
    phys, road, geom, planner = config_io.scenario_from_dict(
        {k: data.pop(k) for k in ("physics", "road", "geometry", "planner")
         if k in data}
    )
    if planner is None:
        raise ValueError("trial header is missing the planner section")
    return TrialConfig(road=road, physics=phys, planner=planner, geometry=geom,
                       **data)


def _record_from_dict(data: dict) -> TickRecord:
    return TickRecord(
        tick=data["tick"],
        time_s=data["time_s"],
        human=CarState(**data["human"]),
        robot=CarState(**data["robot"]),
        action_human=(Action.from_wire(data["action_human"])
                      if data["action_human"] is not None else None),
        action_robot=(Action.from_wire(data["action_robot"])
                      if data["action_robot"] is not None else None),
        r_H=data["r_H"],
        r_R=data["r_R"],
        diag=data.get("diag"),
    )


def log_to_jsonl(log: TrialLog) -> str:
    header = trial_config_to_dict(log.config)
    if log.error is not None:
        header["error"] = log.error
    lines = [json.dumps(header)]
    lines.extend(json.dumps(_record_to_dict(rec)) for rec in log.records)
    return "\n".join(lines) + "\n"


def log_from_jsonl(text: str) -> TrialLog:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty trial log")
    header = json.loads(lines[0])
    error = header.pop("error", None)
    cfg = trial_config_from_dict(header)
    records = [_record_from_dict(json.loads(line)) for line in lines[1:]]
    return TrialLog(config=cfg, records=records, error=error)


def write_log(log: TrialLog, path: str | Path) -> None:
    Path(path).write_text(log_to_jsonl(log), encoding="utf-8")


def read_log(path: str | Path) -> TrialLog:
    return log_from_jsonl(Path(path).read_text(encoding="utf-8"))
