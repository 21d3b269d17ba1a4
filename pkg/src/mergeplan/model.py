"""Deterministic two-lane world model.

State, the five discrete controls, single-step dynamics, lane geometry,
collision test, and the per-step reward. Everything here is a pure function
over frozen value types: no hidden state, safe to call from any thread, and
bit-reproducible for identical inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

# Weight of the lane-centering term inside the in-goal-lane reward.
CENTERING_WEIGHT = 0.3
COLLISION_REWARD = -10.0


class Action(IntEnum):
    """The five per-car controls. Enumeration order is the canonical
    tie-breaking order used by the exhaustive planners."""

    ACCELERATE = 0
    DECELERATE = 1
    STAY = 2
    TURN_RIGHT = 3
    TURN_LEFT = 4

    @property
    def wire(self) -> str:
        return _WIRE_NAMES[self]

    @classmethod
    def from_wire(cls, name: str) -> "Action":
        try:
            return _WIRE_LOOKUP[name]
        except KeyError:
            raise ValueError(f"unknown action name: {name!r}") from None


_WIRE_NAMES = {
    Action.ACCELERATE: "accelerate",
    Action.DECELERATE: "decelerate",
    Action.STAY: "stay",
    Action.TURN_RIGHT: "turn_right",
    Action.TURN_LEFT: "turn_left",
}
_WIRE_LOOKUP = {name: action for action, name in _WIRE_NAMES.items()}

ALL_ACTIONS = tuple(Action)


class Side(IntEnum):
    HUMAN = 0
    ROBOT = 1


class JointAction(NamedTuple):
    human: Action
    robot: Action


class DisallowedActionError(ValueError):
    """Raised when a turn is applied at a road edge where it is not permitted.

    Callers that can receive arbitrary actions (the trial engine, the planner's
    macro stepper) are expected to sanitize before stepping; hitting this error
    therefore signals a bug upstream, not bad user input.
    """


@dataclass(frozen=True)
class PhysicsParams:
    dt: float = 0.2
    accel: float = 2.0
    v_lat: float = 3.0
    v_max: float = 30.0
    v_min: float = 0.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.accel <= 0:
            raise ValueError("accel must be positive")
        if not 0 <= self.v_lat <= self.v_max:
            raise ValueError("v_lat must lie in [0, v_max]")
        if self.v_min < 0:
            raise ValueError("v_min must be non-negative")


@dataclass(frozen=True)
class RoadConfig:
    lane_width: float = 4.0
    num_lanes: int = 2
    road_length: float = 200.0
    goal_lane_robot: int = 1
    goal_lane_human: int = 0

    def __post_init__(self) -> None:
        if self.lane_width <= 0:
            raise ValueError("lane_width must be positive")
        if self.num_lanes != 2:
            raise ValueError("only two-lane roads are supported")
        if self.road_length <= 0:
            raise ValueError("road_length must be positive")
        for goal in (self.goal_lane_robot, self.goal_lane_human):
            if goal not in (0, 1):
                raise ValueError("goal lanes must be 0 or 1")

    @property
    def width(self) -> float:
        return self.num_lanes * self.lane_width

    def lane_center(self, lane: int) -> float:
        return (lane + 0.5) * self.lane_width

    def goal_lane(self, side: Side) -> int:
        return self.goal_lane_human if side == Side.HUMAN else self.goal_lane_robot


@dataclass(frozen=True)
class CarGeometry:
    length: float = 5.0
    width: float = 2.0

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError("car dimensions must be positive")


@dataclass(frozen=True)
class CarState:
    y: float  # longitudinal position, m
    x: float  # lateral position of the car center, m
    v: float  # longitudinal speed, m/s


@dataclass(frozen=True)
class WorldState:
    human: CarState
    robot: CarState
    step: int = 0

    def car(self, side: Side) -> CarState:
        return self.human if side == Side.HUMAN else self.robot


class LanePosition(NamedTuple):
    lane: int
    sublane: float  # 0 at the lane center, 1 at the lane edge


def allowed_actions(
    car: CarState, road: RoadConfig, geom: CarGeometry, phys: PhysicsParams
) -> set[Action]:
    """Actions available to `car` this step.

    A turn is excluded when the car body (center +- width/2) would cross the
    corresponding road edge after one step at the effective lateral speed.
    Accelerate/decelerate are always available; speed saturation is handled by
    clamping inside the step.
    """
    actions = {Action.ACCELERATE, Action.DECELERATE, Action.STAY}
    v_lat = car.v if car.v < phys.v_lat else phys.v_lat
    half_w = geom.width / 2.0
    if car.x + v_lat * phys.dt + half_w <= road.width:
        actions.add(Action.TURN_RIGHT)
    if car.x - v_lat * phys.dt - half_w >= 0.0:
        actions.add(Action.TURN_LEFT)
    return actions


def step_car(
    car: CarState,
    action: Action,
    phys: PhysicsParams,
    road: RoadConfig,
    geom: CarGeometry,
) -> CarState:
    """Advance one car by a single time step.

    Speed actions integrate position with the pre-update speed:
    v' = clamp(v +- a*dt), y' = y + v*dt. Turns trade longitudinal for lateral
    motion at a fixed lateral speed: v_x = min(v, v_lat), v_y = sqrt(v^2 - v_x^2),
    with the final x clamped so the car body stays on the road.
    """
    if action not in allowed_actions(car, road, geom, phys):
        raise DisallowedActionError(f"{action.name} not allowed at x={car.x}")
    if action == Action.ACCELERATE:
        v2 = car.v + phys.accel * phys.dt
        if v2 > phys.v_max:
            v2 = phys.v_max
        return CarState(y=car.y + car.v * phys.dt, x=car.x, v=v2)
    if action == Action.DECELERATE:
        v2 = car.v - phys.accel * phys.dt
        if v2 < phys.v_min:
            v2 = phys.v_min
        return CarState(y=car.y + car.v * phys.dt, x=car.x, v=v2)
    if action == Action.STAY:
        return CarState(y=car.y + car.v * phys.dt, x=car.x, v=car.v)
    # Turning: fixed lateral speed, longitudinal remainder keeps |velocity|
    # constant, so v_x^2 + v_y^2 == v^2 and the speed itself is unchanged.
    v_x = car.v if car.v < phys.v_lat else phys.v_lat
    v_y = math.sqrt(car.v * car.v - v_x * v_x)
    if action == Action.TURN_RIGHT:
        x2 = car.x + v_x * phys.dt
    else:
        x2 = car.x - v_x * phys.dt
    half_w = geom.width / 2.0
    if x2 > road.width - half_w:
        x2 = road.width - half_w
    if x2 < half_w:
        x2 = half_w
    return CarState(y=car.y + v_y * phys.dt, x=x2, v=car.v)


def transition(
    state: WorldState,
    joint: JointAction,
    phys: PhysicsParams,
    road: RoadConfig,
    geom: CarGeometry,
) -> WorldState:
    """Step both cars simultaneously from the same pre-state."""
    return WorldState(
        human=step_car(state.human, joint.human, phys, road, geom),
        robot=step_car(state.robot, joint.robot, phys, road, geom),
        step=state.step + 1,
    )


def lane_position(x: float, road: RoadConfig) -> LanePosition:
    """Lane index and normalized offset from the lane center for lateral x.

    x exactly on the lane divider belongs to the higher-index lane. The
    sublane offset is 0 at the lane center and 1 at either lane edge.
    """
    if not 0.0 <= x <= road.width:
        raise ValueError(f"x={x} outside the road [0, {road.width}]")
    lane = int(math.floor(x / road.lane_width))
    if lane > road.num_lanes - 1:
        lane = road.num_lanes - 1
    sublane = abs(x - (lane + 0.5) * road.lane_width) / (road.lane_width / 2.0)
    if sublane > 1.0:
        sublane = 1.0
    return LanePosition(lane, sublane)


def check_collision(state: WorldState, geom: CarGeometry) -> bool:
    """True iff the two axis-aligned car rectangles overlap with positive area."""
    return (
        abs(state.human.x - state.robot.x) < geom.width
        and abs(state.human.y - state.robot.y) < geom.length
    )


def instantaneous_reward(
    state: WorldState, side: Side, road: RoadConfig, geom: CarGeometry
) -> float:
    """Per-step reward for one agent.

    -10 on any collision; otherwise a lane-centering bonus 0.3*e^(-sublane) + 0.7
    when the agent sits in its goal lane, and 0 outside it.
    """
    if check_collision(state, geom):
        return COLLISION_REWARD
    car = state.car(side)
    lane, sublane = lane_position(car.x, road)
    if lane != road.goal_lane(side):
        return 0.0
    return CENTERING_WEIGHT * math.exp(-sublane) + (1.0 - CENTERING_WEIGHT)


def is_terminal(state: WorldState, road: RoadConfig, geom: CarGeometry) -> bool:
    """True once either front bumper passes the road end, or on collision."""
    half_len = geom.length / 2.0
    if state.human.y + half_len > road.road_length:
        return True
    if state.robot.y + half_len > road.road_length:
        return True
    return check_collision(state, geom)
