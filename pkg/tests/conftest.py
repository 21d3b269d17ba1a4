import random

import pytest

from mergeplan.model import (
    CarGeometry,
    CarState,
    PhysicsParams,
    RoadConfig,
    WorldState,
    is_terminal,
)


@pytest.fixture
def phys():
    return PhysicsParams()


@pytest.fixture
def geom():
    return CarGeometry()


@pytest.fixture
def road():
    # Double merge on the long road: robot 1 -> 0, human 0 -> 1.
    return RoadConfig(road_length=200.0, goal_lane_robot=0, goal_lane_human=1)


def sample_world(
    rng: random.Random,
    road: RoadConfig,
    geom: CarGeometry,
    *,
    y_max: float | None = None,
    x_margin: float = 1.0,
    non_terminal: bool = True,
) -> WorldState:
    """Random in-bounds two-car state; resamples collisions/terminals away
    when non_terminal is set."""
    y_hi = y_max if y_max is not None else road.road_length * 0.6
    while True:
        state = WorldState(
            human=CarState(y=rng.uniform(0.0, y_hi),
                           x=rng.uniform(x_margin, road.width - x_margin),
                           v=rng.uniform(3.0, 28.0)),
            robot=CarState(y=rng.uniform(0.0, y_hi),
                           x=rng.uniform(x_margin, road.width - x_margin),
                           v=rng.uniform(3.0, 28.0)),
        )
        if not non_terminal or not is_terminal(state, road, geom):
            return state
