"""Collaborative two-car lane-merge planning and simulation."""

from .kernels import BACKEND
from .model import (
    Action,
    CarGeometry,
    CarState,
    JointAction,
    PhysicsParams,
    RoadConfig,
    Side,
    WorldState,
)
from .planner import Plan, PlannerConfig, find_optimal_action
from .engine import TrialConfig, TrialOutcome, run_trial

__version__ = "0.1.0"

__all__ = [
    "Action", "BACKEND", "CarGeometry", "CarState", "JointAction",
    "PhysicsParams", "Plan", "PlannerConfig", "RoadConfig", "Side",
    "TrialConfig", "TrialOutcome", "WorldState", "find_optimal_action",
    "run_trial", "__version__",
]
