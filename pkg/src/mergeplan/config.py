"""JSON serialization of the world and planner parameters.

One config file carries the physics, road, car geometry, and (optionally)
planner sections under exactly the field names of the corresponding types.
Parsing is strict: unknown keys are rejected so typos fail loudly instead of
silently falling back to defaults.
"""
from __future__ import annotations

import json
from dataclasses import asdict, fields
from pathlib import Path

from .model import CarGeometry, PhysicsParams, RoadConfig
from .planner import PlannerConfig, Quantization


def _build(cls, data: dict, what: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {what} fields: {sorted(unknown)}")
    return cls(**data)


def physics_from_dict(data: dict) -> PhysicsParams:
    return _build(PhysicsParams, data, "physics")


def road_from_dict(data: dict) -> RoadConfig:
    return _build(RoadConfig, data, "road")


def geometry_from_dict(data: dict) -> CarGeometry:
    return _build(CarGeometry, data, "geometry")


def planner_from_dict(data: dict) -> PlannerConfig:
    data = dict(data)
    quant = data.pop("quantization", None)
    if quant is not None:
        data["quantization"] = _build(Quantization, quant, "quantization")
    return _build(PlannerConfig, data, "planner")


def planner_to_dict(cfg: PlannerConfig) -> dict:
    return asdict(cfg)


def scenario_to_dict(
    phys: PhysicsParams,
    road: RoadConfig,
    geom: CarGeometry,
    planner: PlannerConfig | None = None,
) -> dict:
    out = {
        "physics": asdict(phys),
        "road": asdict(road),
        "geometry": asdict(geom),
    }
    if planner is not None:
        out["planner"] = planner_to_dict(planner)
    return out


def scenario_from_dict(
    data: dict,
) -> tuple[PhysicsParams, RoadConfig, CarGeometry, PlannerConfig | None]:
    unknown = set(data) - {"physics", "road", "geometry", "planner"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    phys = physics_from_dict(data.get("physics", {}))
    road = road_from_dict(data.get("road", {}))
    geom = geometry_from_dict(data.get("geometry", {}))
    if geom.width > road.lane_width:
        raise ValueError("car width must not exceed the lane width")
    planner = None
    if "planner" in data:
        planner = planner_from_dict(data["planner"])
        if planner.sim_dt != phys.dt:
            raise ValueError("planner sim_dt must equal the physics dt")
    return phys, road, geom, planner


def load_scenario(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(
    path: str | Path,
    phys: PhysicsParams,
    road: RoadConfig,
    geom: CarGeometry,
    planner: PlannerConfig | None = None,
) -> None:
    payload = scenario_to_dict(phys, road, geom, planner)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
