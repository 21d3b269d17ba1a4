"""JSON wire protocol between the session service and the driver UI.

One JSON object per text frame. Server to client: hello, trial_start, tick,
trial_end, bye, and error (the reply to malformed input). Client to server:
action and questionnaire. Validation is strict in both directions so protocol
drift fails loudly in tests on either side of the socket.
"""
from __future__ import annotations

from .model import Action

PROTOCOL_VERSION = "1"

SERVER_KINDS = ("hello", "trial_start", "tick", "trial_end", "bye", "error")
CLIENT_KINDS = ("action", "questionnaire")

ACTION_NAMES = tuple(a.wire for a in Action)

OUTCOME_FIELDS = (
    "merged_human", "merged_robot", "merge_time_human", "merge_time_robot",
    "collision", "total_r_H", "total_r_R", "ticks",
)


class ProtocolError(ValueError):
    pass


def _require(obj: dict, key: str, types, what: str):
    if key not in obj:
        raise ProtocolError(f"{what} is missing {key!r}")
    value = obj[key]
    allowed = types if isinstance(types, tuple) else (types,)
    # bool is an int subclass; never accept it where a number is expected.
    if isinstance(value, bool) and bool not in allowed:
        raise ProtocolError(f"{what}.{key} has the wrong type")
    if not isinstance(value, types):
        raise ProtocolError(f"{what}.{key} has the wrong type")
    return value


def _number(obj: dict, key: str, what: str) -> float:
    value = _require(obj, key, (int, float), what)
    return float(value)


def _lane(obj: dict, key: str, what: str) -> int:
    value = _require(obj, key, int, what)
    if value not in (0, 1):
        raise ProtocolError(f"{what}.{key} must be 0 or 1")
    return value


def _no_extras(obj: dict, allowed: set[str], what: str) -> None:
    extras = set(obj) - allowed
    if extras:
        raise ProtocolError(f"{what} has unknown fields: {sorted(extras)}")


def validate_client_message(obj) -> dict:
    """Validate a client frame; returns it, or raises ProtocolError."""
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    kind = obj.get("kind")
    if kind not in CLIENT_KINDS:
        raise ProtocolError(f"unknown client message kind: {kind!r}")
    if kind == "action":
        _no_extras(obj, {"kind", "tick_hint", "action"}, "action")
        action = _require(obj, "action", str, "action")
        if action not in ACTION_NAMES:
            raise ProtocolError(f"unknown action name: {action!r}")
        hint = obj.get("tick_hint")
        if hint is not None and not isinstance(hint, int):
            raise ProtocolError("action.tick_hint must be an integer or null")
    else:
        _no_extras(obj, {"kind", "q1", "q2"}, "questionnaire")
        for key in ("q1", "q2"):
            value = _require(obj, key, int, "questionnaire")
            if value not in (-1, 0, 1):
                raise ProtocolError(f"questionnaire.{key} must be -1, 0, or 1")
    return obj


def validate_server_message(obj) -> dict:
    """Validate a server frame; returns it, or raises ProtocolError."""
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    kind = obj.get("kind")
    if kind not in SERVER_KINDS:
        raise ProtocolError(f"unknown server message kind: {kind!r}")
    what = kind
    if kind == "hello":
        _no_extras(obj, {"kind", "protocol_version", "session_id"}, what)
        if _require(obj, "protocol_version", str, what) != PROTOCOL_VERSION:
            raise ProtocolError("unsupported protocol version")
        _require(obj, "session_id", str, what)
    elif kind == "trial_start":
        _no_extras(obj, {"kind", "trial_index", "road_length",
                         "human_start_lane", "human_goal_lane",
                         "av_indicator_lane", "colors"}, what)
        index = _require(obj, "trial_index", int, what)
        if index < 0:
            raise ProtocolError("trial_start.trial_index must be >= 0")
        if _number(obj, "road_length", what) <= 0:
            raise ProtocolError("trial_start.road_length must be positive")
        _lane(obj, "human_start_lane", what)
        _lane(obj, "human_goal_lane", what)
        _lane(obj, "av_indicator_lane", what)
        colors = _require(obj, "colors", dict, what)
        for side in ("human", "robot"):
            if not isinstance(colors.get(side), str):
                raise ProtocolError(f"trial_start.colors.{side} must be a string")
    elif kind == "tick":
        _no_extras(obj, {"kind", "tick", "time_s", "cars",
                         "distance_remaining_m", "av_indicator_lane"}, what)
        if _require(obj, "tick", int, what) < 0:
            raise ProtocolError("tick.tick must be >= 0")
        _number(obj, "time_s", what)
        _number(obj, "distance_remaining_m", what)
        _lane(obj, "av_indicator_lane", what)
        cars = _require(obj, "cars", list, what)
        sides = set()
        for car in cars:
            if not isinstance(car, dict):
                raise ProtocolError("tick.cars entries must be objects")
            side = car.get("side")
            if side not in ("human", "robot"):
                raise ProtocolError("tick car side must be 'human' or 'robot'")
            sides.add(side)
            for key in ("x", "y", "v"):
                _number(car, key, f"tick.car[{side}]")
        if sides != {"human", "robot"}:
            raise ProtocolError("tick.cars must hold exactly one car per side")
    elif kind == "trial_end":
        _no_extras(obj, {"kind", "outcome"}, what)
        outcome = _require(obj, "outcome", dict, what)
        for key in OUTCOME_FIELDS:
            if key not in outcome:
                raise ProtocolError(f"trial_end.outcome is missing {key!r}")
    elif kind == "error":
        _require(obj, "reason", str, what)
    else:  # bye
        _no_extras(obj, {"kind"}, what)
    return obj


# Message builders -----------------------------------------------------------


def hello(session_id: str) -> dict:
    return {"kind": "hello", "protocol_version": PROTOCOL_VERSION,
            "session_id": session_id}


def trial_start(trial_index: int, road_length: float, human_start_lane: int,
                human_goal_lane: int, av_indicator_lane: int,
                colors: dict) -> dict:
    return {"kind": "trial_start", "trial_index": trial_index,
            "road_length": road_length, "human_start_lane": human_start_lane,
            "human_goal_lane": human_goal_lane,
            "av_indicator_lane": av_indicator_lane, "colors": colors}


def tick(tick_index: int, time_s: float, human_car, robot_car,
         distance_remaining_m: float, av_indicator_lane: int) -> dict:
    return {
        "kind": "tick", "tick": tick_index, "time_s": time_s,
        "cars": [
            {"side": "human", "x": human_car.x, "y": human_car.y, "v": human_car.v},
            {"side": "robot", "x": robot_car.x, "y": robot_car.y, "v": robot_car.v},
        ],
        "distance_remaining_m": distance_remaining_m,
        "av_indicator_lane": av_indicator_lane,
    }


def trial_end(outcome) -> dict:
    return {"kind": "trial_end", "outcome": {
        "merged_human": outcome.merged_human,
        "merged_robot": outcome.merged_robot,
        "merge_time_human": outcome.merge_time_human,
        "merge_time_robot": outcome.merge_time_robot,
        "collision": outcome.collision,
        "total_r_H": outcome.total_r_H,
        "total_r_R": outcome.total_r_R,
        "ticks": outcome.ticks,
    }}


def bye() -> dict:
    return {"kind": "bye"}


def error(reason: str) -> dict:
    return {"kind": "error", "reason": reason}
