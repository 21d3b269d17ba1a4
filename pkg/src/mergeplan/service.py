"""Real-time driving session service.

Bridges the trial engine to a browser client over a websocket: streams tick
states at the sim period, latches the client's keyboard actions into the
remote human policy (latest wins), runs the collaborative planner for the
robot between ticks, and persists recorded trial logs plus questionnaire
answers per session.

Pacing modes: real time (default, one tick per 0.2 s of wall clock) and
lockstep, where the server waits for one action frame per tick. Lockstep
exists for deterministic end-to-end protocol tests; the study flow itself is
real time.
"""
from __future__ import annotations

import asyncio
import json
import logging
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

import websockets

from . import protocol
from .engine import (
    ActionMailbox,
    TrialRunner,
    build_policies,
    write_log,
)
from .experiments import Condition, sample_trial
from .model import Action, CarGeometry, PhysicsParams
from .planner import PlannerConfig

log = logging.getLogger(__name__)

_PALETTE = ("#e6194b", "#3cb44b", "#f58231", "#911eb4", "#46f0f0", "#f032e6")
_HUMAN_COLOR = "#4363d8"


@dataclass(frozen=True)
class SessionPlan:
    """Study flow for one connection: unrecorded practice trials followed by
    recorded trials, each drawn uniformly from the condition grid."""

    practice_trials: int = 1
    recorded_trials: int = 18
    seed: int = 0
    road_lengths: tuple[float, ...] = (100.0, 200.0)
    alphas: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    geometry: CarGeometry = field(default_factory=CarGeometry)
    tick_interval: float = 0.2
    questionnaire_timeout: float = 60.0
    lockstep: bool = False

    def __post_init__(self) -> None:
        if self.practice_trials < 0 or self.recorded_trials < 0:
            raise ValueError("trial counts must be non-negative")
        if self.tick_interval <= 0:
            raise ValueError("tick_interval must be positive")


class _Session:
    def __init__(self, ws, plan: SessionPlan, out_dir: Path):
        self.ws = ws
        self.plan = plan
        self.session_id = uuid.uuid4().hex[:12]
        self.dir = out_dir / f"session_{self.session_id}"
        self.mailbox = ActionMailbox()
        self.questionnaires: asyncio.Queue = asyncio.Queue()
        self.action_event = asyncio.Event()
        self.send_lock = asyncio.Lock()

    async def send(self, message: dict) -> None:
        async with self.send_lock:
            await self.ws.send(json.dumps(message))

    async def read_client(self) -> None:
        """Drain the socket: latch actions, queue questionnaires, answer
        malformed frames with an error object (and otherwise ignore them)."""
        async for raw in self.ws:
            try:
                obj = json.loads(raw)
            except (json.JSONDecodeError, UnicodeDecodeError):
                await self.send(protocol.error("frame is not valid JSON"))
                continue
            try:
                protocol.validate_client_message(obj)
            except protocol.ProtocolError as exc:
                await self.send(protocol.error(str(exc)))
                continue
            if obj["kind"] == "action":
                self.mailbox.put(Action.from_wire(obj["action"]))
                self.action_event.set()
            else:
                self.questionnaires.put_nowait((obj["q1"], obj["q2"]))

    async def run(self) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        await self.send(protocol.hello(self.session_id))
        plan = self.plan
        rng = Random(plan.seed)
        conditions = [Condition(road_length=r, alpha=a)
                      for r in plan.road_lengths for a in plan.alphas]
        total = plan.practice_trials + plan.recorded_trials
        for trial_index in range(total):
            recorded = trial_index >= plan.practice_trials
            condition = conditions[rng.randrange(len(conditions))]
            trial_seed = rng.getrandbits(32)
            cfg = sample_trial(
                condition, rng, seed=trial_seed, human_model="remote",
                planner=plan.planner, physics=plan.physics,
                geometry=plan.geometry,
            )
            robot_color = _PALETTE[rng.randrange(len(_PALETTE))]
            await self.send(protocol.trial_start(
                trial_index=trial_index,
                road_length=cfg.road.road_length,
                human_start_lane=cfg.start_lane_human,
                human_goal_lane=cfg.road.goal_lane_human,
                av_indicator_lane=cfg.road.goal_lane_robot,
                colors={"human": _HUMAN_COLOR, "robot": robot_color},
            ))
            aborted = await self._run_trial(trial_index, cfg, recorded)
            if aborted:
                return
            await self._await_questionnaire(trial_index, recorded)
        await self.send(protocol.bye())

    async def _run_trial(self, trial_index: int, cfg, recorded: bool) -> bool:
        """Drive one trial; returns True when the client disconnected."""
        plan = self.plan
        self.mailbox.take()  # drop anything latched after the previous trial
        self.action_event.clear()
        human, robot = build_policies(cfg, mailbox=self.mailbox)
        runner = TrialRunner(cfg, human, robot)
        loop = asyncio.get_running_loop()
        road = cfg.road

        def tick_message(rec):
            remaining = road.road_length - rec.human.y
            if remaining < 0.0:
                remaining = 0.0
            return protocol.tick(
                tick_index=rec.tick, time_s=rec.time_s,
                human_car=rec.human, robot_car=rec.robot,
                distance_remaining_m=remaining,
                av_indicator_lane=road.goal_lane_robot,
            )

        try:
            await self.send(tick_message(runner.records[0]))
            next_deadline = loop.time() + plan.tick_interval
            while not runner.done:
                if plan.lockstep:
                    await asyncio.wait_for(self.action_event.wait(), timeout=30.0)
                    self.action_event.clear()
                else:
                    delay = next_deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    next_deadline += plan.tick_interval
                # The planner runs between ticks in a worker thread so the
                # reader keeps latching actions while it thinks.
                record = await loop.run_in_executor(None, runner.step)
                if record is None:
                    break
                await self.send(tick_message(record))
            outcome, trial_log = runner.finish()
            await self.send(protocol.trial_end(outcome))
        except (websockets.exceptions.ConnectionClosed, asyncio.TimeoutError):
            trial_log = runner.log()
            trial_log.error = "aborted: client disconnected mid-trial"
            write_log(trial_log, self.dir / f"trial_{trial_index:02d}.aborted.jsonl")
            log.info("session %s: client left during trial %d",
                     self.session_id, trial_index)
            return True
        if recorded:
            write_log(trial_log, self.dir / f"trial_{trial_index:02d}.jsonl")
        return False

    async def _await_questionnaire(self, trial_index: int, recorded: bool) -> None:
        try:
            q1, q2 = await asyncio.wait_for(
                self.questionnaires.get(), timeout=self.plan.questionnaire_timeout
            )
        except asyncio.TimeoutError:
            return
        if recorded:
            path = self.dir / "questionnaires.jsonl"
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(
                    {"trial_index": trial_index, "q1": q1, "q2": q2}) + "\n")


async def handle_connection(ws, plan: SessionPlan, out_dir: Path) -> None:
    session = _Session(ws, plan, out_dir)
    reader = asyncio.create_task(session.read_client())
    try:
        await session.run()
    except websockets.exceptions.ConnectionClosed:
        log.info("session %s: connection closed", session.session_id)
    finally:
        reader.cancel()
        try:
            await reader
        except asyncio.CancelledError:
            pass
        await ws.close()


async def serve(host: str, port: int, plan: SessionPlan,
                out_dir: str | Path, *, ready: asyncio.Event | None = None):
    """Accept sessions until cancelled. Each connection gets an isolated
    session directory under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    async def handler(ws):
        await handle_connection(ws, plan, out)

    async with websockets.serve(handler, host, port) as server:
        bound = server.sockets[0].getsockname()[1]
        log.info("serving on ws://%s:%d", host, bound)
        # handshake line for clients that spawned us with an ephemeral port
        print(f"listening on ws://{host}:{bound}", flush=True)
        if ready is not None:
            ready.set()
        await asyncio.Future()
