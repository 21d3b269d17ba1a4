/** Client-side state: trial metadata, the last two ticks for interpolation,
 * and connection status. All world state is server-authoritative; the view
 * model never simulates, and interpolation never runs past the latest tick.
 */
import type { CarFrame, TickMsg, TrialEndMsg, TrialStartMsg } from "./protocol.js";

export type ConnectionStatus =
  | "connecting"
  | "waiting"
  | "running"
  | "trial_over"
  | "closed"
  | "lost";

export interface CarPose {
  x: number;
  y: number;
  v: number;
}

interface BufferedTick {
  msg: TickMsg;
  arrivedMs: number;
}

export class ViewModel {
  status: ConnectionStatus = "connecting";
  trial: TrialStartMsg | null = null;
  outcome: TrialEndMsg["outcome"] | null = null;
  lastError: string | null = null;
  tickPeriodMs: number;

  private prev: BufferedTick | null = null;
  private latest: BufferedTick | null = null;

  constructor(tickPeriodMs = 200) {
    this.tickPeriodMs = tickPeriodMs;
  }

  applyTrialStart(msg: TrialStartMsg): void {
    this.trial = msg;
    this.outcome = null;
    this.prev = null;
    this.latest = null;
    this.status = "waiting";
  }

  applyTick(msg: TickMsg, nowMs: number): void {
    this.prev = this.latest;
    this.latest = { msg, arrivedMs: nowMs };
    this.status = "running";
  }

  applyTrialEnd(msg: TrialEndMsg): void {
    this.outcome = msg.outcome;
    this.status = "trial_over";
  }

  get latestTick(): TickMsg | null {
    return this.latest ? this.latest.msg : null;
  }

  private carFrom(msg: TickMsg, side: "human" | "robot"): CarFrame {
    const car = msg.cars.find((c) => c.side === side);
    if (!car) throw new Error(`tick is missing the ${side} car`);
    return car;
  }

  /** Pose for rendering at wall time nowMs: linear interpolation from the
   * previous tick toward the latest one, clamped so the displayed state
   * never extrapolates beyond what the server sent. */
  carPose(side: "human" | "robot", nowMs: number): CarPose | null {
    if (!this.latest) return null;
    const target = this.carFrom(this.latest.msg, side);
    if (!this.prev) return { x: target.x, y: target.y, v: target.v };
    const from = this.carFrom(this.prev.msg, side);
    let t = (nowMs - this.latest.arrivedMs) / this.tickPeriodMs;
    if (t < 0) t = 0;
    if (t > 1) t = 1;
    return {
      x: from.x + (target.x - from.x) * t,
      y: from.y + (target.y - from.y) * t,
      v: target.v,
    };
  }

  distanceRemaining(): number | null {
    return this.latest ? this.latest.msg.distance_remaining_m : null;
  }
}
