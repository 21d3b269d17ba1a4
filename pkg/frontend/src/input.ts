/** Keyboard capture with a fixed emission cadence.
 *
 * Arrow keys map to the four motion actions; releasing everything sends
 * nothing (the server treats silence as `stay`). While a key is held, the
 * scheduler emits its action once per tick period, and when several keys are
 * held the most recent keydown wins.
 */
import type { ActionName } from "./protocol.js";

export const KEY_BINDINGS: Record<string, ActionName> = {
  ArrowUp: "accelerate",
  ArrowDown: "decelerate",
  ArrowLeft: "turn_left",
  ArrowRight: "turn_right",
};

export class KeyboardInput {
  private held: string[] = [];
  private lastEmitMs: number | null = null;
  readonly periodMs: number;

  constructor(periodMs = 200) {
    this.periodMs = periodMs;
  }

  keyDown(key: string): void {
    if (!(key in KEY_BINDINGS)) return;
    this.held = this.held.filter((k) => k !== key);
    this.held.push(key);
  }

  keyUp(key: string): void {
    this.held = this.held.filter((k) => k !== key);
  }

  releaseAll(): void {
    this.held = [];
  }

  get activeAction(): ActionName | null {
    if (this.held.length === 0) return null;
    return KEY_BINDINGS[this.held[this.held.length - 1]];
  }

  /** Rate-limited sampler: returns the action to emit at nowMs, or null when
   * no key is held or a message was already emitted this period. Call as
   * often as you like (e.g. every animation frame). */
  poll(nowMs: number): ActionName | null {
    const action = this.activeAction;
    if (action === null) return null;
    if (this.lastEmitMs !== null && nowMs - this.lastEmitMs < this.periodMs) {
      return null;
    }
    this.lastEmitMs = nowMs;
    return action;
  }

  /** Forget the cadence anchor (e.g. between trials). */
  resetCadence(): void {
    this.lastEmitMs = null;
  }
}
