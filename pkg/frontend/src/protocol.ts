/** Wire protocol types and validation, mirroring the server's schema.
 *
 * The client validates in both directions: every incoming server frame and
 * every outgoing frame of its own, so a drifting peer (or a bug here) fails
 * loudly instead of rendering garbage.
 */

export const PROTOCOL_VERSION = "1";

export const ACTION_NAMES = [
  "accelerate",
  "decelerate",
  "stay",
  "turn_left",
  "turn_right",
] as const;

export type ActionName = (typeof ACTION_NAMES)[number];

export interface HelloMsg {
  kind: "hello";
  protocol_version: string;
  session_id: string;
}

export interface TrialStartMsg {
  kind: "trial_start";
  trial_index: number;
  road_length: number;
  human_start_lane: 0 | 1;
  human_goal_lane: 0 | 1;
  av_indicator_lane: 0 | 1;
  colors: { human: string; robot: string };
}

export interface CarFrame {
  side: "human" | "robot";
  x: number;
  y: number;
  v: number;
}

export interface TickMsg {
  kind: "tick";
  tick: number;
  time_s: number;
  cars: CarFrame[];
  distance_remaining_m: number;
  av_indicator_lane: 0 | 1;
}

export interface TrialEndMsg {
  kind: "trial_end";
  outcome: {
    merged_human: boolean;
    merged_robot: boolean;
    merge_time_human: number | null;
    merge_time_robot: number | null;
    collision: boolean;
    total_r_H: number;
    total_r_R: number;
    ticks: number;
  };
}

export interface ByeMsg {
  kind: "bye";
}

export interface ErrorMsg {
  kind: "error";
  reason: string;
}

export type ServerMsg =
  | HelloMsg
  | TrialStartMsg
  | TickMsg
  | TrialEndMsg
  | ByeMsg
  | ErrorMsg;

export interface ActionMsg {
  kind: "action";
  tick_hint: number | null;
  action: ActionName;
}

export interface QuestionnaireMsg {
  kind: "questionnaire";
  q1: -1 | 0 | 1;
  q2: -1 | 0 | 1;
}

export type ClientMsg = ActionMsg | QuestionnaireMsg;

export class ProtocolError extends Error {}

function fail(reason: string): never {
  throw new ProtocolError(reason);
}

function isObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function expectNumber(obj: Record<string, unknown>, key: string, what: string): number {
  const value = obj[key];
  if (typeof value !== "number" || Number.isNaN(value)) {
    fail(`${what}.${key} must be a number`);
  }
  return value;
}

function expectLane(obj: Record<string, unknown>, key: string, what: string): 0 | 1 {
  const value = obj[key];
  if (value !== 0 && value !== 1) fail(`${what}.${key} must be 0 or 1`);
  return value;
}

function expectString(obj: Record<string, unknown>, key: string, what: string): string {
  const value = obj[key];
  if (typeof value !== "string") fail(`${what}.${key} must be a string`);
  return value;
}

export function validateServerMessage(raw: unknown): ServerMsg {
  if (!isObject(raw)) fail("server frame is not an object");
  const kind = raw["kind"];
  switch (kind) {
    case "hello": {
      if (expectString(raw, "protocol_version", "hello") !== PROTOCOL_VERSION) {
        fail("unsupported protocol version");
      }
      expectString(raw, "session_id", "hello");
      return raw as unknown as HelloMsg;
    }
    case "trial_start": {
      const index = expectNumber(raw, "trial_index", "trial_start");
      if (!Number.isInteger(index) || index < 0) fail("trial_start.trial_index must be a non-negative integer");
      if (expectNumber(raw, "road_length", "trial_start") <= 0) fail("trial_start.road_length must be positive");
      expectLane(raw, "human_start_lane", "trial_start");
      expectLane(raw, "human_goal_lane", "trial_start");
      expectLane(raw, "av_indicator_lane", "trial_start");
      const colors = raw["colors"];
      if (!isObject(colors)) fail("trial_start.colors must be an object");
      expectString(colors, "human", "trial_start.colors");
      expectString(colors, "robot", "trial_start.colors");
      return raw as unknown as TrialStartMsg;
    }
    case "tick": {
      const tick = expectNumber(raw, "tick", "tick");
      if (!Number.isInteger(tick) || tick < 0) fail("tick.tick must be a non-negative integer");
      expectNumber(raw, "time_s", "tick");
      expectNumber(raw, "distance_remaining_m", "tick");
      expectLane(raw, "av_indicator_lane", "tick");
      const cars = raw["cars"];
      if (!Array.isArray(cars)) fail("tick.cars must be an array");
      const sides = new Set<string>();
      for (const car of cars) {
        if (!isObject(car)) fail("tick.cars entries must be objects");
        const side = car["side"];
        if (side !== "human" && side !== "robot") fail("tick car side must be human or robot");
        sides.add(side);
        expectNumber(car, "x", `tick.car[${side}]`);
        expectNumber(car, "y", `tick.car[${side}]`);
        expectNumber(car, "v", `tick.car[${side}]`);
      }
      if (sides.size !== 2 || cars.length !== 2) fail("tick.cars must hold exactly one car per side");
      return raw as unknown as TickMsg;
    }
    case "trial_end": {
      const outcome = raw["outcome"];
      if (!isObject(outcome)) fail("trial_end.outcome must be an object");
      for (const key of [
        "merged_human", "merged_robot", "merge_time_human", "merge_time_robot",
        "collision", "total_r_H", "total_r_R", "ticks",
      ]) {
        if (!(key in outcome)) fail(`trial_end.outcome is missing ${key}`);
      }
      return raw as unknown as TrialEndMsg;
    }
    case "bye":
      return raw as unknown as ByeMsg;
    case "error": {
      expectString(raw, "reason", "error");
      return raw as unknown as ErrorMsg;
    }
    default:
      fail(`unknown server message kind: ${String(kind)}`);
  }
}

export function validateClientMessage(raw: unknown): ClientMsg {
  if (!isObject(raw)) fail("client frame is not an object");
  const kind = raw["kind"];
  if (kind === "action") {
    const action = raw["action"];
    if (typeof action !== "string" || !(ACTION_NAMES as readonly string[]).includes(action)) {
      fail(`unknown action name: ${String(action)}`);
    }
    const hint = raw["tick_hint"];
    if (hint !== null && hint !== undefined && !Number.isInteger(hint)) {
      fail("action.tick_hint must be an integer or null");
    }
    return raw as unknown as ActionMsg;
  }
  if (kind === "questionnaire") {
    for (const key of ["q1", "q2"]) {
      const value = raw[key];
      if (value !== -1 && value !== 0 && value !== 1) {
        fail(`questionnaire.${key} must be -1, 0, or 1`);
      }
    }
    return raw as unknown as QuestionnaireMsg;
  }
  fail(`unknown client message kind: ${String(kind)}`);
}

export function actionMessage(action: ActionName, tickHint: number | null): ActionMsg {
  return validateClientMessage({
    kind: "action",
    tick_hint: tickHint,
    action,
  }) as ActionMsg;
}

export function questionnaireMessage(q1: -1 | 0 | 1, q2: -1 | 0 | 1): QuestionnaireMsg {
  return validateClientMessage({ kind: "questionnaire", q1, q2 }) as QuestionnaireMsg;
}
