import { describe, expect, it } from "vitest";
import { KeyboardInput } from "../src/input.js";

function pollEveryFrame(input: KeyboardInput, fromMs: number, toMs: number,
                        stepMs = 16): string[] {
  const emitted: string[] = [];
  for (let t = fromMs; t < toMs; t += stepMs) {
    const action = input.poll(t);
    if (action !== null) emitted.push(action);
  }
  return emitted;
}

describe("keyboard capture cadence", () => {
  it("holding ArrowRight for one second emits exactly five turn_right", () => {
    const input = new KeyboardInput(200);
    input.keyDown("ArrowRight");
    const emitted = pollEveryFrame(input, 0, 1000);
    expect(emitted).toEqual([
      "turn_right", "turn_right", "turn_right", "turn_right", "turn_right",
    ]);
  });

  it("no key held emits nothing", () => {
    const input = new KeyboardInput(200);
    expect(pollEveryFrame(input, 0, 1000)).toEqual([]);
  });

  it("release stops emission", () => {
    const input = new KeyboardInput(200);
    input.keyDown("ArrowUp");
    const first = input.poll(0);
    expect(first).toBe("accelerate");
    input.keyUp("ArrowUp");
    expect(pollEveryFrame(input, 16, 1000)).toEqual([]);
  });

  it("most recent keydown wins while both are held", () => {
    const input = new KeyboardInput(200);
    input.keyDown("ArrowUp");
    input.keyDown("ArrowRight");
    expect(input.poll(0)).toBe("turn_right");
    input.keyUp("ArrowRight"); // falls back to the still-held key
    expect(input.poll(200)).toBe("accelerate");
  });

  it("unknown keys are ignored", () => {
    const input = new KeyboardInput(200);
    input.keyDown("w");
    expect(input.poll(0)).toBeNull();
  });

  it("never exceeds one message per period even with dense polling", () => {
    const input = new KeyboardInput(200);
    input.keyDown("ArrowDown");
    const emitted = pollEveryFrame(input, 0, 2000, 1);
    expect(emitted.length).toBe(10);
  });

  it("mapping matches the wire names", () => {
    const input = new KeyboardInput(200);
    const cases: Array<[string, string]> = [
      ["ArrowUp", "accelerate"],
      ["ArrowDown", "decelerate"],
      ["ArrowLeft", "turn_left"],
      ["ArrowRight", "turn_right"],
    ];
    let t = 0;
    for (const [key, expected] of cases) {
      input.keyDown(key);
      expect(input.poll(t)).toBe(expected);
      input.keyUp(key);
      t += 200;
    }
  });
});
