import { describe, expect, it } from "vitest";
import {
  QUESTIONNAIRE,
  encodeChoice,
  runQuestionnaire,
  type Scale,
} from "../src/questionnaire.js";

describe("questionnaire flow", () => {
  it("encodes the three-point scale as -1/0/1", () => {
    expect(encodeChoice(0)).toBe(-1);
    expect(encodeChoice(1)).toBe(0);
    expect(encodeChoice(2)).toBe(1);
    expect(() => encodeChoice(3)).toThrow();
  });

  it("uses the study wording", () => {
    expect(QUESTIONNAIRE.q1.options).toEqual(["No", "Don't Know", "Yes"]);
    expect(QUESTIONNAIRE.q2.options).toEqual(["No", "Safe Enough", "Yes"]);
  });

  it("yes/yes sends {1, 1}", async () => {
    const sent: Array<[Scale, Scale]> = [];
    const done = await runQuestionnaire(
      async () => [2, 2],
      (q1, q2) => sent.push([q1, q2]),
    );
    expect(done).toBe(true);
    expect(sent).toEqual([[1, 1]]);
  });

  it("middle answers send {0, 0}", async () => {
    const sent: Array<[Scale, Scale]> = [];
    await runQuestionnaire(async () => [1, 1], (q1, q2) => sent.push([q1, q2]));
    expect(sent).toEqual([[0, 0]]);
  });

  it("skip sends nothing", async () => {
    const sent: Array<[Scale, Scale]> = [];
    const done = await runQuestionnaire(async () => null,
                                        (q1, q2) => sent.push([q1, q2]));
    expect(done).toBe(false);
    expect(sent).toEqual([]);
  });
});
