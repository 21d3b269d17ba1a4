/** Post-trial questionnaire flow.
 *
 * Two three-point items, encoded -1/0/1 on the wire:
 *   Q1 "Was the other car considerate of your goals?"  no / don't know / yes
 *   Q2 "Did the other car drive safely?"               no / safe enough / yes
 * The presentation layer is injected: it resolves with both answers, or null
 * when the participant skips (then nothing is sent and the server times out
 * into the next trial).
 */

export type Scale = -1 | 0 | 1;

export interface QuestionnaireCopy {
  q1: { prompt: string; options: [string, string, string] };
  q2: { prompt: string; options: [string, string, string] };
}

export const QUESTIONNAIRE: QuestionnaireCopy = {
  q1: {
    prompt: "Was the other car considerate of your goals?",
    options: ["No", "Don't Know", "Yes"],
  },
  q2: {
    prompt: "Did the other car drive safely?",
    options: ["No", "Safe Enough", "Yes"],
  },
};

/** Map an option index (0, 1, 2) to the wire encoding (-1, 0, 1). */
export function encodeChoice(optionIndex: number): Scale {
  if (optionIndex !== 0 && optionIndex !== 1 && optionIndex !== 2) {
    throw new Error(`option index out of range: ${optionIndex}`);
  }
  return (optionIndex - 1) as Scale;
}

export async function runQuestionnaire(
  present: (copy: QuestionnaireCopy) => Promise<[number, number] | null>,
  send: (q1: Scale, q2: Scale) => void,
): Promise<boolean> {
  const picked = await present(QUESTIONNAIRE);
  if (picked === null) return false; // skipped: server timeout advances
  send(encodeChoice(picked[0]), encodeChoice(picked[1]));
  return true;
}
