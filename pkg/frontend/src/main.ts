/** Browser bootstrap: connect to the session service, render at the display
 * rate, and flush keyboard input once per tick period.
 *
 * Configuration via query parameters: ?server=ws://host:port (defaults to
 * ws://<page host>:8700).
 */
import { SessionClient, wrapBrowserSocket } from "./client.js";
import { KeyboardInput } from "./input.js";
import { render } from "./render.js";
import { QUESTIONNAIRE, encodeChoice } from "./questionnaire.js";

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server")
    ?? `ws://${window.location.hostname || "127.0.0.1"}:8700`;
}

function presentQuestionnaire(overlay: HTMLElement): Promise<[number, number] | null> {
  return new Promise((resolve) => {
    overlay.innerHTML = "";
    overlay.style.display = "block";
    const picks: (number | null)[] = [null, null];
    const qs = [QUESTIONNAIRE.q1, QUESTIONNAIRE.q2];
    qs.forEach((q, qi) => {
      const row = document.createElement("div");
      const prompt = document.createElement("p");
      prompt.textContent = q.prompt;
      row.appendChild(prompt);
      q.options.forEach((label, oi) => {
        const btn = document.createElement("button");
        btn.textContent = label;
        btn.onclick = () => {
          picks[qi] = oi;
          row.querySelectorAll("button").forEach((b) => {
            (b as HTMLButtonElement).style.outline = "";
          });
          btn.style.outline = "2px solid #ffb300";
          if (picks[0] !== null && picks[1] !== null) submit.disabled = false;
        };
        row.appendChild(btn);
      });
      overlay.appendChild(row);
    });
    const submit = document.createElement("button");
    submit.textContent = "Submit";
    submit.disabled = true;
    submit.onclick = () => {
      overlay.style.display = "none";
      resolve([picks[0] as number, picks[1] as number]);
    };
    const skip = document.createElement("button");
    skip.textContent = "Skip";
    skip.onclick = () => {
      overlay.style.display = "none";
      resolve(null);
    };
    overlay.appendChild(submit);
    overlay.appendChild(skip);
  });
}

export function boot(): void {
  const canvas = document.getElementById("world") as HTMLCanvasElement;
  const overlay = document.getElementById("questionnaire") as HTMLElement;
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("2d canvas is not supported");

  const input = new KeyboardInput(200);
  window.addEventListener("keydown", (ev) => {
    if (ev.key.startsWith("Arrow")) ev.preventDefault();
    if (!ev.repeat) input.keyDown(ev.key);
  });
  window.addEventListener("keyup", (ev) => input.keyUp(ev.key));
  window.addEventListener("blur", () => input.releaseAll());

  const socket = new WebSocket(serverUrl());
  const client = new SessionClient(wrapBrowserSocket(socket), {
    onTrialEnd: () => {
      input.releaseAll();
      input.resetCadence();
      void presentQuestionnaire(overlay).then((picked) => {
        if (picked !== null) {
          client.sendQuestionnaire(encodeChoice(picked[0]), encodeChoice(picked[1]));
        }
      });
    },
  });

  const frame = (nowMs: number) => {
    if (client.view.status === "running") {
      const action = input.poll(nowMs);
      if (action !== null) client.sendAction(action);
    }
    render(client.view, ctx, { width: canvas.width, height: canvas.height },
           nowMs);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

boot();
