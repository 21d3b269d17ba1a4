/** Session client: socket wiring, message validation, and the view model.
 *
 * The socket is injected through a minimal interface so tests can drive the
 * client with the `ws` package (or a fake) instead of a browser WebSocket.
 */
import {
  actionMessage,
  questionnaireMessage,
  validateServerMessage,
  type ActionName,
  type ServerMsg,
} from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

export interface WireSocket {
  send(data: string): void;
  close(): void;
  onMessage(handler: (data: string) => void): void;
  onClose(handler: () => void): void;
}

export interface ClientEvents {
  onServerMessage?: (msg: ServerMsg) => void;
  onTrialEnd?: () => void;
  onBye?: () => void;
  onProtocolError?: (reason: string) => void;
}

export class SessionClient {
  readonly view: ViewModel;
  sessionId: string | null = null;
  private readonly socket: WireSocket;
  private readonly events: ClientEvents;
  private readonly now: () => number;

  constructor(socket: WireSocket, events: ClientEvents = {},
              opts: { tickPeriodMs?: number; now?: () => number } = {}) {
    this.socket = socket;
    this.events = events;
    this.now = opts.now ?? (() => Date.now());
    this.view = new ViewModel(opts.tickPeriodMs ?? 200);
    socket.onMessage((data) => this.handleFrame(data));
    socket.onClose(() => {
      if (this.view.status !== "closed") {
        this.view.status = "lost";
      }
    });
  }

  private handleFrame(data: string): void {
    let msg: ServerMsg;
    try {
      msg = validateServerMessage(JSON.parse(data));
    } catch (err) {
      this.view.lastError = String(err);
      this.events.onProtocolError?.(String(err));
      return;
    }
    switch (msg.kind) {
      case "hello":
        this.sessionId = msg.session_id;
        this.view.status = "waiting";
        break;
      case "trial_start":
        this.view.applyTrialStart(msg);
        break;
      case "tick":
        this.view.applyTick(msg, this.now());
        break;
      case "trial_end":
        this.view.applyTrialEnd(msg);
        this.events.onTrialEnd?.();
        break;
      case "bye":
        this.view.status = "closed";
        this.events.onBye?.();
        this.socket.close();
        break;
      case "error":
        this.view.lastError = msg.reason;
        this.events.onProtocolError?.(msg.reason);
        break;
    }
    this.events.onServerMessage?.(msg);
  }

  /** Validate and send one driving action (tick_hint = latest seen tick). */
  sendAction(action: ActionName): void {
    const hint = this.view.latestTick ? this.view.latestTick.tick : null;
    this.socket.send(JSON.stringify(actionMessage(action, hint)));
  }

  sendQuestionnaire(q1: -1 | 0 | 1, q2: -1 | 0 | 1): void {
    this.socket.send(JSON.stringify(questionnaireMessage(q1, q2)));
  }
}

/** Adapt a browser WebSocket to the WireSocket interface. */
export function wrapBrowserSocket(ws: WebSocket): WireSocket {
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onMessage: (handler) =>
      ws.addEventListener("message", (ev) => handler(String(ev.data))),
    onClose: (handler) => ws.addEventListener("close", () => handler()),
  };
}
