/** Session client: owns one socket, feeds every inbound line through the
 * reducer, and exposes an idempotent start(). The socket implementation is
 * injected so tests can substitute a scripted fixture server.
 */

import { parseEnvelope } from "./envelope.js";
import { ClientView, ViewEvent, initialView, reduce } from "./reducer.js";

/** Minimal duplex-socket surface (a browser WebSocket satisfies it). */
export interface SessionSocket {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (endpoint: string) => SessionSocket;

export class SessionClient {
  view: ClientView = initialView();
  private socket: SessionSocket | null = null;
  private listeners: Array<(view: ClientView) => void> = [];

  constructor(
    private readonly endpoint: string,
    private readonly connectSocket: SocketFactory,
  ) {}

  subscribe(listener: (view: ClientView) => void): void {
    this.listeners.push(listener);
  }

  private dispatch(event: ViewEvent): void {
    this.view = reduce(this.view, event);
    for (const listener of this.listeners) listener(this.view);
  }

  /** Press of the big start button. Safe to press repeatedly: while a
   * connection is pending or open, extra presses do nothing. */
  start(): void {
    if (this.view.connection === "connecting" || this.view.connection === "open") {
      return;
    }
    this.dispatch({ kind: "connect_requested" });
    const socket = this.connectSocket(this.endpoint);
    this.socket = socket;
    socket.onopen = () => this.dispatch({ kind: "connected" });
    socket.onmessage = (event) => {
      for (const line of String(event.data).split("\n")) {
        if (!line.trim()) continue;
        this.dispatch({ kind: "envelope", envelope: parseEnvelope(line) });
      }
    };
    socket.onclose = () => this.dispatch({ kind: "disconnected" });
    socket.onerror = () =>
      this.dispatch({ kind: "disconnected", reason: "Could not reach the agent." });
  }

  /** Send one user utterance; empty input sends nothing. */
  say(text: string): boolean {
    const trimmed = text.trim();
    if (!trimmed || !this.socket || this.view.connection !== "open") return false;
    this.socket.send(
      JSON.stringify({ type: "user.utterance", payload: { text: trimmed } }) + "\n",
    );
    return true;
  }

  /** Demo-panel fault injection and other device operations. */
  deviceCommand(op: string, args: Record<string, unknown> = {}): boolean {
    if (!this.socket || this.view.connection !== "open") return false;
    this.socket.send(
      JSON.stringify({ type: "device.command", payload: { op, ...args } }) + "\n",
    );
    return true;
  }

  stop(): void {
    this.socket?.close();
  }
}
