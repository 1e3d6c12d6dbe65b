import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { SessionClient, type SessionSocket } from "../src/client.js";

const logLines: string[] = (
  JSON.parse(
    readFileSync(new URL("./fixtures/scenario1.log.json", import.meta.url), "utf-8"),
  ) as unknown[]
).map((e) => JSON.stringify(e));

/** Scripted fixture server: replays the recorded protocol, tracks sends. */
class FixtureSocket implements SessionSocket {
  sent: string[] = [];
  closed = false;
  onmessage: ((event: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  open(): void {
    this.onopen?.();
  }
  deliver(lines: string[]): void {
    for (const line of lines) this.onmessage?.({ data: line });
  }
  dropConnection(): void {
    this.onclose?.();
  }
  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.closed = true;
    this.onclose?.();
  }
}

function makeClient() {
  const sockets: FixtureSocket[] = [];
  const client = new SessionClient("fixture://session", () => {
    const socket = new FixtureSocket();
    sockets.push(socket);
    return socket;
  });
  return { client, sockets };
}

describe("start button", () => {
  it("is idempotent: repeated presses open a single connection", () => {
    const { client, sockets } = makeClient();
    client.start();
    client.start();
    client.start();
    expect(sockets.length).toBe(1);
    sockets[0].open();
    client.start(); // pressing while open is also a no-op
    expect(sockets.length).toBe(1);
    expect(client.view.connection).toBe("open");
  });

  it("re-enables after a failed connection and then reconnects", () => {
    const { client, sockets } = makeClient();
    client.start();
    sockets[0].onerror?.();
    expect(client.view.connection).toBe("disconnected");
    client.start();
    expect(sockets.length).toBe(2);
  });
});

describe("live conversation against the fixture server", () => {
  it("renders the recorded envelopes and lets the user speak", () => {
    const { client, sockets } = makeClient();
    client.start();
    const socket = sockets[0];
    socket.open();
    socket.deliver(logLines.slice(0, 2)); // session.started + greeting
    expect(client.view.sessionOpen).toBe(true);
    expect(client.view.transcript[0].speaker).toBe("agent");
    expect(client.view.composerEnabled).toBe(true);

    expect(client.say("   ")).toBe(false); // empty input guard
    expect(client.say("three copies please")).toBe(true);
    const sent = JSON.parse(socket.sent[0]);
    expect(sent).toEqual({
      type: "user.utterance",
      payload: { text: "three copies please" },
    });
  });

  it("shows a disconnect banner and keeps the transcript", () => {
    const { client, sockets } = makeClient();
    client.start();
    const socket = sockets[0];
    socket.open();
    socket.deliver(logLines);
    const bubbles = client.view.transcript.length;
    expect(bubbles).toBeGreaterThan(0);

    socket.dropConnection();
    expect(client.view.connection).toBe("disconnected");
    expect(client.view.banner).toMatch(/connection lost/i);
    expect(client.view.composerEnabled).toBe(false);
    expect(client.view.transcript.length).toBe(bubbles); // preserved
    expect(client.say("hello?")).toBe(false); // nothing sent while down
    expect(socket.sent.length).toBe(0);
  });

  it("sends device commands from the demo panel", () => {
    const { client, sockets } = makeClient();
    client.start();
    sockets[0].open();
    expect(client.deviceCommand("inject_fault", { code: "paper_jam" })).toBe(true);
    expect(JSON.parse(sockets[0].sent[0])).toEqual({
      type: "device.command",
      payload: { op: "inject_fault", code: "paper_jam" },
    });
  });
});
