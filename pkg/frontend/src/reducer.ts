/** Pure view state: a fold over the envelope log plus connection events.
 *
 * Replaying a recorded log through `reduce` reproduces the identical view,
 * which is what the replay tests rely on.
 */

import type {
  AgentResponsePayload,
  DeviceEventPayload,
  SessionEnvelope,
  Segment,
} from "./envelope.js";

export type ConnectionStatus = "idle" | "connecting" | "open" | "disconnected";

export interface Bubble {
  seq: number;
  speaker: "user" | "agent" | "device" | "system";
  text: string;
  cues: string[];
  rateHint: "normal" | "slow";
  action?: string;
}

export interface DevicePanel {
  faults: string[];
  jobs: Map<string, { status: string; detail: string }>;
  trays: Record<string, number> | null;
}

export interface ClientView {
  connection: ConnectionStatus;
  banner: string | null;
  transcript: Bubble[];
  lastSeq: number;
  seqGap: boolean;
  sessionOpen: boolean;
  /** composer usable only while the session is open and the agent expects input */
  composerEnabled: boolean;
  device: DevicePanel;
}

export function initialView(): ClientView {
  return {
    connection: "idle",
    banner: null,
    transcript: [],
    lastSeq: 0,
    seqGap: false,
    sessionOpen: false,
    composerEnabled: false,
    device: { faults: [], jobs: new Map(), trays: null },
  };
}

export type ViewEvent =
  | { kind: "connect_requested" }
  | { kind: "connected" }
  | { kind: "disconnected"; reason?: string }
  | { kind: "envelope"; envelope: SessionEnvelope };

export function reduce(view: ClientView, event: ViewEvent): ClientView {
  switch (event.kind) {
    case "connect_requested":
      return { ...view, connection: "connecting", banner: null };
    case "connected":
      return { ...view, connection: "open", banner: null };
    case "disconnected":
      return {
        ...view,
        connection: "disconnected",
        sessionOpen: false,
        composerEnabled: false,
        banner: event.reason ?? "Connection lost. Press start to reconnect.",
      };
    case "envelope":
      return applyEnvelope(view, event.envelope);
  }
}

function applyEnvelope(view: ClientView, env: SessionEnvelope): ClientView {
  const next: ClientView = {
    ...view,
    transcript: view.transcript.slice(),
    device: {
      faults: view.device.faults.slice(),
      jobs: new Map(view.device.jobs),
      trays: view.device.trays,
    },
  };
  if (view.lastSeq > 0 && env.seq !== view.lastSeq + 1) {
    next.seqGap = true;
  }
  next.lastSeq = env.seq;

  switch (env.type) {
    case "session.started":
      next.sessionOpen = true;
      next.composerEnabled = false; // wait for the first agent prompt
      break;
    case "session.ended":
      next.sessionOpen = false;
      next.composerEnabled = false;
      next.transcript.push(bubble(env.seq, "system", "Session ended.", [], env));
      break;
    case "session.error":
      next.transcript.push(
        bubble(env.seq, "system", String(env.payload["error"] ?? "error"), [], env),
      );
      break;
    case "user.utterance":
      next.transcript.push(
        bubble(env.seq, "user", String(env.payload["text"] ?? ""), [], env),
      );
      next.composerEnabled = false; // waiting for the agent
      break;
    case "agent.response": {
      const p = env.payload as unknown as AgentResponsePayload;
      const segments: Segment[] = p.segments ?? [];
      next.transcript.push({
        seq: env.seq,
        speaker: "agent",
        text: segments.map((s) => s.text).join(" "),
        cues: segments.map((s) => s.cue).filter((c): c is string => !!c),
        rateHint: env.rate_hint,
        action: p.action,
      });
      next.composerEnabled = next.sessionOpen;
      break;
    }
    case "device.event": {
      const p = env.payload as unknown as DeviceEventPayload;
      applyDeviceEvent(next.device, p);
      next.transcript.push(bubble(env.seq, "device", p.detail ?? "", [], env));
      break;
    }
  }
  return next;
}

function applyDeviceEvent(panel: DevicePanel, p: DeviceEventPayload): void {
  switch (p.kind) {
    case "FaultRaised":
      if (p.fault && !panel.faults.includes(p.fault)) panel.faults.push(p.fault);
      break;
    case "FaultCleared":
      if (p.fault) panel.faults = panel.faults.filter((f) => f !== p.fault);
      break;
    case "JobStarted":
      if (p.job_id) panel.jobs.set(p.job_id, { status: "running", detail: p.detail });
      break;
    case "JobProgress":
      if (p.job_id) panel.jobs.set(p.job_id, { status: "running", detail: p.detail });
      break;
    case "JobCompleted":
      if (p.job_id) panel.jobs.set(p.job_id, { status: "completed", detail: p.detail });
      break;
    case "JobFailed":
      if (p.job_id) panel.jobs.set(p.job_id, { status: "failed", detail: p.detail });
      break;
  }
  if (p.snapshot?.trays) panel.trays = p.snapshot.trays;
}

function bubble(
  seq: number,
  speaker: Bubble["speaker"],
  text: string,
  cues: string[],
  env: SessionEnvelope,
): Bubble {
  return { seq, speaker, text, cues, rateHint: env.rate_hint };
}

/** Replay a whole recorded log into a fresh view. */
export function replay(envelopes: SessionEnvelope[]): ClientView {
  let view = reduce(initialView(), { kind: "connect_requested" });
  view = reduce(view, { kind: "connected" });
  for (const env of envelopes) {
    view = reduce(view, { kind: "envelope", envelope: env });
  }
  return view;
}
