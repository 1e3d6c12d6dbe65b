/** Wire types for the session envelope protocol (newline JSON / WebSocket). */

export type EnvelopeType =
  | "session.started"
  | "session.ended"
  | "session.error"
  | "user.utterance"
  | "agent.response"
  | "device.event";

export interface Segment {
  text: string;
  cue?: string;
}

export interface AgentResponsePayload {
  action: string;
  action_payload: Record<string, unknown>;
  segments: Segment[];
  expects: string | null;
  continuation: boolean;
}

export interface DeviceEventPayload {
  kind: string;
  detail: string;
  job_id?: string;
  fault?: string;
  snapshot?: DeviceSnapshot;
}

export interface DeviceSnapshot {
  trays?: Record<string, number>;
  faults?: string[];
  jobs?: Array<{ id: string; function: string; status: string }>;
  feeder_pages?: number;
}

export interface SessionEnvelope {
  type: EnvelopeType;
  session_id: string;
  seq: number;
  payload: Record<string, unknown>;
  rate_hint: "normal" | "slow";
}

export function parseEnvelope(line: string): SessionEnvelope {
  const raw = JSON.parse(line) as Partial<SessionEnvelope>;
  if (
    typeof raw.type !== "string" ||
    typeof raw.seq !== "number" ||
    typeof raw.payload !== "object" ||
    raw.payload === null
  ) {
    throw new Error(`malformed envelope: ${line.slice(0, 120)}`);
  }
  return {
    type: raw.type as EnvelopeType,
    session_id: String(raw.session_id ?? ""),
    seq: raw.seq,
    payload: raw.payload as Record<string, unknown>,
    rate_hint: raw.rate_hint === "slow" ? "slow" : "normal",
  };
}
