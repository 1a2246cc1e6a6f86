// Wire messages exchanged with the simulation gateway over /ws.
// Server -> client: snapshot | event | ack | error.
// Client -> server: pause | resume | step | inject | waypoints, each with a
// requestId answered by exactly one ack or error.

export interface AreaView {
  name: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface WallView {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface EntityView {
  id: string;
  deviceClass: string;
  position: [number, number];
  attributes: Record<string, unknown>;
  online: boolean;
}

export interface AgentView {
  id: string;
  position: [number, number];
  properties: Record<string, string>;
  waypoints: [number, number][];
}

export interface EventView {
  seq: number;
  cause: number | null;
  tick: number;
  kind: string;
  producer: string;
  name: string;
  value: unknown;
  indices: Record<string, unknown>;
  steered?: boolean;
}

export interface SnapshotMessage {
  type: "snapshot";
  tick: number;
  paused: boolean;
  finished: boolean;
  environment: { width: number; height: number; areas: AreaView[]; walls?: WallView[] };
  entities: EntityView[];
  agents: AgentView[];
  events: EventView[];
}

export interface EventMessage {
  type: "event";
  event: EventView;
}

export interface AckMessage {
  type: "ack";
  requestId: number;
}

export interface ErrorMessage {
  type: "error";
  requestId?: number | null;
  message: string;
}

export type ServerMessage = SnapshotMessage | EventMessage | AckMessage | ErrorMessage;

export type ClientCommand =
  | { type: "pause" }
  | { type: "resume" }
  | { type: "step" }
  | { type: "inject"; deviceId: string; source: string; value: unknown }
  | { type: "waypoints"; agentId: string; points: [number, number][] };

export type ClientMessage = ClientCommand & { requestId: number };

export class MalformedMessage extends Error {}

function isFinitePair(p: unknown): p is [number, number] {
  return (
    Array.isArray(p) &&
    p.length === 2 &&
    typeof p[0] === "number" &&
    typeof p[1] === "number" &&
    Number.isFinite(p[0]) &&
    Number.isFinite(p[1])
  );
}

export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new MalformedMessage("frame is not JSON");
  }
  if (typeof raw !== "object" || raw === null || !("type" in raw)) {
    throw new MalformedMessage("frame has no type");
  }
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "ack":
      if (typeof msg.requestId !== "number") throw new MalformedMessage("ack without requestId");
      return msg as unknown as AckMessage;
    case "error":
      if (typeof msg.message !== "string") throw new MalformedMessage("error without message");
      return msg as unknown as ErrorMessage;
    case "event":
      if (typeof msg.event !== "object" || msg.event === null) {
        throw new MalformedMessage("event frame without event");
      }
      return msg as unknown as EventMessage;
    case "snapshot": {
      const env = msg.environment as Record<string, unknown> | undefined;
      if (
        typeof msg.tick !== "number" ||
        !env ||
        typeof env.width !== "number" ||
        typeof env.height !== "number" ||
        !Array.isArray(msg.entities) ||
        !Array.isArray(msg.agents) ||
        !Array.isArray(msg.events)
      ) {
        throw new MalformedMessage("snapshot frame is incomplete");
      }
      for (const e of msg.entities as Array<Record<string, unknown>>) {
        if (typeof e.id !== "string" || !isFinitePair(e.position)) {
          throw new MalformedMessage(`snapshot entity is malformed`);
        }
      }
      for (const a of msg.agents as Array<Record<string, unknown>>) {
        if (typeof a.id !== "string" || !isFinitePair(a.position)) {
          throw new MalformedMessage(`snapshot agent is malformed`);
        }
      }
      return msg as unknown as SnapshotMessage;
    }
    default:
      throw new MalformedMessage(`unknown server message type ${String(msg.type)}`);
  }
}

export function serializeCommand(cmd: ClientCommand, requestId: number): string {
  return JSON.stringify({ ...cmd, requestId });
}
