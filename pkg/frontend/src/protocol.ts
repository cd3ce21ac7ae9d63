// Wire format shared with the relay server. Field order inside each
// message kind is part of the contract, so encoders build object
// literals in that order and nothing else.

export type Role = "participant" | "host";

export interface JoinMsg {
  kind: "join";
  session: string;
  role: Role;
}

export interface WelcomeMsg {
  kind: "welcome";
  id: string;
  members: string[];
  tick_ms: number;
}

export interface SignalMsg {
  kind: "signal";
  from: string;
  to: string;
  payload: string;
}

export interface GazeMsg {
  kind: "gaze";
  seq: number;
  source: string;
  target: string | null;
  t: number;
}

export interface AudioMsg {
  kind: "audio";
  seq: number;
  source: string;
  level: number;
}

export interface StateEdge {
  source: string;
  target: string | null;
}

export interface StateAudio {
  id: string;
  level: number;
}

export interface StateMsg {
  kind: "state";
  tick: number;
  edges: StateEdge[];
  audio: StateAudio[];
}

export interface ObserveMsg {
  kind: "observe";
  target: string | null;
}

export interface SnapshotMsg {
  kind: "snapshot";
  viewer: string;
  tick: number;
  frame: FrameDict;
}

export interface PeerJoinedMsg {
  kind: "peer-joined";
  id: string;
}

export interface PeerLeftMsg {
  kind: "peer-left";
  id: string;
}

export interface ErrorMsg {
  kind: "error";
  code: string;
  message: string;
}

export type Msg =
  | JoinMsg
  | WelcomeMsg
  | SignalMsg
  | GazeMsg
  | AudioMsg
  | StateMsg
  | ObserveMsg
  | SnapshotMsg
  | PeerJoinedMsg
  | PeerLeftMsg
  | ErrorMsg;

// Render directives as they arrive in snapshot frames and replay files.
export interface FrameArrow {
  source: string;
  target: string;
  opacity: number;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface FrameGlow {
  owner: string;
  intensity: number;
}

export interface FramePose {
  owner: string;
  yaw_deg: number;
  shake_px: number;
}

export interface FrameMic {
  owner: string;
  on: boolean;
}

export interface FrameTile {
  owner: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface FrameDict {
  viewer: string;
  t: number;
  mode: string;
  arrows: FrameArrow[];
  glows: FrameGlow[];
  poses: FramePose[];
  mic_icons: FrameMic[];
  tiles: {
    viewer: string;
    spacing: number;
    screen_w: number;
    screen_h: number;
    tiles: FrameTile[];
  };
}

export class ProtocolError extends Error {}

export function makeJoin(session: string, role: Role = "participant"): JoinMsg {
  return { kind: "join", session, role };
}

export function makeGaze(
  seq: number,
  source: string,
  target: string | null,
  t: number,
): GazeMsg {
  return { kind: "gaze", seq, source, target, t };
}

export function makeAudio(seq: number, source: string, level: number): AudioMsg {
  return { kind: "audio", seq, source, level };
}

export function makeObserve(target: string | null): ObserveMsg {
  return { kind: "observe", target };
}

export function makeSignal(from: string, to: string, payload: string): SignalMsg {
  return { kind: "signal", from, to, payload };
}

export function encode(msg: Msg): string {
  // literal key order above matches the wire contract; stringify keeps it
  return JSON.stringify(msg);
}

function need(obj: Record<string, unknown>, field: string, type: string): unknown {
  const value = obj[field];
  if (value === undefined) {
    throw new ProtocolError(`missing field ${field}`);
  }
  const actual = Array.isArray(value) ? "array" : typeof value;
  if (actual !== type) {
    throw new ProtocolError(`field ${field} must be ${type}, got ${actual}`);
  }
  return value;
}

function idOrNull(obj: Record<string, unknown>, field: string): string | null {
  const value = obj[field];
  if (value === undefined) {
    throw new ProtocolError(`missing field ${field}`);
  }
  if (value !== null && typeof value !== "string") {
    throw new ProtocolError(`field ${field} must be a string or null`);
  }
  return value as string | null;
}

export function decode(wire: string): Msg {
  let raw: unknown;
  try {
    raw = JSON.parse(wire);
  } catch {
    throw new ProtocolError("not valid JSON");
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  const kind = need(obj, "kind", "string") as string;
  switch (kind) {
    case "join": {
      const role = need(obj, "role", "string") as string;
      if (role !== "participant" && role !== "host") {
        throw new ProtocolError(`unknown role ${role}`);
      }
      return {
        kind,
        session: need(obj, "session", "string") as string,
        role,
      };
    }
    case "welcome":
      return {
        kind,
        id: need(obj, "id", "string") as string,
        members: need(obj, "members", "array") as string[],
        tick_ms: need(obj, "tick_ms", "number") as number,
      };
    case "signal":
      return {
        kind,
        from: need(obj, "from", "string") as string,
        to: need(obj, "to", "string") as string,
        payload: need(obj, "payload", "string") as string,
      };
    case "gaze":
      return {
        kind,
        seq: need(obj, "seq", "number") as number,
        source: need(obj, "source", "string") as string,
        target: idOrNull(obj, "target"),
        t: need(obj, "t", "number") as number,
      };
    case "audio": {
      const level = need(obj, "level", "number") as number;
      if (level < 0 || level > 1) {
        throw new ProtocolError(`audio level ${level} outside [0, 1]`);
      }
      return {
        kind,
        seq: need(obj, "seq", "number") as number,
        source: need(obj, "source", "string") as string,
        level,
      };
    }
    case "state":
      return {
        kind,
        tick: need(obj, "tick", "number") as number,
        edges: need(obj, "edges", "array") as StateEdge[],
        audio: need(obj, "audio", "array") as StateAudio[],
      };
    case "observe":
      return { kind, target: idOrNull(obj, "target") };
    case "snapshot":
      return {
        kind,
        viewer: need(obj, "viewer", "string") as string,
        tick: need(obj, "tick", "number") as number,
        frame: need(obj, "frame", "object") as FrameDict,
      };
    case "peer-joined":
      return { kind, id: need(obj, "id", "string") as string };
    case "peer-left":
      return { kind, id: need(obj, "id", "string") as string };
    case "error":
      return {
        kind,
        code: need(obj, "code", "string") as string,
        message: need(obj, "message", "string") as string,
      };
    default:
      throw new ProtocolError(`unknown message kind ${kind}`);
  }
}
