/**
 * Wire protocol frames, byte-compatible with the simulator's operator
 * service. Everything the console knows arrives through these frames; in
 * particular there is no frame that carries scene geometry.
 */

export type AgentId = "humanoid" | "quadruped";

export interface Entity {
  name: string;
  bearing: number;   // radians relative to heading
  distance: number;  // meters
  occluded: boolean;
}

export interface ObstacleArc {
  start_bearing: number;
  end_bearing: number;
  min_distance: number;
}

export interface ObservationPayload {
  pose: { x: number; y: number; heading: number };
  fov_half_angle: number;
  max_range: number;
  entities: Entity[];
  obstacle_arcs: ObstacleArc[];
}

export interface HelloFrame {
  type: "hello";
  role: string;
  scene: string;
  target: string;
  limits: { d_max: number; r_max: number; d_achieve: number };
  turn: number;
}

export interface ObservationFrame {
  type: "observation";
  agent: AgentId;
  turn: number;
  time: number;
  phase: string;
  observation: ObservationPayload;
}

export interface AckFrame {
  type: "ack";
  command: string;
  applied?: number;
  requested?: number;
  turn: number;
}

export interface RejectedFrame {
  type: "rejected";
  command: string;
  requested?: number;
  clamped?: number;
  message: string;
}

export interface ReportFrame {
  type: "report";
  outcome: string;
  reason: string;
}

export interface ResultFrame {
  type: "result";
  outcome: string;
  detail: string;
  time: number;
  turns: number;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame =
  | HelloFrame
  | ObservationFrame
  | AckFrame
  | RejectedFrame
  | ReportFrame
  | ResultFrame
  | ErrorFrame;

export type Command =
  | { cmd: "rotate"; value: number }
  | { cmd: "move"; value: number }
  | { cmd: "scan" }
  | { cmd: "assign_waypoint"; x: number; y: number }
  | { cmd: "end" };

const FRAME_TYPES = new Set([
  "hello", "observation", "ack", "rejected", "report", "result", "error",
]);

export class FrameError extends Error {}

function isNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Parse and validate one server frame; throws FrameError on garbage. */
export function parseFrame(raw: string): ServerFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new FrameError("frame is not JSON");
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new FrameError("frame is not an object");
  }
  const frame = data as Record<string, unknown>;
  const type = frame.type;
  if (typeof type !== "string" || !FRAME_TYPES.has(type)) {
    throw new FrameError(`unknown frame type ${String(type)}`);
  }
  if (type === "observation") {
    const obs = frame.observation as ObservationPayload | undefined;
    if (!obs || !obs.pose || !isNumber(obs.pose.x) || !isNumber(obs.pose.y)
        || !isNumber(obs.fov_half_angle) || !isNumber(obs.max_range)
        || !Array.isArray(obs.entities) || !Array.isArray(obs.obstacle_arcs)) {
      throw new FrameError("malformed observation frame");
    }
    for (const e of obs.entities) {
      if (typeof e.name !== "string" || !isNumber(e.bearing)
          || !isNumber(e.distance)) {
        throw new FrameError("malformed entity");
      }
    }
    for (const a of obs.obstacle_arcs) {
      if (!isNumber(a.start_bearing) || !isNumber(a.end_bearing)
          || !isNumber(a.min_distance)) {
        throw new FrameError("malformed obstacle arc");
      }
    }
  }
  if (type === "hello") {
    const limits = frame.limits as HelloFrame["limits"] | undefined;
    if (!limits || !isNumber(limits.d_max) || !isNumber(limits.r_max)) {
      throw new FrameError("malformed hello frame");
    }
  }
  return frame as unknown as ServerFrame;
}

export function encodeCommand(command: Command): string {
  return JSON.stringify(command);
}
