// Wire types for the simulator session protocol (see docs/protocol.md in
// the repository root). Every message in both directions is an Envelope;
// the console never simulates, it renders exactly what snapshots carry.

export interface Envelope {
  type: string;
  seq: number;
  payload: unknown;
}

export interface ShapeInfo {
  kind: "oriented-rectangle" | "circle";
  length?: number;
  width?: number;
  radius?: number;
}

export interface ObjectInfo {
  id: string;
  role: "ego" | "traffic" | "static-obstacle";
  x: number;
  y: number;
  heading: number;
  speed: number;
  shape: ShapeInfo;
}

export interface GateInfo {
  left: [number, number];
  right: [number, number];
  target_speed: number | null;
}

export interface ValidatorInfo {
  name: string;
  passed: boolean;
  violations: number;
}

export interface SnapshotPayload {
  clock: number;
  time_scale: number;
  steered: string | null;
  objects: ObjectInfo[];
  trajectory: { gates: GateInfo[] } | null;
  validators: ValidatorInfo[];
}

export interface LaneInfo {
  id: string;
  width: number;
  points: [number, number][];
}

export interface ScenePayload {
  scenario: string;
  dt: number;
  lanes: LaneInfo[];
  checkpoints: { id: string; x: number; y: number }[];
}

export function parseEnvelope(data: string): Envelope | null {
  try {
    const msg = JSON.parse(data);
    if (msg && typeof msg.type === "string") {
      return msg as Envelope;
    }
  } catch {
    // tolerate garbage frames; the stream continues
  }
  return null;
}

export function envelope(type: string, seq: number, payload: unknown): string {
  return JSON.stringify({ type, seq, payload });
}
