// Top-down scene rendering. Everything drawn comes straight from protocol
// payloads: lane polylines from the scene message, objects as oriented
// shapes, and the ego trajectory as its pearl pairs with connecting lines.

import { Camera } from "./camera.js";
import { GateInfo, ObjectInfo, ScenePayload, SnapshotPayload } from "./protocol.js";

// The subset of CanvasRenderingContext2D the renderer uses; tests inject a
// recording implementation.
export interface Draw2D {
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

const ROLE_COLORS: Record<string, string> = {
  ego: "#2e7dd7",
  traffic: "#d7902e",
  "static-obstacle": "#777777",
};

export function renderLanes(ctx: Draw2D, camera: Camera, scene: ScenePayload): void {
  for (const lane of scene.lanes) {
    ctx.save();
    ctx.strokeStyle = "#d0d0d0";
    ctx.lineWidth = Math.max(1, lane.width * camera.pixelsPerMeter);
    ctx.beginPath();
    lane.points.forEach(([x, y], i) => {
      const [sx, sy] = camera.worldToScreen(x, y);
      if (i === 0) {
        ctx.moveTo(sx, sy);
      } else {
        ctx.lineTo(sx, sy);
      }
    });
    ctx.stroke();
    ctx.restore();
  }
  for (const cp of scene.checkpoints) {
    const [sx, sy] = camera.worldToScreen(cp.x, cp.y);
    ctx.save();
    ctx.fillStyle = "#3cab4b";
    ctx.beginPath();
    ctx.arc(sx, sy, 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(cp.id, sx + 7, sy - 7);
    ctx.restore();
  }
}

export function renderObject(ctx: Draw2D, camera: Camera, obj: ObjectInfo): void {
  const [sx, sy] = camera.worldToScreen(obj.x, obj.y);
  const color = ROLE_COLORS[obj.role] ?? "#903030";
  ctx.save();
  ctx.translate(sx, sy);
  ctx.fillStyle = color;
  ctx.strokeStyle = color;
  if (obj.shape.kind === "circle") {
    const r = (obj.shape.radius ?? 1) * camera.pixelsPerMeter;
    ctx.beginPath();
    ctx.arc(0, 0, r, 0, 2 * Math.PI);
    ctx.fill();
  } else {
    // Canvas y points down, so positive world rotation is negative here.
    ctx.rotate(-obj.heading);
    const length = (obj.shape.length ?? 4) * camera.pixelsPerMeter;
    const width = (obj.shape.width ?? 2) * camera.pixelsPerMeter;
    ctx.fillRect(-length / 2, -width / 2, length, width);
    // Nose marker: which way the vehicle points.
    ctx.beginPath();
    ctx.moveTo(length / 2, 0);
    ctx.lineTo(length / 2 + 6, 0);
    ctx.stroke();
  }
  ctx.restore();
  ctx.save();
  ctx.fillStyle = "#222222";
  ctx.fillText(`${obj.id} ${obj.speed.toFixed(1)} m/s`, sx + 8, sy + 12);
  ctx.restore();
}

export function renderTrajectory(ctx: Draw2D, camera: Camera, gates: GateInfo[]): void {
  ctx.save();
  ctx.strokeStyle = "#111111";
  ctx.fillStyle = "#111111";
  ctx.lineWidth = 1;
  for (const gate of gates) {
    const [lx, ly] = camera.worldToScreen(gate.left[0], gate.left[1]);
    const [rx, ry] = camera.worldToScreen(gate.right[0], gate.right[1]);
    ctx.beginPath();
    ctx.moveTo(lx, ly);
    ctx.lineTo(rx, ry);
    ctx.stroke();
    for (const [px, py] of [
      [lx, ly],
      [rx, ry],
    ]) {
      ctx.beginPath();
      ctx.arc(px, py, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
  ctx.restore();
}

export function renderFrame(
  ctx: Draw2D,
  camera: Camera,
  scene: ScenePayload | null,
  snapshot: SnapshotPayload | null,
): void {
  ctx.clearRect(0, 0, camera.viewWidth, camera.viewHeight);
  if (scene !== null) {
    renderLanes(ctx, camera, scene);
  }
  if (snapshot === null) {
    return;
  }
  if (snapshot.trajectory !== null) {
    renderTrajectory(ctx, camera, snapshot.trajectory.gates);
  }
  for (const obj of snapshot.objects) {
    renderObject(ctx, camera, obj);
  }
  ctx.save();
  ctx.fillStyle = "#222222";
  ctx.font = "14px sans-serif";
  ctx.fillText(
    `t = ${snapshot.clock.toFixed(2)} s   scale = ${snapshot.time_scale}x`,
    12,
    20,
  );
  ctx.restore();
}
