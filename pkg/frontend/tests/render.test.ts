// Rendering against a recording draw context: shapes land at the screen
// positions the protocol poses map to, pearls are drawn per gate, and the
// validator panel turns rows red on violations.

import { describe, expect, test } from "vitest";

import { Camera } from "../src/camera.js";
import { validatorPanelHtml } from "../src/panel.js";
import { GateInfo, SnapshotPayload } from "../src/protocol.js";
import { Draw2D, renderFrame, renderTrajectory } from "../src/render.js";

type Call = [string, ...unknown[]];

function recordingContext(): { ctx: Draw2D; calls: Call[] } {
  const calls: Call[] = [];
  const record =
    (name: string) =>
    (...args: unknown[]) => {
      calls.push([name, ...args]);
    };
  const ctx: Draw2D = {
    lineWidth: 1,
    strokeStyle: "",
    fillStyle: "",
    font: "",
    clearRect: record("clearRect"),
    save: record("save"),
    restore: record("restore"),
    translate: record("translate"),
    rotate: record("rotate"),
    beginPath: record("beginPath"),
    moveTo: record("moveTo"),
    lineTo: record("lineTo"),
    closePath: record("closePath"),
    stroke: record("stroke"),
    fill: record("fill"),
    arc: record("arc"),
    fillRect: record("fillRect"),
    strokeRect: record("strokeRect"),
    fillText: record("fillText"),
  };
  return { ctx, calls };
}

function snapshotWithThreeObjects(): SnapshotPayload {
  return {
    clock: 1.5,
    time_scale: 1.0,
    steered: "ego",
    objects: [
      {
        id: "ego",
        role: "ego",
        x: 10.0,
        y: 0.0,
        heading: 0.5,
        speed: 4.0,
        shape: { kind: "oriented-rectangle", length: 4.5, width: 2.0 },
      },
      {
        id: "car",
        role: "traffic",
        x: -5.0,
        y: 8.0,
        heading: 0.0,
        speed: 2.0,
        shape: { kind: "oriented-rectangle", length: 4.0, width: 2.0 },
      },
      {
        id: "rock",
        role: "static-obstacle",
        x: 3.0,
        y: -4.0,
        heading: 0.0,
        speed: 0.0,
        shape: { kind: "circle", radius: 1.5 },
      },
    ],
    trajectory: null,
    validators: [],
  };
}

describe("scene rendering", () => {
  test("three objects are drawn at their protocol poses", () => {
    const { ctx, calls } = recordingContext();
    const camera = new Camera(800, 600);
    const snapshot = snapshotWithThreeObjects();
    renderFrame(ctx, camera, null, snapshot);

    const translates = calls.filter(([name]) => name === "translate");
    expect(translates).toHaveLength(3);
    const expected = snapshot.objects.map((o) => camera.worldToScreen(o.x, o.y));
    expected.forEach(([sx, sy], i) => {
      expect(translates[i][1]).toBeCloseTo(sx, 9);
      expect(translates[i][2]).toBeCloseTo(sy, 9);
    });

    // Two rectangles and one circle.
    const rects = calls.filter(([name]) => name === "fillRect");
    expect(rects).toHaveLength(2);
    const circles = calls.filter(
      ([name, , , r]) => name === "arc" && r === 1.5 * camera.pixelsPerMeter,
    );
    expect(circles).toHaveLength(1);

    // The heading rotates the rectangle (flipped for screen coordinates).
    const rotations = calls.filter(([name]) => name === "rotate");
    expect(rotations[0][1]).toBeCloseTo(-0.5, 9);

    // The frame was cleared first.
    expect(calls[0][0]).toBe("clearRect");
  });

  test("trajectory gates render as pearl pairs with connecting lines", () => {
    const { ctx, calls } = recordingContext();
    const camera = new Camera(400, 300);
    const gates: GateInfo[] = [
      { left: [0, 2], right: [0, -2], target_speed: 5.0 },
      { left: [5, 2], right: [5, -2], target_speed: 5.0 },
      { left: [10, 2], right: [10, -2], target_speed: null },
    ];
    renderTrajectory(ctx, camera, gates);
    // One connecting line per gate ...
    expect(calls.filter(([name]) => name === "moveTo")).toHaveLength(3);
    expect(calls.filter(([name]) => name === "lineTo")).toHaveLength(3);
    // ... and two pearls per gate.
    expect(calls.filter(([name]) => name === "arc")).toHaveLength(6);
    const [, lx, ly] = calls.find(([name]) => name === "moveTo")!;
    const [sx, sy] = camera.worldToScreen(0, 2);
    expect(lx).toBeCloseTo(sx, 9);
    expect(ly).toBeCloseTo(sy, 9);
  });
});

describe("validator panel", () => {
  test("violated validators get red rows with the violation count", () => {
    const html = validatorPanelHtml([
      { name: "collision", passed: true, violations: 0 },
      { name: "speed_limit", passed: false, violations: 3 },
    ]);
    expect(html).toContain('<tr class="validator-ok"><td>collision</td><td>ok</td></tr>');
    expect(html).toContain(
      '<tr class="validator-violated"><td>speed_limit</td><td>3 violations</td></tr>',
    );
  });

  test("names are escaped", () => {
    const html = validatorPanelHtml([
      { name: "<script>", passed: false, violations: 1 },
    ]);
    expect(html).toContain("&lt;script&gt;");
    expect(html).not.toContain("<script>");
  });

  test("empty panel has a placeholder", () => {
    expect(validatorPanelHtml([])).toContain("no validators");
  });
});
