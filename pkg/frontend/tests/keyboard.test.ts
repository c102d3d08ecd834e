// Golden steer-intent sequence for a scripted key timeline: one tick per
// animation frame, a message only when the key state changed, a single
// zero intent on full release.

import { describe, expect, test } from "vitest";

import { ACCEL_STEP, KeyboardSteering, SteerIntent, YAW_STEP } from "../src/keyboard.js";

type FrameScript = { down?: string[]; up?: string[] };

function runTimeline(steering: KeyboardSteering, frames: FrameScript[]): (SteerIntent | null)[] {
  const emitted: (SteerIntent | null)[] = [];
  for (const frame of frames) {
    for (const code of frame.down ?? []) steering.keyDown(code);
    for (const code of frame.up ?? []) steering.keyUp(code);
    emitted.push(steering.tick());
  }
  return emitted;
}

describe("keyboard steering", () => {
  test("emits the golden sequence for the scripted timeline", () => {
    const steering = new KeyboardSteering();
    const emitted = runTimeline(steering, [
      {}, // idle frame: nothing to send
      { down: ["ArrowUp"] },
      {}, // held: silent
      {}, // held: silent
      { down: ["ArrowLeft"] }, // combined accelerate + turn in ONE message
      { up: ["ArrowUp"] },
      { up: ["ArrowLeft"] }, // full release: zero intent once
      {}, // and silence afterwards
      {},
    ]);
    const golden: (SteerIntent | null)[] = [
      null,
      { accel: ACCEL_STEP, yawRate: 0 },
      null,
      null,
      { accel: ACCEL_STEP, yawRate: YAW_STEP },
      { accel: 0, yawRate: YAW_STEP },
      { accel: 0, yawRate: 0 },
      null,
      null,
    ];
    expect(emitted).toEqual(golden);
  });

  test("opposing keys cancel", () => {
    const steering = new KeyboardSteering();
    steering.keyDown("ArrowUp");
    steering.keyDown("ArrowDown");
    expect(steering.tick()).toBeNull(); // net zero equals the initial state
    steering.keyUp("ArrowDown");
    expect(steering.tick()).toEqual({ accel: ACCEL_STEP, yawRate: 0 });
  });

  test("ignores unrelated keys", () => {
    const steering = new KeyboardSteering();
    expect(steering.handles("KeyW")).toBe(false);
    steering.keyDown("KeyW");
    expect(steering.tick()).toBeNull();
  });

  test("releaseAll returns to zero once", () => {
    const steering = new KeyboardSteering();
    steering.keyDown("ArrowRight");
    expect(steering.tick()).toEqual({ accel: 0, yawRate: -YAW_STEP });
    steering.releaseAll();
    expect(steering.tick()).toEqual({ accel: 0, yawRate: 0 });
    expect(steering.tick()).toBeNull();
  });
});
