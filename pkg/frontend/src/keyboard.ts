// Arrow keys to steer intents. One tick per animation frame: the current
// key state is compared with the last emitted intent and a message is due
// only when it changed, so releasing everything sends a single zero intent
// and holding keys stays silent while the server-side command persists.

export const ACCEL_STEP = 3.0; // m/s^2, matches the keyboard behavior default
export const YAW_STEP = Math.PI / 2; // rad/s

export interface SteerIntent {
  accel: number;
  yawRate: number;
}

const TRACKED = ["ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight"] as const;

export class KeyboardSteering {
  private held = new Set<string>();
  // Starts at zero so an idle console emits nothing until a key is used.
  private lastSent: SteerIntent = { accel: 0, yawRate: 0 };

  handles(code: string): boolean {
    return (TRACKED as readonly string[]).includes(code);
  }

  keyDown(code: string): void {
    if (this.handles(code)) {
      this.held.add(code);
    }
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  releaseAll(): void {
    this.held.clear();
  }

  currentIntent(): SteerIntent {
    let accel = 0;
    let yawRate = 0;
    if (this.held.has("ArrowUp")) accel += ACCEL_STEP;
    if (this.held.has("ArrowDown")) accel -= ACCEL_STEP;
    if (this.held.has("ArrowLeft")) yawRate += YAW_STEP;
    if (this.held.has("ArrowRight")) yawRate -= YAW_STEP;
    return { accel, yawRate };
  }

  /** The intent to send this frame, or null when nothing changed. */
  tick(): SteerIntent | null {
    const intent = this.currentIntent();
    if (this.lastSent.accel === intent.accel && this.lastSent.yawRate === intent.yawRate) {
      return null;
    }
    this.lastSent = intent;
    return intent;
  }
}
