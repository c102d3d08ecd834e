// WebSocket session client. Keeps exactly one latest snapshot (the render
// loop reads it each frame; older frames are dropped client-side, so a fast
// stream can never grow memory) and reconnects with capped exponential
// backoff when the connection drops.

import { Envelope, ScenePayload, SnapshotPayload, envelope, parseEnvelope } from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

const BACKOFF_INITIAL_MS = 500;
const BACKOFF_MAX_MS = 5000;

export class ConsoleClient {
  state: ConnectionState = "disconnected";
  latestSnapshot: SnapshotPayload | null = null;
  scene: ScenePayload | null = null;
  snapshotsReceived = 0;

  onStateChange: ((state: ConnectionState) => void) | null = null;
  onScene: ((scene: ScenePayload) => void) | null = null;
  onReply: ((msg: Envelope) => void) | null = null;

  private ws: WebSocketLike | null = null;
  private seq = 0;
  private backoffMs = BACKOFF_INITIAL_MS;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private makeSocket: WebSocketFactory = (u) => new WebSocket(u) as unknown as WebSocketLike,
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.setState("connecting");
    const ws = this.makeSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = BACKOFF_INITIAL_MS;
      this.setState("connected");
      this.sendRaw("subscribe", {});
    };
    ws.onmessage = (ev) => this.handleMessage(String(ev.data));
    ws.onerror = () => {
      // onclose follows; nothing else to do
    };
    ws.onclose = () => {
      this.ws = null;
      this.setState("disconnected");
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer !== null) {
      return;
    }
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (!this.closed) {
        this.open();
      }
    }, delay);
  }

  private handleMessage(data: string): void {
    const msg = parseEnvelope(data);
    if (msg === null) {
      return;
    }
    if (msg.type === "snapshot") {
      this.latestSnapshot = msg.payload as SnapshotPayload; // one-slot buffer
      this.snapshotsReceived += 1;
    } else if (msg.type === "scene") {
      this.scene = msg.payload as ScenePayload;
      this.onScene?.(this.scene);
    } else {
      this.onReply?.(msg);
    }
  }

  private sendRaw(type: string, payload: unknown): number {
    this.seq += 1;
    this.ws?.send(envelope(type, this.seq, payload));
    return this.seq;
  }

  send(type: string, payload: unknown = {}): number | null {
    if (this.state !== "connected" || this.ws === null) {
      return null;
    }
    return this.sendRaw(type, payload);
  }

  steer(accel: number, yawRate: number): void {
    this.send("steer", { accel, yaw_rate: yawRate });
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.ws?.close();
    this.ws = null;
    this.setState("disconnected");
  }

  private setState(state: ConnectionState): void {
    if (state !== this.state) {
      this.state = state;
      this.onStateChange?.(state);
    }
  }
}
