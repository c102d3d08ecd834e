// Console wiring: connect, render each snapshot within an animation frame,
// forward keyboard steering (one message per frame at most), and keep the
// validator panel and the clock controls live.

import { Camera } from "./camera.js";
import { ConsoleClient } from "./client.js";
import { KeyboardSteering } from "./keyboard.js";
import { connectionBannerHtml, validatorPanelHtml } from "./panel.js";
import { renderFrame } from "./render.js";

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "127.0.0.1:8700";
  return `ws://${server}/session`;
}

export function startConsole(doc: Document): void {
  const canvas = doc.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const banner = doc.getElementById("banner")!;
  const panel = doc.getElementById("validators")!;
  const camera = new Camera(canvas.width, canvas.height);
  const keys = new KeyboardSteering();
  const client = new ConsoleClient(serverUrl());

  let sceneFitted = false;
  client.onScene = (scene) => {
    if (sceneFitted || scene.lanes.length === 0) {
      return;
    }
    const xs = scene.lanes.flatMap((l) => l.points.map((p) => p[0]));
    const ys = scene.lanes.flatMap((l) => l.points.map((p) => p[1]));
    camera.fitBounds(Math.min(...xs), Math.min(...ys), Math.max(...xs), Math.max(...ys));
    sceneFitted = true;
  };
  client.onStateChange = (state) => {
    banner.innerHTML = connectionBannerHtml(state, client.scene?.scenario ?? null);
    if (state !== "connected") {
      keys.releaseAll();
    }
  };
  client.connect();

  doc.addEventListener("keydown", (ev) => {
    if (keys.handles(ev.code)) {
      keys.keyDown(ev.code);
      ev.preventDefault();
    }
  });
  doc.addEventListener("keyup", (ev) => {
    if (keys.handles(ev.code)) {
      keys.keyUp(ev.code);
      ev.preventDefault();
    }
  });

  for (const [id, type, payload] of [
    ["btn-pause", "pause", {}],
    ["btn-resume", "resume", {}],
    ["btn-slow", "set_time_scale", { factor: 0.5 }],
    ["btn-fast", "set_time_scale", { factor: 5.0 }],
  ] as const) {
    doc.getElementById(id)?.addEventListener("click", () => client.send(type, payload));
  }

  // Drag to pan, wheel to zoom.
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("mousedown", (ev) => {
    dragging = true;
    lastX = ev.offsetX;
    lastY = ev.offsetY;
  });
  canvas.addEventListener("mouseup", () => (dragging = false));
  canvas.addEventListener("mouseleave", () => (dragging = false));
  canvas.addEventListener("mousemove", (ev) => {
    if (dragging) {
      camera.panByPixels(ev.offsetX - lastX, ev.offsetY - lastY);
      lastX = ev.offsetX;
      lastY = ev.offsetY;
    }
  });
  canvas.addEventListener("wheel", (ev) => {
    camera.zoomBy(ev.deltaY < 0 ? 1.15 : 1 / 1.15);
    ev.preventDefault();
  });

  let lastPanelHtml = "";
  const frame = () => {
    const intent = keys.tick();
    if (intent !== null) {
      client.steer(intent.accel, intent.yawRate);
    }
    renderFrame(ctx, camera, client.scene, client.latestSnapshot);
    const panelHtml = validatorPanelHtml(client.latestSnapshot?.validators ?? []);
    if (panelHtml !== lastPanelHtml) {
      panel.innerHTML = panelHtml;
      lastPanelHtml = panelHtml;
    }
    window.requestAnimationFrame(frame);
  };
  window.requestAnimationFrame(frame);
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", () => startConsole(document));
}
