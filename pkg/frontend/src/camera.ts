// World-to-screen mapping for the top-down view. World y points up,
// canvas y points down, so the y axis flips.

export class Camera {
  centerX = 0;
  centerY = 0;
  pixelsPerMeter = 8;

  constructor(
    public viewWidth: number,
    public viewHeight: number,
  ) {}

  worldToScreen(x: number, y: number): [number, number] {
    return [
      this.viewWidth / 2 + (x - this.centerX) * this.pixelsPerMeter,
      this.viewHeight / 2 - (y - this.centerY) * this.pixelsPerMeter,
    ];
  }

  screenToWorld(sx: number, sy: number): [number, number] {
    return [
      this.centerX + (sx - this.viewWidth / 2) / this.pixelsPerMeter,
      this.centerY - (sy - this.viewHeight / 2) / this.pixelsPerMeter,
    ];
  }

  panByPixels(dx: number, dy: number): void {
    this.centerX -= dx / this.pixelsPerMeter;
    this.centerY += dy / this.pixelsPerMeter;
  }

  zoomBy(factor: number): void {
    const next = this.pixelsPerMeter * factor;
    this.pixelsPerMeter = Math.min(200, Math.max(0.5, next));
  }

  fitBounds(minX: number, minY: number, maxX: number, maxY: number): void {
    this.centerX = (minX + maxX) / 2;
    this.centerY = (minY + maxY) / 2;
    const spanX = Math.max(maxX - minX, 10);
    const spanY = Math.max(maxY - minY, 10);
    this.pixelsPerMeter = Math.min(
      (this.viewWidth * 0.9) / spanX,
      (this.viewHeight * 0.9) / spanY,
    );
  }
}
