/**
 * Scribble capture: brush strokes over the segmentation crop.
 *
 * Strokes are collected in crop coordinates, clipped to the crop before
 * posting, and rasterized locally with the same disk-around-polyline rule
 * the engine uses so the preview matches the hard labels it will create.
 */
import type { RleMask, ScribbleStroke } from './types.js';

export interface CropBox {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export class StrokeRecorder {
  private strokes: ScribbleStroke[] = [];
  private active: ScribbleStroke | null = null;

  constructor(private crop: CropBox) {}

  begin(label: 'foreground' | 'background', radius: number): void {
    this.active = { points: [], radius, label };
  }

  extend(x: number, y: number): void {
    if (!this.active) return;
    this.active.points.push([x, y]);
  }

  end(): void {
    if (this.active && this.active.points.length > 0) {
      const clipped = clipStrokeToCrop(this.active, this.crop);
      if (clipped) this.strokes.push(clipped);
    }
    this.active = null;
  }

  /** Strokes ready to post; empty submissions just re-run the solver. */
  takePayload(): ScribbleStroke[] {
    const out = this.strokes;
    this.strokes = [];
    return out;
  }

  pending(): readonly ScribbleStroke[] {
    return this.strokes;
  }
}

/** Drop points outside the crop; null when nothing remains. */
export function clipStrokeToCrop(stroke: ScribbleStroke, crop: CropBox): ScribbleStroke | null {
  const w = crop.x1 - crop.x0;
  const h = crop.y1 - crop.y0;
  const points = stroke.points.filter(([x, y]) => x >= 0 && x < w && y >= 0 && y < h);
  if (points.length === 0) return null;
  return { points, radius: stroke.radius, label: stroke.label };
}

/**
 * Pixels within the brush radius of the stroke polyline, mirroring the
 * engine's rasterization (point-to-segment distance <= radius).
 */
export function stampStroke(width: number, height: number, stroke: ScribbleStroke): boolean[] {
  const covered = new Array<boolean>(width * height).fill(false);
  const pts = stroke.points;
  const segs: [number[], number[]][] = pts.length > 1
    ? pts.slice(0, -1).map((p, i) => [p, pts[i + 1]] as [number[], number[]])
    : [[pts[0], pts[0]]];
  const r2 = stroke.radius * stroke.radius;
  for (const [a, b] of segs) {
    const dx = b[0] - a[0];
    const dy = b[1] - a[1];
    const len2 = dx * dx + dy * dy;
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const px = x - a[0];
        const py = y - a[1];
        let ddx = px;
        let ddy = py;
        if (len2 > 0) {
          const u = Math.min(1, Math.max(0, (px * dx + py * dy) / len2));
          ddx = px - u * dx;
          ddy = py - u * dy;
        }
        if (ddx * ddx + ddy * ddy <= r2) covered[y * width + x] = true;
      }
    }
  }
  return covered;
}

/** Expected hard labels after posting: +1 foreground, -1 background, 0 untouched. */
export function expectedHardLabels(width: number, height: number, strokes: ScribbleStroke[]): Int8Array {
  const labels = new Int8Array(width * height);
  for (const stroke of strokes) {
    const covered = stampStroke(width, height, stroke);
    const value = stroke.label === 'foreground' ? 1 : -1;
    for (let i = 0; i < covered.length; i++) {
      if (covered[i]) labels[i] = value;
    }
  }
  return labels;
}

export function decodeRle(doc: RleMask): boolean[] {
  const [h, w] = doc.shape;
  const out = new Array<boolean>(h * w).fill(false);
  let pos = 0;
  let value = false;
  for (const run of doc.counts) {
    if (value) out.fill(true, pos, pos + run);
    pos += run;
    value = !value;
  }
  return out;
}
