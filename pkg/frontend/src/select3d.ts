/** Rectangle selection over the point-cloud view. */
import { toRows } from './mat4.js';
import type { ViewerCamera } from './viewerCamera.js';

export interface RectDrag {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Select3DPayload {
  view: number[][];
  projection: number[][];
  rect: [number, number, number, number];
  mode: 'add' | 'remove';
  viewport: [number, number];
}

export function normalizeRect(drag: RectDrag): [number, number, number, number] | null {
  const x0 = Math.min(drag.x0, drag.x1);
  const x1 = Math.max(drag.x0, drag.x1);
  const y0 = Math.min(drag.y0, drag.y1);
  const y1 = Math.max(drag.y0, drag.y1);
  if (x1 - x0 <= 0 || y1 - y0 <= 0) return null; // zero area: no request
  return [x0, y0, x1, y1];
}

/** Build the selection payload, or null for a degenerate drag. */
export function rectSelect3d(
  camera: ViewerCamera,
  drag: RectDrag,
  mode: 'add' | 'remove',
): Select3DPayload | null {
  const rect = normalizeRect(drag);
  if (!rect) return null;
  return {
    view: toRows(camera.viewMatrix()),
    projection: toRows(camera.projectionMatrix()),
    rect,
    mode,
    viewport: camera.viewport,
  };
}
