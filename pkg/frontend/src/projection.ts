/**
 * Client-side box projection mirroring the engine's math.
 *
 * The server is the geometry authority; this module recomputes its
 * projections so the UI can preview edits optimistically and cross-check
 * rendered overlays against the engine in dev mode.
 */
import type { BoxDoc, CameraName, IntrinsicsDoc, Quat, RigDoc, TransformDoc, Vec3 } from './types.js';

export interface Rigid {
  r: number[][]; // 3x3 rotation
  t: Vec3;
}

const NEAR_PLANE = 0.01;

export function quatToMatrix(q: Quat | number[]): number[][] {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  const [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
    [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
    [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
  ];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(...axis);
  const s = Math.sin(angle / 2);
  return [Math.cos(angle / 2), (axis[0] / n) * s, (axis[1] / n) * s, (axis[2] / n) * s];
}

export function quatMultiply(a: Quat | number[], b: Quat | number[]): Quat {
  return [
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
    a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
    a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
    a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
  ];
}

function matVec(r: number[][], v: Vec3): Vec3 {
  return [
    r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
    r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
    r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
  ];
}

function transpose(r: number[][]): number[][] {
  return [
    [r[0][0], r[1][0], r[2][0]],
    [r[0][1], r[1][1], r[2][1]],
    [r[0][2], r[1][2], r[2][2]],
  ];
}

export function applyRigid(xf: Rigid, p: Vec3): Vec3 {
  const r = matVec(xf.r, p);
  return [r[0] + xf.t[0], r[1] + xf.t[1], r[2] + xf.t[2]];
}

export function invertRigid(xf: Rigid): Rigid {
  const rt = transpose(xf.r);
  const t = matVec(rt, xf.t);
  return { r: rt, t: [-t[0], -t[1], -t[2]] };
}

export function composeRigid(second: Rigid, first: Rigid): Rigid {
  const r = [0, 1, 2].map((i) =>
    [0, 1, 2].map((j) => second.r[i][0] * first.r[0][j] + second.r[i][1] * first.r[1][j] + second.r[i][2] * first.r[2][j]),
  );
  const t = applyRigid(second, first.t);
  return { r, t };
}

function fromDoc(doc: TransformDoc): Rigid {
  return { r: doc.rotation, t: [doc.translation[0], doc.translation[1], doc.translation[2]] };
}

/** world -> chosen camera frame, honoring the adjustable world origin. */
export function camFromWorld(rig: RigDoc, camera: CameraName): Rigid {
  const depthFromWorld = invertRigid(fromDoc(rig.world_origin));
  if (camera === 'depth') return depthFromWorld;
  return composeRigid(fromDoc(rig.rgb_from_depth), depthFromWorld);
}

export function boxCorners(box: BoxDoc): Vec3[] {
  const r = quatToMatrix(box.quaternion);
  const h = [box.size[0] / 2, box.size[1] / 2, box.size[2] / 2];
  const corners: Vec3[] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        const local: Vec3 = [sx * h[0], sy * h[1], sz * h[2]];
        const rotated = matVec(r, local);
        corners.push([
          box.center[0] + rotated[0],
          box.center[1] + rotated[1],
          box.center[2] + rotated[2],
        ]);
      }
    }
  }
  return corners;
}

export function projectPoint(p: Vec3, intr: IntrinsicsDoc): [number, number] {
  return [intr.fx * (p[0] / p[2]) + intr.cx, intr.fy * (p[1] / p[2]) + intr.cy];
}

/**
 * The 8 corner pixels of a box in the chosen camera. Corners behind the
 * camera are clamped to the near plane, matching the engine.
 */
export function projectBoxCorners(box: BoxDoc, rig: RigDoc, camera: CameraName): [number, number][] {
  const xf = camFromWorld(rig, camera);
  const intr = camera === 'rgb' ? rig.rgb.intrinsics : rig.depth.intrinsics;
  return boxCorners(box).map((c) => {
    const e = applyRigid(xf, c);
    const z = Math.max(e[2], NEAR_PLANE);
    return projectPoint([e[0], e[1], z], intr);
  });
}

/** Box wireframe edges as corner-index pairs (corner order: x, y, z signs). */
export const BOX_EDGES: [number, number][] = [
  [0, 1], [0, 2], [1, 3], [2, 3],
  [4, 5], [4, 6], [5, 7], [6, 7],
  [0, 4], [1, 5], [2, 6], [3, 7],
];
