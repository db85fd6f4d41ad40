/**
 * Maps viewer gestures onto box parameter edits.
 *
 * Translation drags move the box on the camera-parallel plane through its
 * center, scale drags push one face along its own axis, and mouse-wheel
 * steps rotate about the active axis by a fixed increment. The deltas are
 * exactly what gets PATCHed to the engine; the UI never keeps private
 * geometry state.
 */
import { applyRigid, camFromWorld, quatFromAxisAngle, quatMultiply, quatToMatrix } from './projection.js';
import type { BoxDoc, CameraName, Quat, RigDoc, Vec3 } from './types.js';

export type GizmoMode = 'translate' | 'scale' | 'rotate';

export interface GizmoInteraction {
  mode: GizmoMode;
  /** Active axis: 0=x, 1=y, 2=z of the box's local frame (scale/rotate). */
  axis?: 0 | 1 | 2;
  /** Scale handle direction along the axis: +1 / -1 face. */
  face?: 1 | -1;
  /** Viewport drag in pixels. */
  dragPx?: [number, number];
  /** Mouse-wheel steps (rotate). */
  wheelSteps?: number;
  shift?: boolean;
}

export interface BoxEdit {
  center: Vec3;
  size: Vec3;
  quaternion: Quat;
}

export const WHEEL_STEP_RAD = Math.PI / 180; // 1 degree
export const WHEEL_STEP_FINE_RAD = WHEEL_STEP_RAD / 10;
export const MIN_SIZE_M = 0.01;

function column(r: number[][], i: number): Vec3 {
  return [r[0][i], r[1][i], r[2][i]];
}

/**
 * Apply an interaction to a box viewed through the given camera.
 *
 * A drag of d pixels at box depth z maps to d * z / f meters along the
 * matching camera axis, so for a camera axis aligned with a world axis the
 * translation reduces to the textbook d*z/fx.
 */
export function gizmoToBoxEdit(
  interaction: GizmoInteraction,
  rig: RigDoc,
  camera: CameraName,
  box: BoxDoc,
): BoxEdit {
  const edit: BoxEdit = {
    center: [box.center[0], box.center[1], box.center[2]],
    size: [box.size[0], box.size[1], box.size[2]],
    quaternion: [box.quaternion[0], box.quaternion[1], box.quaternion[2], box.quaternion[3]],
  };
  const xf = camFromWorld(rig, camera);
  const intr = camera === 'rgb' ? rig.rgb.intrinsics : rig.depth.intrinsics;
  const centerCam = applyRigid(xf, edit.center);
  const z = centerCam[2];

  if (interaction.mode === 'translate') {
    const [dx, dy] = interaction.dragPx ?? [0, 0];
    // camera axes expressed in world coordinates = rows of cam-from-world R
    const camXWorld: Vec3 = [xf.r[0][0], xf.r[0][1], xf.r[0][2]];
    const camYWorld: Vec3 = [xf.r[1][0], xf.r[1][1], xf.r[1][2]];
    const mx = (dx * z) / intr.fx;
    const my = (dy * z) / intr.fy;
    edit.center = [
      edit.center[0] + mx * camXWorld[0] + my * camYWorld[0],
      edit.center[1] + mx * camXWorld[1] + my * camYWorld[1],
      edit.center[2] + mx * camXWorld[2] + my * camYWorld[2],
    ];
  } else if (interaction.mode === 'scale') {
    const axis = interaction.axis ?? 0;
    const face = interaction.face ?? 1;
    const [dx, dy] = interaction.dragPx ?? [0, 0];
    const rot = quatToMatrix(edit.quaternion);
    const axisWorld = column(rot, axis);
    const axisCam = applyRigid({ r: xf.r, t: [0, 0, 0] }, axisWorld);
    // screen direction of the face normal; project the drag onto it
    const sx = (intr.fx * axisCam[0]) / z;
    const sy = (intr.fy * axisCam[1]) / z;
    const norm = Math.hypot(sx, sy);
    const draggedPx = norm > 1e-12 ? (dx * sx + dy * sy) / norm : 0;
    const meters = (draggedPx * z) / ((intr.fx + intr.fy) / 2);
    const grow = face * meters;
    const newSize = Math.max(MIN_SIZE_M, edit.size[axis] + grow);
    const applied = newSize - edit.size[axis];
    edit.size[axis] = newSize;
    // the opposite face stays put: center shifts by half the growth
    const shift = (face * applied) / 2;
    edit.center = [
      edit.center[0] + shift * axisWorld[0],
      edit.center[1] + shift * axisWorld[1],
      edit.center[2] + shift * axisWorld[2],
    ];
  } else {
    const axis = interaction.axis ?? 2;
    const steps = interaction.wheelSteps ?? 0;
    const step = interaction.shift ? WHEEL_STEP_FINE_RAD : WHEEL_STEP_RAD;
    const axes: Vec3[] = [
      [1, 0, 0],
      [0, 1, 0],
      [0, 0, 1],
    ];
    const dq = quatFromAxisAngle(axes[axis], steps * step);
    edit.quaternion = quatMultiply(edit.quaternion, dq) as Quat;
  }
  return edit;
}
