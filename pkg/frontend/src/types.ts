/** Wire types exchanged with the annotation service. */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z
export type Mat3 = number[][];

export interface IntrinsicsDoc {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface TransformDoc {
  rotation: Mat3;
  translation: Vec3 | number[];
}

export interface RigDoc {
  rgb: { intrinsics: IntrinsicsDoc };
  depth: { intrinsics: IntrinsicsDoc };
  rgb_from_depth: TransformDoc;
  world_origin: TransformDoc;
}

export interface ProjectSummary {
  revision: number;
  frame_count: number;
  epsilon: number;
  undistorted: boolean;
  rgb_size: [number, number];
  depth_size: [number, number];
  depth_range: [number, number];
  tracks: string[];
  rig: RigDoc;
}

export interface BoxDoc {
  frame: number;
  center: Vec3 | number[];
  size: Vec3 | number[];
  quaternion: Quat | number[];
  occlusion: number;
  track_id?: string;
  class_label?: string;
  is_keyframe?: boolean;
  truncation?: number;
  visibility?: number;
  difficulty?: string;
}

export interface RleMask {
  shape: [number, number];
  counts: number[];
}

export interface ScribbleStroke {
  points: [number, number][];
  radius: number;
  label: 'foreground' | 'background';
}

export type CameraName = 'rgb' | 'depth';
