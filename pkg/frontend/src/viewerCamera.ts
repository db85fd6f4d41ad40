/** Orbit camera for the point-cloud viewer. */
import { determinant, lookAt, Mat4, multiply, perspective, transformPoint } from './mat4.js';

export interface OrbitState {
  target: [number, number, number];
  distance: number;
  yaw: number;   // radians around the up axis
  pitch: number; // radians above the horizon
}

export class ViewerCamera {
  state: OrbitState = { target: [0, 0, 2], distance: 4, yaw: Math.PI / 2, pitch: 0.4 };
  fovY = (55 * Math.PI) / 180;
  near = 0.05;
  far = 100;

  constructor(public viewport: [number, number]) {}

  orbit(dYaw: number, dPitch: number): void {
    this.state.yaw += dYaw;
    const limit = Math.PI / 2 - 1e-3;
    this.state.pitch = Math.min(limit, Math.max(-limit, this.state.pitch + dPitch));
  }

  zoom(factor: number): void {
    this.state.distance = Math.min(50, Math.max(0.2, this.state.distance * factor));
  }

  pan(dx: number, dy: number): void {
    // shift the target in the camera's horizontal plane
    const s = this.state;
    const scale = s.distance * 0.002;
    s.target = [
      s.target[0] - dx * scale * Math.sin(s.yaw),
      s.target[1] + dy * scale,
      s.target[2] + dx * scale * Math.cos(s.yaw),
    ];
  }

  eye(): [number, number, number] {
    const s = this.state;
    const cp = Math.cos(s.pitch);
    return [
      s.target[0] + s.distance * cp * Math.cos(s.yaw),
      s.target[1] - s.distance * Math.sin(s.pitch),
      s.target[2] - s.distance * cp * Math.sin(s.yaw),
    ];
  }

  viewMatrix(): Mat4 {
    // y points down in camera frames, so "up" for the orbit is -y
    return lookAt(this.eye(), this.state.target, [0, -1, 0]);
  }

  projectionMatrix(): Mat4 {
    const [w, h] = this.viewport;
    return perspective(this.fovY, w / h, this.near, this.far);
  }

  isDegenerate(): boolean {
    return Math.abs(determinant(this.projectionMatrix())) < 1e-12;
  }

  /** Project one point to viewport pixels; null when behind the viewer. */
  toViewport(p: [number, number, number]): [number, number] | null {
    const clip = transformPoint(multiply(this.projectionMatrix(), this.viewMatrix()), p);
    if (clip[3] <= 1e-12) return null;
    const [w, h] = this.viewport;
    return [((clip[0] / clip[3]) + 1) * 0.5 * w, (1 - clip[1] / clip[3]) * 0.5 * h];
  }
}
