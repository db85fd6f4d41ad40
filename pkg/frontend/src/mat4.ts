/** Minimal 4x4 matrix math (row-major number[16]), GL-style conventions. */

export type Mat4 = number[];

export function identity(): Mat4 {
  return [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
}

export function multiply(a: Mat4, b: Mat4): Mat4 {
  const out = new Array<number>(16).fill(0);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = s;
    }
  }
  return out;
}

export function transformPoint(m: Mat4, p: [number, number, number]): [number, number, number, number] {
  const [x, y, z] = p;
  return [
    m[0] * x + m[1] * y + m[2] * z + m[3],
    m[4] * x + m[5] * y + m[6] * z + m[7],
    m[8] * x + m[9] * y + m[10] * z + m[11],
    m[12] * x + m[13] * y + m[14] * z + m[15],
  ];
}

/** Right-handed look-at view matrix (camera looks down -z in eye space). */
export function lookAt(eye: [number, number, number], target: [number, number, number], up: [number, number, number]): Mat4 {
  const sub = (a: number[], b: number[]) => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
  const norm = (v: number[]) => {
    const n = Math.hypot(v[0], v[1], v[2]);
    return [v[0] / n, v[1] / n, v[2] / n];
  };
  const cross = (a: number[], b: number[]) => [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
  const dot = (a: number[], b: number[]) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

  const f = norm(sub(target, eye)); // forward
  const s = norm(cross(f, up)); // right
  const u = cross(s, f); // true up
  return [
    s[0], s[1], s[2], -dot(s, eye),
    u[0], u[1], u[2], -dot(u, eye),
    -f[0], -f[1], -f[2], dot(f, eye),
    0, 0, 0, 1,
  ];
}

export function perspective(fovYRad: number, aspect: number, near: number, far: number): Mat4 {
  const t = 1 / Math.tan(fovYRad / 2);
  return [
    t / aspect, 0, 0, 0,
    0, t, 0, 0,
    0, 0, -(far + near) / (far - near), (-2 * far * near) / (far - near),
    0, 0, -1, 0,
  ];
}

export function determinant(m: Mat4): number {
  // Laplace expansion over the first row.
  const minor = (r: number, c: number): number => {
    const sub: number[] = [];
    for (let i = 0; i < 4; i++) {
      if (i === r) continue;
      for (let j = 0; j < 4; j++) {
        if (j === c) continue;
        sub.push(m[i * 4 + j]);
      }
    }
    return (
      sub[0] * (sub[4] * sub[8] - sub[5] * sub[7]) -
      sub[1] * (sub[3] * sub[8] - sub[5] * sub[6]) +
      sub[2] * (sub[3] * sub[7] - sub[4] * sub[6])
    );
  };
  let det = 0;
  for (let c = 0; c < 4; c++) det += (c % 2 === 0 ? 1 : -1) * m[c] * minor(0, c);
  return det;
}

/** Row-major number[16] -> nested rows, the shape the service expects. */
export function toRows(m: Mat4): number[][] {
  return [m.slice(0, 4), m.slice(4, 8), m.slice(8, 12), m.slice(12, 16)];
}
