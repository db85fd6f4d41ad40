import { describe, expect, it } from 'vitest';
import { visibilityColor, visibilityCss } from '../src/colorRamp.js';
import { identity, lookAt, multiply, perspective, transformPoint } from '../src/mat4.js';
import { clipStrokeToCrop, decodeRle, expectedHardLabels, stampStroke } from '../src/scribble.js';
import { normalizeRect } from '../src/select3d.js';
import { Timeline } from '../src/timeline.js';
import { ViewerCamera } from '../src/viewerCamera.js';

describe('visibility ramp', () => {
  it('is strictly greener for higher visibility', () => {
    let prev = visibilityColor(0);
    for (let v = 0.05; v <= 1.0001; v += 0.05) {
      const c = visibilityColor(v);
      expect(c.g).toBeGreaterThan(prev.g);
      expect(c.r).toBeLessThan(prev.r);
      prev = c;
    }
  });

  it('is a pure function of v', () => {
    expect(visibilityCss(0.37)).toBe(visibilityCss(0.37));
    expect(visibilityColor(0.8)).toEqual(visibilityColor(0.8));
  });

  it('clamps outside [0, 1]', () => {
    expect(visibilityColor(-1)).toEqual(visibilityColor(0));
    expect(visibilityColor(2)).toEqual(visibilityColor(1));
  });
});

describe('timeline model', () => {
  it('marks keyframes distinctly from interpolated frames', () => {
    const tl = new Timeline(10);
    tl.setTrack('a', [2, 6]);
    expect(tl.frameKind('a', 2)).toBe('keyframe');
    expect(tl.frameKind('a', 4)).toBe('interpolated');
    expect(tl.frameKind('a', 0)).toBe('outside');
    expect(tl.frameKind('a', 8)).toBe('outside');
  });

  it('editing an interpolated frame promotes it to a keyframe', () => {
    const tl = new Timeline(10);
    tl.setTrack('a', [0, 9]);
    expect(tl.editPromotesKeyframe('a', 5)).toBe(true);
    expect(tl.editPromotesKeyframe('a', 9)).toBe(false);
  });

  it('seeks within bounds and finds neighboring keyframes', () => {
    const tl = new Timeline(10);
    tl.setTrack('a', [1, 4, 8]);
    tl.seek(99);
    expect(tl.current).toBe(9);
    tl.seek(5);
    expect(tl.nextKeyframe('a')).toBe(8);
    expect(tl.prevKeyframe('a')).toBe(4);
  });
});

describe('scribble capture', () => {
  it('clips stroke points to the crop before posting', () => {
    const clipped = clipStrokeToCrop(
      { points: [[-3, 4], [5, 5], [40, 40]], radius: 2, label: 'foreground' },
      { x0: 10, y0: 10, x1: 42, y1: 42 },
    );
    expect(clipped?.points).toEqual([[5, 5]]);
  });

  it('drops strokes entirely outside the crop', () => {
    const clipped = clipStrokeToCrop(
      { points: [[-3, -4]], radius: 2, label: 'background' },
      { x0: 0, y0: 0, x1: 10, y1: 10 },
    );
    expect(clipped).toBeNull();
  });

  it('stamps a disk around a single point', () => {
    const covered = stampStroke(7, 7, { points: [[3, 3]], radius: 1.2, label: 'foreground' });
    expect(covered[3 * 7 + 3]).toBe(true);
    expect(covered[3 * 7 + 4]).toBe(true);
    expect(covered[0]).toBe(false);
  });

  it('later strokes override earlier ones', () => {
    const labels = expectedHardLabels(5, 5, [
      { points: [[2, 2]], radius: 1, label: 'foreground' },
      { points: [[2, 2]], radius: 1, label: 'background' },
    ]);
    expect(labels[2 * 5 + 2]).toBe(-1);
  });

  it('decodes run-length masks', () => {
    const mask = decodeRle({ shape: [2, 3], counts: [1, 2, 3] });
    expect(mask).toEqual([false, true, true, false, false, false]);
  });
});

describe('selection rectangles', () => {
  it('zero-area rectangles produce no payload', () => {
    expect(normalizeRect({ x0: 5, y0: 5, x1: 5, y1: 9 })).toBeNull();
    expect(normalizeRect({ x0: 5, y0: 5, x1: 9, y1: 5 })).toBeNull();
  });

  it('normalizes reversed drags', () => {
    expect(normalizeRect({ x0: 9, y0: 8, x1: 1, y1: 2 })).toEqual([1, 2, 9, 8]);
  });
});

describe('viewer camera', () => {
  it('projects the orbit target to the viewport center', () => {
    const cam = new ViewerCamera([640, 480]);
    cam.state.target = [0.3, -0.2, 2.0];
    const vp = cam.toViewport([0.3, -0.2, 2.0]);
    expect(vp).not.toBeNull();
    expect(vp![0]).toBeCloseTo(320, 6);
    expect(vp![1]).toBeCloseTo(240, 6);
  });

  it('culls points behind the viewer', () => {
    const cam = new ViewerCamera([640, 480]);
    cam.state = { target: [0, 0, 2], distance: 3, yaw: Math.PI / 2, pitch: 0 };
    // eye sits at z = -1 looking toward +z; a point far behind the eye is culled
    expect(cam.toViewport([0, 0, -100])).toBeNull();
  });

  it('matrix helpers satisfy basic identities', () => {
    const m = multiply(identity(), perspective(1.0, 1.5, 0.1, 10));
    const p = transformPoint(m, [0, 0, -1]);
    expect(p[3]).toBeCloseTo(1, 12);
    const view = lookAt([0, 0, 5], [0, 0, 0], [0, 1, 0]);
    const eyeSpace = transformPoint(view, [0, 0, 0]);
    expect(eyeSpace[2]).toBeCloseTo(-5, 12); // target sits 5 ahead, down -z
  });
});
