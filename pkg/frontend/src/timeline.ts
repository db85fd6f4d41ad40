/**
 * Keyframe timeline model.
 *
 * Keyframed frames render distinctly from interpolated ones; edits on an
 * interpolated frame go through a PATCH that promotes the frame to a
 * keyframe server-side, never mutating derived data silently.
 */

export interface TimelineTrack {
  trackId: string;
  keyframes: Set<number>;
}

export type FrameKind = 'keyframe' | 'interpolated' | 'outside';

export class Timeline {
  current = 0;

  constructor(
    public frameCount: number,
    private tracks: Map<string, TimelineTrack> = new Map(),
  ) {}

  setTrack(trackId: string, keyframes: number[]): void {
    this.tracks.set(trackId, { trackId, keyframes: new Set(keyframes) });
  }

  removeTrack(trackId: string): void {
    this.tracks.delete(trackId);
  }

  frameKind(trackId: string, frame: number): FrameKind {
    const track = this.tracks.get(trackId);
    if (!track || track.keyframes.size === 0) return 'outside';
    if (track.keyframes.has(frame)) return 'keyframe';
    const frames = [...track.keyframes];
    const lo = Math.min(...frames);
    const hi = Math.max(...frames);
    return frame > lo && frame < hi ? 'interpolated' : 'outside';
  }

  /** Editing an interpolated frame must create a keyframe (PATCH upsert). */
  editPromotesKeyframe(trackId: string, frame: number): boolean {
    return this.frameKind(trackId, frame) !== 'keyframe';
  }

  seek(frame: number): number {
    this.current = Math.min(this.frameCount - 1, Math.max(0, frame));
    return this.current;
  }

  nextKeyframe(trackId: string): number | null {
    const track = this.tracks.get(trackId);
    if (!track) return null;
    const later = [...track.keyframes].filter((f) => f > this.current).sort((a, b) => a - b);
    return later.length ? later[0] : null;
  }

  prevKeyframe(trackId: string): number | null {
    const track = this.tracks.get(trackId);
    if (!track) return null;
    const earlier = [...track.keyframes].filter((f) => f < this.current).sort((a, b) => b - a);
    return earlier.length ? earlier[0] : null;
  }
}
