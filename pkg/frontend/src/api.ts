/**
 * Typed client for the annotation service.
 *
 * Tracks the server revision: every mutation sends the last-seen value
 * and adopts the one returned. A 409 means another write won the race;
 * callers refetch and retry their edit.
 */
import type { BoxDoc, ProjectSummary, RleMask, ScribbleStroke } from './types.js';

export class StaleRevisionError extends Error {
  constructor(public serverRevision: number) {
    super(`stale revision; server is at ${serverRevision}`);
  }
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

export interface CloudPayload {
  revision: number;
  total: number;
  points: [number, number, number][];
  source_pixels: [number, number][];
}

export interface InterpolationPayload {
  revision: number;
  boxes: BoxDoc[];
  gap_modes: string[];
}

export interface SegmentInitPayload {
  revision: number;
  key: string;
  crop_box: [number, number, number, number];
  rect: [number, number, number, number];
}

export interface SegmentIteratePayload {
  revision: number;
  mask: RleMask;
  crop_box: [number, number, number, number];
  energy: number[];
}

export class AnnotationApi {
  revision = 0;

  constructor(private base: string, private fetchFn: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, {
      headers: { 'content-type': 'application/json' },
      ...init,
    });
    if (res.status === 409) {
      const body = await res.json().catch(() => ({}));
      const server = body?.detail?.revision ?? body?.revision ?? -1;
      throw new StaleRevisionError(server);
    }
    if (!res.ok) {
      const body = await res.json().catch(() => ({}));
      throw new ApiError(res.status, body?.error ?? 'http_error', body?.message ?? res.statusText);
    }
    const doc = (await res.json()) as T & { revision?: number };
    if (typeof doc.revision === 'number') this.revision = doc.revision;
    return doc;
  }

  private post<T>(path: string, body: Record<string, unknown>): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      body: JSON.stringify({ ...body, revision: this.revision }),
    });
  }

  getProject(): Promise<ProjectSummary> {
    return this.request<ProjectSummary>('/project');
  }

  saveProject(): Promise<{ saved: boolean }> {
    return this.request('/project/save', { method: 'POST' });
  }

  frameUrl(index: number, modality: 'rgb' | 'depth'): string {
    return `${this.base}/frames/${index}/${modality}`;
  }

  getCloud(index: number, cap?: number): Promise<CloudPayload> {
    const q = cap ? `?cap=${cap}` : '';
    return this.request<CloudPayload>(`/frames/${index}/cloud${q}`);
  }

  listTracks(): Promise<{ tracks: { track_id: string; class_label: string; keyframes: number[] }[] }> {
    return this.request('/tracks');
  }

  createTrack(trackId: string, classLabel: string): Promise<{ track_id: string }> {
    return this.post('/tracks', { track_id: trackId, class_label: classLabel });
  }

  getTrack(trackId: string): Promise<{ track_id: string; class_label: string; keyframes: BoxDoc[] }> {
    return this.request(`/tracks/${trackId}`);
  }

  addKeyframe(trackId: string, frame: number, box: Omit<BoxDoc, 'frame'>): Promise<unknown> {
    return this.post(`/tracks/${trackId}/keyframes/${frame}`, box as Record<string, unknown>);
  }

  /** Upsert; editing an interpolated frame promotes it to a keyframe. */
  patchKeyframe(trackId: string, frame: number, box: Omit<BoxDoc, 'frame'>): Promise<unknown> {
    return this.request(`/tracks/${trackId}/keyframes/${frame}`, {
      method: 'PATCH',
      body: JSON.stringify({ ...box, revision: this.revision }),
    });
  }

  deleteKeyframe(trackId: string, frame: number): Promise<unknown> {
    return this.request(`/tracks/${trackId}/keyframes/${frame}?revision=${this.revision}`, {
      method: 'DELETE',
    });
  }

  interpolate(trackId: string, epsilon?: number, mode?: string): Promise<InterpolationPayload> {
    const params = new URLSearchParams();
    if (epsilon !== undefined) params.set('epsilon', String(epsilon));
    if (mode) params.set('mode', mode);
    const q = params.size ? `?${params}` : '';
    return this.request(`/tracks/${trackId}/interpolate${q}`, { method: 'POST' });
  }

  boxProjection(trackId: string, frame: number, camera: 'rgb' | 'depth'): Promise<{ corners: [number, number][]; rect: number[] }> {
    return this.request(`/tracks/${trackId}/projection/${frame}?camera=${camera}`);
  }

  setWorldOrigin(rotation: number[][], translation: number[]): Promise<unknown> {
    return this.post('/calibration/world-origin', { rotation, translation });
  }

  segmentInit(body: {
    frame: number;
    track_id: string;
    modality: 'rgb' | 'depth';
    rect: number[];
    padding?: number;
  }): Promise<SegmentInitPayload> {
    return this.post('/segment/init', body);
  }

  segmentIterate(key: string, scribbles: ScribbleStroke[], iterations?: number): Promise<SegmentIteratePayload> {
    return this.post('/segment/iterate', { key, scribbles, iterations });
  }

  segmentSelect3d(body: {
    frame: number;
    track_id: string;
    view: number[][];
    projection: number[][];
    rect: number[];
    mode: 'add' | 'remove';
    viewport: [number, number];
    commit?: boolean;
  }): Promise<{ selected: number[]; mask?: RleMask }> {
    return this.post('/segment/select3d', body);
  }

  seedFromDepth(key: string): Promise<{ seeded: number }> {
    return this.post('/segment/seed-from-depth', { key });
  }

  evaluate(truth: unknown): Promise<{ report: unknown; text: string }> {
    return this.request('/evaluate', { method: 'POST', body: JSON.stringify({ truth }) });
  }
}
