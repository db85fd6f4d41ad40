/**
 * Interactive annotation app: point-cloud viewer with box gizmos and the
 * world-origin handle, RGB/depth panes with live projections and the
 * scribble canvas, and a keyframe timeline.
 *
 * All geometry authority lives server-side; the UI previews edits with
 * the same math and reconciles on every response. In dev mode the
 * rendered projections are cross-checked against the engine's.
 */
import { AnnotationApi, StaleRevisionError } from './api.js';
import { visibilityCss } from './colorRamp.js';
import { gizmoToBoxEdit, GizmoMode } from './gizmo.js';
import { BOX_EDGES, projectBoxCorners } from './projection.js';
import { decodeRle, StrokeRecorder } from './scribble.js';
import { rectSelect3d } from './select3d.js';
import { Timeline } from './timeline.js';
import type { BoxDoc, ProjectSummary, ScribbleStroke } from './types.js';
import { ViewerCamera } from './viewerCamera.js';

const DEV_CROSS_CHECK = true;
const CROSS_CHECK_TOL_PX = 1e-6;

interface CloudCache {
  frame: number;
  points: [number, number, number][];
  selected: Set<number>;
}

export class App {
  api: AnnotationApi;
  project!: ProjectSummary;
  timeline!: Timeline;
  viewer: ViewerCamera;
  activeTrack: string | null = null;
  gizmoMode: GizmoMode = 'translate';
  boxes = new Map<string, BoxDoc[]>();
  cloud: CloudCache | null = null;
  session: { key: string; cropBox: [number, number, number, number] } | null = null;
  recorder: StrokeRecorder | null = null;

  private cloudCanvas: HTMLCanvasElement;
  private rgbCanvas: HTMLCanvasElement;
  private depthCanvas: HTMLCanvasElement;
  private timelineEl: HTMLElement;
  private statusEl: HTMLElement;

  constructor(base: string, root: HTMLElement) {
    this.api = new AnnotationApi(base);
    root.innerHTML = `
      <div class="panes">
        <canvas id="cloud" width="640" height="480"></canvas>
        <div class="frames">
          <canvas id="rgb"></canvas>
          <canvas id="depth"></canvas>
        </div>
      </div>
      <div id="timeline" class="timeline"></div>
      <div class="toolbar">
        <button id="mode-translate">translate</button>
        <button id="mode-scale">scale</button>
        <button id="mode-rotate">rotate</button>
        <button id="segment">segment</button>
        <button id="seed">seed from depth</button>
        <button id="save">save</button>
        <span id="status"></span>
      </div>`;
    this.cloudCanvas = root.querySelector('#cloud')!;
    this.rgbCanvas = root.querySelector('#rgb')!;
    this.depthCanvas = root.querySelector('#depth')!;
    this.timelineEl = root.querySelector('#timeline')!;
    this.statusEl = root.querySelector('#status')!;
    this.viewer = new ViewerCamera([this.cloudCanvas.width, this.cloudCanvas.height]);
    this.bindInput(root);
  }

  async start(): Promise<void> {
    this.project = await this.api.getProject();
    this.timeline = new Timeline(this.project.frame_count);
    const tracks = await this.api.listTracks();
    for (const t of tracks.tracks) this.timeline.setTrack(t.track_id, t.keyframes);
    this.activeTrack = tracks.tracks[0]?.track_id ?? null;
    await this.refreshBoxes();
    await this.loadFrame(0);
  }

  private status(msg: string): void {
    this.statusEl.textContent = msg;
  }

  /** Re-pull interpolations; the revision advanced under us otherwise. */
  async refreshBoxes(): Promise<void> {
    this.boxes.clear();
    const tracks = await this.api.listTracks();
    for (const t of tracks.tracks) {
      this.timeline.setTrack(t.track_id, t.keyframes);
      if (t.keyframes.length >= 2) {
        const doc = await this.api.interpolate(t.track_id);
        this.boxes.set(t.track_id, doc.boxes);
      } else if (t.keyframes.length === 1) {
        const detail = await this.api.getTrack(t.track_id);
        this.boxes.set(t.track_id, detail.keyframes);
      }
    }
  }

  async loadFrame(index: number): Promise<void> {
    this.timeline.seek(index);
    await Promise.all([
      this.drawImagePane(this.rgbCanvas, this.api.frameUrl(index, 'rgb'), 'rgb'),
      this.drawImagePane(this.depthCanvas, this.api.frameUrl(index, 'depth'), 'depth'),
    ]);
    const cloud = await this.api.getCloud(index);
    this.cloud = { frame: index, points: cloud.points, selected: new Set() };
    this.renderCloud();
    this.renderTimeline();
  }

  private async drawImagePane(canvas: HTMLCanvasElement, url: string, camera: 'rgb' | 'depth'): Promise<void> {
    const img = new Image();
    img.crossOrigin = 'anonymous';
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error(`failed to load ${url}`));
      img.src = url;
    });
    canvas.width = img.naturalWidth;
    canvas.height = img.naturalHeight;
    const ctx = canvas.getContext('2d')!;
    ctx.drawImage(img, 0, 0);
    this.overlayBoxes(ctx, camera);
  }

  private boxAt(trackId: string, frame: number): BoxDoc | undefined {
    return this.boxes.get(trackId)?.find((b) => b.frame === frame);
  }

  private overlayBoxes(ctx: CanvasRenderingContext2D, camera: 'rgb' | 'depth'): void {
    const frame = this.timeline.current;
    for (const [trackId] of this.boxes) {
      const box = this.boxAt(trackId, frame);
      if (!box) continue;
      const corners = projectBoxCorners(box, this.project.rig, camera);
      if (DEV_CROSS_CHECK && trackId === this.activeTrack) {
        void this.crossCheckProjection(trackId, frame, camera, corners);
      }
      ctx.strokeStyle = visibilityCss(box.visibility ?? 1);
      ctx.lineWidth = box.is_keyframe ? 2 : 1;
      ctx.beginPath();
      for (const [a, b] of BOX_EDGES) {
        ctx.moveTo(corners[a][0], corners[a][1]);
        ctx.lineTo(corners[b][0], corners[b][1]);
      }
      ctx.stroke();
    }
  }

  private async crossCheckProjection(
    trackId: string,
    frame: number,
    camera: 'rgb' | 'depth',
    local: [number, number][],
  ): Promise<void> {
    try {
      const server = await this.api.boxProjection(trackId, frame, camera);
      for (let i = 0; i < 8; i++) {
        const dx = Math.abs(server.corners[i][0] - local[i][0]);
        const dy = Math.abs(server.corners[i][1] - local[i][1]);
        if (dx > CROSS_CHECK_TOL_PX || dy > CROSS_CHECK_TOL_PX) {
          console.error(`projection drift on ${trackId}@${frame}: ${dx},${dy}px`);
          return;
        }
      }
    } catch {
      // projection endpoint can 404 while a track is being edited
    }
  }

  private renderCloud(): void {
    if (!this.cloud) return;
    const ctx = this.cloudCanvas.getContext('2d')!;
    ctx.fillStyle = '#111';
    ctx.fillRect(0, 0, this.cloudCanvas.width, this.cloudCanvas.height);
    const pts = this.cloud.points;
    for (let i = 0; i < pts.length; i++) {
      const vp = this.viewer.toViewport(pts[i]);
      if (!vp) continue;
      ctx.fillStyle = this.cloud.selected.has(i) ? '#ffd34d' : '#7fb3ff';
      ctx.fillRect(vp[0], vp[1], 2, 2);
    }
    // world-origin handle
    const origin = this.viewer.toViewport([0, 0, 0]);
    if (origin) {
      ctx.strokeStyle = '#ff5566';
      ctx.strokeRect(origin[0] - 4, origin[1] - 4, 8, 8);
    }
    this.renderCloudBoxes(ctx);
  }

  private renderCloudBoxes(ctx: CanvasRenderingContext2D): void {
    const frame = this.timeline.current;
    for (const [trackId] of this.boxes) {
      const box = this.boxAt(trackId, frame);
      if (!box) continue;
      ctx.strokeStyle = visibilityCss(box.visibility ?? 1);
      ctx.lineWidth = trackId === this.activeTrack ? 2 : 1;
      const corners = boxCornersForViewer(box).map((c) => this.viewer.toViewport(c));
      ctx.beginPath();
      for (const [a, b] of BOX_EDGES) {
        const pa = corners[a];
        const pb = corners[b];
        if (!pa || !pb) continue;
        ctx.moveTo(pa[0], pa[1]);
        ctx.lineTo(pb[0], pb[1]);
      }
      ctx.stroke();
    }
  }

  private renderTimeline(): void {
    const track = this.activeTrack;
    this.timelineEl.innerHTML = '';
    for (let f = 0; f < this.timeline.frameCount; f++) {
      const cell = document.createElement('span');
      const kind = track ? this.timeline.frameKind(track, f) : 'outside';
      cell.className = `cell ${kind}${f === this.timeline.current ? ' current' : ''}`;
      cell.title = `frame ${f} (${kind})`;
      cell.onclick = () => void this.loadFrame(f);
      this.timelineEl.appendChild(cell);
    }
  }

  /** Apply a drag/wheel gesture to the active track's box on this frame. */
  async applyGizmo(dragPx: [number, number], wheelSteps: number, shift: boolean): Promise<void> {
    const track = this.activeTrack;
    if (!track) return;
    const frame = this.timeline.current;
    const box = this.boxAt(track, frame);
    if (!box) return;
    const edit = gizmoToBoxEdit(
      this.gizmoMode === 'rotate'
        ? { mode: 'rotate', axis: 2, wheelSteps, shift }
        : { mode: this.gizmoMode, axis: 0, face: 1, dragPx },
      this.project.rig,
      'rgb',
      box,
    );
    try {
      // PATCH promotes interpolated frames to keyframes; never edits derived data
      await this.api.patchKeyframe(track, frame, {
        center: edit.center,
        size: edit.size,
        quaternion: edit.quaternion,
        occlusion: box.occlusion ?? 0,
      });
    } catch (err) {
      if (err instanceof StaleRevisionError) {
        await this.api.getProject();
        this.status('concurrent edit; refreshed');
      } else {
        throw err;
      }
    }
    await this.refreshBoxes();
    await this.loadFrame(frame);
  }

  async startSegmentation(rect: [number, number, number, number]): Promise<void> {
    const track = this.activeTrack;
    if (!track) return;
    const doc = await this.api.segmentInit({
      frame: this.timeline.current,
      track_id: track,
      modality: 'rgb',
      rect,
    });
    this.session = { key: doc.key, cropBox: doc.crop_box };
    this.recorder = new StrokeRecorder({
      x0: doc.crop_box[0],
      y0: doc.crop_box[1],
      x1: doc.crop_box[2],
      y1: doc.crop_box[3],
    });
    await this.iterateSegmentation([]);
  }

  async iterateSegmentation(extra: ScribbleStroke[]): Promise<void> {
    if (!this.session) {
      this.status('no active segmentation session');
      return;
    }
    const strokes = [...(this.recorder?.takePayload() ?? []), ...extra];
    try {
      const doc = await this.api.segmentIterate(this.session.key, strokes);
      this.renderMask(doc.mask, doc.crop_box);
      this.status(`energy ${doc.energy[doc.energy.length - 1]?.toFixed(1) ?? '-'}`);
    } catch (err) {
      if (err instanceof StaleRevisionError) {
        await this.api.getProject();
        this.status('session expired or concurrent edit; refreshed');
      } else {
        throw err;
      }
    }
  }

  private renderMask(rle: { shape: [number, number]; counts: number[] }, cropBox: number[]): void {
    const ctx = this.rgbCanvas.getContext('2d')!;
    const mask = decodeRle(rle);
    const [h, w] = rle.shape;
    const image = ctx.getImageData(cropBox[0], cropBox[1], w, h);
    for (let i = 0; i < mask.length; i++) {
      if (!mask[i]) continue;
      // mask tint: yellow, matching the convention users expect
      image.data[i * 4] = Math.min(255, image.data[i * 4] + 120);
      image.data[i * 4 + 1] = Math.min(255, image.data[i * 4 + 1] + 120);
    }
    ctx.putImageData(image, cropBox[0], cropBox[1]);
  }

  async rectSelect(drag: { x0: number; y0: number; x1: number; y1: number }, mode: 'add' | 'remove'): Promise<void> {
    const track = this.activeTrack;
    if (!track || !this.cloud) return;
    const payload = rectSelect3d(this.viewer, drag, mode);
    if (!payload) return; // zero-area rectangle: no request
    const doc = await this.api.segmentSelect3d({
      frame: this.cloud.frame,
      track_id: track,
      ...payload,
      commit: true,
    });
    this.cloud.selected = new Set(doc.selected);
    this.renderCloud();
  }

  private bindInput(root: HTMLElement): void {
    (root.querySelector('#mode-translate') as HTMLButtonElement).onclick = () => (this.gizmoMode = 'translate');
    (root.querySelector('#mode-scale') as HTMLButtonElement).onclick = () => (this.gizmoMode = 'scale');
    (root.querySelector('#mode-rotate') as HTMLButtonElement).onclick = () => (this.gizmoMode = 'rotate');
    (root.querySelector('#save') as HTMLButtonElement).onclick = () => void this.api.saveProject();
    (root.querySelector('#segment') as HTMLButtonElement).onclick = () => {
      const frame = this.timeline.current;
      const box = this.activeTrack ? this.boxAt(this.activeTrack, frame) : undefined;
      if (!box) return;
      const corners = projectBoxCorners(box, this.project.rig, 'rgb');
      const xs = corners.map((c) => c[0]);
      const ys = corners.map((c) => c[1]);
      void this.startSegmentation([
        Math.floor(Math.min(...xs)),
        Math.floor(Math.min(...ys)),
        Math.ceil(Math.max(...xs)),
        Math.ceil(Math.max(...ys)),
      ]);
    };
    (root.querySelector('#seed') as HTMLButtonElement).onclick = () => {
      if (this.session) void this.api.seedFromDepth(this.session.key).then(() => this.iterateSegmentation([]));
    };

    let dragging: { x: number; y: number; buttons: number } | null = null;
    this.cloudCanvas.onmousedown = (e) => (dragging = { x: e.offsetX, y: e.offsetY, buttons: e.buttons });
    this.cloudCanvas.onmousemove = (e) => {
      if (!dragging) return;
      const dx = e.offsetX - dragging.x;
      const dy = e.offsetY - dragging.y;
      if (dragging.buttons & 2) this.viewer.pan(dx, dy);
      else this.viewer.orbit(-dx * 0.005, dy * 0.005);
      dragging = { x: e.offsetX, y: e.offsetY, buttons: dragging.buttons };
      this.renderCloud();
    };
    this.cloudCanvas.onmouseup = (e) => {
      if (dragging && e.shiftKey) {
        void this.rectSelect(
          { x0: dragging.x, y0: dragging.y, x1: e.offsetX, y1: e.offsetY },
          e.altKey ? 'remove' : 'add',
        );
      }
      dragging = null;
    };
    this.cloudCanvas.onwheel = (e) => {
      e.preventDefault();
      if (this.gizmoMode === 'rotate' && this.activeTrack) {
        void this.applyGizmo([0, 0], Math.sign(-e.deltaY), e.shiftKey);
      } else {
        this.viewer.zoom(e.deltaY > 0 ? 1.1 : 0.9);
        this.renderCloud();
      }
    };

    let rgbDrag: { x: number; y: number } | null = null;
    this.rgbCanvas.onmousedown = (e) => {
      if (this.recorder && e.ctrlKey) {
        this.recorder.begin(e.altKey ? 'background' : 'foreground', 2.0);
        this.recorder.extend(e.offsetX - (this.session?.cropBox[0] ?? 0), e.offsetY - (this.session?.cropBox[1] ?? 0));
      } else {
        rgbDrag = { x: e.offsetX, y: e.offsetY };
      }
    };
    this.rgbCanvas.onmousemove = (e) => {
      if (this.recorder && e.ctrlKey && e.buttons) {
        this.recorder.extend(e.offsetX - (this.session?.cropBox[0] ?? 0), e.offsetY - (this.session?.cropBox[1] ?? 0));
      }
    };
    this.rgbCanvas.onmouseup = (e) => {
      if (this.recorder && e.ctrlKey) {
        this.recorder.end();
        void this.iterateSegmentation([]);
      } else if (rgbDrag && this.gizmoMode !== 'rotate') {
        void this.applyGizmo([e.offsetX - rgbDrag.x, e.offsetY - rgbDrag.y], 0, e.shiftKey);
      }
      rgbDrag = null;
    };
  }
}

function boxCornersForViewer(box: BoxDoc): [number, number, number][] {
  // world-frame corners; the viewer camera handles the rest
  const { quaternion, center, size } = box;
  const q = quaternion;
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  const [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
  const r = [
    [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
    [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
    [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
  ];
  const out: [number, number, number][] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        const l = [(sx * size[0]) / 2, (sy * size[1]) / 2, (sz * size[2]) / 2];
        out.push([
          center[0] + r[0][0] * l[0] + r[0][1] * l[1] + r[0][2] * l[2],
          center[1] + r[1][0] * l[0] + r[1][1] * l[1] + r[1][2] * l[2],
          center[2] + r[2][0] * l[0] + r[2][1] * l[1] + r[2][2] * l[2],
        ]);
      }
    }
  }
  return out;
}

export function mount(base: string, rootId = 'app'): App {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`missing #${rootId} element`);
  const app = new App(base, root);
  void app.start();
  return app;
}
