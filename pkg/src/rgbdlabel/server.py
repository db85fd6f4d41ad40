"""HTTP facade over the engine for the interactive front end.

JSON in and out everywhere except imagery, which is served as PNG. All
mutating endpoints carry the client's last-seen revision and fail with
409 when it is stale (optimistic concurrency, single-annotator sessions);
engine validation errors map one-to-one onto 422 responses.
"""
from __future__ import annotations

import io
import logging
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .boxes import Box3D, BoxTrack, categorize_difficulty, classify_segments, compute_truncation, interpolate_track, project_box, visibility
from .calib import ExtrinsicTransform, backproject_depth, transform_points
from .errors import AnnotationError, TrackConflict
from .project import (
    AnnotationProject,
    box_to_json,
    load_project,
    rig_to_json,
    save_project,
    tracks_from_json,
)
from .metrics import evaluate_dataset, render_report
from .segmentation import (
    GmmPair,
    InstanceMask,
    Scribble,
    SelectionRect3D,
    Trimap,
    apply_scribbles,
    colormap_depth,
    downsample_image,
    downsample_mask,
    downsample_trimap,
    grabcut_iterate,
    init_trimap,
    mask_from_selection,
    overlap_background,
    seed_rgb_from_depth,
    select_points,
    upsample_mask,
)
from .segmentation.trimap import HARD_BG, HARD_FG

logger = logging.getLogger(__name__)


# --- wire helpers ---------------------------------------------------------------

def rle_encode(mask: np.ndarray) -> dict:
    """Row-major run-length encoding; runs alternate starting with zeros."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return {"shape": list(mask.shape), "counts": []}
    changes = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"shape": list(mask.shape), "counts": counts}


def rle_decode(doc: dict) -> np.ndarray:
    shape = tuple(doc["shape"])
    out = np.zeros(int(np.prod(shape)), dtype=bool)
    pos = 0
    value = False
    for run in doc["counts"]:
        if value:
            out[pos : pos + run] = True
        pos += run
        value = not value
    return out.reshape(shape)


def png_response(write, array) -> Response:
    buf = io.BytesIO()
    write(buf, array)
    return Response(content=buf.getvalue(), media_type="image/png")


# --- request models ---------------------------------------------------------------

class Revisioned(BaseModel):
    revision: int


class BoxPayload(BaseModel):
    center: list[float] = Field(min_length=3, max_length=3)
    size: list[float] = Field(min_length=3, max_length=3)
    quaternion: list[float] = Field(min_length=4, max_length=4)
    occlusion: float = 0.0


class KeyframeRequest(BoxPayload, Revisioned):
    pass


class TrackCreate(Revisioned):
    track_id: str
    class_label: str


class WorldOriginRequest(Revisioned):
    rotation: list[list[float]]
    translation: list[float] = Field(min_length=3, max_length=3)


class SegmentInit(Revisioned):
    frame: int
    track_id: str
    modality: str = "rgb"
    rect: list[float] = Field(min_length=4, max_length=4)
    padding: int | None = None
    use_overlap_background: bool = True


class ScribblePayload(BaseModel):
    points: list[list[float]]
    radius: float = 2.0
    label: str


class SegmentIterate(Revisioned):
    key: str
    scribbles: list[ScribblePayload] = []
    iterations: int | None = None


class Select3DRequest(Revisioned):
    frame: int
    track_id: str
    view: list[list[float]]
    projection: list[list[float]]
    rect: list[float] = Field(min_length=4, max_length=4)
    mode: str = "add"
    viewport: list[int] = Field(min_length=2, max_length=2)
    commit: bool = False


class SeedFromDepthRequest(Revisioned):
    key: str


class EvaluateRequest(BaseModel):
    truth: dict


# --- session state ---------------------------------------------------------------

@dataclass
class SegmentSession:
    key: str
    frame: int
    track_id: str
    modality: str
    trimap: Trimap
    crop: np.ndarray
    gmms: GmmPair | None = None
    last_mask: np.ndarray | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceState:
    def __init__(self, project: AnnotationProject):
        self.project = project
        self.revision = 0
        self.mutation_lock = threading.RLock()
        self.sessions: dict[str, SegmentSession] = {}
        self.selections: dict[tuple[int, str], set[int]] = {}

    def check_revision(self, revision: int) -> None:
        if revision != self.revision:
            raise HTTPException(
                status_code=409,
                detail={"error": "stale_revision", "revision": self.revision},
            )

    def bump(self) -> int:
        self.revision += 1
        return self.revision


def _box_view(state: ServiceState, b: Box3D) -> dict:
    doc = box_to_json(b)
    t = compute_truncation(b, state.project.rig, "rgb")
    doc.update(
        {
            "track_id": b.track_id,
            "class_label": b.class_label,
            "is_keyframe": b.is_keyframe,
            "truncation": t,
            "visibility": visibility(t, b.occlusion),
            "difficulty": categorize_difficulty(t, b.occlusion),
        }
    )
    return doc


def create_app(project: AnnotationProject | str) -> FastAPI:
    if not isinstance(project, AnnotationProject):
        project = load_project(project)
    state = ServiceState(project)
    app = FastAPI(title="rgbdlabel", version="0.1.0")
    app.state.service = state

    @app.exception_handler(AnnotationError)
    async def engine_error(request: Request, exc: AnnotationError):
        return JSONResponse(
            status_code=422,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    def get_track(track_id: str) -> BoxTrack:
        track = state.project.tracks.get(track_id)
        if track is None:
            raise HTTPException(status_code=404, detail=f"unknown track {track_id}")
        return track

    def check_frame(index: int) -> int:
        if not 0 <= index < state.project.frame_count():
            raise HTTPException(status_code=404, detail=f"unknown frame {index}")
        return index

    # --- project ------------------------------------------------------------

    @app.get("/project")
    def get_project():
        p = state.project
        return {
            "revision": state.revision,
            "frame_count": p.frame_count(),
            "epsilon": p.epsilon,
            "undistorted": p.undistorted,
            "rgb_size": [p.rig.rgb.intrinsics.width, p.rig.rgb.intrinsics.height],
            "depth_size": [p.rig.depth.intrinsics.width, p.rig.depth.intrinsics.height],
            "depth_range": list(p.config.depth_range),
            "tracks": sorted(p.tracks),
            "rig": rig_to_json(p.rig),
        }

    @app.post("/project/save")
    def save():
        with state.mutation_lock:
            save_project(state.project)
        return {"saved": True, "revision": state.revision}

    # --- frames ---------------------------------------------------------------

    def _write_rgb(buf, arr):
        from PIL import Image

        Image.fromarray(np.asarray(arr, np.uint8), mode="RGB").save(buf, format="PNG")

    def _write_gray16(buf, arr):
        from PIL import Image

        Image.fromarray(np.asarray(arr, np.uint16)).save(buf, format="PNG")

    @app.get("/frames/{index}/rgb")
    def frame_rgb(index: int):
        check_frame(index)
        return png_response(_write_rgb, state.project.load_rgb(index))

    @app.get("/frames/{index}/depth")
    def frame_depth(index: int):
        check_frame(index)
        return png_response(_write_gray16, state.project.load_depth(index).values)

    @app.get("/frames/{index}/cloud")
    def frame_cloud(index: int, cap: int | None = Query(default=None)):
        check_frame(index)
        p = state.project
        cloud = backproject_depth(p.load_depth(index), p.rig.depth.intrinsics)
        cloud = transform_points(cloud, p.rig.world_origin)  # world frame
        limit = cap or p.config.cloud_cap
        stride = max(1, int(np.ceil(len(cloud) / limit)))
        pts = cloud.points[::stride]
        src = cloud.source_pixels[::stride]
        return {
            "revision": state.revision,
            "total": len(cloud),
            "points": pts.tolist(),
            "source_pixels": src.tolist(),
        }

    # --- tracks -----------------------------------------------------------------

    @app.get("/tracks")
    def list_tracks():
        return {
            "revision": state.revision,
            "tracks": [
                {
                    "track_id": t.track_id,
                    "class_label": t.class_label,
                    "keyframes": t.frames,
                }
                for _, t in sorted(state.project.tracks.items())
            ],
        }

    @app.post("/tracks", status_code=201)
    def create_track(req: TrackCreate):
        with state.mutation_lock:
            state.check_revision(req.revision)
            if req.track_id in state.project.tracks:
                raise TrackConflict(f"track {req.track_id} already exists")
            state.project.tracks[req.track_id] = BoxTrack(req.track_id, req.class_label)
            return {"revision": state.bump(), "track_id": req.track_id}

    @app.get("/tracks/{track_id}")
    def track_detail(track_id: str):
        track = get_track(track_id)
        return {
            "revision": state.revision,
            "track_id": track.track_id,
            "class_label": track.class_label,
            "keyframes": [_box_view(state, track.keyframes[f]) for f in track.frames],
        }

    @app.delete("/tracks/{track_id}")
    def delete_track(track_id: str, revision: int = Query()):
        with state.mutation_lock:
            state.check_revision(revision)
            get_track(track_id)
            del state.project.tracks[track_id]
            return {"revision": state.bump()}

    def _box_from_payload(track: BoxTrack, frame: int, req: BoxPayload) -> Box3D:
        return Box3D(
            center=req.center,
            size=req.size,
            orientation=req.quaternion,
            frame_index=frame,
            track_id=track.track_id,
            class_label=track.class_label,
            occlusion=req.occlusion,
        )

    @app.post("/tracks/{track_id}/keyframes/{frame}", status_code=201)
    def add_keyframe(track_id: str, frame: int, req: KeyframeRequest):
        with state.mutation_lock:
            state.check_revision(req.revision)
            track = get_track(track_id)
            check_frame(frame)
            track.add_keyframe(_box_from_payload(track, frame, req))
            return {"revision": state.bump()}

    @app.patch("/tracks/{track_id}/keyframes/{frame}")
    def patch_keyframe(track_id: str, frame: int, req: KeyframeRequest):
        """Upsert: editing an interpolated frame promotes it to a keyframe."""
        with state.mutation_lock:
            state.check_revision(req.revision)
            track = get_track(track_id)
            check_frame(frame)
            track.set_keyframe(_box_from_payload(track, frame, req))
            return {"revision": state.bump()}

    @app.delete("/tracks/{track_id}/keyframes/{frame}")
    def delete_keyframe(track_id: str, frame: int, revision: int = Query()):
        with state.mutation_lock:
            state.check_revision(revision)
            track = get_track(track_id)
            if frame not in track.keyframes:
                raise HTTPException(status_code=404, detail=f"no keyframe at {frame}")
            track.remove_keyframe(frame)
            return {"revision": state.bump()}

    @app.post("/tracks/{track_id}/interpolate")
    def interpolate(
        track_id: str,
        epsilon: float | None = Query(default=None),
        mode: str = Query(default="hybrid"),
    ):
        track = get_track(track_id)
        eps = epsilon if epsilon is not None else state.project.epsilon
        boxes = interpolate_track(track, eps, mode=mode)
        modes = classify_segments(track, eps) if mode == "hybrid" else None
        return {
            "revision": state.revision,
            "boxes": [_box_view(state, b) for b in boxes],
            "gap_modes": modes if modes is not None else [mode] * (len(track.frames) - 1),
        }

    @app.get("/tracks/{track_id}/projection/{frame}")
    def box_projection(track_id: str, frame: int, camera: str = Query(default="rgb")):
        track = get_track(track_id)
        check_frame(frame)
        if len(track.keyframes) >= 2:
            boxes = {b.frame_index: b for b in interpolate_track(track, state.project.epsilon)}
        else:
            boxes = dict(track.keyframes)
        if frame not in boxes:
            raise HTTPException(status_code=404, detail=f"track has no box at {frame}")
        corners, rect = project_box(boxes[frame], state.project.rig, camera)
        return {
            "revision": state.revision,
            "corners": corners.tolist(),
            "rect": list(rect),
        }

    # --- calibration ---------------------------------------------------------------

    @app.post("/calibration/world-origin")
    def set_world_origin(req: WorldOriginRequest):
        with state.mutation_lock:
            state.check_revision(req.revision)
            xf = ExtrinsicTransform(np.array(req.rotation), np.array(req.translation))
            state.project.set_world_origin(xf)
            return {"revision": state.bump()}

    # --- segmentation ----------------------------------------------------------------

    def _session_key(frame: int, track_id: str, modality: str) -> str:
        return f"{frame}:{track_id}:{modality}"

    def _load_modality_image(frame: int, modality: str) -> np.ndarray:
        if modality == "rgb":
            return state.project.load_rgb(frame).astype(np.float64)
        _, gray = colormap_depth(
            state.project.load_depth(frame), state.project.config.depth_range
        )
        return gray.astype(np.float64)

    @app.post("/segment/init")
    def segment_init(req: SegmentInit):
        with state.mutation_lock:
            state.check_revision(req.revision)
            check_frame(req.frame)
            if req.modality not in ("rgb", "depth"):
                raise HTTPException(status_code=422, detail="modality must be rgb|depth")
            p = state.project
            intr = p.rig.camera(req.modality).intrinsics
            trimap = init_trimap(tuple(req.rect), (intr.width, intr.height), req.padding)
            if req.use_overlap_background:
                others = p.masks.others(req.frame, req.modality, exclude=req.track_id)
                if others:
                    trimap = overlap_background(trimap, others, req.frame, req.modality)
            image = _load_modality_image(req.frame, req.modality)
            x0, y0, x1, y1 = trimap.crop_box
            session = SegmentSession(
                key=_session_key(req.frame, req.track_id, req.modality),
                frame=req.frame,
                track_id=req.track_id,
                modality=req.modality,
                trimap=trimap,
                crop=image[y0:y1, x0:x1],
            )
            state.sessions[session.key] = session
            # wall-clock timestamps only; timing analysis happens elsewhere
            logger.info("session %s opened at %.3f", session.key, time.time())
            return {
                "revision": state.bump(),
                "key": session.key,
                "crop_box": list(trimap.crop_box),
                "rect": list(trimap.rect),
            }

    def _get_session(key: str) -> SegmentSession:
        session = state.sessions.get(key)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {key}")
        return session

    def _publish_mask(session: SegmentSession, crop_mask: np.ndarray) -> None:
        p = state.project
        track = p.tracks.get(session.track_id)
        label = track.class_label if track else ""
        frame_mask = session.trimap.to_frame_mask(crop_mask)
        p.masks.replace(
            InstanceMask(session.track_id, session.frame, session.modality, frame_mask),
            label,
        )

    @app.post("/segment/iterate")
    def segment_iterate(req: SegmentIterate):
        session = _get_session(req.key)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail={"error": "iteration_in_flight"})
        try:
            with state.mutation_lock:
                state.check_revision(req.revision)
                if req.scribbles:
                    strokes = [
                        Scribble(points=s.points, radius=s.radius, label=s.label)
                        for s in req.scribbles
                    ]
                    session.trimap = apply_scribbles(session.trimap, strokes)
                cfg = state.project.config.grabcut
                iters = req.iterations or cfg.iterations
                factor = max(1, cfg.downsample)
                if factor > 1:
                    small = Trimap(
                        downsample_trimap(session.trimap.labels, factor),
                        session.trimap.rect,
                        session.trimap.crop_box,
                        session.trimap.frame_size,
                    )
                    initial = (
                        downsample_mask(session.last_mask, factor)
                        if session.last_mask is not None
                        else None
                    )
                    result = grabcut_iterate(
                        downsample_image(session.crop, factor),
                        small,
                        gmms=session.gmms,
                        iterations=iters,
                        params=cfg,
                        initial_mask=initial,
                    )
                    mask = upsample_mask(result.mask, factor, session.trimap.labels.shape)
                    mask[session.trimap.labels == HARD_FG] = True
                    mask[session.trimap.labels == HARD_BG] = False
                else:
                    result = grabcut_iterate(
                        session.crop, session.trimap, gmms=session.gmms, iterations=iters,
                        params=cfg, initial_mask=session.last_mask,
                    )
                    mask = result.mask
                session.gmms = result.gmms
                session.last_mask = mask
                _publish_mask(session, mask)
                logger.info("session %s iterated at %.3f", session.key, time.time())
                return {
                    "revision": state.bump(),
                    "mask": rle_encode(mask),
                    "crop_box": list(session.trimap.crop_box),
                    "energy": result.energies,
                }
        finally:
            session.lock.release()

    @app.post("/segment/seed-from-depth")
    def segment_seed(req: SeedFromDepthRequest):
        session = _get_session(req.key)
        with state.mutation_lock:
            state.check_revision(req.revision)
            if session.modality != "rgb":
                raise HTTPException(status_code=422, detail="seeding targets rgb sessions")
            p = state.project
            depth_mask = p.masks.get(session.frame, "depth", session.track_id)
            if depth_mask is None:
                raise HTTPException(
                    status_code=404,
                    detail=f"no depth mask for {session.track_id} at frame {session.frame}",
                )
            depth = p.load_depth(session.frame)
            before = int((session.trimap.labels == HARD_FG).sum())
            session.trimap = seed_rgb_from_depth(depth_mask, depth, p.rig, session.trimap)
            seeded = int((session.trimap.labels == HARD_FG).sum()) - before
            return {"revision": state.bump(), "seeded": seeded}

    @app.post("/segment/select3d")
    def segment_select3d(req: Select3DRequest):
        with state.mutation_lock:
            state.check_revision(req.revision)
            check_frame(req.frame)
            p = state.project
            cloud = backproject_depth(p.load_depth(req.frame), p.rig.depth.intrinsics)
            world_cloud = transform_points(cloud, p.rig.world_origin)
            sel = SelectionRect3D(
                np.array(req.view),
                np.array(req.projection),
                tuple(req.rect),
                req.mode,
                tuple(req.viewport),
            )
            key = (req.frame, req.track_id)
            current = state.selections.get(key, set())
            updated = select_points(world_cloud, sel, current)
            state.selections[key] = updated
            out = {"revision": state.bump(), "selected": sorted(updated)}
            if req.commit:
                mask = mask_from_selection(
                    updated,
                    cloud,
                    (p.rig.depth.intrinsics.height, p.rig.depth.intrinsics.width),
                    req.track_id,
                    req.frame,
                )
                track = p.tracks.get(req.track_id)
                p.masks.replace(mask, track.class_label if track else "")
                out["mask"] = rle_encode(mask.mask)
            return out

    # --- evaluation --------------------------------------------------------------------

    @app.post("/evaluate")
    def evaluate(req: EvaluateRequest):
        truth_tracks, _ = tracks_from_json(req.truth)
        ev = evaluate_dataset(
            state.project.tracks,
            truth_tracks,
            user_masks=state.project.masks.as_binary_dict(),
            truth_masks=None,
            epsilon=state.project.epsilon,
        )
        return {
            "revision": state.revision,
            "report": ev.as_dict(),
            "text": render_report(ev),
        }

    return app


def serve(project_path: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(project_path), host=host, port=port)
