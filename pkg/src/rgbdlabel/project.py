"""On-disk project model: frames, calibration, annotations, masks.

A project is a single portable directory::

    project/
      project.json        frame manifest + undistortion state
      calibration.json    both cameras, stereo extrinsic, world origin
      annotations.json    box tracks (keyframes only) + interpolation epsilon
      config.json         segmentation and viewer parameters
      frames/             rgb_XXXXXX.png (8-bit), depth_XXXXXX.png (16-bit)
      masks/              indexed instance masks + instances.json sidecar

All structured documents carry ``format_version`` 1 and serialize floats
at full precision, so save/load round trips are lossless. Saves go
through temp files plus atomic renames under a writer lock file.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .boxes import Box3D, BoxTrack, DEFAULT_EPSILON, categorize_difficulty, compute_truncation, interpolate_track, visibility
from .calib import (
    Camera,
    CameraIntrinsics,
    CameraRig,
    DepthMap,
    DistortionCoeffs,
    ExtrinsicTransform,
)
from .errors import (
    InvalidCalibration,
    InvalidRotation,
    IoFailure,
    MaskConflict,
    MissingFile,
    NothingToExport,
    SchemaVersionUnsupported,
    WriterLockHeld,
)
from .segmentation import GrabCutParams, InstanceMask
from . import pngio

FORMAT_VERSION = 1
LOCK_NAME = ".writer.lock"


# --- config -------------------------------------------------------------------

@dataclass
class ProjectConfig:
    epsilon: float = DEFAULT_EPSILON
    depth_range: tuple[float, float] = (300.0, 5000.0)
    grabcut: GrabCutParams = field(default_factory=GrabCutParams)
    cloud_cap: int = 200_000

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "epsilon": float(self.epsilon),
            "depth_range": [float(self.depth_range[0]), float(self.depth_range[1])],
            "grabcut": {
                "components": self.grabcut.components,
                "gamma": float(self.grabcut.gamma),
                "iterations": self.grabcut.iterations,
                "early_stop_rel": float(self.grabcut.early_stop_rel),
                "downsample": self.grabcut.downsample,
            },
            "cloud_cap": self.cloud_cap,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProjectConfig":
        _check_version(doc, "config")
        g = doc.get("grabcut", {})
        return cls(
            epsilon=float(doc.get("epsilon", DEFAULT_EPSILON)),
            depth_range=tuple(doc.get("depth_range", (300.0, 5000.0))),
            grabcut=GrabCutParams(
                components=int(g.get("components", 5)),
                gamma=float(g.get("gamma", 50.0)),
                iterations=int(g.get("iterations", 5)),
                early_stop_rel=float(g.get("early_stop_rel", 1e-4)),
                downsample=int(g.get("downsample", 1)),
            ),
            cloud_cap=int(doc.get("cloud_cap", 200_000)),
        )


# --- JSON (de)serialization helpers --------------------------------------------

def _check_version(doc: dict, what: str) -> None:
    v = doc.get("format_version")
    if v != FORMAT_VERSION:
        raise SchemaVersionUnsupported(f"{what}: format_version {v!r} unsupported")


def intrinsics_to_json(i: CameraIntrinsics) -> dict:
    return {
        "fx": float(i.fx), "fy": float(i.fy),
        "cx": float(i.cx), "cy": float(i.cy),
        "width": int(i.width), "height": int(i.height),
    }


def intrinsics_from_json(d: dict) -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=d["fx"], fy=d["fy"], cx=d["cx"], cy=d["cy"],
        width=d["width"], height=d["height"],
    )


def distortion_to_json(d: DistortionCoeffs) -> dict:
    return {"k1": d.k1, "k2": d.k2, "k3": d.k3, "p1": d.p1, "p2": d.p2}


def transform_to_json(t: ExtrinsicTransform) -> dict:
    return {
        "rotation": [[float(v) for v in row] for row in t.rotation],
        "translation": [float(v) for v in t.translation],
    }


def transform_from_json(d: dict) -> ExtrinsicTransform:
    return ExtrinsicTransform(np.array(d["rotation"]), np.array(d["translation"]))


def rig_to_json(rig: CameraRig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "rgb": {
            "intrinsics": intrinsics_to_json(rig.rgb.intrinsics),
            "distortion": distortion_to_json(rig.rgb.distortion),
        },
        "depth": {
            "intrinsics": intrinsics_to_json(rig.depth.intrinsics),
            "distortion": distortion_to_json(rig.depth.distortion),
        },
        "rgb_from_depth": transform_to_json(rig.rgb_from_depth),
        "world_origin": transform_to_json(rig.world_origin),
    }


def rig_from_json(doc: dict) -> CameraRig:
    _check_version(doc, "calibration")
    try:
        return CameraRig(
            rgb=Camera(
                intrinsics_from_json(doc["rgb"]["intrinsics"]),
                DistortionCoeffs(**doc["rgb"]["distortion"]),
            ),
            depth=Camera(
                intrinsics_from_json(doc["depth"]["intrinsics"]),
                DistortionCoeffs(**doc["depth"]["distortion"]),
            ),
            rgb_from_depth=transform_from_json(doc["rgb_from_depth"]),
            world_origin=transform_from_json(doc["world_origin"]),
        )
    except (InvalidRotation, ValueError, KeyError) as exc:
        raise InvalidCalibration(str(exc)) from exc


def box_to_json(b: Box3D) -> dict:
    return {
        "frame": int(b.frame_index),
        "center": [float(v) for v in b.center],
        "size": [float(v) for v in b.size],
        "quaternion": [float(v) for v in b.orientation],
        "occlusion": float(b.occlusion),
    }


def box_from_json(d: dict, track_id: str, class_label: str) -> Box3D:
    return Box3D(
        center=d["center"],
        size=d["size"],
        orientation=d["quaternion"],
        frame_index=int(d["frame"]),
        track_id=track_id,
        class_label=class_label,
        occlusion=float(d.get("occlusion", 0.0)),
        is_keyframe=True,
    )


def tracks_to_json(tracks: dict[str, BoxTrack], epsilon: float) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "epsilon": float(epsilon),
        "tracks": [
            {
                "track_id": t.track_id,
                "class_label": t.class_label,
                "keyframes": [box_to_json(t.keyframes[f]) for f in t.frames],
            }
            for _, t in sorted(tracks.items())
        ],
    }


def tracks_from_json(doc: dict) -> tuple[dict[str, BoxTrack], float]:
    _check_version(doc, "annotations")
    tracks: dict[str, BoxTrack] = {}
    for td in doc.get("tracks", []):
        track = BoxTrack(td["track_id"], td["class_label"])
        for kd in td.get("keyframes", []):
            track.add_keyframe(box_from_json(kd, track.track_id, track.class_label))
        tracks[track.track_id] = track
    return tracks, float(doc.get("epsilon", DEFAULT_EPSILON))


# --- mask registry --------------------------------------------------------------

@dataclass
class IndexedMask:
    """One frame/modality: instance indices per pixel plus the id table."""

    index_map: np.ndarray
    table: dict[int, tuple[str, str]]  # index -> (track_id, class_label)


class MaskStore:
    """All persisted instance masks, keyed by (frame, modality)."""

    def __init__(self) -> None:
        self._data: dict[tuple[int, str], IndexedMask] = {}

    def add(self, mask: InstanceMask, class_label: str) -> int:
        key = (mask.frame_index, mask.modality)
        entry = self._data.get(key)
        if entry is None:
            entry = IndexedMask(np.zeros(mask.mask.shape, dtype=np.uint8), {})
            self._data[key] = entry
        if any(tid == mask.instance_id for tid, _ in entry.table.values()):
            raise MaskConflict(
                f"mask for {mask.instance_id} already exists at frame "
                f"{mask.frame_index} ({mask.modality})"
            )
        if entry.index_map.shape != mask.mask.shape:
            raise ValueError("mask shape differs from existing masks of this frame")
        index = max(entry.table, default=0) + 1
        entry.index_map[mask.mask] = index
        entry.table[index] = (mask.instance_id, class_label)
        return index

    def remove(self, frame: int, modality: str, track_id: str) -> None:
        entry = self._data.get((frame, modality))
        if entry is None:
            raise KeyError(f"no masks at frame {frame} ({modality})")
        idx = next(
            (i for i, (tid, _) in entry.table.items() if tid == track_id), None
        )
        if idx is None:
            raise KeyError(f"no mask for {track_id} at frame {frame} ({modality})")
        entry.index_map[entry.index_map == idx] = 0
        del entry.table[idx]

    def replace(self, mask: InstanceMask, class_label: str) -> int:
        try:
            self.remove(mask.frame_index, mask.modality, mask.instance_id)
        except KeyError:
            pass
        return self.add(mask, class_label)

    def get(self, frame: int, modality: str, track_id: str) -> InstanceMask | None:
        entry = self._data.get((frame, modality))
        if entry is None:
            return None
        for idx, (tid, _) in entry.table.items():
            if tid == track_id:
                return InstanceMask(tid, frame, modality, entry.index_map == idx)
        return None

    def others(self, frame: int, modality: str, exclude: str) -> list[InstanceMask]:
        entry = self._data.get((frame, modality))
        if entry is None:
            return []
        return [
            InstanceMask(tid, frame, modality, entry.index_map == idx)
            for idx, (tid, _) in entry.table.items()
            if tid != exclude
        ]

    def items(self):
        return sorted(self._data.items())

    def as_binary_dict(self) -> dict[tuple[int, str, str], np.ndarray]:
        out = {}
        for (frame, modality), entry in self._data.items():
            for idx, (tid, _) in entry.table.items():
                out[(frame, modality, tid)] = entry.index_map == idx
        return out

    def __len__(self) -> int:
        return sum(len(e.table) for e in self._data.values())


# --- the project -----------------------------------------------------------------

@dataclass
class FrameRef:
    rgb: str
    depth: str


@dataclass
class AnnotationProject:
    root: Path
    frames: list[FrameRef]
    rig: CameraRig
    tracks: dict[str, BoxTrack] = field(default_factory=dict)
    masks: MaskStore = field(default_factory=MaskStore)
    config: ProjectConfig = field(default_factory=ProjectConfig)
    epsilon: float = DEFAULT_EPSILON
    undistorted: bool = False

    def frame_count(self) -> int:
        return len(self.frames)

    def rgb_path(self, index: int) -> Path:
        return self.root / self.frames[index].rgb

    def depth_path(self, index: int) -> Path:
        return self.root / self.frames[index].depth

    def load_rgb(self, index: int) -> np.ndarray:
        return pngio.read_rgb(self.rgb_path(index))

    def load_depth(self, index: int) -> DepthMap:
        return DepthMap(pngio.read_depth(self.depth_path(index)))

    def set_world_origin(self, xf: ExtrinsicTransform) -> None:
        """Replace the world-origin transform; stored boxes keep their
        world coordinates, so camera-frame projections shift accordingly."""
        self.rig = replace(self.rig, world_origin=xf)


def set_world_origin(project: AnnotationProject, xf: ExtrinsicTransform) -> AnnotationProject:
    project.set_world_origin(xf)
    return project


# --- load / save -------------------------------------------------------------------

def _read_json(path: Path, what: str) -> dict:
    if not path.exists():
        raise MissingFile(str(path))
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_project(root: str | Path) -> AnnotationProject:
    """Load and fully validate a project directory."""
    root = Path(root)
    if not root.exists():
        raise MissingFile(str(root))
    manifest = _read_json(root / "project.json", "project")
    _check_version(manifest, "project")
    frames = [FrameRef(f["rgb"], f["depth"]) for f in manifest.get("frames", [])]
    for ref in frames:
        for rel in (ref.rgb, ref.depth):
            if not (root / rel).exists():
                raise MissingFile(str(root / rel))
    rig = rig_from_json(_read_json(root / "calibration.json", "calibration"))
    tracks, epsilon = tracks_from_json(_read_json(root / "annotations.json", "annotations"))
    config = ProjectConfig.from_json(_read_json(root / "config.json", "config"))

    masks = MaskStore()
    sidecar_path = root / "masks" / "instances.json"
    if sidecar_path.exists():
        sidecar = _read_json(sidecar_path, "masks")
        _check_version(sidecar, "masks")
        by_file: dict[str, list[dict]] = {}
        for entry in sidecar.get("entries", []):
            by_file.setdefault(entry["file"], []).append(entry)
        for fname, entries in sorted(by_file.items()):
            index_map = pngio.read_index(root / "masks" / fname)
            for e in entries:
                binary = index_map == e["index"]
                masks.add(
                    InstanceMask(e["track_id"], e["frame"], e["modality"], binary),
                    e["class_label"],
                )
    return AnnotationProject(
        root=root,
        frames=frames,
        rig=rig,
        tracks=tracks,
        masks=masks,
        config=config,
        epsilon=epsilon,
        undistorted=bool(manifest.get("undistorted", False)),
    )


class writer_lock:
    """Exclusive writer lock over a project directory (lock file)."""

    def __init__(self, root: Path):
        self.path = Path(root) / LOCK_NAME

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WriterLockHeld(f"another writer holds {self.path}") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False


def _atomic_write_json(path: Path, doc: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"failed writing {path}: {exc}") from exc


def _mask_file_name(frame: int, modality: str) -> str:
    return f"{modality}_{frame:06d}.png"


def save_project(project: AnnotationProject) -> None:
    """Persist all project documents atomically (temp file + rename)."""
    root = project.root
    root.mkdir(parents=True, exist_ok=True)
    with writer_lock(root):
        _atomic_write_json(
            root / "project.json",
            {
                "format_version": FORMAT_VERSION,
                "undistorted": project.undistorted,
                "frames": [{"rgb": f.rgb, "depth": f.depth} for f in project.frames],
            },
        )
        _atomic_write_json(root / "calibration.json", rig_to_json(project.rig))
        _atomic_write_json(
            root / "annotations.json", tracks_to_json(project.tracks, project.epsilon)
        )
        _atomic_write_json(root / "config.json", project.config.to_json())

        masks_dir = root / "masks"
        masks_dir.mkdir(exist_ok=True)
        entries = []
        for (frame, modality), entry in project.masks.items():
            fname = _mask_file_name(frame, modality)
            tmp = masks_dir / (fname + ".tmp")
            try:
                pngio.write_index(tmp, entry.index_map)
                os.replace(tmp, masks_dir / fname)
            except OSError as exc:
                raise IoFailure(f"failed writing {fname}: {exc}") from exc
            for idx in sorted(entry.table):
                tid, label = entry.table[idx]
                entries.append(
                    {
                        "file": fname,
                        "frame": frame,
                        "modality": modality,
                        "index": idx,
                        "track_id": tid,
                        "class_label": label,
                    }
                )
        _atomic_write_json(
            masks_dir / "instances.json",
            {"format_version": FORMAT_VERSION, "entries": entries},
        )


# --- export ---------------------------------------------------------------------

FLAT_HEADER = (
    "frame,track_id,class_label,center_x,center_y,center_z,"
    "size_x,size_y,size_z,quat_w,quat_x,quat_y,quat_z,"
    "occlusion,truncation,visibility,difficulty,is_keyframe"
)


def _flat_rows(project: AnnotationProject) -> list[str]:
    rows = []
    for tid in sorted(project.tracks):
        track = project.tracks[tid]
        if len(track.keyframes) >= 2:
            boxes = interpolate_track(track, project.epsilon)
        elif len(track.keyframes) == 1:
            boxes = track.ordered_keyframes()
        else:
            continue
        for b in boxes:
            t = compute_truncation(b, project.rig, "rgb")
            v = visibility(t, b.occlusion)
            rows.append(
                ",".join(
                    [
                        str(b.frame_index),
                        b.track_id,
                        b.class_label,
                        *(repr(float(x)) for x in b.center),
                        *(repr(float(x)) for x in b.size),
                        *(repr(float(x)) for x in b.orientation),
                        repr(float(b.occlusion)),
                        repr(float(t)),
                        repr(float(v)),
                        categorize_difficulty(t, b.occlusion),
                        "1" if b.is_keyframe else "0",
                    ]
                )
            )
    rows.sort(key=lambda r: (int(r.split(",")[0]), r.split(",")[1]))
    return rows


def export_annotations(
    project: AnnotationProject, fmt: str, out_dir: str | Path | None = None
) -> list[Path]:
    """Materialize derived data: per-frame box rows or indexed mask PNGs."""
    out = Path(out_dir) if out_dir is not None else project.root / "export"
    if fmt == "flat_per_frame":
        rows = _flat_rows(project)
        if not rows:
            raise NothingToExport("project has no annotated tracks")
        out.mkdir(parents=True, exist_ok=True)
        path = out / "boxes.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(FLAT_HEADER + "\n")
            fh.write("\n".join(rows) + "\n")
        return [path]
    if fmt == "masks_png":
        if len(project.masks) == 0:
            raise NothingToExport("project has no masks")
        out.mkdir(parents=True, exist_ok=True)
        written = []
        entries = []
        for (frame, modality), entry in project.masks.items():
            fname = _mask_file_name(frame, modality)
            pngio.write_index(out / fname, entry.index_map)
            written.append(out / fname)
            for idx in sorted(entry.table):
                tid, label = entry.table[idx]
                entries.append(
                    {
                        "file": fname,
                        "frame": frame,
                        "modality": modality,
                        "index": idx,
                        "track_id": tid,
                        "class_label": label,
                    }
                )
        sidecar = out / "instances.json"
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(
                {"format_version": FORMAT_VERSION, "entries": entries},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        written.append(sidecar)
        return written
    raise ValueError(f"unknown export format {fmt!r}")
