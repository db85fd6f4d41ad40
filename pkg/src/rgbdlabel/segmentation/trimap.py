"""Trimap state for the segmentation loop and the ops that edit it.

A trimap covers only the working crop: the user's region of interest plus
a padded ring. Pixels inside the rect start as soft foreground, the ring
as soft background, and everything beyond the crop is implicitly hard
background. Hard labels (scribbles, overlapping instances) are never
flipped by the solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..calib import CameraRig, DepthMap
from ..errors import (
    EmptyRect,
    ModalityMismatch,
    NoCalibration,
    TooFewKeyframes,
)

HARD_BG = np.uint8(0)
SOFT_BG = np.uint8(1)
SOFT_FG = np.uint8(2)
HARD_FG = np.uint8(3)

#: Working-crop padding defaults: fraction of the rect's larger side.
DEFAULT_PADDING_FRACTION = 0.2
MIN_PADDING = 10

Rect = tuple[int, int, int, int]  # (x0, y0, x1, y1), exclusive upper bounds


def default_padding(rect: Rect) -> int:
    w = rect[2] - rect[0]
    h = rect[3] - rect[1]
    return max(MIN_PADDING, int(round(DEFAULT_PADDING_FRACTION * max(w, h))))


@dataclass
class Trimap:
    """Per-pixel labels over the working crop of one frame.

    ``rect`` is the region of interest in frame coordinates, ``crop_box``
    the padded and frame-clipped window the label array covers.
    """

    labels: np.ndarray
    rect: Rect
    crop_box: Rect
    frame_size: tuple[int, int]  # (width, height)

    @property
    def crop_width(self) -> int:
        return self.crop_box[2] - self.crop_box[0]

    @property
    def crop_height(self) -> int:
        return self.crop_box[3] - self.crop_box[1]

    def copy(self) -> "Trimap":
        return Trimap(self.labels.copy(), self.rect, self.crop_box, self.frame_size)

    def to_frame_mask(self, crop_mask: np.ndarray) -> np.ndarray:
        """Place a crop-resolution boolean mask onto the full frame."""
        w, h = self.frame_size
        out = np.zeros((h, w), dtype=bool)
        x0, y0, x1, y1 = self.crop_box
        out[y0:y1, x0:x1] = crop_mask
        return out

    def frame_to_crop(self, xy: np.ndarray) -> np.ndarray:
        """Shift frame-coordinate points into crop coordinates."""
        return np.asarray(xy, dtype=np.float64) - (self.crop_box[0], self.crop_box[1])


@dataclass(frozen=True)
class InstanceMask:
    """Binary mask of one instance in one frame of one modality."""

    instance_id: str
    frame_index: int
    modality: str  # "rgb" | "depth"
    mask: np.ndarray

    def __post_init__(self):
        if self.modality not in ("rgb", "depth"):
            raise ValueError(f"modality must be 'rgb' or 'depth', got {self.modality!r}")
        m = np.asarray(self.mask, dtype=bool).copy()
        if m.ndim != 2:
            raise ValueError("mask must be 2D")
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)


def copy_mask(mask: InstanceMask, target_frame: int) -> InstanceMask:
    """Value-copy a mask onto another frame (slot conflicts are the store's job)."""
    if target_frame < 0:
        raise ValueError("target_frame must be nonnegative")
    return replace(mask, frame_index=target_frame)


@dataclass(frozen=True)
class Scribble:
    """One brush stroke: a polyline with a radius and a target label."""

    points: np.ndarray  # (N, 2) crop coordinates
    radius: float
    label: str  # "foreground" | "background"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("scribble needs at least one point")
        if self.radius <= 0:
            raise ValueError("brush radius must be positive")
        if self.label not in ("foreground", "background"):
            raise ValueError(f"label must be 'foreground' or 'background', got {self.label!r}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


def _clip_rect(rect, width, height) -> Rect:
    x0 = max(0, int(rect[0]))
    y0 = max(0, int(rect[1]))
    x1 = min(width, int(rect[2]))
    y1 = min(height, int(rect[3]))
    return (x0, y0, x1, y1)


def init_trimap(rect, frame_size: tuple[int, int], padding: int | None = None) -> Trimap:
    """Seed a trimap from a region of interest.

    Pixels inside the rect become soft foreground, the padded ring soft
    background. Sides of the rect clipped by the frame edge get no ring.
    """
    width, height = frame_size
    rect = tuple(int(round(v)) for v in rect)
    inner = _clip_rect(rect, width, height)
    if inner[2] <= inner[0] or inner[3] <= inner[1]:
        raise EmptyRect(f"rect {rect} does not intersect the {width}x{height} frame")
    if padding is None:
        padding = default_padding(inner)
    if padding < 0:
        raise ValueError("padding must be nonnegative")
    crop = _clip_rect(
        (inner[0] - padding, inner[1] - padding, inner[2] + padding, inner[3] + padding),
        width,
        height,
    )
    labels = np.full((crop[3] - crop[1], crop[2] - crop[0]), SOFT_BG, dtype=np.uint8)
    labels[
        inner[1] - crop[1] : inner[3] - crop[1],
        inner[0] - crop[0] : inner[2] - crop[0],
    ] = SOFT_FG
    return Trimap(labels, inner, crop, (width, height))


def _stamp_polyline(shape: tuple[int, int], points: np.ndarray, radius: float) -> np.ndarray:
    """Boolean raster of all pixels within ``radius`` of the polyline."""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    covered = np.zeros(shape, dtype=bool)
    pts = np.asarray(points, dtype=np.float64)
    segments = zip(pts[:-1], pts[1:]) if len(pts) > 1 else [(pts[0], pts[0])]
    for a, b in segments:
        d = b - a
        len2 = float(d @ d)
        px = xs - a[0]
        py = ys - a[1]
        if len2 == 0.0:
            dist2 = px * px + py * py
        else:
            u = np.clip((px * d[0] + py * d[1]) / len2, 0.0, 1.0)
            dx = px - u * d[0]
            dy = py - u * d[1]
            dist2 = dx * dx + dy * dy
        covered |= dist2 <= radius * radius
    return covered


def apply_scribbles(trimap: Trimap, scribbles: list[Scribble]) -> Trimap:
    """Burn strokes into hard labels; later strokes override earlier ones."""
    out = trimap.copy()
    shape = out.labels.shape
    for stroke in scribbles:
        covered = _stamp_polyline(shape, stroke.points, stroke.radius)
        out.labels[covered] = HARD_FG if stroke.label == "foreground" else HARD_BG
    return out


def overlap_background(
    trimap: Trimap, others: list[InstanceMask], frame_index: int | None = None, modality: str | None = None
) -> Trimap:
    """Mark pixels covered by other instances' masks as hard background."""
    if not others:
        return trimap.copy()
    ref_frame = frame_index if frame_index is not None else others[0].frame_index
    ref_mod = modality if modality is not None else others[0].modality
    for m in others:
        if m.frame_index != ref_frame or m.modality != ref_mod:
            raise ModalityMismatch(
                f"mask {m.instance_id} is frame {m.frame_index}/{m.modality}, "
                f"expected {ref_frame}/{ref_mod}"
            )
    out = trimap.copy()
    x0, y0, x1, y1 = out.crop_box
    for m in others:
        if m.mask.shape != (trimap.frame_size[1], trimap.frame_size[0]):
            raise ModalityMismatch(
                f"mask {m.instance_id} shape {m.mask.shape} does not match frame"
            )
        out.labels[m.mask[y0:y1, x0:x1]] = HARD_BG
    return out


def seed_rgb_from_depth(
    depth_mask: InstanceMask,
    depth: DepthMap,
    rig: CameraRig | None,
    trimap: Trimap,
    hard: bool = True,
) -> Trimap:
    """Project a depth-modality mask into the RGB crop as foreground seeds.

    Masked depth pixels are backprojected, moved through the rig's
    depth-to-RGB extrinsic, and projected with the RGB intrinsics; hits
    inside the crop become hard (or soft) foreground. Existing hard
    background (scribbles, overlaps) is left alone.
    """
    if depth_mask.modality != "depth":
        raise ModalityMismatch("seeding requires a depth-modality mask")
    if rig is None:
        raise NoCalibration("seeding requires a calibrated rig")
    out = trimap.copy()
    rows, cols = np.nonzero(depth_mask.mask & depth.valid_mask)
    if len(rows) == 0:
        return out
    z = depth.values[rows, cols].astype(np.float64) / 1000.0
    di = rig.depth.intrinsics
    pts = np.column_stack(
        [(cols - di.cx) / di.fx * z, (rows - di.cy) / di.fy * z, z]
    )
    pts_rgb = rig.rgb_from_depth.apply(pts)
    in_front = pts_rgb[:, 2] > 0
    pts_rgb = pts_rgb[in_front]
    ri = rig.rgb.intrinsics
    u = np.round(ri.fx * pts_rgb[:, 0] / pts_rgb[:, 2] + ri.cx).astype(np.int64)
    v = np.round(ri.fy * pts_rgb[:, 1] / pts_rgb[:, 2] + ri.cy).astype(np.int64)
    x0, y0, x1, y1 = out.crop_box
    inside = (u >= x0) & (u < x1) & (v >= y0) & (v < y1)
    cu, cv = u[inside] - x0, v[inside] - y0
    target = HARD_FG if hard else SOFT_FG
    keep = out.labels[cv, cu] != HARD_BG
    out.labels[cv[keep], cu[keep]] = target
    return out


def interpolate_rects(keyrects: dict[int, tuple[float, float, float, float]]) -> dict[int, tuple[float, float, float, float]]:
    """Per-corner linear interpolation of keyed rectangles over frames."""
    if len(keyrects) < 2:
        raise TooFewKeyframes(f"need >= 2 key rectangles, got {len(keyrects)}")
    frames = sorted(keyrects)
    out: dict[int, tuple[float, float, float, float]] = {}
    for f0, f1 in zip(frames[:-1], frames[1:]):
        r0 = np.asarray(keyrects[f0], dtype=np.float64)
        r1 = np.asarray(keyrects[f1], dtype=np.float64)
        for f in range(f0, f1):
            u = (f - f0) / (f1 - f0)
            out[f] = tuple((1 - u) * r0 + u * r1)
    out[frames[-1]] = tuple(float(v) for v in keyrects[frames[-1]])
    return out
