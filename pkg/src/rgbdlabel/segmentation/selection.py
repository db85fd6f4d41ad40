"""Rectangle-based point selection inside an interactive 3D view."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..calib import PointCloud
from ..errors import DegenerateView
from .trimap import InstanceMask


@dataclass(frozen=True)
class SelectionRect3D:
    """A viewport rectangle drawn over a 3D view, with the view that made it."""

    view: np.ndarray         # 4x4 world-to-eye matrix
    projection: np.ndarray   # 4x4 projection matrix
    rect: tuple[float, float, float, float]  # (x0, y0, x1, y1) viewport px
    mode: str                # "add" | "remove"
    viewport: tuple[int, int]  # (width, height)

    def __post_init__(self):
        view = np.asarray(self.view, dtype=np.float64).reshape(4, 4)
        proj = np.asarray(self.projection, dtype=np.float64).reshape(4, 4)
        object.__setattr__(self, "view", view)
        object.__setattr__(self, "projection", proj)
        if self.mode not in ("add", "remove"):
            raise ValueError(f"mode must be 'add' or 'remove', got {self.mode!r}")
        x0, y0, x1, y1 = self.rect
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"selection rectangle {self.rect} is empty")


def project_to_viewport(
    points: np.ndarray,
    view: np.ndarray,
    projection: np.ndarray,
    viewport: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Map 3D points to viewport pixels; also returns the in-front mask."""
    pts = np.asarray(points, dtype=np.float64)
    hom = np.column_stack([pts, np.ones(len(pts))])
    clip = hom @ (projection @ view).T
    w = clip[:, 3]
    in_front = w > 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        ndc = clip[:, :2] / w[:, None]
    vw, vh = viewport
    vx = (ndc[:, 0] + 1.0) * 0.5 * vw
    vy = (1.0 - ndc[:, 1]) * 0.5 * vh
    return np.column_stack([vx, vy]), in_front


def select_points(
    cloud: PointCloud, sel: SelectionRect3D, current: set[int]
) -> set[int]:
    """Add or remove the points whose projection lands inside the rectangle."""
    if abs(np.linalg.det(sel.projection)) < 1e-12:
        raise DegenerateView("projection matrix is not invertible")
    vp, in_front = project_to_viewport(cloud.points, sel.view, sel.projection, sel.viewport)
    x0, y0, x1, y1 = sel.rect
    inside = (
        in_front
        & (vp[:, 0] >= x0)
        & (vp[:, 0] <= x1)
        & (vp[:, 1] >= y0)
        & (vp[:, 1] <= y1)
    )
    hit = set(np.flatnonzero(inside).tolist())
    if sel.mode == "add":
        return set(current) | hit
    return set(current) - hit


def mask_from_selection(
    selection: set[int],
    cloud: PointCloud,
    depth_shape: tuple[int, int],
    instance_id: str,
    frame_index: int,
) -> InstanceMask:
    """Turn selected cloud indices into a depth-modality instance mask."""
    mask = np.zeros(depth_shape, dtype=bool)
    if selection:
        idx = np.fromiter(selection, dtype=np.int64)
        src = cloud.source_pixels[idx]
        mask[src[:, 0], src[:, 1]] = True
    return InstanceMask(instance_id, frame_index, "depth", mask)
