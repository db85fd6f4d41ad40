"""Camera models, extrinsics, and 2D<->3D projection.

Coordinate conventions used throughout the package:

* Camera frames are right-handed, looking down +z, x right, y down.
* Pixel coordinates are (x, y) with pixel centers at integer positions;
  the full image extent spans [-0.5, width-0.5] x [-0.5, height-0.5].
* Depth rasters store millimeters as 16-bit unsigned; 0 means "no
  measurement". All 3D math is in meters.
* The world frame is defined by an adjustable origin: ``world_origin``
  maps depth-camera coordinates to world coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidRotation,
    PointBehindCamera,
)

ROTATION_TOL = 1e-9


def _as_readonly(a, dtype, shape) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")

    @property
    def matrix(self) -> np.ndarray:
        """3x3 camera matrix."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def normalize(self, px: np.ndarray) -> np.ndarray:
        """Pixel coordinates (..., 2) -> normalized image coordinates."""
        px = np.asarray(px, dtype=np.float64)
        return (px - (self.cx, self.cy)) / (self.fx, self.fy)

    def denormalize(self, p_norm: np.ndarray) -> np.ndarray:
        """Normalized image coordinates (..., 2) -> pixel coordinates."""
        p_norm = np.asarray(p_norm, dtype=np.float64)
        return p_norm * (self.fx, self.fy) + (self.cx, self.cy)


@dataclass(frozen=True)
class DistortionCoeffs:
    """Radial (k1, k2, k3) and tangential (p1, p2) lens distortion."""

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        vals = (self.k1, self.k2, self.k3, self.p1, self.p2)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("distortion coefficients must be finite")

    @property
    def is_zero(self) -> bool:
        return self.k1 == self.k2 == self.k3 == self.p1 == self.p2 == 0.0


def validate_rotation(rotation: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    """Check a 3x3 matrix is a proper rotation; return it as float64."""
    r = np.asarray(rotation, dtype=np.float64)
    if r.shape != (3, 3):
        raise InvalidRotation(f"rotation must be 3x3, got {r.shape}")
    if not np.allclose(r.T @ r, np.eye(3), atol=tol, rtol=0.0):
        raise InvalidRotation("matrix is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise InvalidRotation("matrix determinant is not +1 (improper rotation)")
    return r


@dataclass(frozen=True)
class ExtrinsicTransform:
    """Rigid transform p' = R @ p + t (rotation 3x3, translation meters)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = validate_rotation(self.rotation)
        r.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(
            self, "translation", _as_readonly(self.translation, np.float64, (3,))
        )

    @classmethod
    def identity(cls) -> "ExtrinsicTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform points of shape (..., 3)."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> "ExtrinsicTransform":
        rt = self.rotation.T
        return ExtrinsicTransform(rt, -rt @ self.translation)

    def compose(self, other: "ExtrinsicTransform") -> "ExtrinsicTransform":
        """Return the transform applying ``other`` first, then ``self``."""
        return ExtrinsicTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    @property
    def is_identity(self) -> bool:
        return np.array_equal(self.rotation, np.eye(3)) and not self.translation.any()


@dataclass(frozen=True)
class DepthMap:
    """16-bit depth raster in millimeters; 0 marks missing measurements."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError("depth map must be 2D")
        if v.dtype != np.uint16:
            if np.any(v < 0) or np.any(v > 0xFFFF):
                raise ValueError("depth values outside uint16 range")
            v = v.astype(np.uint16)
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True)
class PointCloud:
    """Points in meters plus the (row, col) depth pixel each one came from."""

    points: np.ndarray
    source_pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        s = np.asarray(self.source_pixels, dtype=np.int64).reshape(-1, 2)
        if len(p) != len(s):
            raise ValueError("points and source_pixels must have equal length")
        p.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "source_pixels", s)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Camera:
    """Intrinsics plus lens distortion for one physical camera."""

    intrinsics: CameraIntrinsics
    distortion: DistortionCoeffs


@dataclass
class CameraRig:
    """Calibrated RGB-D rig.

    ``rgb_from_depth`` maps depth-camera coordinates to RGB-camera
    coordinates. ``world_origin`` maps depth-camera coordinates to world
    coordinates; by default the world frame coincides with the depth
    camera. Moving the world origin therefore changes where stored
    world-frame annotations appear in both camera frames.
    """

    rgb: Camera
    depth: Camera
    rgb_from_depth: ExtrinsicTransform
    world_origin: ExtrinsicTransform = field(default_factory=ExtrinsicTransform.identity)

    def camera(self, which: str) -> Camera:
        if which == "rgb":
            return self.rgb
        if which == "depth":
            return self.depth
        raise ValueError(f"unknown camera {which!r} (expected 'rgb' or 'depth')")

    def cam_from_world(self, which: str) -> ExtrinsicTransform:
        """Transform taking world-frame points into the chosen camera frame."""
        depth_from_world = self.world_origin.inverse()
        if which == "depth":
            return depth_from_world
        if which == "rgb":
            return self.rgb_from_depth.compose(depth_from_world)
        raise ValueError(f"unknown camera {which!r} (expected 'rgb' or 'depth')")


def project_point(p, intr: CameraIntrinsics) -> np.ndarray:
    """Project one camera-frame point (meters) to pixel coordinates.

    The result may lie outside the image bounds; clipping is the
    caller's responsibility.
    """
    p = np.asarray(p, dtype=np.float64)
    if p[2] <= 0:
        raise PointBehindCamera(f"point depth {p[2]} <= 0")
    return np.array(
        [intr.fx * p[0] / p[2] + intr.cx, intr.fy * p[1] / p[2] + intr.cy]
    )


def project_points(points: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Vectorized projection of (..., 3) camera-frame points; no z check."""
    p = np.asarray(points, dtype=np.float64)
    z = p[..., 2]
    return np.stack(
        [intr.fx * p[..., 0] / z + intr.cx, intr.fy * p[..., 1] / z + intr.cy],
        axis=-1,
    )


def backproject_depth(depth: DepthMap, intr: CameraIntrinsics) -> PointCloud:
    """Lift every valid depth pixel to a 3D point in the camera frame."""
    if (depth.height, depth.width) != (intr.height, intr.width):
        raise DimensionMismatch(
            f"depth map {depth.width}x{depth.height} does not match "
            f"intrinsics {intr.width}x{intr.height}"
        )
    rows, cols = np.nonzero(depth.values)
    z = depth.values[rows, cols].astype(np.float64) / 1000.0
    x = (cols - intr.cx) / intr.fx * z
    y = (rows - intr.cy) / intr.fy * z
    points = np.column_stack([x, y, z])
    return PointCloud(points, np.column_stack([rows, cols]))


def transform_points(cloud: PointCloud, xf: ExtrinsicTransform) -> PointCloud:
    """Apply a rigid transform to a cloud, preserving pixel provenance."""
    return PointCloud(xf.apply(cloud.points), cloud.source_pixels)
