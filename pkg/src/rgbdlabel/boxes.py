"""6-DoF bounding-box tracks: keyframing, interpolation, and projection.

A track stores human-placed keyframe boxes; every other frame in the
keyframe span is derived. Centers use a hybrid scheme: straight-line
interpolation by default, switching to natural cubic splines across
sustained motion (runs of at least four consecutive keyframes whose
successive center distances all exceed a threshold). Sizes and occlusion
interpolate linearly; orientations travel along the shortest great-circle
arc between quaternions at constant angular velocity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .calib import CameraIntrinsics, CameraRig, project_points, validate_rotation
from .errors import (
    AllCornersBehindCamera,
    GimbalLockWarning,
    NonUnitQuaternion,
    OutOfRange,
    TooFewKeyframes,
    TrackConflict,
)

#: Default center-motion threshold (meters) for switching to cubic splines.
DEFAULT_EPSILON = 0.05

#: Minimum number of consecutive fast-moving keyframes that forms a cubic run.
CUBIC_RUN_MIN_KEYFRAMES = 4

#: Box corners partially behind the camera are clipped at this depth (m).
NEAR_PLANE = 0.01

_UNIT_TOL = 1e-6


# --- quaternions (w, x, y, z) ----------------------------------------------

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def _check_unit(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise NonUnitQuaternion(f"quaternion must have 4 components, got {q.shape}")
    n = np.linalg.norm(q)
    if abs(n - 1.0) > _UNIT_TOL:
        raise NonUnitQuaternion(f"quaternion norm {n} is not 1")
    return q


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = angle / 2.0
    return np.concatenate([[math.cos(half)], math.sin(half) * axis])


def slerp_orientation(q0, q1, u: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions.

    Moves at constant angular velocity in ``u``; when the arc is shorter
    than 1e-6 rad the spherical weights degenerate and normalized linear
    interpolation is used instead.
    """
    q0 = _check_unit(q0)
    q1 = _check_unit(q1)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    dot = min(dot, 1.0)
    theta = math.acos(dot)
    if theta < 1e-6:
        return quat_normalize(q0 + u * (q1 - q0))
    s = math.sin(theta)
    return (math.sin((1.0 - u) * theta) / s) * q0 + (math.sin(u * theta) / s) * q1


@dataclass(frozen=True)
class EulerAngles:
    """Yaw/pitch/roll in radians, composed as rotations about z, then y, then x."""

    yaw: float
    pitch: float
    roll: float


def euler_to_quaternion(e: EulerAngles) -> np.ndarray:
    """Quaternion whose rotation matrix equals Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    qz = quat_from_axis_angle([0, 0, 1], e.yaw)
    qy = quat_from_axis_angle([0, 1, 0], e.pitch)
    qx = quat_from_axis_angle([1, 0, 0], e.roll)
    return quat_multiply(quat_multiply(qz, qy), qx)


def quaternion_to_euler(q) -> EulerAngles:
    """Recover z-y-x angles with pitch in [-pi/2, pi/2].

    Emits :class:`GimbalLockWarning` when the pitch is within 1e-9 of
    +/- pi/2; the returned representative then puts the free angle in yaw.
    """
    q = _check_unit(q)
    r = quat_to_matrix(q)
    sin_pitch = -r[2, 0]
    sin_pitch = min(1.0, max(-1.0, sin_pitch))
    pitch = math.asin(sin_pitch)
    if abs(abs(sin_pitch) - 1.0) < 1e-9:
        warnings.warn(
            "pitch at +/- pi/2: yaw and roll are not separable", GimbalLockWarning
        )
        yaw = math.atan2(-r[0, 1], r[1, 1])
        roll = 0.0
    else:
        yaw = math.atan2(r[1, 0], r[0, 0])
        roll = math.atan2(r[2, 1], r[2, 2])
    return EulerAngles(yaw, pitch, roll)


# --- boxes and tracks --------------------------------------------------------

@dataclass(frozen=True)
class Box3D:
    """One 6-DoF box: world-frame center/size plus orientation quaternion."""

    center: np.ndarray
    size: np.ndarray
    orientation: np.ndarray
    frame_index: int
    track_id: str
    class_label: str
    occlusion: float = 0.0
    is_keyframe: bool = True

    def __post_init__(self):
        center = np.array(self.center, dtype=np.float64).reshape(3)
        size = np.array(self.size, dtype=np.float64).reshape(3)
        orientation = np.array(self.orientation, dtype=np.float64).reshape(4)
        if not np.all(size > 0):
            raise ValueError(f"box size must be positive, got {size}")
        n = np.linalg.norm(orientation)
        if abs(n - 1.0) > _UNIT_TOL:
            raise NonUnitQuaternion(f"orientation norm {n} is not 1")
        if not 0.0 <= self.occlusion <= 1.0:
            raise OutOfRange(f"occlusion {self.occlusion} outside [0, 1]")
        if self.frame_index < 0:
            raise ValueError("frame_index must be nonnegative")
        for arr in (center, size, orientation):
            arr.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "orientation", orientation)

    def corners(self) -> np.ndarray:
        """The 8 box corners in world coordinates, shape (8, 3)."""
        half = self.size / 2.0
        signs = np.array(
            [
                [sx, sy, sz]
                for sx in (-1, 1)
                for sy in (-1, 1)
                for sz in (-1, 1)
            ],
            dtype=np.float64,
        )
        r = quat_to_matrix(self.orientation)
        return self.center + (signs * half) @ r.T


def copy_box(box: Box3D, target_frame: int) -> Box3D:
    """Value-copy a box onto another frame; the copy is a keyframe."""
    if target_frame < 0:
        raise ValueError("target_frame must be nonnegative")
    return replace(box, frame_index=target_frame, is_keyframe=True)


@dataclass
class BoxTrack:
    """All keyframes of one annotated object, ordered by frame index."""

    track_id: str
    class_label: str
    keyframes: dict[int, Box3D] = field(default_factory=dict)

    def add_keyframe(self, box: Box3D) -> None:
        if box.track_id != self.track_id or box.class_label != self.class_label:
            raise ValueError("box track_id/class_label do not match the track")
        if box.frame_index in self.keyframes:
            raise TrackConflict(
                f"track {self.track_id} already has a keyframe at frame "
                f"{box.frame_index}"
            )
        if not box.is_keyframe:
            box = replace(box, is_keyframe=True)
        self.keyframes[box.frame_index] = box

    def set_keyframe(self, box: Box3D) -> None:
        """Add or overwrite the keyframe at the box's frame."""
        if box.track_id != self.track_id or box.class_label != self.class_label:
            raise ValueError("box track_id/class_label do not match the track")
        self.keyframes[box.frame_index] = replace(box, is_keyframe=True)

    def remove_keyframe(self, frame: int) -> None:
        if frame not in self.keyframes:
            raise KeyError(f"no keyframe at frame {frame}")
        del self.keyframes[frame]

    def copy_box(self, source_frame: int, target_frame: int) -> Box3D:
        """Copy the keyframe at ``source_frame`` onto ``target_frame``."""
        if source_frame not in self.keyframes:
            raise KeyError(f"no keyframe at frame {source_frame}")
        if target_frame in self.keyframes:
            raise TrackConflict(
                f"track {self.track_id} already has a keyframe at frame "
                f"{target_frame}"
            )
        box = copy_box(self.keyframes[source_frame], target_frame)
        self.keyframes[target_frame] = box
        return box

    @property
    def frames(self) -> list[int]:
        return sorted(self.keyframes)

    def ordered_keyframes(self) -> list[Box3D]:
        return [self.keyframes[f] for f in self.frames]


# --- interpolation -----------------------------------------------------------

def natural_cubic_spline(ts: np.ndarray, ys: np.ndarray) -> "_NaturalSpline":
    """Fit a natural cubic spline (zero second derivative at the ends)."""
    return _NaturalSpline(np.asarray(ts, dtype=np.float64), np.asarray(ys, np.float64))


class _NaturalSpline:
    """Piecewise cubic with natural boundary conditions, per column of ys."""

    def __init__(self, ts: np.ndarray, ys: np.ndarray):
        if ts.ndim != 1 or len(ts) < 2:
            raise ValueError("need at least two knots")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("knots must be strictly increasing")
        ys = ys.reshape(len(ts), -1)
        n = len(ts)
        h = np.diff(ts)
        # Thomas solve for interior second derivatives; ends are zero.
        m = np.zeros((n, ys.shape[1]))
        if n > 2:
            diag = 2.0 * (h[:-1] + h[1:])
            lower = h[:-1].copy()
            upper = h[1:].copy()
            rhs = 6.0 * ((ys[2:] - ys[1:-1]) / h[1:, None] - (ys[1:-1] - ys[:-2]) / h[:-1, None])
            for i in range(1, n - 2):
                w = lower[i] / diag[i - 1]
                diag[i] -= w * upper[i - 1]
                rhs[i] -= w * rhs[i - 1]
            sol = np.zeros_like(rhs)
            sol[-1] = rhs[-1] / diag[-1]
            for i in range(n - 4, -1, -1):
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i]
            m[1:-1] = sol
        self.ts = ts
        self.ys = ys
        self.h = h
        self.m = m

    def __call__(self, t: float) -> np.ndarray:
        ts = self.ts
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        h = self.h[i]
        a = (ts[i + 1] - t) / h
        b = (t - ts[i]) / h
        return (
            a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a**3 - a) * self.m[i] + (b**3 - b) * self.m[i + 1]) * h * h / 6.0
        )


def classify_segments(track: BoxTrack, epsilon: float = DEFAULT_EPSILON) -> list[str]:
    """Label each keyframe gap ``"linear"`` or ``"cubic"``.

    A gap is cubic iff both its endpoint keyframes belong to a maximal run
    of at least :data:`CUBIC_RUN_MIN_KEYFRAMES` consecutive keyframes whose
    successive center distances all exceed ``epsilon``.
    """
    kfs = track.ordered_keyframes()
    if len(kfs) < 2:
        raise TooFewKeyframes(
            f"track {track.track_id} has {len(kfs)} keyframe(s); need >= 2"
        )
    centers = np.array([b.center for b in kfs])
    moving = np.linalg.norm(np.diff(centers, axis=0), axis=1) > epsilon
    modes = ["linear"] * len(moving)
    run_start = 0
    for i in range(len(moving) + 1):
        if i == len(moving) or not moving[i]:
            # keyframes run_start..i span the moving gaps [run_start, i)
            if (i - run_start) + 1 >= CUBIC_RUN_MIN_KEYFRAMES:
                for g in range(run_start, i):
                    modes[g] = "cubic"
            run_start = i + 1
    return modes


def _gap_modes(track: BoxTrack, epsilon: float, mode: str) -> list[str]:
    n_gaps = len(track.keyframes) - 1
    if mode == "hybrid":
        return classify_segments(track, epsilon)
    if mode == "linear":
        return ["linear"] * n_gaps
    if mode == "cubic":
        return ["cubic"] * n_gaps
    raise ValueError(f"unknown interpolation mode {mode!r}")


def interpolate_track(
    track: BoxTrack,
    epsilon: float = DEFAULT_EPSILON,
    mode: str = "hybrid",
) -> list[Box3D]:
    """Generate a box for every frame between the first and last keyframe.

    Keyframes are reproduced exactly. Sizes and occlusion interpolate
    linearly per gap, orientations via :func:`slerp_orientation`, and
    centers linearly or by a natural cubic spline over each cubic run
    depending on the per-gap classification (``mode`` can force
    ``"linear"`` or ``"cubic"`` everywhere). No extrapolation happens
    outside the keyframe span.
    """
    kfs = track.ordered_keyframes()
    if len(kfs) < 2:
        raise TooFewKeyframes(
            f"track {track.track_id} has {len(kfs)} keyframe(s); need >= 2"
        )
    frames = np.array([b.frame_index for b in kfs], dtype=np.float64)
    centers = np.array([b.center for b in kfs])
    modes = _gap_modes(track, epsilon, mode)

    # One spline per maximal run of consecutive cubic gaps.
    splines: list[_NaturalSpline | None] = [None] * len(modes)
    g = 0
    while g < len(modes):
        if modes[g] == "cubic":
            end = g
            while end + 1 < len(modes) and modes[end + 1] == "cubic":
                end += 1
            spline = natural_cubic_spline(frames[g : end + 2], centers[g : end + 2])
            for k in range(g, end + 1):
                splines[k] = spline
            g = end + 1
        else:
            g += 1

    out: list[Box3D] = []
    for gap in range(len(kfs) - 1):
        b0, b1 = kfs[gap], kfs[gap + 1]
        f0, f1 = b0.frame_index, b1.frame_index
        out.append(b0)
        for f in range(f0 + 1, f1):
            u = (f - f0) / (f1 - f0)
            if splines[gap] is not None:
                center = splines[gap](float(f))
            else:
                center = (1 - u) * b0.center + u * b1.center
            out.append(
                Box3D(
                    center=center,
                    size=(1 - u) * b0.size + u * b1.size,
                    orientation=slerp_orientation(b0.orientation, b1.orientation, u),
                    frame_index=f,
                    track_id=track.track_id,
                    class_label=track.class_label,
                    occlusion=float((1 - u) * b0.occlusion + u * b1.occlusion),
                    is_keyframe=False,
                )
            )
    out.append(kfs[-1])
    return out


# --- visibility --------------------------------------------------------------

@dataclass(frozen=True)
class VisibilityInfo:
    """Truncation, occlusion, and the visibility score derived from them."""

    truncation: float
    occlusion: float
    visibility: float

    @classmethod
    def from_components(cls, truncation: float, occlusion: float) -> "VisibilityInfo":
        return cls(truncation, occlusion, visibility(truncation, occlusion))


def visibility(t: float, o: float) -> float:
    """Visibility score (1 - t) * (1 - o)."""
    if not (0.0 <= t <= 1.0 and 0.0 <= o <= 1.0):
        raise OutOfRange(f"truncation {t} / occlusion {o} outside [0, 1]")
    return (1.0 - t) * (1.0 - o)


#: (max truncation, max occlusion) per difficulty bucket, checked in order.
DIFFICULTY_THRESHOLDS = (
    ("easy", 0.15, 0.2),
    ("moderate", 0.30, 0.5),
    ("hard", 0.50, 1.0),
)


def categorize_difficulty(t: float, o: float) -> str:
    """Bucket a sample into easy / moderate / hard / unknown."""
    if not (0.0 <= t <= 1.0 and 0.0 <= o <= 1.0):
        raise OutOfRange(f"truncation {t} / occlusion {o} outside [0, 1]")
    for name, t_max, o_max in DIFFICULTY_THRESHOLDS:
        if t <= t_max and o <= o_max:
            return name
    return "unknown"


# --- projection --------------------------------------------------------------

def _clip_edges_to_near_plane(corners_cam: np.ndarray) -> np.ndarray:
    """Points of the box wireframe at or in front of the near plane.

    Returns corners with z >= NEAR_PLANE plus the intersections of box
    edges that cross the plane; empty when the box is entirely behind.
    """
    edges = [
        (0, 1), (0, 2), (1, 3), (2, 3),
        (4, 5), (4, 6), (5, 7), (6, 7),
        (0, 4), (1, 5), (2, 6), (3, 7),
    ]
    pts = [c for c in corners_cam if c[2] >= NEAR_PLANE]
    for i, j in edges:
        zi, zj = corners_cam[i][2], corners_cam[j][2]
        if (zi < NEAR_PLANE) != (zj < NEAR_PLANE):
            u = (NEAR_PLANE - zi) / (zj - zi)
            pts.append(corners_cam[i] + u * (corners_cam[j] - corners_cam[i]))
    return np.array(pts).reshape(-1, 3)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of 2D points, counterclockwise."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area of a simple polygon (absolute value)."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_polygon_to_rect(
    poly: np.ndarray, x0: float, y0: float, x1: float, y1: float
) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against an axis rect."""
    def clip_half(points, inside, intersect):
        out = []
        n = len(points)
        for i in range(n):
            cur, nxt = points[i], points[(i + 1) % n]
            cur_in, nxt_in = inside(cur), inside(nxt)
            if cur_in:
                out.append(cur)
                if not nxt_in:
                    out.append(intersect(cur, nxt))
            elif nxt_in:
                out.append(intersect(cur, nxt))
        return out

    def x_cut(bound):
        def f(a, b):
            u = (bound - a[0]) / (b[0] - a[0])
            return np.array([bound, a[1] + u * (b[1] - a[1])])
        return f

    def y_cut(bound):
        def f(a, b):
            u = (bound - a[1]) / (b[1] - a[1])
            return np.array([a[0] + u * (b[0] - a[0]), bound])
        return f

    pts = list(np.asarray(poly, dtype=np.float64))
    for inside, intersect in (
        (lambda p: p[0] >= x0, x_cut(x0)),
        (lambda p: p[0] <= x1, x_cut(x1)),
        (lambda p: p[1] >= y0, y_cut(y0)),
        (lambda p: p[1] <= y1, y_cut(y1)),
    ):
        if not pts:
            break
        pts = clip_half(pts, inside, intersect)
    return np.array(pts).reshape(-1, 2)


def _image_rect(intr: CameraIntrinsics) -> tuple[float, float, float, float]:
    return -0.5, -0.5, intr.width - 0.5, intr.height - 0.5


def compute_truncation(box: Box3D, rig: CameraRig, which_camera: str = "rgb") -> float:
    """Fraction of the projected box hull cut off by the image borders.

    The hull is the convex hull of the projected box corners (edges
    clipped at the near plane first); truncation is 1 minus the in-bounds
    hull area over the full hull area. Boxes entirely behind the camera
    return 1. Hulls below 1 px^2 are degenerate: the result falls back to
    0 when the hull centroid is inside the image and 1 otherwise.
    """
    cam = rig.camera(which_camera)
    corners_cam = rig.cam_from_world(which_camera).apply(box.corners())
    front = _clip_edges_to_near_plane(corners_cam)
    if len(front) == 0:
        return 1.0
    px = project_points(front, cam.intrinsics)
    hull = convex_hull(px)
    full_area = polygon_area(hull)
    x0, y0, x1, y1 = _image_rect(cam.intrinsics)
    if full_area < 1.0:
        centroid = px.mean(axis=0)
        inside = x0 <= centroid[0] <= x1 and y0 <= centroid[1] <= y1
        return 0.0 if inside else 1.0
    clipped = clip_polygon_to_rect(hull, x0, y0, x1, y1)
    t = 1.0 - polygon_area(clipped) / full_area
    return float(min(1.0, max(0.0, t)))


def project_box(
    box: Box3D, rig: CameraRig, which_camera: str = "rgb"
) -> tuple[np.ndarray, tuple[float, float, float, float]]:
    """Project a box into a camera: 8 corner pixels plus the enclosing rect.

    Corners behind the camera are projected at the near-plane depth so the
    returned array always has 8 rows; the rectangle is computed from the
    near-plane-clipped wireframe and clipped to the image bounds.
    """
    cam = rig.camera(which_camera)
    corners_cam = rig.cam_from_world(which_camera).apply(box.corners())
    if np.all(corners_cam[:, 2] < NEAR_PLANE):
        raise AllCornersBehindCamera(
            f"track {box.track_id} frame {box.frame_index}: box behind the camera"
        )
    safe = corners_cam.copy()
    safe[:, 2] = np.maximum(safe[:, 2], NEAR_PLANE)
    corner_px = project_points(safe, cam.intrinsics)
    front_px = project_points(_clip_edges_to_near_plane(corners_cam), cam.intrinsics)
    x0, y0, x1, y1 = _image_rect(cam.intrinsics)
    rect = (
        float(max(front_px[:, 0].min(), x0)),
        float(max(front_px[:, 1].min(), y0)),
        float(min(front_px[:, 0].max(), x1)),
        float(min(front_px[:, 1].max(), y1)),
    )
    return corner_px, rect
