"""Lens distortion model and pixel-preserving undistortion.

Undistorting a full frame while keeping the original canvas either crops
pixels or leaves undefined black regions, and rescaling the cropped valid
area afterwards resamples the data twice. Instead the output resolution is
chosen up front so that the all-valid inscribed rectangle of the
undistorted image matches the original resolution on its constrained side,
and the canvas is grown to hold every source pixel whose ideal position
falls outside the original bounds.
"""
from __future__ import annotations

import numpy as np

from .calib import CameraIntrinsics, DepthMap, DistortionCoeffs
from .errors import DegenerateDistortion, DimensionMismatch, NoConvergence

#: Fixed-point inversion parameters.
UNDISTORT_MAX_ITER = 50
UNDISTORT_TOL = 1e-10

#: Points sampled per image border edge when searching the valid region.
BORDER_SAMPLES = 256

#: Map coordinates this close to an integer snap to it before resampling,
#: so identity-like maps reproduce their input exactly.
_SNAP_EPS = 1e-7


def distort_points(p_norm: np.ndarray, d: DistortionCoeffs) -> np.ndarray:
    """Apply forward lens distortion to normalized points of shape (..., 2).

    Radial part scales by ``1 + k1 r^2 + k2 r^4 + k3 r^6``; tangential
    terms follow the usual two-coefficient model.
    """
    p = np.asarray(p_norm, dtype=np.float64)
    x, y = p[..., 0], p[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3))
    xy = x * y
    xd = x * radial + 2.0 * d.p1 * xy + d.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * xy
    return np.stack([xd, yd], axis=-1)


def distort_point(p_norm, d: DistortionCoeffs) -> np.ndarray:
    """Forward-distort a single normalized point."""
    return distort_points(np.asarray(p_norm, dtype=np.float64), d)


def undistort_points(
    p_norm: np.ndarray,
    d: DistortionCoeffs,
    max_iter: int = UNDISTORT_MAX_ITER,
    tol: float = UNDISTORT_TOL,
) -> np.ndarray:
    """Invert :func:`distort_points` by damped fixed-point iteration.

    Each step divides out the radial factor and subtracts the tangential
    shift evaluated at the current estimate; the step is damped by half
    whenever the residual grows. Raises :class:`NoConvergence` if any
    point fails to reach ``tol`` within ``max_iter`` iterations.
    """
    target = np.atleast_2d(np.asarray(p_norm, dtype=np.float64))
    if d.is_zero:
        return target.reshape(np.shape(p_norm)).copy()
    x = target.copy()
    damping = np.ones(x.shape[:-1])
    residual = np.linalg.norm(distort_points(x, d) - target, axis=-1)
    for _ in range(max_iter):
        done = residual <= tol
        if done.all():
            break
        xs, ys = x[..., 0], x[..., 1]
        r2 = xs * xs + ys * ys
        radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3))
        xy = xs * ys
        tang_x = 2.0 * d.p1 * xy + d.p2 * (r2 + 2.0 * xs * xs)
        tang_y = d.p1 * (r2 + 2.0 * ys * ys) + 2.0 * d.p2 * xy
        with np.errstate(divide="ignore", invalid="ignore"):
            prop_x = (target[..., 0] - tang_x) / radial
            prop_y = (target[..., 1] - tang_y) / radial
        proposal = np.stack([prop_x, prop_y], axis=-1)
        bad = ~np.isfinite(proposal).all(axis=-1)
        proposal[bad] = x[bad]
        step = damping[..., None] * (proposal - x)
        candidate = x + step
        cand_residual = np.linalg.norm(distort_points(candidate, d) - target, axis=-1)
        improved = cand_residual < residual
        x = np.where((improved & ~done)[..., None], candidate, x)
        residual = np.where(improved & ~done, cand_residual, residual)
        damping = np.where(improved | done, damping, damping * 0.5)
    if np.any(residual > tol):
        raise NoConvergence(
            f"undistortion did not reach {tol:g} within {max_iter} iterations "
            f"(worst residual {float(np.max(residual)):g})"
        )
    return x.reshape(np.shape(p_norm))


def undistort_point(p_norm, d: DistortionCoeffs) -> np.ndarray:
    """Invert the distortion model for a single normalized point."""
    return undistort_points(np.asarray(p_norm, dtype=np.float64), d)


def _border_edges(intr: CameraIntrinsics, samples: int) -> dict[str, np.ndarray]:
    """Sample the outer image boundary, grouped per edge, in pixel coords."""
    x0, x1 = -0.5, intr.width - 0.5
    y0, y1 = -0.5, intr.height - 0.5
    xs = np.linspace(x0, x1, samples)
    ys = np.linspace(y0, y1, samples)
    return {
        "top": np.column_stack([xs, np.full(samples, y0)]),
        "bottom": np.column_stack([xs, np.full(samples, y1)]),
        "left": np.column_stack([np.full(samples, x0), ys]),
        "right": np.column_stack([np.full(samples, x1), ys]),
    }


def compute_optimal_camera_matrix(
    intr: CameraIntrinsics,
    d: DistortionCoeffs,
    samples: int = BORDER_SAMPLES,
) -> tuple[CameraIntrinsics, float]:
    """Choose output intrinsics for undistortion that preserve source pixels.

    The image border is sampled and undistorted; the inscribed all-valid
    axis-aligned rectangle is bounded per edge by the innermost undistorted
    border sample. A single isotropic scale is then picked so the
    rectangle's constrained side equals the corresponding original side,
    and the canvas is sized to the full undistorted extent so no source
    pixel is dropped.

    Returns the new intrinsics and the applied scale (new focal / old
    focal). Zero distortion returns the input intrinsics and scale 1.
    """
    if d.is_zero:
        return intr, 1.0
    edges = {
        name: undistort_points(intr.normalize(px), d)
        for name, px in _border_edges(intr, samples).items()
    }
    rect_x0 = float(np.max(edges["left"][:, 0]))
    rect_x1 = float(np.min(edges["right"][:, 0]))
    rect_y0 = float(np.max(edges["top"][:, 1]))
    rect_y1 = float(np.min(edges["bottom"][:, 1]))
    if rect_x1 <= rect_x0 or rect_y1 <= rect_y0:
        raise DegenerateDistortion("valid undistorted region has zero area")

    scale_x = intr.width / (intr.fx * (rect_x1 - rect_x0))
    scale_y = intr.height / (intr.fy * (rect_y1 - rect_y0))
    scale = max(scale_x, scale_y)

    all_pts = np.vstack(list(edges.values()))
    x_min, y_min = all_pts.min(axis=0)
    x_max, y_max = all_pts.max(axis=0)
    new_fx = scale * intr.fx
    new_fy = scale * intr.fy
    new_w = int(np.ceil(new_fx * (x_max - x_min)))
    new_h = int(np.ceil(new_fy * (y_max - y_min)))
    new_cx = -new_fx * x_min - 0.5
    new_cy = -new_fy * y_min - 0.5
    new_intr = CameraIntrinsics(new_fx, new_fy, new_cx, new_cy, new_w, new_h)
    return new_intr, scale


def _snap_near_integers(a: np.ndarray) -> np.ndarray:
    rounded = np.round(a)
    near = np.abs(a - rounded) < _SNAP_EPS
    return np.where(near, rounded, a)


def _bilinear_sample(image: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample an (H, W[, C]) image at float coords; caller guarantees bounds."""
    h, w = image.shape[:2]
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = x - x0
    wy = y - y0
    if image.ndim == 3:
        wx = wx[..., None]
        wy = wy[..., None]
    img = image.astype(np.float64)
    top = img[y0, x0] * (1 - wx) + img[y0, x1] * wx
    bot = img[y1, x0] * (1 - wx) + img[y1, x1] * wx
    return top * (1 - wy) + bot * wy


def undistort_rgb(
    image: np.ndarray,
    intr: CameraIntrinsics,
    d: DistortionCoeffs,
    new_intr: CameraIntrinsics,
) -> np.ndarray:
    """Inverse-map remap of an 8-bit image onto the ``new_intr`` canvas.

    Output pixels whose distorted source position falls outside the input
    image are black. Bilinear sampling; exact integer hits reproduce
    source pixels bit-exactly.
    """
    image = np.asarray(image)
    if image.shape[:2] != (intr.height, intr.width):
        raise DimensionMismatch(
            f"image {image.shape[1]}x{image.shape[0]} does not match "
            f"intrinsics {intr.width}x{intr.height}"
        )
    if d.is_zero and new_intr == intr:
        return image.copy()
    u, v = np.meshgrid(
        np.arange(new_intr.width, dtype=np.float64),
        np.arange(new_intr.height, dtype=np.float64),
    )
    p_norm = np.stack(
        [(u - new_intr.cx) / new_intr.fx, (v - new_intr.cy) / new_intr.fy], axis=-1
    )
    src = intr.denormalize(distort_points(p_norm, d))
    sx = _snap_near_integers(src[..., 0])
    sy = _snap_near_integers(src[..., 1])
    valid = (sx >= 0) & (sx <= intr.width - 1) & (sy >= 0) & (sy <= intr.height - 1)
    out_shape = (new_intr.height, new_intr.width) + image.shape[2:]
    out = np.zeros(out_shape, dtype=image.dtype)
    sampled = _bilinear_sample(image, sx[valid], sy[valid])
    out[valid] = np.round(sampled).astype(image.dtype)
    return out


def undistort_depth(
    depth: DepthMap,
    intr: CameraIntrinsics,
    d: DistortionCoeffs,
) -> tuple[DepthMap, CameraIntrinsics]:
    """Forward-scatter undistortion of a depth map.

    Every valid pixel is undistorted individually and written to its
    rounded target position on a canvas sized by
    :func:`compute_optimal_camera_matrix`. When two sources collide the
    nearer (smaller) depth wins; targets never hit stay 0.
    """
    if (depth.height, depth.width) != (intr.height, intr.width):
        raise DimensionMismatch(
            f"depth map {depth.width}x{depth.height} does not match "
            f"intrinsics {intr.width}x{intr.height}"
        )
    new_intr, _ = compute_optimal_camera_matrix(intr, d)
    if d.is_zero:
        return DepthMap(depth.values.copy()), new_intr
    rows, cols = np.nonzero(depth.values)
    vals = depth.values[rows, cols].astype(np.int64)
    p_norm = intr.normalize(np.column_stack([cols, rows]).astype(np.float64))
    und = undistort_points(p_norm, d)
    tx = np.round(und[:, 0] * new_intr.fx + new_intr.cx).astype(np.int64)
    ty = np.round(und[:, 1] * new_intr.fy + new_intr.cy).astype(np.int64)
    inside = (tx >= 0) & (tx < new_intr.width) & (ty >= 0) & (ty < new_intr.height)
    sentinel = np.int64(1 << 20)
    canvas = np.full((new_intr.height, new_intr.width), sentinel, dtype=np.int64)
    np.minimum.at(canvas, (ty[inside], tx[inside]), vals[inside])
    canvas[canvas == sentinel] = 0
    return DepthMap(canvas.astype(np.uint16)), new_intr
