"""Mask/image resampling and binary morphology used around the cut."""
from __future__ import annotations

import numpy as np

from .trimap import HARD_BG, HARD_FG, SOFT_BG, SOFT_FG


def _block_reduce(a: np.ndarray, factor: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-block sums and pixel counts; ragged edge blocks are partial."""
    h, w = a.shape[:2]
    row_idx = np.arange(0, h, factor)
    col_idx = np.arange(0, w, factor)
    sums = np.add.reduceat(np.add.reduceat(a, row_idx, axis=0), col_idx, axis=1)
    ones = np.ones((h, w), dtype=np.int64)
    counts = np.add.reduceat(np.add.reduceat(ones, row_idx, axis=0), col_idx, axis=1)
    return sums, counts


def downsample_mask(mask: np.ndarray, factor: int) -> np.ndarray:
    """Area-vote downsampling of a binary mask; ties go to foreground."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    if factor == 1:
        return mask.copy()
    sums, counts = _block_reduce(mask.astype(np.int64), factor)
    return sums * 2 >= counts


def upsample_mask(mask: np.ndarray, factor: int, out_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Nearest-neighbor upsampling, optionally cropped to ``out_shape``."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    up = np.repeat(np.repeat(np.asarray(mask, dtype=bool), factor, axis=0), factor, axis=1)
    if out_shape is not None:
        up = up[: out_shape[0], : out_shape[1]]
    return up


def resample_mask(mask: np.ndarray, factor: int) -> np.ndarray:
    """Round-trip a mask through the downsampled working resolution."""
    mask = np.asarray(mask, dtype=bool)
    if factor == 1:
        return mask.copy()
    return upsample_mask(downsample_mask(mask, factor), factor, mask.shape)


def downsample_image(image: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean downsampling of an 8-bit image."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    image = np.asarray(image)
    if factor == 1:
        return image.copy()
    if image.ndim == 2:
        sums, counts = _block_reduce(image.astype(np.float64), factor)
        return np.round(sums / counts).astype(image.dtype)
    channels = [downsample_image(image[..., c], factor) for c in range(image.shape[2])]
    return np.stack(channels, axis=-1)


def downsample_trimap(labels: np.ndarray, factor: int) -> np.ndarray:
    """Downsample trimap labels: hard labels win over soft majority.

    Any hard foreground in a block takes priority (scribbles stay
    scribbles), then hard background, then the soft majority vote.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    labels = np.asarray(labels, dtype=np.uint8)
    if factor == 1:
        return labels.copy()
    counts = {
        lab: _block_reduce((labels == lab).astype(np.int64), factor)[0]
        for lab in (HARD_BG, SOFT_BG, SOFT_FG, HARD_FG)
    }
    out = np.where(
        counts[HARD_FG] > 0,
        HARD_FG,
        np.where(
            counts[HARD_BG] > 0,
            HARD_BG,
            np.where(counts[SOFT_FG] >= counts[SOFT_BG], SOFT_FG, SOFT_BG),
        ),
    )
    return out.astype(np.uint8)


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    size = 2 * radius + 1
    padded = np.pad(mask, radius, mode="constant", constant_values=False)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (size, size))
    return windows.any(axis=(2, 3))


def _erode(mask: np.ndarray, radius: int) -> np.ndarray:
    size = 2 * radius + 1
    padded = np.pad(mask, radius, mode="constant", constant_values=True)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (size, size))
    return windows.all(axis=(2, 3))


def morph_filter(mask: np.ndarray, operation: str, radius: int) -> np.ndarray:
    """Binary opening/closing with a square structuring element.

    Radius 0 is the identity by convention.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    if operation == "open":
        return _dilate(_erode(mask, radius), radius)
    if operation == "close":
        return _erode(_dilate(mask, radius), radius)
    raise ValueError(f"operation must be 'open' or 'close', got {operation!r}")
