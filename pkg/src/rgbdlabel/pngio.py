"""PNG readers/writers for the three raster kinds the project stores."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import MissingFile


def _open(path: Path) -> Image.Image:
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    return Image.open(path)


def read_rgb(path: Path) -> np.ndarray:
    """8-bit 3-channel image as (H, W, 3) uint8."""
    with _open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_rgb(path: Path, image: np.ndarray) -> None:
    image = np.asarray(image, dtype=np.uint8)
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


def read_depth(path: Path) -> np.ndarray:
    """16-bit single-channel depth raster as (H, W) uint16 millimeters."""
    with _open(path) as im:
        arr = np.asarray(im)
    if arr.dtype == np.uint8:
        return arr.astype(np.uint16)
    return arr.astype(np.uint16)


def write_depth(path: Path, depth: np.ndarray) -> None:
    depth = np.asarray(depth, dtype=np.uint16)
    Image.fromarray(depth).save(path, format="PNG")


def read_index(path: Path) -> np.ndarray:
    """8-bit single-channel instance-index raster (0 = background)."""
    with _open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def write_index(path: Path, index_map: np.ndarray) -> None:
    index_map = np.asarray(index_map, dtype=np.uint8)
    Image.fromarray(index_map, mode="L").save(path, format="PNG")
