"""Depth-to-color mapping so the color-based cut applies to depth frames.

The colormap is a fixed 256-entry perceptually uniform ramp baked in as a
lookup table; the grayscale companion is its Rec.601 luminance. Both are
frozen constants so downstream fixtures can rely on exact values.
"""
from __future__ import annotations

import base64

import numpy as np

from ..calib import DepthMap
from ..errors import EmptyRange

_LUT_B64 = (
    "RAFURAJWRQRXRQVZRgdaRghcRgpdRgteRw1gRw5hRxBjRxFkRxNlSBRnSBZoSBdpSBhqSBpsSBtt"
    "SBxuSB1vSB9wSCBxSCFzSCN0SCR1SCV2SCZ3SCh4SCl5Ryp6Ryx6Ry17Ry58Ry99RjB+RjJ+RjN/"
    "RjSARTWBRTeBRTiCRDmDRDqDRDuEQz2EQz6FQj+FQkCGQkGGQUKHQUSHQEWIQEaIP0eIP0iJPkmJ"
    "PkqJPkyKPU2KPU6KPE+KPFCLO1GLO1KLOlOLOlSMOVWMOVaMOFiMOFmMN1qMN1uNNlyNNl2NNV6N"
    "NV+NNGCNNGGNM2KNM2ONMmSOMmWOMWaOMWeOMWiOMGmOMGqOL2uOL2yOLm2OLm6OLm+OLXCOLXGO"
    "LHGOLHKOLHOOK3SOK3WOKnaOKneOKniOKXmOKXqOKXuOKHyOKH2OJ36OJ3+OJ4COJoGOJoKOJoKO"
    "JYOOJYSOJYWOJIaOJIeOI4iOI4mOI4qNIouNIoyNIo2NIY6NIY+NIZCNIZGMIJKMIJKMIJOMH5SM"
    "H5WLH5aLH5eLH5iLH5mKH5qKHpuKHpyJHp2JH56JH5+IH6CIH6GIH6GHH6KHIKOGIKSGIaWFIaaF"
    "IqeFIqiEI6mDJKqDJauCJayCJq2BJ62BKK6AKa9/KrB/LLF+LbJ9LrN8L7R8MbV7MrZ6NLZ5Nbd5"
    "N7h4OLl3Orp2O7t1Pbx0P7xzQL1yQr5xRL9wRsBvSMFuSsFtTMJsTsNrUMRqUsVpVMVoVsZnWMdl"
    "WshkXMhjXsliYMpgY8tfZcteZ8xcac1bbM1abs5YcM9Xc9BWddBUd9FTetFRfNJQf9NOgdNNhNRL"
    "htVJidVIi9ZGjtZFkNdDk9dBldhAmNg+m9k8ndk7oNo5oto3pds2qNs0qtwyrdwwsN0vst0ttd4r"
    "uN4put4ovd8mwN8lwt8jxeAhyOAgyuEfzeEd0OEc0uIb1eIa2OIZ2uMZ3eMY3+MY4uQY5eQZ5+QZ"
    "6uUa7OUb7+Uc8eUd9OYe9uYg+OYh++cj/ecl"
)

#: 256 x 3 uint8 color ramp, dark blue-violet through green to yellow.
COLOR_LUT = np.frombuffer(base64.b64decode(_LUT_B64), dtype=np.uint8).reshape(256, 3)

#: Rec.601 luminance of the ramp, used for the grayscale rendering.
GRAY_LUT = np.round(COLOR_LUT @ np.array([0.299, 0.587, 0.114])).astype(np.uint8)

#: Grayscale values at the ends of the ramp (range-min and range-max depth).
COLORMAP_MIN_LUMA = int(GRAY_LUT[0])
COLORMAP_MAX_LUMA = int(GRAY_LUT[255])


def colormap_depth(
    depth: DepthMap, depth_range: tuple[float, float]
) -> tuple[np.ndarray, np.ndarray]:
    """Render a depth map through the ramp plus its grayscale companion.

    Values are normalized linearly over ``depth_range`` (millimeters,
    clamped); invalid zero-depth pixels come out black in both rasters.
    """
    lo, hi = depth_range
    if not lo < hi:
        raise EmptyRange(f"depth range [{lo}, {hi}] is empty")
    vals = depth.values.astype(np.float64)
    norm = np.clip((vals - lo) / (hi - lo), 0.0, 1.0)
    idx = np.round(norm * 255).astype(np.intp)
    color = COLOR_LUT[idx].copy()
    gray = GRAY_LUT[idx].copy()
    invalid = ~depth.valid_mask
    color[invalid] = 0
    gray[invalid] = 0
    return color, gray
