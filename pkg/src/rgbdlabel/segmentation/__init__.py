"""Instance segmentation: trimaps, the GrabCut loop, and 3D point selection."""
from .colormap import COLORMAP_MAX_LUMA, COLORMAP_MIN_LUMA, colormap_depth
from .filters import (
    downsample_image,
    downsample_mask,
    downsample_trimap,
    morph_filter,
    resample_mask,
    upsample_mask,
)
from .gmm import GaussianMixture, GmmPair
from .grabcut import GrabCutParams, GrabCutResult, grabcut_iterate, pairwise_energy_weights
from .selection import SelectionRect3D, mask_from_selection, select_points
from .trimap import (
    HARD_BG,
    HARD_FG,
    SOFT_BG,
    SOFT_FG,
    InstanceMask,
    Scribble,
    Trimap,
    apply_scribbles,
    copy_mask,
    init_trimap,
    interpolate_rects,
    overlap_background,
    seed_rgb_from_depth,
)

__all__ = [
    "COLORMAP_MAX_LUMA",
    "COLORMAP_MIN_LUMA",
    "GaussianMixture",
    "GmmPair",
    "GrabCutParams",
    "GrabCutResult",
    "HARD_BG",
    "HARD_FG",
    "InstanceMask",
    "Scribble",
    "SelectionRect3D",
    "SOFT_BG",
    "SOFT_FG",
    "Trimap",
    "apply_scribbles",
    "colormap_depth",
    "copy_mask",
    "downsample_image",
    "downsample_mask",
    "downsample_trimap",
    "grabcut_iterate",
    "init_trimap",
    "interpolate_rects",
    "mask_from_selection",
    "morph_filter",
    "overlap_background",
    "pairwise_energy_weights",
    "resample_mask",
    "seed_rgb_from_depth",
    "select_points",
    "upsample_mask",
]
