"""Iterative foreground extraction over a trimap.

Each round alternates: assign pixels to their best mixture component,
refit both mixtures, rebuild the 8-connected grid graph (color-likelihood
data terms, contrast-weighted smoothness), and solve an exact min cut.
Hard trimap labels are folded into terminal capacities of their soft
neighbors, so they can never flip.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import AllOneLabel, DimensionMismatch
from .gmm import GaussianMixture, GmmPair
from .maxflow import min_cut
from .trimap import HARD_BG, HARD_FG, SOFT_BG, SOFT_FG, Trimap


@dataclass(frozen=True)
class GrabCutParams:
    """Loop hyperparameters; the defaults are the customary choices."""

    components: int = 5
    gamma: float = 50.0
    iterations: int = 5
    early_stop_rel: float = 1e-4
    downsample: int = 1


@dataclass
class GrabCutResult:
    mask: np.ndarray               # bool, crop resolution
    gmms: GmmPair | None
    energies: list[float] = field(default_factory=list)


def _neighbor_pairs(h: int, w: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Undirected 8-neighborhood pairs (flat indices) and their distances."""
    idx = np.arange(h * w).reshape(h, w)
    pairs = []
    dists = []
    for dy, dx, dist in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, np.sqrt(2.0)), (1, -1, np.sqrt(2.0))):
        y0, y1 = max(0, -dy), h - max(0, dy)
        x0, x1 = max(0, -dx), w - max(0, dx)
        a = idx[y0:y1, x0:x1]
        b = idx[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
        pairs.append(np.column_stack([a.ravel(), b.ravel()]))
        dists.append(np.full(a.size, dist))
    uv = np.vstack(pairs)
    return uv[:, 0], uv[:, 1], np.concatenate(dists)


def pairwise_energy_weights(
    image: np.ndarray, gamma: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Contrast-sensitive smoothness weights for every 8-neighbor pair.

    beta is set from the mean squared color difference over all pairs so
    the exponential discriminates around the image's own contrast level.
    """
    h, w = image.shape[:2]
    flat = image.reshape(h * w, -1).astype(np.float64)
    u, v, dist = _neighbor_pairs(h, w)
    diff2 = np.sum((flat[u] - flat[v]) ** 2, axis=1)
    mean_diff2 = diff2.mean() if len(diff2) else 0.0
    beta = 0.0 if mean_diff2 <= 0 else 1.0 / (2.0 * mean_diff2)
    weights = gamma * np.exp(-beta * diff2) / dist
    return u, v, weights


def _segmentation_energy(
    data_fg: np.ndarray,
    data_bg: np.ndarray,
    fg: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
) -> float:
    flat = fg.ravel()
    data = np.where(flat, data_fg, data_bg).sum()
    smooth = w[flat[u] != flat[v]].sum()
    return float(data + smooth)


def grabcut_iterate(
    image: np.ndarray,
    trimap: Trimap,
    gmms: GmmPair | None = None,
    iterations: int = 5,
    params: GrabCutParams | None = None,
    initial_mask: np.ndarray | None = None,
) -> GrabCutResult:
    """Run up to ``iterations`` rounds of the segmentation loop.

    ``image`` is the (H, W, 3) crop matching the trimap. Returns the crop
    mask, the refitted mixtures, and the per-round energy values (the loop
    stops early once the relative decrease falls under the configured
    threshold). ``initial_mask`` resumes a session from its previous
    result instead of re-seeding soft pixels from the trimap; hard labels
    always win over it. A trimap with no soft pixels returns its hard
    labels directly; a trimap leaving either class without any pixels
    raises :class:`AllOneLabel`.
    """
    params = params or GrabCutParams()
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    image = np.asarray(image)
    labels = trimap.labels
    if image.shape[:2] != labels.shape:
        raise DimensionMismatch(
            f"crop {image.shape[1]}x{image.shape[0]} does not match trimap "
            f"{labels.shape[1]}x{labels.shape[0]}"
        )
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)

    hard_fg = labels == HARD_FG
    hard_bg = labels == HARD_BG
    soft = (labels == SOFT_FG) | (labels == SOFT_BG)
    if not soft.any():
        return GrabCutResult(mask=hard_fg.copy(), gmms=gmms, energies=[])

    if initial_mask is not None:
        initial_mask = np.asarray(initial_mask, dtype=bool)
        if initial_mask.shape != labels.shape:
            raise DimensionMismatch("initial_mask does not match the trimap")
        fg = hard_fg | (initial_mask & soft)
    else:
        fg = hard_fg | (labels == SOFT_FG)
    if not fg.any() or not (~fg).any():
        raise AllOneLabel("trimap assigns every pixel to a single class")

    h, w = labels.shape
    flat_img = image.reshape(h * w, -1).astype(np.float64)
    u, v, weights = pairwise_energy_weights(image, params.gamma)
    flat_soft = soft.ravel()
    soft_ids = np.flatnonzero(flat_soft)
    node_of = np.full(h * w, -1, dtype=np.int64)
    node_of[soft_ids] = np.arange(len(soft_ids))

    soft_uv = flat_soft[u] & flat_soft[v]
    grid_u = node_of[u[soft_uv]]
    grid_v = node_of[v[soft_uv]]
    grid_w = weights[soft_uv]

    # Smoothness against hard pixels folds into terminal capacities.
    flat_hard_fg = hard_fg.ravel()
    flat_hard_bg = hard_bg.ravel()
    src_fold = np.zeros(len(soft_ids))
    sink_fold = np.zeros(len(soft_ids))
    for a, b in ((u, v), (v, u)):
        sel = flat_soft[a] & flat_hard_fg[b]
        np.add.at(src_fold, node_of[a[sel]], weights[sel])
        sel = flat_soft[a] & flat_hard_bg[b]
        np.add.at(sink_fold, node_of[a[sel]], weights[sel])

    energies: list[float] = []
    data_fg = data_bg = None
    for _ in range(iterations):
        fg_flat = fg.ravel()
        fg_pixels = flat_img[fg_flat]
        bg_pixels = flat_img[~fg_flat]
        if len(fg_pixels) == 0 or len(bg_pixels) == 0:
            break  # one class vanished; nothing left to refit
        if gmms is None:
            gmms = GmmPair(
                GaussianMixture.fit(fg_pixels, params.components),
                GaussianMixture.fit(bg_pixels, params.components),
            )
            data_fg = -gmms.foreground.log_prob(flat_img)
            data_bg = -gmms.background.log_prob(flat_img)
        else:
            if data_fg is None:
                data_fg = -gmms.foreground.log_prob(flat_img)
                data_bg = -gmms.background.log_prob(flat_img)
            candidate = GmmPair(
                GaussianMixture.fit(
                    fg_pixels, params.components, gmms.foreground.assign(fg_pixels)
                ),
                GaussianMixture.fit(
                    bg_pixels, params.components, gmms.background.assign(bg_pixels)
                ),
            )
            cand_fg = -candidate.foreground.log_prob(flat_img)
            cand_bg = -candidate.background.log_prob(flat_img)
            # Hard-assignment refits can nudge the mixture likelihood the
            # wrong way; adopting only non-worsening refits keeps every
            # step a descent step, so the energy trace stays monotone.
            cur_cost = np.where(fg_flat, data_fg, data_bg).sum()
            cand_cost = np.where(fg_flat, cand_fg, cand_bg).sum()
            if cand_cost <= cur_cost:
                gmms, data_fg, data_bg = candidate, cand_fg, cand_bg

        src_w = data_bg[soft_ids] + src_fold   # cut when pixel lands background
        sink_w = data_fg[soft_ids] + sink_fold  # cut when pixel lands foreground
        # Every pixel pays exactly one terminal edge in any cut, so a
        # per-pixel shift keeps the argmin while making capacities >= 0.
        shift = np.maximum(0.0, -np.minimum(src_w, sink_w))
        _, source_side = min_cut(
            len(soft_ids), grid_u, grid_v, grid_w, src_w + shift, sink_w + shift
        )

        fg = hard_fg.copy()
        fg.ravel()[soft_ids[source_side]] = True
        energies.append(_segmentation_energy(data_fg, data_bg, fg, u, v, weights))
        if (
            len(energies) >= 2
            and energies[-2] - energies[-1]
            < params.early_stop_rel * abs(energies[-2])
        ):
            break
    return GrabCutResult(mask=fg, gmms=gmms, energies=energies)
