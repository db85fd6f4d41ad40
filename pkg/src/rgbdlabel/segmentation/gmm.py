"""Color mixture models driving the segmentation energy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingularGmm

#: Diagonal loading added to every fitted covariance.
COV_REGULARIZATION = 1e-5

_LOG_2PI = float(np.log(2.0 * np.pi))


def _kmeans(pixels: np.ndarray, k: int, rng: np.random.Generator, iters: int = 10) -> np.ndarray:
    """Plain k-means with k-means++ seeding; returns per-pixel labels."""
    n = len(pixels)
    k = min(k, n)
    centers = np.empty((k, pixels.shape[1]))
    centers[0] = pixels[rng.integers(n)]
    d2 = np.sum((pixels - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j:] = centers[0]
            break
        centers[j] = pixels[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((pixels - centers[j]) ** 2, axis=1))
    labels = np.zeros(n, dtype=np.intp)
    for _ in range(iters):
        dists = np.sum((pixels[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = dists.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            sel = labels == j
            if sel.any():
                centers[j] = pixels[sel].mean(axis=0)
    return labels


@dataclass
class GaussianMixture:
    """K weighted 3-variate Gaussians; empty components carry weight 0."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        self._precisions = None
        self._log_norms = None

    @classmethod
    def fit(
        cls,
        pixels: np.ndarray,
        n_components: int,
        assignments: np.ndarray | None = None,
        rng: np.random.Generator | None = None,
    ) -> "GaussianMixture":
        """Fit from pixels, clustering with k-means when no assignment given."""
        pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
        if len(pixels) == 0:
            raise SingularGmm("cannot fit a mixture to zero pixels")
        if assignments is None:
            rng = rng or np.random.default_rng(0)
            assignments = _kmeans(pixels, n_components, rng)
        weights = np.zeros(n_components)
        means = np.zeros((n_components, 3))
        covs = np.tile(np.eye(3) * COV_REGULARIZATION, (n_components, 1, 1))
        for j in range(n_components):
            sel = assignments == j
            count = int(sel.sum())
            if count == 0:
                continue
            pts = pixels[sel]
            weights[j] = count / len(pixels)
            means[j] = pts.mean(axis=0)
            centered = pts - means[j]
            covs[j] = centered.T @ centered / count + np.eye(3) * COV_REGULARIZATION
        if weights.sum() <= 0:
            raise SingularGmm("all mixture components are empty")
        return cls(weights, means, covs)

    def _prepare(self):
        if self._precisions is not None:
            return
        precisions = np.zeros_like(self.covs)
        log_norms = np.full(len(self.weights), -np.inf)
        for j, w in enumerate(self.weights):
            if w <= 0:
                continue
            sign, logdet = np.linalg.slogdet(self.covs[j])
            if sign <= 0:
                raise SingularGmm(f"component {j} covariance is not positive definite")
            precisions[j] = np.linalg.inv(self.covs[j])
            log_norms[j] = np.log(w) - 0.5 * (3 * _LOG_2PI + logdet)
        self._precisions = precisions
        self._log_norms = log_norms

    def component_log_prob(self, pixels: np.ndarray) -> np.ndarray:
        """log(w_k * N_k(z)) for every pixel/component, shape (N, K)."""
        self._prepare()
        pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
        out = np.full((len(pixels), len(self.weights)), -np.inf)
        for j, w in enumerate(self.weights):
            if w <= 0:
                continue
            centered = pixels - self.means[j]
            maha = np.einsum("ni,ij,nj->n", centered, self._precisions[j], centered)
            out[:, j] = self._log_norms[j] - 0.5 * maha
        return out

    def log_prob(self, pixels: np.ndarray) -> np.ndarray:
        """Mixture log-likelihood per pixel (stable log-sum-exp)."""
        comp = self.component_log_prob(pixels)
        peak = comp.max(axis=1)
        safe_peak = np.where(np.isfinite(peak), peak, 0.0)
        s = np.exp(comp - safe_peak[:, None]).sum(axis=1)
        return safe_peak + np.log(s)

    def assign(self, pixels: np.ndarray) -> np.ndarray:
        """Best component per pixel."""
        return self.component_log_prob(pixels).argmax(axis=1)


@dataclass
class GmmPair:
    """Foreground and background mixtures learned for one segmentation."""

    foreground: GaussianMixture
    background: GaussianMixture
