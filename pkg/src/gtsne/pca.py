"""Spectral pre-reduction of the input data.

The macro model (k-means centroids and responsibilities) works on a
d_z-dimensional spectral projection z of the input rather than on raw
coordinates. Columns are mean-centered by default; centering can be turned
off to project against the raw second-moment matrix instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, center_columns


@dataclass(frozen=True)
class PcaEmbedding:
    """Projection result: scores z, the basis, and centering offsets.

    components has orthonormal columns (one per kept direction), eigenvalues
    are the matching variances in nonincreasing order, and means is the
    vector subtracted from rows before projecting (zeros when centering was
    off). Rows reconstruct as z @ components.T + means.
    """

    z: np.ndarray            # (n, d_z) projected coordinates
    components: np.ndarray   # (d_in, d_z) orthonormal basis columns
    eigenvalues: np.ndarray  # (d_z,) variances, nonincreasing, >= 0
    means: np.ndarray        # (d_in,) centering offset

    @property
    def d_z(self) -> int:
        return self.components.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # Eigenvectors are only defined up to sign; pin each column so its
    # largest-magnitude entry is positive to make runs reproducible.
    flipped = components.copy()
    for j in range(flipped.shape[1]):
        i = int(np.argmax(np.abs(flipped[:, j])))
        if flipped[i, j] < 0:
            flipped[:, j] = -flipped[:, j]
    return flipped


def pca_fit(data, d_z: int, center: bool = True, method: str = "auto") -> PcaEmbedding:
    """Project data onto its top d_z variance directions.

    data may be a Dataset or a plain (n, d_in) matrix. When d_in <= n the
    d_in x d_in covariance is decomposed directly; otherwise the n x n Gram
    matrix is used and eigenvectors are mapped back. method forces one of
    the two routes ("cov" or "gram") which must agree; "auto" picks by
    shape. The Gram route only recovers directions with nonzero variance,
    so it requires d_z <= n and full numerical rank on the kept block.
    """
    x = data.x if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    n, d_in = x.shape
    if not (1 <= d_z <= d_in):
        raise ValueError(f"d_z={d_z} must lie in [1, {d_in}]")
    if not np.all(np.isfinite(x)):
        raise ValueError("data contains non-finite entries")
    if method not in ("auto", "cov", "gram"):
        raise ValueError(f"unknown method {method!r}")

    if center:
        xc, means = center_columns(x)
    else:
        xc, means = x, np.zeros(d_in)

    if method == "auto":
        method = "cov" if d_in <= n else "gram"

    if method == "cov":
        cov = (xc.T @ xc) / n
        evals, evecs = np.linalg.eigh(cov)
        evals = evals[::-1][:d_z]
        components = evecs[:, ::-1][:, :d_z]
    else:
        if d_z > n:
            raise ValueError(
                f"gram route cannot recover d_z={d_z} directions from n={n} rows"
            )
        gram = (xc @ xc.T) / n
        gvals, gvecs = np.linalg.eigh(gram)
        evals = gvals[::-1][:d_z]
        top = gvecs[:, ::-1][:, :d_z]
        scale = n * np.clip(evals, 0.0, None)
        if np.any(scale <= 0):
            raise ValueError(
                "gram route hit a zero-variance direction; lower d_z or use method='cov'"
            )
        components = (xc.T @ top) / np.sqrt(scale)

    evals = np.clip(evals, 0.0, None)
    components = _fix_signs(np.ascontiguousarray(components))
    z = xc @ components
    return PcaEmbedding(z=z, components=components, eigenvalues=evals, means=means)
