"""Macro structure model: k-means centroids, soft responsibilities, and
the centroid-level affinity distribution.

The centroids summarize the spectrally reduced input; responsibilities tie
every point softly to all centroids with a heavy-tailed kernel, and the
pairwise centroid affinities form the fixed macro target distribution that
the embedding's own centroid affinities are pulled toward.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


def pairwise_sq_dists(a: np.ndarray, b: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Squared Euclidean distances between rows of a and rows of b.

    Computed directly as sums of squared differences (not the expanded
    norm identity) so values carry no cancellation error; a is processed
    in row chunks to bound the temporary (chunk, len(b), d) array.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((len(a), len(b)), dtype=np.float64)
    for start in range(0, len(a), chunk):
        stop = min(start + chunk, len(a))
        diff = a[start:stop, None, :] - b[None, :, :]
        out[start:stop] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


@dataclass
class CentroidModel:
    """Fitted k-means state on the reduced coordinates."""

    t: np.ndarray              # (k, d_z) centroid positions
    assignment: np.ndarray     # (n,) hard cluster of each point
    inertia: float             # final within-cluster sum of squares
    inertia_trace: np.ndarray  # per-iteration inertia, nonincreasing
    seed: int


def _plus_plus_init(z: np.ndarray, k: int, rng) -> np.ndarray:
    n = len(z)
    centroids = np.empty((k, z.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = z[first]
    closest = ((z - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # All remaining mass sits on already-chosen positions
            # (duplicates); any pick works, the repair step sorts it out.
            idx = int(rng.integers(n))
        centroids[j] = z[idx]
        closest = np.minimum(closest, ((z - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(z: np.ndarray, k: int, seed: int = 0, max_iter: int = 300) -> CentroidModel:
    """Lloyd iteration from a k-means++ start.

    Ties in assignment go to the lowest centroid index. A cluster left
    empty by an assignment step captures the point currently farthest from
    its own centroid (one point per empty cluster, in cluster order), so
    no cluster is ever empty and the recorded inertia never increases.
    Stops at an assignment fixpoint or after max_iter rounds.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or len(z) == 0:
        raise ValueError("z must be a nonempty 2-D matrix")
    n = len(z)
    if not (1 <= k <= n):
        raise ValueError(f"k={k} must lie in [1, n={n}]")
    if not np.all(np.isfinite(z)):
        raise ValueError("z contains non-finite entries")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(z, k, rng)
    assignment = None
    trace = []

    for _ in range(max_iter):
        d2 = pairwise_sq_dists(z, centroids)
        new_assignment = d2.argmin(axis=1)  # ties resolve to the lower index

        counts = np.bincount(new_assignment, minlength=k)
        if np.any(counts == 0):
            own = d2[np.arange(n), new_assignment].copy()
            for empty in np.flatnonzero(counts == 0):
                donor = int(own.argmax())
                new_assignment[donor] = empty
                own[donor] = -1.0  # a point can rescue only one cluster
            counts = np.bincount(new_assignment, minlength=k)

        for j in range(k):
            centroids[j] = z[new_assignment == j].mean(axis=0)

        within = ((z - centroids[new_assignment]) ** 2).sum(axis=1)
        trace.append(float(within.sum()))

        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment

    return CentroidModel(
        t=centroids,
        assignment=assignment if assignment is not None else new_assignment,
        inertia=trace[-1],
        inertia_trace=np.asarray(trace),
        seed=seed,
    )


def responsibility_matrix(z: np.ndarray, t: np.ndarray, d: int, d_z: int) -> np.ndarray:
    """Soft membership of every point in every centroid.

    Row k, column i holds a heavy-tailed kernel of the point-to-centroid
    distance, scaled by (d / d_z)^2 to compensate for the dimension drop
    between the reduced input space and the map, then normalized so each
    point's column sums to 1 over centroids.
    """
    z = np.asarray(z, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if z.ndim != 2 or t.ndim != 2 or z.shape[1] != t.shape[1]:
        raise ValueError("z and t must be 2-D with matching width")
    if not (0 < d < d_z):
        raise ValueError(f"need 0 < d < d_z, got d={d}, d_z={d_z}")
    scale = (d * d) / float(d_z * d_z)
    raw = 1.0 / (1.0 + scale * pairwise_sq_dists(t, z))
    return raw / raw.sum(axis=0, keepdims=True)


def macro_affinity(t: np.ndarray) -> np.ndarray:
    """Heavy-tailed affinity distribution over centroid pairs.

    Off-diagonal kernel values normalized by their grand sum; the diagonal
    is zero and the whole matrix sums to 1.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2 or len(t) < 2:
        raise ValueError("need at least 2 centroids")
    kern = 1.0 / (1.0 + pairwise_sq_dists(t, t))
    np.fill_diagonal(kern, 0.0)
    return kern / kern.sum()


@dataclass
class MacroAffinity:
    """Fixed macro-level targets used throughout one optimization.

    r: (k, n) responsibilities, columns summing to 1 over centroids.
    p_macro: (k, k) centroid affinity distribution, zero diagonal, sum 1.
    """

    r: np.ndarray
    p_macro: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=np.float64)
        self.p_macro = np.asarray(self.p_macro, dtype=np.float64)
        if self.r.ndim != 2 or self.p_macro.shape != (len(self.r), len(self.r)):
            raise ValueError("r must be (k, n) and p_macro (k, k)")

    @property
    def n_clusters(self) -> int:
        return len(self.r)


def dump_centroids_csv(model: CentroidModel, path) -> None:
    """Write centroid coordinates for debugging."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"t{j}" for j in range(model.t.shape[1])) + "\n")
        for row in model.t:
            fh.write(",".join(repr(v) for v in row) + "\n")


def dump_responsibilities_csv(r: np.ndarray, path) -> None:
    """Write the (k, n) responsibility matrix for debugging."""
    r = np.asarray(r)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"p{i}" for i in range(r.shape[1])) + "\n")
        for row in r:
            fh.write(",".join(repr(v) for v in row) + "\n")
