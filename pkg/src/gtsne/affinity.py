"""High-dimensional neighbor affinities with perplexity calibration.

Each point gets a Gaussian conditional distribution over its k nearest
neighbors whose entropy is tuned so the effective neighbor count 2^H
matches the requested perplexity. Conditionals are then symmetrized into
one sparse joint distribution P over unordered pairs that sums to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .vptree import build_vptree, knn_all


@dataclass
class ConditionalRow:
    """Calibrated neighbor distribution of a single point.

    probs sums to 1 over the listed neighbors. beta is the fitted Gaussian
    precision 1 / (2 sigma^2); perplexity is the achieved 2^H. degenerate
    marks rows that fell back to uniform because every neighbor distance
    was zero (duplicate points).
    """

    neighbors: np.ndarray
    probs: np.ndarray
    sigma: float
    beta: float
    perplexity: float
    degenerate: bool = False


def _row_stats(shifted: np.ndarray, beta: float):
    # Returns (probs, 2^H) for exp(-beta * shifted) after max-subtraction;
    # entropy is computed in nats, so exp(H) equals 2^(H in bits). Infinite
    # distances carry zero probability and are kept out of the mean, where
    # inf * 0 would poison it.
    w = np.exp(-beta * shifted)
    total = w.sum()
    probs = w / total
    live = probs > 0.0
    h_nats = np.log(total) + beta * float(shifted[live] @ probs[live])
    return probs, float(np.exp(h_nats))


def calibrate_row(
    sq_distances: np.ndarray,
    target_perplexity: float,
    tol: float = 1e-5,
    max_iter: int = 200,
) -> ConditionalRow:
    """Fit the Gaussian precision of one neighbor row by bisection.

    sq_distances are squared distances to the row's neighbors (the caller
    supplies neighbor ids separately). The effective neighbor count 2^H is
    monotone decreasing in the precision beta, so a bracket is grown by
    doubling/halving from beta = 1 and then bisected until |2^H - target|
    <= tol or max_iter evaluations are spent, returning the best beta seen.
    A row of all-zero distances cannot be calibrated and falls back to the
    uniform distribution, flagged as degenerate.
    """
    d2 = np.asarray(sq_distances, dtype=np.float64)
    if d2.ndim != 1 or len(d2) < 2:
        raise ValueError("need at least 2 neighbor distances")
    if np.any(np.isnan(d2)) or np.any(d2 < 0):
        raise ValueError("squared distances must be nonnegative")
    finite = np.isfinite(d2)
    if not np.any(finite):
        raise ValueError("all neighbor distances are infinite")
    if not (0 < target_perplexity < len(d2)):
        raise ValueError(
            f"target perplexity {target_perplexity} must lie in (0, {len(d2)})"
        )

    k = len(d2)
    if np.all(d2 == 0.0):
        probs = np.full(k, 1.0 / k)
        return ConditionalRow(
            neighbors=np.arange(k),
            probs=probs,
            sigma=np.inf,
            beta=0.0,
            perplexity=float(k),
            degenerate=True,
        )

    shifted = d2 - d2[finite].min()

    evals = 0
    best_beta = 1.0
    best_gap = np.inf

    def measure(beta):
        nonlocal evals, best_beta, best_gap
        evals += 1
        _, perp = _row_stats(shifted, beta)
        gap = abs(perp - target_perplexity)
        if gap < best_gap:
            best_gap = gap
            best_beta = beta
        return perp

    # Grow a bracket [lo, hi] with perp(lo) >= target >= perp(hi).
    lo = hi = 1.0
    perp = measure(1.0)
    if perp > target_perplexity:
        while perp > target_perplexity and best_gap > tol and evals < max_iter:
            lo = hi
            hi *= 2.0
            perp = measure(hi)
    else:
        while perp < target_perplexity and best_gap > tol and evals < max_iter:
            hi = lo
            lo /= 2.0
            perp = measure(lo)

    while best_gap > tol and evals < max_iter:
        mid = 0.5 * (lo + hi)
        if measure(mid) > target_perplexity:
            lo = mid
        else:
            hi = mid

    probs, perp = _row_stats(shifted, best_beta)
    return ConditionalRow(
        neighbors=np.arange(k),
        probs=probs,
        sigma=float(1.0 / np.sqrt(2.0 * best_beta)),
        beta=float(best_beta),
        perplexity=perp,
    )


@dataclass
class AffinityModel:
    """Sparse symmetric joint distribution over unordered point pairs.

    Entries are stored once with row < col; the symmetric pair is implied.
    Values are nonnegative and the full off-diagonal sum (both directions)
    is 1 for a distribution built by symmetrize.
    """

    row: np.ndarray
    col: np.ndarray
    val: np.ndarray
    n: int

    def __post_init__(self):
        self.row = np.asarray(self.row, dtype=np.int64)
        self.col = np.asarray(self.col, dtype=np.int64)
        self.val = np.asarray(self.val, dtype=np.float64)
        if not (len(self.row) == len(self.col) == len(self.val)):
            raise ValueError("row, col, val must have equal length")
        if np.any(self.row >= self.col):
            raise ValueError("entries must be stored with row < col")
        if len(self.row) and (self.row.min() < 0 or self.col.max() >= self.n):
            raise ValueError("pair indices out of range")
        if np.any(self.val < 0):
            raise ValueError("affinities must be nonnegative")

    @property
    def nnz(self) -> int:
        return len(self.val)

    def total(self) -> float:
        """Sum over all ordered pairs (i != j)."""
        return float(2.0 * self.val.sum())

    def expanded(self):
        """Both-direction COO view (ii, jj, vv) for gradient sweeps."""
        ii = np.concatenate([self.row, self.col])
        jj = np.concatenate([self.col, self.row])
        vv = np.concatenate([self.val, self.val])
        return ii, jj, vv

    def scaled(self, factor: float) -> "AffinityModel":
        """Copy with every entry multiplied by factor (early exaggeration)."""
        return AffinityModel(row=self.row, col=self.col, val=self.val * factor, n=self.n)

    def dense(self) -> np.ndarray:
        """Materialize the full symmetric matrix (small-n debugging)."""
        p = np.zeros((self.n, self.n))
        p[self.row, self.col] = self.val
        p[self.col, self.row] = self.val
        return p


def symmetrize(rows: list, neighbor_ids: np.ndarray, n: int) -> AffinityModel:
    """Average each conditional with its transpose into a joint P.

    rows[i].probs aligns with neighbor_ids[i]. Every directed affinity
    contributes p / (2n) to its unordered pair, so a mutual pair receives
    both directions and the grand total over ordered pairs is exactly 1.
    """
    if len(rows) != n or len(neighbor_ids) != n:
        raise ValueError("need one calibrated row per point")
    acc = {}
    for i, cond in enumerate(rows):
        ids = neighbor_ids[i]
        for j, p in zip(ids, cond.probs):
            j = int(j)
            if j == i:
                raise ValueError(f"row {i} lists itself as a neighbor")
            key = (i, j) if i < j else (j, i)
            acc[key] = acc.get(key, 0.0) + p
    keys = sorted(acc)
    row = np.array([k[0] for k in keys], dtype=np.int64)
    col = np.array([k[1] for k in keys], dtype=np.int64)
    val = np.array([acc[k] for k in keys], dtype=np.float64) / (2.0 * n)
    return AffinityModel(row=row, col=col, val=val, n=n)


def build_affinity_model(
    x: np.ndarray,
    n_neighbors: int,
    perplexity: float,
    tol: float = 1e-5,
    max_iter: int = 200,
    seed: int = 0,
):
    """Full pipeline from raw coordinates to the joint P.

    Finds exact k-nearest neighbors with a vantage-point tree, calibrates
    every row to the target perplexity, and symmetrizes. Returns
    (AffinityModel, list[ConditionalRow]) with each row's neighbors field
    holding real point indices.
    """
    x = np.asarray(x, dtype=np.float64)
    tree = build_vptree(x, seed=seed)
    ids, sq = knn_all(tree, n_neighbors)
    rows = []
    for i in range(len(x)):
        cond = calibrate_row(sq[i], perplexity, tol=tol, max_iter=max_iter)
        cond.neighbors = ids[i]
        rows.append(cond)
    return symmetrize(rows, ids, len(x)), rows


def dump_affinity_csv(model: AffinityModel, path) -> None:
    """Write the canonical (i, j, p_ij) triples for debugging."""
    with open(path, "w", newline="") as fh:
        fh.write("i,j,p\n")
        for i, j, v in zip(model.row, model.col, model.val):
            fh.write(f"{i},{j},{v!r}\n")
