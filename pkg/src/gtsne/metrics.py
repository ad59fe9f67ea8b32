"""Structure-preservation scores for judging an embedding.

All three scores are invariant to rigid motions of the map: neighbor
overlap and break detection depend only on distances, the centroid score
only on distance ranks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Dataset, Embedding
from .macro import pairwise_sq_dists


@dataclass(frozen=True)
class StructureScores:
    """knn_preservation and centroid_distance_correlation grow with
    quality; line_break_fraction shrinks."""

    knn_preservation: float
    line_break_fraction: float
    centroid_distance_correlation: float


def _coords(obj) -> np.ndarray:
    if isinstance(obj, Dataset):
        return obj.x
    if isinstance(obj, Embedding):
        return obj.y
    return np.asarray(obj, dtype=np.float64)


def _exact_knn_sets(points: np.ndarray, k: int) -> np.ndarray:
    """(n, k) neighbor ids by ascending (squared distance, index)."""
    d2 = pairwise_sq_dists(points, points)
    np.fill_diagonal(d2, np.inf)
    # Stable sort on distances keeps equal-distance ids in index order.
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def knn_preservation(x, y, k: int) -> float:
    """Mean fraction of each point's k nearest input neighbors that are
    also among its k nearest map neighbors. Both sides use exact search.
    """
    xs = _coords(x)
    ys = _coords(y)
    if len(xs) != len(ys):
        raise ValueError("x and y must have the same number of rows")
    n = len(xs)
    if not (1 <= k <= n - 1):
        raise ValueError(f"k={k} must lie in [1, {n - 1}]")
    high = _exact_knn_sets(xs, k)
    low = _exact_knn_sets(ys, k)
    overlap = 0
    for i in range(n):
        overlap += len(set(high[i]).intersection(low[i]))
    return overlap / (n * k)


def line_continuity(y, segments, factor: float = 5.0) -> float:
    """Fraction of consecutive within-segment pairs torn apart in the map.

    segments is a list of (start, end) half-open index ranges that must be
    disjoint with at least 2 points each. A pair breaks when its map
    distance exceeds factor times its segment's median consecutive
    distance; the fraction pools every pair across segments.
    """
    ys = _coords(y)
    if factor <= 1.0:
        raise ValueError("factor must exceed 1")
    if not segments:
        raise ValueError("need at least one segment")
    spans = sorted((int(a), int(b)) for a, b in segments)
    prev_end = -1
    for a, b in spans:
        if not (0 <= a < b <= len(ys)):
            raise ValueError(f"segment ({a}, {b}) out of range")
        if b - a < 2:
            raise ValueError(f"segment ({a}, {b}) needs at least 2 points")
        if a < prev_end:
            raise ValueError("segments overlap")
        prev_end = b
    breaks = 0
    total = 0
    for a, b in spans:
        gaps = np.linalg.norm(np.diff(ys[a:b], axis=0), axis=1)
        median = float(np.median(gaps))
        breaks += int((gaps > factor * median).sum())
        total += len(gaps)
    return breaks / total


def _average_ranks(v: np.ndarray) -> np.ndarray:
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v))
    ranks[order] = np.arange(1, len(v) + 1)
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=ranks)
    return sums[inverse] / counts[inverse]


def _upper_distances(points: np.ndarray) -> np.ndarray:
    d2 = pairwise_sq_dists(points, points)
    iu = np.triu_indices(len(points), k=1)
    return np.sqrt(d2[iu])


def centroid_distance_correlation(t: np.ndarray, c: np.ndarray) -> float:
    """Spearman correlation between high- and low-dimensional centroid
    pair distances. With fewer than 3 centroids (under 3 pairs) the rank
    correlation is undefined: warns and returns nan.
    """
    t = np.asarray(t, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if t.ndim != 2 or c.ndim != 2 or len(t) != len(c):
        raise ValueError("t and c must be 2-D with the same number of rows")
    if len(t) < 3:
        warnings.warn("fewer than 3 centroids: correlation undefined", stacklevel=2)
        return float("nan")
    a = _average_ranks(_upper_distances(t))
    b = _average_ranks(_upper_distances(c))
    sa = a.std()
    sb = b.std()
    if sa == 0.0 or sb == 0.0:
        warnings.warn("constant distance ranks: correlation undefined", stacklevel=2)
        return float("nan")
    return float(((a - a.mean()) @ (b - b.mean())) / (len(a) * sa * sb))
