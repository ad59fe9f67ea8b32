"""Vantage-point tree for exact k-nearest-neighbor search.

Each node owns one point (its vantage) and splits the remaining points by
their distance to it at the lower median: distances <= radius go left,
strictly greater go right, so ties land in the left subtree. Queries keep a
bounded worst-first heap and prune subtrees with the reverse triangle
inequality, which keeps results exactly equal to a brute-force scan under
the tie rule (smaller squared distance first, then smaller index).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np


@dataclass
class VpTree:
    """Flat-array tree over a fixed point set.

    There is exactly one node per point. radius is the split distance of a
    node (0.0 when it has no children); left/right hold node ids or -1.
    """

    points: np.ndarray   # (n, d), read-only reference coordinates
    vantage: np.ndarray  # (n,) point index owned by each node
    radius: np.ndarray   # (n,) split distance, plain (not squared)
    left: np.ndarray     # (n,) child node id or -1
    right: np.ndarray    # (n,) child node id or -1
    root: int
    seed: int

    @property
    def n_nodes(self) -> int:
        return len(self.vantage)

    def height(self) -> int:
        """Longest root-to-leaf path, counted in nodes."""
        best = 0
        stack = [(self.root, 1)]
        while stack:
            node, depth = stack.pop()
            best = max(best, depth)
            for child in (self.left[node], self.right[node]):
                if child >= 0:
                    stack.append((child, depth + 1))
        return best


def build_vptree(points: np.ndarray, seed: int = 0) -> VpTree:
    """Build a tree over the given points.

    Vantages are drawn uniformly from each node's point set using the
    seed, so the shape is deterministic per (points, seed). Build is
    iterative and handles degenerate inputs (duplicates collapse into
    left-spine chains) without recursion limits.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("points must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite entries")
    n = len(pts)
    rng = np.random.default_rng(seed)

    vantage = np.empty(n, dtype=np.int64)
    radius = np.zeros(n, dtype=np.float64)
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)

    next_slot = 0
    # Stack entries: (candidate point ids, parent slot, is_left_child).
    stack = [(np.arange(n), -1, False)]
    while stack:
        idx, parent, is_left = stack.pop()
        slot = next_slot
        next_slot += 1
        if parent >= 0:
            (left if is_left else right)[parent] = slot

        vi = int(idx[rng.integers(len(idx))]) if len(idx) > 1 else int(idx[0])
        vantage[slot] = vi
        rest = idx[idx != vi]
        if len(rest) == 0:
            continue

        dist = np.sqrt(((pts[rest] - pts[vi]) ** 2).sum(axis=1))
        mid = (len(dist) - 1) // 2
        mu = np.partition(dist, mid)[mid]  # lower median
        radius[slot] = mu
        go_left = dist <= mu  # ties stay left
        # Push right first so the left child occupies the next slot; the
        # resulting slot order (and hence rng consumption) is fixed.
        if np.any(~go_left):
            stack.append((rest[~go_left], slot, False))
        stack.append((rest[go_left], slot, True))

    return VpTree(
        points=pts,
        vantage=vantage,
        radius=radius,
        left=left,
        right=right,
        root=0,
        seed=seed,
    )


def knn_query(tree: VpTree, query_index: int, k: int) -> list:
    """Exact k nearest neighbors of a stored point, excluding itself.

    Returns [(index, squared_distance), ...] sorted ascending by
    (squared_distance, index). Requires 1 <= k <= n - 1.
    """
    n = tree.n_nodes
    if not (0 <= query_index < n):
        raise ValueError(f"query_index={query_index} out of range")
    if not (1 <= k <= n - 1):
        raise ValueError(f"k={k} must lie in [1, {n - 1}]")

    pts = tree.points.tolist()
    q = pts[query_index]
    dim = len(q)
    vantage = tree.vantage
    radius = tree.radius
    left = tree.left
    right = tree.right

    # Max-heap of the current k best as (-d2, -index): the root is the
    # worst kept candidate under the (d2, index) order.
    heap = []
    worst_d2 = np.inf
    worst_idx = -1

    # DFS with pruning; entries carry the squared lower bound on any
    # distance inside that subtree, rechecked against the current worst
    # at pop time.
    stack = [(tree.root, 0.0)]
    while stack:
        node, bound2 = stack.pop()
        if len(heap) == k and bound2 > worst_d2:
            continue

        vi = int(vantage[node])
        p = pts[vi]
        d2 = 0.0
        for t in range(dim):
            diff = q[t] - p[t]
            d2 += diff * diff

        if vi != query_index:
            if len(heap) < k:
                heapq.heappush(heap, (-d2, -vi))
                if len(heap) == k:
                    worst_d2 = -heap[0][0]
                    worst_idx = -heap[0][1]
            elif d2 < worst_d2 or (d2 == worst_d2 and vi < worst_idx):
                heapq.heapreplace(heap, (-d2, -vi))
                worst_d2 = -heap[0][0]
                worst_idx = -heap[0][1]

        lc = left[node]
        rc = right[node]
        if lc < 0 and rc < 0:
            continue
        mu = radius[node]
        d = d2 ** 0.5
        # Left subtree holds distances to the vantage <= mu, right > mu,
        # so the reverse triangle inequality bounds anything below.
        left_gap = d - mu
        right_gap = mu - d
        left_bound2 = left_gap * left_gap if left_gap > 0.0 else 0.0
        right_bound2 = right_gap * right_gap if right_gap > 0.0 else 0.0
        tau2 = worst_d2 if len(heap) == k else np.inf
        # Visit the nearer side first (pushed last). Prune only on a
        # strictly larger bound: an equal bound can still hide an
        # equal-distance neighbor with a smaller index.
        if d <= mu:
            if rc >= 0 and not right_bound2 > tau2:
                stack.append((rc, right_bound2))
            if lc >= 0 and not left_bound2 > tau2:
                stack.append((lc, left_bound2))
        else:
            if lc >= 0 and not left_bound2 > tau2:
                stack.append((lc, left_bound2))
            if rc >= 0 and not right_bound2 > tau2:
                stack.append((rc, right_bound2))

    found = sorted((-negd2, -negidx) for negd2, negidx in heap)
    return [(idx, d2) for d2, idx in found]


def knn_all(tree: VpTree, k: int):
    """Neighbor table for every stored point.

    Returns (indices, sq_distances) of shape (n, k), each row sorted by the
    (squared_distance, index) rule.
    """
    n = tree.n_nodes
    indices = np.empty((n, k), dtype=np.int64)
    sq = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        hits = knn_query(tree, i, k)
        indices[i] = [h[0] for h in hits]
        sq[i] = [h[1] for h in hits]
    return indices, sq
