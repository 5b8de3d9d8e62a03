from dataclasses import dataclass
from typing import Callable, Tuple
import logging

import numpy as np

from app.geometry.primitives import box_distance, box_intersect

logger = logging.getLogger(__name__)

# (query ids, primitive ids) -> per-pair distance or ray parameter, +inf when not applicable
LeafCallback = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class FlatTree:
    p_min: np.ndarray
    p_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray


class BVH:
    """Bounding volume hierarchy over primitive boxes with batched traversal.

    Queries advance all (query, node) pairs together; leaves are resolved by a caller
    supplied callback so the same tree serves triangles and edges.
    """

    def __init__(self, p_min: np.ndarray, p_max: np.ndarray, leaf_size: int = 4):
        self.n_primitives = len(p_min)
        self.leaf_size = leaf_size
        self._prim_min = np.asarray(p_min, dtype=float)
        self._prim_max = np.asarray(p_max, dtype=float)
        self._centroids = 0.5 * (self._prim_min + self._prim_max)
        self.order = np.arange(self.n_primitives)

        nodes = {"p_min": [], "p_max": [], "left": [], "right": [], "start": [], "count": []}
        if self.n_primitives:
            self._build(nodes, 0, self.n_primitives)
        self.tree = FlatTree(**{key: np.asarray(value) for key, value in nodes.items()})
        logger.debug(f"BVH built over {self.n_primitives} primitives with {len(nodes['left'])} nodes")

    def _build(self, nodes: dict, lo: int, hi: int) -> int:
        prims = self.order[lo:hi]
        index = len(nodes["left"])
        nodes["p_min"].append(self._prim_min[prims].min(axis=0))
        nodes["p_max"].append(self._prim_max[prims].max(axis=0))
        for key in ("left", "right", "start", "count"):
            nodes[key].append(-1)

        if hi - lo <= self.leaf_size:
            nodes["start"][index] = lo
            nodes["count"][index] = hi - lo
            return index

        centroids = self._centroids[prims]
        axis = int(np.argmax(centroids.max(axis=0) - centroids.min(axis=0)))
        mid = (hi - lo) // 2
        split = np.argpartition(centroids[:, axis], mid)
        self.order[lo:hi] = prims[split]
        nodes["count"][index] = 0
        nodes["left"][index] = self._build(nodes, lo, lo + mid)
        nodes["right"][index] = self._build(nodes, lo + mid, hi)
        return index

    def _expand_leaves(self, queries: np.ndarray, nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        counts = self.tree.count[nodes]
        total = int(counts.sum())
        q = np.repeat(queries, counts)
        first = np.repeat(self.tree.start[nodes] - np.cumsum(counts) + counts, counts)
        return q, self.order[first + np.arange(total)]

    @staticmethod
    def _reduce_min(q: np.ndarray, prim: np.ndarray, value: np.ndarray, best: np.ndarray, best_prim: np.ndarray):
        idx = np.lexsort((value, q))
        q, prim, value = q[idx], prim[idx], value[idx]
        first = np.ones(len(q), dtype=bool)
        first[1:] = q[1:] != q[:-1]
        q, prim, value = q[first], prim[first], value[first]
        better = value < best[q]
        best[q[better]] = value[better]
        best_prim[q[better]] = prim[better]

    def closest(self, points: np.ndarray, leaf_fn: LeafCallback, r_max=np.inf) -> Tuple[np.ndarray, np.ndarray]:
        """Minimum of leaf_fn over all primitives per query point; primitive -1 when nothing is closer than r_max."""
        n = len(points)
        best = np.full(n, np.inf)
        best = np.minimum(best, r_max)
        best_prim = np.full(n, -1)
        if self.n_primitives == 0 or n == 0:
            return np.full(n, np.inf), best_prim

        queries = np.arange(n)
        nodes = np.zeros(n, dtype=int)
        while len(queries):
            d = box_distance(points[queries], self.tree.p_min[nodes], self.tree.p_max[nodes])
            keep = d <= best[queries]
            queries, nodes = queries[keep], nodes[keep]
            leaf = self.tree.count[nodes] > 0
            if np.any(leaf):
                q, prim = self._expand_leaves(queries[leaf], nodes[leaf])
                self._reduce_min(q, prim, leaf_fn(q, prim), best, best_prim)
            inner = ~leaf
            queries = np.concatenate([queries[inner], queries[inner]])
            nodes = np.concatenate([self.tree.left[nodes[inner]], self.tree.right[nodes[inner]]])
        best[best_prim < 0] = np.inf
        return best, best_prim

    def first_hit(self, origins: np.ndarray, directions: np.ndarray, leaf_fn: LeafCallback,
                  t_max=np.inf) -> Tuple[np.ndarray, np.ndarray]:
        """Smallest ray parameter returned by leaf_fn per ray, +inf and -1 for misses."""
        n = len(origins)
        best = np.broadcast_to(np.asarray(t_max, dtype=float), (n,)).copy()
        best_prim = np.full(n, -1)
        if self.n_primitives == 0 or n == 0:
            return np.full(n, np.inf), best_prim

        queries = np.arange(n)
        nodes = np.zeros(n, dtype=int)
        while len(queries):
            hit, t_near = box_intersect(origins[queries], directions[queries], self.tree.p_min[nodes],
                                        self.tree.p_max[nodes], best[queries])
            keep = hit & (t_near <= best[queries])
            queries, nodes = queries[keep], nodes[keep]
            leaf = self.tree.count[nodes] > 0
            if np.any(leaf):
                q, prim = self._expand_leaves(queries[leaf], nodes[leaf])
                self._reduce_min(q, prim, leaf_fn(q, prim), best, best_prim)
            inner = ~leaf
            queries = np.concatenate([queries[inner], queries[inner]])
            nodes = np.concatenate([self.tree.left[nodes[inner]], self.tree.right[nodes[inner]]])
        best[best_prim < 0] = np.inf
        return best, best_prim
