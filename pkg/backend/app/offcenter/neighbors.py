from dataclasses import dataclass
import itertools
import logging

import numpy as np
from sklearn.neighbors import KDTree

from app.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class NeighborLists:
    """CSR lists: neighbors of point x are indices[indptr[x]:indptr[x + 1]], sorted, self included."""
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_pairs(self) -> int:
        return len(self.indices)

    def owners(self) -> np.ndarray:
        """Evaluation point of every pair."""
        return np.repeat(np.arange(self.n_points), np.diff(self.indptr))

    def self_slots(self) -> np.ndarray:
        """Pair index of (x, x) for every x."""
        owners = self.owners()
        slots = np.flatnonzero(self.indices == owners)
        return slots

    def __getitem__(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def mean_size(self) -> float:
        return float(self.n_pairs) / max(self.n_points, 1)


def _check_parameters(alpha: float, beta: float):
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}", key="alpha")
    if not beta > 0:
        raise ConfigError(f"beta must be positive, got {beta}", key="beta")


def _from_pairs(n: int, x: np.ndarray, y: np.ndarray) -> NeighborLists:
    order = np.lexsort((y, x))
    x, y = x[order], y[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, x + 1, 1)
    return NeighborLists(indptr=np.cumsum(indptr), indices=y.astype(np.int64))


def select_neighbors(points: np.ndarray, radii: np.ndarray, alpha: float = 0.5, beta: float = 10.0) -> NeighborLists:
    """H_x = {y : |x - y| < min(alpha r_y, beta)}."""
    _check_parameters(alpha, beta)
    points = np.asarray(points, dtype=float)
    reach = np.minimum(alpha * np.asarray(radii, dtype=float), beta)

    # query from every y with its own reach, then invert y -> x lists
    tree = KDTree(points)
    found, distances = tree.query_radius(points, r=reach, return_distance=True)
    counts = np.array([len(ids) for ids in found])
    y = np.repeat(np.arange(len(points)), counts)
    x = np.concatenate(found).astype(np.int64) if len(found) else np.zeros(0, dtype=np.int64)
    d = np.concatenate(distances) if len(found) else np.zeros(0)
    strict = d < reach[y]
    lists = _from_pairs(len(points), x[strict], y[strict])
    logger.debug(f"Distance neighbors: {lists.n_pairs} pairs, {lists.mean_size():.1f} per point")
    return lists


def select_neighbors_grid(points: np.ndarray, radii: np.ndarray, grid_index: np.ndarray,
                          alpha: float = 0.5, beta: float = 10.0) -> NeighborLists:
    """Candidates within the Chebyshev index window max |i - i'| < beta, then the distance rule."""
    _check_parameters(alpha, beta)
    points = np.asarray(points, dtype=float)
    radii = np.asarray(radii, dtype=float)
    grid_index = np.asarray(grid_index, dtype=np.int64)
    n, dims = grid_index.shape

    lo = grid_index.min(axis=0)
    shape = grid_index.max(axis=0) - lo + 1
    lookup = np.full(tuple(shape), -1, dtype=np.int64)
    lookup[tuple((grid_index - lo).T)] = np.arange(n)

    width = int(np.ceil(beta)) - 1
    xs, ys = [], []
    for offset in itertools.product(range(-width, width + 1), repeat=dims):
        if max(abs(o) for o in offset) >= beta:
            continue
        target = grid_index - lo + np.asarray(offset)
        valid = np.all((target >= 0) & (target < shape), axis=1)
        source = np.flatnonzero(valid)
        other = lookup[tuple(target[valid].T)]
        keep = other >= 0
        xs.append(source[keep])
        ys.append(other[keep])
    x = np.concatenate(xs)
    y = np.concatenate(ys)

    distance = np.linalg.norm(points[x] - points[y], axis=1)
    rule = distance < np.minimum(alpha * radii[y], beta)
    lists = _from_pairs(n, x[rule], y[rule])
    logger.debug(f"Grid neighbors: {lists.n_pairs} pairs, {lists.mean_size():.1f} per point")
    return lists


def self_only(n: int) -> NeighborLists:
    return NeighborLists(indptr=np.arange(n + 1, dtype=np.int64), indices=np.arange(n, dtype=np.int64))
