from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Protocol, Tuple

import numpy as np

from app.errors import ConfigError


class BoundaryLabel(IntEnum):
    DIRICHLET = 0
    NEUMANN = 1


@dataclass
class ClosestPointResult:
    point: np.ndarray
    distance: np.ndarray
    label: np.ndarray
    normal: np.ndarray

    def __getitem__(self, index) -> "ClosestPointResult":
        return ClosestPointResult(self.point[index], self.distance[index], self.label[index], self.normal[index])


@dataclass
class RayHit:
    """First boundary hit along a ray; t is +inf on a miss."""
    t: np.ndarray
    point: np.ndarray
    normal: np.ndarray
    label: np.ndarray

    @property
    def hit(self) -> np.ndarray:
        return np.isfinite(self.t)


@dataclass(frozen=True)
class HalfSpacePartition:
    """Boundary points with q . axis > threshold are Neumann, the rest Dirichlet."""
    axis: Tuple[float, float, float]
    threshold: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        length = np.linalg.norm(axis)
        if axis.shape != (3,) or not length > 0:
            raise ConfigError("partition axis must be a non-zero 3-vector", key="partition.axis")
        object.__setattr__(self, "axis", tuple(axis / length))

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(self.axis)

    def label(self, points: np.ndarray) -> np.ndarray:
        neumann = np.asarray(points) @ self.normal > self.threshold
        return np.where(neumann, BoundaryLabel.NEUMANN, BoundaryLabel.DIRICHLET).astype(np.int8)


class Domain(Protocol):
    """Read-only spatial queries over a domain boundary, vectorized over (n, 3) point arrays."""

    dim: int
    has_dirichlet: bool
    has_neumann: bool
    neumann_area: float

    def distance(self, p: np.ndarray) -> np.ndarray: ...

    def closest_point(self, p: np.ndarray, dirichlet_only: bool = False) -> ClosestPointResult: ...

    def distance_to_dirichlet(self, p: np.ndarray) -> np.ndarray: ...

    def silhouette_distance(self, p: np.ndarray) -> np.ndarray: ...

    def intersect(self, origin: np.ndarray, direction: np.ndarray, t_max: np.ndarray) -> RayHit: ...

    def sample_neumann(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]: ...

    def contains(self, p: np.ndarray) -> np.ndarray: ...

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]: ...


def as_points(p) -> Tuple[np.ndarray, bool]:
    """Promote a single point to a batch of one; the flag says whether to unwrap results."""
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    return (p[None, :] if single else p), single


def empty_closest(n: int) -> ClosestPointResult:
    return ClosestPointResult(
        point=np.full((n, 3), np.nan),
        distance=np.full(n, np.inf),
        label=np.full(n, BoundaryLabel.DIRICHLET, dtype=np.int8),
        normal=np.zeros((n, 3)),
    )
