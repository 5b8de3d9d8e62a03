"""Exact-distance test domains: a ball (disc in 2D) and an axis-aligned box (square in 2D).

2D domains live in the z = 0 plane; all queries take 3-vectors.
"""
from typing import Optional, Tuple
import logging

import numpy as np

from app.errors import ConfigError, DomainError
from app.geometry.base import BoundaryLabel, ClosestPointResult, HalfSpacePartition, RayHit, as_points, empty_closest
from app.geometry.primitives import closest_point_on_segments, dot, norm

logger = logging.getLogger(__name__)


def _perpendicular(n: np.ndarray, dim: int) -> np.ndarray:
    if dim == 2:
        return np.array([-n[1], n[0], 0.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t = np.cross(n, helper)
    return t / np.linalg.norm(t)


class BallDomain:
    """Ball B(center, radius); a half-space partition turns a spherical cap into the Neumann part."""

    def __init__(self, center, radius: float, partition: Optional[HalfSpacePartition] = None, dim: int = 3):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.dim = dim
        self.partition = partition
        if not self.radius > 0:
            raise ConfigError(f"ball radius must be positive, got {radius}", key="geometry.radius")
        if dim == 2 and (self.center[2] != 0 or (partition and partition.normal[2] != 0)):
            raise ConfigError("2D ball and partition axis must lie in the z = 0 plane", key="geometry")

        # Neumann cap is u . n > h on the unit sphere around the center
        if partition is None:
            self._h = np.inf
        else:
            self._h = (partition.threshold - self.center @ partition.normal) / self.radius
        self.has_neumann = self._h < 1.0
        self.has_dirichlet = self._h > -1.0
        self.neumann_area = self._cap_measure(self._h)

    def _cap_measure(self, h: float) -> float:
        if h >= 1.0:
            return 0.0
        h = max(h, -1.0)
        if self.dim == 3:
            return 2.0 * np.pi * self.radius ** 2 * (1.0 - h)
        return 2.0 * self.radius * float(np.arccos(h))

    def _label(self, q: np.ndarray) -> np.ndarray:
        if self.partition is None:
            return np.full(len(q), BoundaryLabel.DIRICHLET, dtype=np.int8)
        return self.partition.label(q)

    def _radial_directions(self, p: np.ndarray) -> np.ndarray:
        rel = p - self.center
        length = norm(rel)
        fallback = -self.partition.normal if self.partition is not None else np.array([1.0, 0.0, 0.0])
        with np.errstate(divide="ignore", invalid="ignore"):
            u = rel / length[:, None]
        return np.where((length > 0)[:, None], u, fallback)

    def distance(self, p) -> np.ndarray:
        p, single = as_points(p)
        d = np.abs(self.radius - norm(p - self.center))
        return d[0] if single else d

    def closest_point(self, p, dirichlet_only: bool = False) -> ClosestPointResult:
        p, single = as_points(p)
        u = self._radial_directions(p)
        q = self.center + self.radius * u
        label = self._label(q)
        if dirichlet_only and self.partition is not None:
            if not self.has_dirichlet:
                q = np.full_like(q, np.nan)
            else:
                n = self.partition.normal
                move = label == BoundaryLabel.NEUMANN
                rel = p - self.center
                tangent = rel - (rel @ n)[:, None] * n
                length = norm(tangent)
                with np.errstate(divide="ignore", invalid="ignore"):
                    w = tangent / length[:, None]
                w = np.where((length > 1e-300)[:, None], w, _perpendicular(n, self.dim))
                h = self._h
                rim = self.center + self.radius * (h * n + np.sqrt(max(1.0 - h * h, 0.0)) * w)
                q = np.where(move[:, None], rim, q)
                label = np.full(len(q), BoundaryLabel.DIRICHLET, dtype=np.int8)
        normal = (q - self.center) / self.radius
        result = ClosestPointResult(point=q, distance=norm(p - q), label=label, normal=normal)
        if dirichlet_only and not self.has_dirichlet:
            result.distance = np.full(len(p), np.inf)
        return result[0] if single else result

    def distance_to_dirichlet(self, p) -> np.ndarray:
        return self.closest_point(p, dirichlet_only=True).distance

    def silhouette_distance(self, p) -> np.ndarray:
        """Distance to the rim of the Neumann cap; a convex boundary has no other silhouettes."""
        p, single = as_points(p)
        if not (self.has_neumann and self.has_dirichlet):
            d = np.full(len(p), np.inf)
        else:
            n = self.partition.normal
            h = self._h
            rim_center = self.center + self.radius * h * n
            rim_radius = self.radius * np.sqrt(1.0 - h * h)
            rel = p - rim_center
            along = rel @ n
            across = norm(rel - along[:, None] * n)
            d = np.sqrt(along ** 2 + (across - rim_radius) ** 2)
        return d[0] if single else d

    def intersect(self, origin: np.ndarray, direction: np.ndarray, t_max) -> RayHit:
        rel = origin - self.center
        b = dot(rel, direction)
        c = dot(rel, rel) - self.radius ** 2
        t = -b + np.sqrt(np.clip(b * b - c, 0.0, None))
        t = np.where(t <= t_max, t, np.inf)
        point = origin + np.where(np.isfinite(t), t, 0.0)[:, None] * direction
        normal = (point - self.center) / self.radius
        return RayHit(t=t, point=point, normal=normal, label=self._label(point))

    def sample_neumann(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
        if not self.has_neumann:
            raise DomainError("domain has no Neumann boundary to sample")
        n = self.partition.normal if self.partition is not None else np.array([0.0, 0.0, 1.0])
        t1 = _perpendicular(n, self.dim)
        h = max(self._h, -1.0)
        if self.dim == 3:
            t2 = np.cross(n, t1)
            # uniform on the cap: height uniform in [h, 1]
            height = rng.uniform(h, 1.0, size=shape)
            phi = rng.uniform(0.0, 2.0 * np.pi, size=shape)
            ring = np.sqrt(np.clip(1.0 - height ** 2, 0.0, None))
            u = (height[..., None] * n + (ring * np.cos(phi))[..., None] * t1
                 + (ring * np.sin(phi))[..., None] * t2)
        else:
            half = np.arccos(h)
            theta = rng.uniform(-half, half, size=shape)
            u = np.cos(theta)[..., None] * n + np.sin(theta)[..., None] * t1
        points = self.center + self.radius * u
        return points, u

    def contains(self, p) -> np.ndarray:
        p, single = as_points(p)
        inside = norm(p - self.center) < self.radius
        return inside[0] if single else inside

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        extent = np.full(3, self.radius)
        if self.dim == 2:
            extent[2] = 0.0
        return self.center - extent, self.center + extent


class BoxDomain:
    """Axis-aligned box; the boundary is stored as labeled axis-aligned rectangles."""

    def __init__(self, lo, hi, partition: Optional[HalfSpacePartition] = None, dim: int = 3):
        self.lo = np.asarray(lo, dtype=float).copy()
        self.hi = np.asarray(hi, dtype=float).copy()
        self.dim = dim
        self.partition = partition
        if dim == 2:
            self.lo[2] = self.hi[2] = 0.0
        if np.any(~(self.lo[:dim] < self.hi[:dim])):
            raise ConfigError("box requires min < max componentwise", key="geometry.min")

        split_axis, split_value = None, None
        if partition is not None:
            axis = np.flatnonzero(np.abs(partition.normal) > 1e-12)
            if len(axis) != 1 or axis[0] >= dim:
                raise ConfigError("box partitions must use a coordinate axis of the domain", key="partition.axis")
            split_axis = int(axis[0])
            split_value = partition.threshold * np.sign(partition.normal[split_axis])

        rect_min, rect_max, normals, silhouettes = [], [], [], []
        for a in range(dim):
            for side, value in ((-1.0, self.lo[a]), (1.0, self.hi[a])):
                r_min, r_max = self.lo.copy(), self.hi.copy()
                r_min[a] = r_max[a] = value
                normal = np.zeros(3)
                normal[a] = side
                pieces = [(r_min, r_max)]
                if split_axis is not None and split_axis != a and self.lo[split_axis] <= split_value <= self.hi[split_axis]:
                    below_max, above_min = r_max.copy(), r_min.copy()
                    below_max[split_axis] = above_min[split_axis] = split_value
                    pieces = [(r_min, below_max), (above_min, r_max)]
                    seg_a, seg_b = r_min.copy(), r_max.copy()
                    seg_a[split_axis] = seg_b[split_axis] = split_value
                    silhouettes.append((seg_a, seg_b))
                for p_min, p_max in pieces:
                    rect_min.append(p_min)
                    rect_max.append(p_max)
                    normals.append(normal)

        self._rect_min = np.asarray(rect_min)
        self._rect_max = np.asarray(rect_max)
        self._normals = np.asarray(normals)
        centers = 0.5 * (self._rect_min + self._rect_max)
        if partition is None:
            self._labels = np.full(len(centers), BoundaryLabel.DIRICHLET, dtype=np.int8)
        else:
            self._labels = partition.label(centers)
        extents = self._rect_max - self._rect_min
        free = [np.delete(extents[i, :dim], int(np.argmax(np.abs(self._normals[i])))) for i in range(len(extents))]
        self._areas = np.array([np.prod(f) for f in free])

        neumann = self._labels == BoundaryLabel.NEUMANN
        self.has_neumann = bool(np.any(neumann & (self._areas > 0)))
        self.has_dirichlet = bool(np.any(~neumann & (self._areas > 0)))
        self.neumann_area = float(self._areas[neumann].sum())
        if self.has_neumann and self.has_dirichlet and silhouettes:
            self._silhouettes = np.asarray(silhouettes)
        else:
            self._silhouettes = np.zeros((0, 2, 3))

    def _closest(self, p: np.ndarray, mask: np.ndarray) -> ClosestPointResult:
        n = len(p)
        if not np.any(mask):
            return empty_closest(n)
        rect_min, rect_max = self._rect_min[mask], self._rect_max[mask]
        q = np.clip(p[:, None, :], rect_min[None], rect_max[None])
        d = norm(p[:, None, :] - q)
        best = np.argmin(d, axis=1)
        rows = np.arange(n)
        return ClosestPointResult(
            point=q[rows, best],
            distance=d[rows, best],
            label=self._labels[mask][best],
            normal=self._normals[mask][best],
        )

    def distance(self, p) -> np.ndarray:
        p, single = as_points(p)
        d = self._closest(p, np.ones(len(self._labels), dtype=bool)).distance
        return d[0] if single else d

    def closest_point(self, p, dirichlet_only: bool = False) -> ClosestPointResult:
        p, single = as_points(p)
        mask = np.ones(len(self._labels), dtype=bool)
        if dirichlet_only:
            mask = (self._labels == BoundaryLabel.DIRICHLET) & (self._areas > 0)
        result = self._closest(p, mask)
        return result[0] if single else result

    def distance_to_dirichlet(self, p) -> np.ndarray:
        return self.closest_point(p, dirichlet_only=True).distance

    def silhouette_distance(self, p) -> np.ndarray:
        """Distance to the lines where the partition plane cuts the faces."""
        p, single = as_points(p)
        if len(self._silhouettes) == 0:
            d = np.full(len(p), np.inf)
        else:
            a = self._silhouettes[None, :, 0]
            b = self._silhouettes[None, :, 1]
            q = closest_point_on_segments(p[:, None, :], a, b)
            d = norm(p[:, None, :] - q).min(axis=1)
        return d[0] if single else d

    def intersect(self, origin: np.ndarray, direction: np.ndarray, t_max) -> RayHit:
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hi = (self.hi - origin) / direction
            t_lo = (self.lo - origin) / direction
        t_axis = np.where(direction > 0, t_hi, np.where(direction < 0, t_lo, np.inf))
        t_axis[:, self.dim:] = np.inf
        axis = np.argmin(t_axis, axis=1)
        rows = np.arange(len(origin))
        t = t_axis[rows, axis]
        t = np.where(t <= t_max, t, np.inf)
        point = origin + np.where(np.isfinite(t), t, 0.0)[:, None] * direction
        point = np.clip(point, self.lo, self.hi)
        normal = np.zeros_like(point)
        normal[rows, axis] = np.sign(direction[rows, axis])
        label = (self.partition.label(point) if self.partition is not None
                 else np.full(len(point), BoundaryLabel.DIRICHLET, dtype=np.int8))
        return RayHit(t=t, point=point, normal=normal, label=label)

    def sample_neumann(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
        if not self.has_neumann:
            raise DomainError("domain has no Neumann boundary to sample")
        neumann = np.flatnonzero((self._labels == BoundaryLabel.NEUMANN) & (self._areas > 0))
        weights = self._areas[neumann] / self._areas[neumann].sum()
        rect = neumann[rng.choice(len(neumann), size=shape, p=weights)]
        u = rng.random(tuple(shape) + (3,))
        points = self._rect_min[rect] + u * (self._rect_max[rect] - self._rect_min[rect])
        return points, self._normals[rect]

    def contains(self, p) -> np.ndarray:
        p, single = as_points(p)
        inside = np.all((p[:, :self.dim] > self.lo[:self.dim]) & (p[:, :self.dim] < self.hi[:self.dim]), axis=1)
        return inside[0] if single else inside

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.lo.copy(), self.hi.copy()
