from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple
import logging

import numpy as np
import trimesh

from app.errors import DomainError, SceneError
from app.geometry.base import BoundaryLabel, ClosestPointResult, HalfSpacePartition, RayHit, as_points
from app.geometry.bvh import BVH
from app.geometry.primitives import (
    closest_point_on_segments,
    closest_point_on_triangles,
    dot,
    norm,
    ray_triangles,
    solid_angles,
)

logger = logging.getLogger(__name__)

# rays leaving a surface ignore hits closer than this (normalized units)
SELF_HIT_EPSILON = 1e-9
# point-triangle pairs evaluated per winding number batch
WINDING_BATCH = 2_000_000


@dataclass
class BoundaryMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise SceneError("mesh vertices must be an (n, 3) array", key="geometry.mesh")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3 or len(self.triangles) == 0:
            raise SceneError("mesh needs at least one triangle", key="geometry.mesh")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise SceneError("triangle index out of range", key="geometry.mesh")
        if len(self.labels) != len(self.triangles):
            raise SceneError("every triangle needs exactly one boundary label", key="geometry.mesh")
        if not np.all(np.isfinite(self.vertices)):
            raise SceneError("mesh bounds must be finite", key="geometry.mesh")

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh, partition: Optional[HalfSpacePartition] = None) -> "BoundaryMesh":
        vertices = np.asarray(mesh.vertices, dtype=float)
        triangles = np.asarray(mesh.faces, dtype=np.int64)
        return cls.labeled(vertices, triangles, partition)

    @classmethod
    def labeled(cls, vertices: np.ndarray, triangles: np.ndarray,
                partition: Optional[HalfSpacePartition] = None) -> "BoundaryMesh":
        if partition is None:
            labels = np.full(len(triangles), BoundaryLabel.DIRICHLET, dtype=np.int8)
        else:
            labels = partition.label(vertices[triangles].mean(axis=1))
        return cls(vertices=vertices, triangles=triangles, labels=labels)

    @classmethod
    def from_obj(cls, path, partition: Optional[HalfSpacePartition] = None, normalize: bool = True) -> "BoundaryMesh":
        """Load a Wavefront OBJ; polygons are fan-triangulated by the loader."""
        path = Path(path)
        if not path.exists():
            raise SceneError(f"mesh file not found: {path}", key="geometry.path")
        try:
            mesh = trimesh.load(str(path), force="mesh", process=False)
        except Exception as e:
            logger.error(f"Failed to load mesh {path}: {str(e)}")
            raise SceneError(f"could not read mesh {path}: {e}", key="geometry.path") from e

        vertices = np.asarray(mesh.vertices, dtype=float)
        triangles = np.asarray(mesh.faces, dtype=np.int64)
        if normalize:
            vertices = normalize_vertices(vertices)
        triangles = orient_outward(vertices, triangles)
        logger.info(f"Loaded mesh {path.name}: {len(vertices)} vertices, {len(triangles)} triangles")
        return cls.labeled(vertices, triangles, partition)

    def signed_volume(self) -> float:
        return signed_volume(self.vertices, self.triangles)


def signed_volume(vertices: np.ndarray, triangles: np.ndarray) -> float:
    a, b, c = (vertices[triangles[:, i]] for i in range(3))
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def orient_outward(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    if signed_volume(vertices, triangles) < 0:
        logger.info("Mesh is wound inward; flipping triangle orientation")
        return triangles[:, ::-1].copy()
    return triangles


def normalize_vertices(vertices: np.ndarray) -> np.ndarray:
    """Center the bounding box at the origin and scale it into [-1, 1]^3."""
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    scale = 0.5 * float(np.max(hi - lo))
    if not scale > 0:
        raise SceneError("mesh has zero extent", key="geometry.mesh")
    return (vertices - 0.5 * (lo + hi)) / scale


def _edge_table(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges and, per edge, up to two adjacent triangles (-1 when open)."""
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    owner = np.tile(np.arange(len(triangles)), 3)
    edges = np.sort(edges, axis=1)
    unique, inverse = np.unique(edges, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    adjacent = np.full((len(unique), 2), -1, dtype=np.int64)
    order = np.argsort(inverse, kind="stable")
    slot = np.zeros(len(inverse), dtype=np.int64)
    sorted_inverse = inverse[order]
    repeat = np.ones(len(order), dtype=bool)
    repeat[1:] = sorted_inverse[1:] != sorted_inverse[:-1]
    group_start = np.maximum.accumulate(np.where(repeat, np.arange(len(order)), 0))
    slot[order] = np.arange(len(order)) - group_start
    keep = slot < 2
    adjacent[inverse[keep], slot[keep]] = owner[keep]
    return unique, adjacent


class MeshDomain:
    """Triangle-mesh domain with BVH-accelerated closest point, silhouette and ray queries."""

    dim = 3

    def __init__(self, mesh: BoundaryMesh):
        self.mesh = mesh
        v, t = mesh.vertices, mesh.triangles
        self._a, self._b, self._c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        cross = np.cross(self._b - self._a, self._c - self._a)
        doubled = norm(cross)
        if np.any(doubled <= 0):
            raise SceneError("mesh contains degenerate triangles", key="geometry.mesh")
        self._normals = cross / doubled[:, None]
        self._areas = 0.5 * doubled

        tri_min = np.minimum(np.minimum(self._a, self._b), self._c)
        tri_max = np.maximum(np.maximum(self._a, self._b), self._c)
        neumann = mesh.labels == BoundaryLabel.NEUMANN
        self._dirichlet_ids = np.flatnonzero(~neumann)
        self._neumann_ids = np.flatnonzero(neumann)
        self._bvh_all = BVH(tri_min, tri_max)
        self._bvh_dirichlet = BVH(tri_min[self._dirichlet_ids], tri_max[self._dirichlet_ids])

        self.has_dirichlet = len(self._dirichlet_ids) > 0
        self.has_neumann = len(self._neumann_ids) > 0
        self.neumann_area = float(self._areas[self._neumann_ids].sum())
        self._neumann_cdf = np.cumsum(self._areas[self._neumann_ids]) / max(self.neumann_area, 1e-300)

        # Neumann edges: interior edges between two Neumann faces plus open edges of the Neumann part
        edges, adjacent = _edge_table(t)
        left = (adjacent[:, 0] >= 0) & neumann[np.maximum(adjacent[:, 0], 0)]
        right = (adjacent[:, 1] >= 0) & neumann[np.maximum(adjacent[:, 1], 0)]
        use = left | right
        self._edges = edges[use]
        self._edge_faces = np.where(left[use, None] & right[use, None], adjacent[use],
                                    np.stack([np.where(left[use], adjacent[use, 0], adjacent[use, 1]),
                                              np.full(int(use.sum()), -1)], axis=1))
        self._edge_a = v[self._edges[:, 0]] if len(self._edges) else np.zeros((0, 3))
        self._edge_b = v[self._edges[:, 1]] if len(self._edges) else np.zeros((0, 3))
        self._bvh_edges = BVH(np.minimum(self._edge_a, self._edge_b), np.maximum(self._edge_a, self._edge_b))
        logger.debug(f"Mesh domain: {len(t)} triangles, {len(self._neumann_ids)} Neumann, "
                     f"{len(self._edges)} Neumann edges")

    def _triangle_distance(self, points: np.ndarray, ids: np.ndarray):
        def leaf(q, prim):
            tri = ids[prim]
            cp = closest_point_on_triangles(points[q], self._a[tri], self._b[tri], self._c[tri])
            return norm(points[q] - cp)
        return leaf

    def _closest(self, p: np.ndarray, dirichlet_only: bool) -> ClosestPointResult:
        ids = self._dirichlet_ids if dirichlet_only else np.arange(len(self._a))
        bvh = self._bvh_dirichlet if dirichlet_only else self._bvh_all
        distance, prim = bvh.closest(p, self._triangle_distance(p, ids))
        found = prim >= 0
        tri = ids[np.where(found, prim, 0)] if len(ids) else np.zeros(len(p), dtype=np.int64)
        point = np.full((len(p), 3), np.nan)
        normal = np.zeros((len(p), 3))
        label = np.zeros(len(p), dtype=np.int8)
        if np.any(found):
            t = tri[found]
            point[found] = closest_point_on_triangles(p[found], self._a[t], self._b[t], self._c[t])
            normal[found] = self._normals[t]
            label[found] = self.mesh.labels[t]
        return ClosestPointResult(point=point, distance=distance, label=label, normal=normal)

    def distance(self, p) -> np.ndarray:
        p, single = as_points(p)
        d = self._bvh_all.closest(p, self._triangle_distance(p, np.arange(len(self._a))))[0]
        return d[0] if single else d

    def closest_point(self, p, dirichlet_only: bool = False) -> ClosestPointResult:
        p, single = as_points(p)
        result = self._closest(p, dirichlet_only)
        return result[0] if single else result

    def distance_to_dirichlet(self, p) -> np.ndarray:
        p, single = as_points(p)
        d = self._bvh_dirichlet.closest(p, self._triangle_distance(p, self._dirichlet_ids))[0]
        return d[0] if single else d

    def is_silhouette(self, p: np.ndarray, edge_ids: np.ndarray) -> np.ndarray:
        """An edge is a silhouette if its two faces place p on opposite sides; open edges always are."""
        faces = self._edge_faces[edge_ids]
        open_edge = faces[:, 1] < 0
        f0, f1 = np.maximum(faces[:, 0], 0), np.maximum(faces[:, 1], 0)
        rel = p - self._edge_a[edge_ids]
        s0 = dot(self._normals[f0], rel)
        s1 = dot(self._normals[f1], rel)
        return open_edge | (s0 * s1 < 0)

    def silhouette_distance(self, p) -> np.ndarray:
        p, single = as_points(p)

        def leaf(q, prim):
            cp = closest_point_on_segments(p[q], self._edge_a[prim], self._edge_b[prim])
            d = norm(p[q] - cp)
            return np.where(self.is_silhouette(p[q], prim), d, np.inf)

        d = self._bvh_edges.closest(p, leaf)[0]
        return d[0] if single else d

    def intersect(self, origin: np.ndarray, direction: np.ndarray, t_max) -> RayHit:
        def leaf(q, prim):
            return ray_triangles(origin[q], direction[q], self._a[prim], self._b[prim], self._c[prim],
                                 t_min=SELF_HIT_EPSILON)

        t, prim = self._bvh_all.first_hit(origin, direction, leaf, t_max)
        hit = prim >= 0
        tri = np.where(hit, prim, 0)
        point = origin + np.where(hit, t, 0.0)[:, None] * direction
        return RayHit(t=t, point=point, normal=self._normals[tri], label=self.mesh.labels[tri])

    def sample_neumann(self, rng: np.random.Generator, shape: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
        if not self.has_neumann:
            raise DomainError("domain has no Neumann boundary to sample")
        pick = np.searchsorted(self._neumann_cdf, rng.random(shape), side="right")
        tri = self._neumann_ids[np.minimum(pick, len(self._neumann_ids) - 1)]
        u = rng.random(tuple(shape) + (2,))
        flip = u.sum(axis=-1) > 1.0
        u = np.where(flip[..., None], 1.0 - u, u)
        a = self._a[tri]
        points = a + u[..., :1] * (self._b[tri] - a) + u[..., 1:] * (self._c[tri] - a)
        return points, self._normals[tri]

    def winding_number(self, p) -> np.ndarray:
        p, single = as_points(p)
        total = np.zeros(len(p))
        rows = max(1, WINDING_BATCH // len(self._a))
        for lo in range(0, len(p), rows):
            chunk = p[lo:lo + rows, None, :]
            total[lo:lo + rows] = solid_angles(chunk, self._a, self._b, self._c).sum(axis=1)
        w = total / (4.0 * np.pi)
        return w[0] if single else w

    def contains(self, p) -> np.ndarray:
        return self.winding_number(p) > 0.5

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.mesh.vertices.min(axis=0), self.mesh.vertices.max(axis=0)
