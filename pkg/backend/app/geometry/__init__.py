from app.geometry.analytic import BallDomain, BoxDomain
from app.geometry.base import BoundaryLabel, ClosestPointResult, Domain, HalfSpacePartition, RayHit
from app.geometry.mesh import BoundaryMesh, MeshDomain
from app.geometry.queries import (
    closest_point,
    distance_to_boundary,
    distance_to_dirichlet,
    ray_ball_exit,
    star_radius,
)

__all__ = [
    "BallDomain",
    "BoxDomain",
    "BoundaryLabel",
    "BoundaryMesh",
    "ClosestPointResult",
    "Domain",
    "HalfSpacePartition",
    "MeshDomain",
    "RayHit",
    "closest_point",
    "distance_to_boundary",
    "distance_to_dirichlet",
    "ray_ball_exit",
    "star_radius",
]
