"""Point queries against a domain, with the preconditions of the public API checked."""
import numpy as np

from app.errors import DomainError
from app.geometry.base import ClosestPointResult, Domain, as_points


def _require_interior(p: np.ndarray, domain: Domain):
    if not np.all(domain.contains(p)):
        raise DomainError("query point must lie strictly inside the domain")


def distance_to_boundary(p, domain: Domain):
    """Radius r_p of the maximal ball B_p."""
    points, single = as_points(p)
    _require_interior(points, domain)
    d = domain.distance(points)
    if np.any(~(d > 0)):
        raise DomainError("query point lies on the boundary")
    return float(d[0]) if single else d


def distance_to_dirichlet(p, domain: Domain):
    """Distance to the Dirichlet part; +inf when the domain has none."""
    points, single = as_points(p)
    _require_interior(points, domain)
    d = domain.distance_to_dirichlet(points)
    return float(d[0]) if single else d


def closest_point(p, domain: Domain) -> ClosestPointResult:
    return domain.closest_point(p)


def ray_ball_exit(origin, direction, center, radius):
    """Smallest t > 0 with |origin + t direction - center| = radius, for origins inside the ball."""
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    rel = origin - np.asarray(center, dtype=float)
    radius = np.asarray(radius, dtype=float)
    c = np.einsum("...i,...i->...", rel, rel) - radius * radius
    if np.any(~(c < 0)):
        raise DomainError("ray origin must lie strictly inside the ball")
    b = np.einsum("...i,...i->...", rel, direction)
    # -b + sqrt(b^2 - c) written to avoid cancellation when b > 0
    root = np.sqrt(b * b - c)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(b > 0, -c / (b + root), root - b)
    return float(t) if np.ndim(t) == 0 else t


def star_radius(p, domain: Domain, r_min: float, r_max: float = np.inf):
    """min(Dirichlet distance, silhouette distance, r_max), clamped below by r_min."""
    points, single = as_points(p)
    radius = np.minimum(np.minimum(domain.distance_to_dirichlet(points), domain.silhouette_distance(points)), r_max)
    radius = np.maximum(radius, r_min)
    return float(radius[0]) if single else radius
