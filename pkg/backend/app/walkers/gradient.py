import logging

import numpy as np

from app.errors import DomainError
from app.geometry.base import as_points
from app.kernels.greens import BallSpec, grad_green_ball, grad_poisson_kernel_ball, sphere_area
from app.kernels.sampling import sample_source_centered, sample_sphere_uniform
from app.walkers.config import WalkConfig
from app.walkers.wos import walk_on_spheres

logger = logging.getLogger(__name__)


def wos_gradient(scene, points, cfg: WalkConfig, rng: np.random.Generator) -> np.ndarray:
    """One gradient sample per point from the maximal ball B_p.

    The boundary term is u(z) grad P(p, z) / p(z), which at the center reduces to (d / r) u(z) nu(z).
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    params = cfg.kernel_params(scene)
    radius = scene.domain.distance(points)
    if np.any(~(radius > 0)):
        raise DomainError("gradient estimates need points strictly inside the domain")
    ball = BallSpec(points, radius)

    z = sample_sphere_uniform(rng, ball, params).point
    boundary_value = walk_on_spheres(scene, z, cfg, rng).value
    kernel = grad_poisson_kernel_ball(points, z, ball, params) * sphere_area(radius, params.dim)[:, None]
    grad = boundary_value[:, None] * kernel

    if scene.source is not None and cfg.source_samples > 0:
        m = cfg.source_samples
        draw = sample_source_centered(rng, BallSpec(points[:, None, :], radius[:, None]), params, size=(n, m))
        wide = BallSpec(np.broadcast_to(points[:, None, :], (n, m, 3)), np.broadcast_to(radius[:, None], (n, m)))
        g = grad_green_ball(np.broadcast_to(points[:, None, :], (n, m, 3)), draw.point, wide, params)
        term = scene.source(draw.point)[..., None] * g / draw.pdf[..., None]
        grad = grad + term.mean(axis=1)
    return grad


def wos_gradient_estimate(scene, p, cfg: WalkConfig, rng: np.random.Generator) -> np.ndarray:
    """Single-sample estimate of grad u(p) on an all-Dirichlet scene."""
    points, single = as_points(p)
    if scene.domain.has_neumann:
        raise DomainError("gradient estimates need an all-Dirichlet scene")
    if not np.all(scene.domain.contains(points)):
        raise DomainError("gradient estimates need points inside the domain")
    grad = wos_gradient(scene, points, cfg, rng)
    return grad[0] if single else grad
