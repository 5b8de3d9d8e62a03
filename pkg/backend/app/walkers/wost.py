import logging
from typing import Optional

import numpy as np

from app.errors import DomainError
from app.geometry.base import as_points
from app.kernels.greens import BallSpec, KernelParams, green_centered, poisson_dampening
from app.kernels.sampling import sample_source_centered, uniform_directions
from app.walkers.config import WalkConfig, WalkSample

logger = logging.getLogger(__name__)


def _star_source_term(rng, scene, p, radius, on_boundary, normal, params: KernelParams, samples: int):
    """Source contribution over the star region; samples hidden from p are dropped."""
    k = len(p)
    if scene.source is None or samples == 0 or k == 0:
        return np.zeros(k)
    ball = BallSpec(p[:, None, :], radius[:, None])
    draw = sample_source_centered(rng, ball, params, size=(k, samples))
    offset = draw.point - p[:, None, :]
    s = np.linalg.norm(offset, axis=-1)
    direction = offset / s[..., None]

    hit = scene.domain.intersect(np.repeat(p, samples, axis=0), direction.reshape(-1, 3), s.reshape(-1))
    visible = ~hit.hit.reshape(k, samples)
    outward = np.einsum("kmi,ki->km", direction, normal) > 0
    visible &= ~(on_boundary[:, None] & outward)

    contribution = np.zeros((k, samples))
    if np.any(visible):
        ratio = green_centered(s[visible], np.broadcast_to(radius[:, None], s.shape)[visible], params)
        contribution[visible] = scene.source(draw.point[visible]) * ratio / draw.pdf[visible]
    return contribution.mean(axis=1)


def _neumann_term(rng, scene, p, radius, params: KernelParams):
    """h(y) G(p, y) / pdf(y) with y uniform over the Neumann area, kept only inside the star ball."""
    k = len(p)
    if scene.neumann is None or not scene.domain.has_neumann or k == 0:
        return np.zeros(k)
    y, normal = scene.domain.sample_neumann(rng, (k,))
    s = np.linalg.norm(y - p, axis=-1)
    inside = (s < radius) & (s > 0)
    contribution = np.zeros(k)
    if np.any(inside):
        g = green_centered(s[inside], radius[inside], params)
        contribution[inside] = scene.neumann(y[inside], normal[inside]) * g * scene.domain.neumann_area
    return contribution


def walk_on_stars(scene, points, cfg: WalkConfig, rng: np.random.Generator,
                  on_boundary: Optional[np.ndarray] = None, normals: Optional[np.ndarray] = None) -> WalkSample:
    """Mixed Dirichlet/Neumann walks; walks reflect off Neumann geometry inside star regions."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    params = cfg.kernel_params(scene)
    domain = scene.domain

    x = points.copy()
    boundary = np.zeros(n, dtype=bool) if on_boundary is None else np.asarray(on_boundary, dtype=bool).copy()
    normal = np.zeros((n, 3)) if normals is None else np.asarray(normals, dtype=float).copy()
    weight = np.ones(n)
    value = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    terminated = np.zeros(n, dtype=bool)
    active = np.arange(n)

    for _ in range(cfg.max_steps):
        if len(active) == 0:
            break
        p = x[active]
        d_dirichlet = domain.distance_to_dirichlet(p)
        shell = d_dirichlet < cfg.epsilon
        if np.any(shell):
            done = active[shell]
            cp = domain.closest_point(p[shell], dirichlet_only=True)
            value[done] += weight[done] * scene.dirichlet(cp.point)
            terminated[done] = True
            active, p, d_dirichlet = active[~shell], p[~shell], d_dirichlet[~shell]
            if len(active) == 0:
                break

        radius = np.minimum(d_dirichlet, domain.silhouette_distance(p))
        radius = np.maximum(radius, cfg.star_floor)
        on_bnd = boundary[active]
        nrm = normal[active]
        # source and flux terms are doubled on the boundary
        factor = np.where(on_bnd, 2.0, 1.0)

        steps[active] += 1
        source = _star_source_term(rng, scene, p, radius, on_bnd, nrm, params, cfg.source_samples)
        flux = _neumann_term(rng, scene, p, radius, params)
        value[active] += weight[active] * factor * (source + flux)

        v = uniform_directions(rng, (len(active),), params.dim)
        flip = on_bnd & (np.einsum("ki,ki->k", v, nrm) > 0)
        v[flip] = -v[flip]
        hit = domain.intersect(p, v, radius)
        reflected = hit.hit & (hit.t < radius)
        t = np.where(reflected, hit.t, radius)
        weight[active] *= poisson_dampening(t, radius, params)

        x[active] = np.where(reflected[:, None], hit.point, p + radius[:, None] * v)
        boundary[active] = reflected
        normal[active] = np.where(reflected[:, None], hit.normal, 0.0)

    if len(active):
        cp = domain.closest_point(x[active], dirichlet_only=True)
        reachable = np.isfinite(cp.distance)
        ids = active[reachable]
        value[ids] += weight[ids] * scene.dirichlet(cp.point[reachable])
        logger.warning(f"{len(active)} star walks reached max_steps={cfg.max_steps} and were truncated")

    return WalkSample(value=value, steps=steps, terminated=terminated)


def wost_estimate(scene, p, cfg: WalkConfig, rng: np.random.Generator) -> WalkSample:
    """Single-sample Walk-on-Stars estimate of u(p) under mixed boundary conditions."""
    points, single = as_points(p)
    if not np.all(scene.domain.contains(points)):
        raise DomainError("walk must start inside the domain")
    sample = walk_on_stars(scene, points, cfg, rng)
    return sample[0] if single else sample
