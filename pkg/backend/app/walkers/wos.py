import logging

import numpy as np

from app.errors import DomainError
from app.geometry.base import as_points
from app.kernels.greens import BallSpec, KernelParams, centered_absorption, green_centered
from app.kernels.sampling import sample_source_centered, uniform_directions
from app.walkers.config import WalkConfig, WalkSample

logger = logging.getLogger(__name__)


def centered_source_term(rng: np.random.Generator, scene, centers: np.ndarray, radii: np.ndarray,
                         params: KernelParams, samples: int) -> np.ndarray:
    """Mean over `samples` draws of f(w) G(center, w) / q(w) with w from the centered Green's law."""
    k = len(centers)
    if scene.source is None or samples == 0 or k == 0:
        return np.zeros(k)
    ball = BallSpec(centers[:, None, :], radii[:, None])
    draw = sample_source_centered(rng, ball, params, size=(k, samples))
    s = np.linalg.norm(draw.point - centers[:, None, :], axis=-1)
    ratio = green_centered(s, radii[:, None], params) / draw.pdf
    return np.mean(scene.source(draw.point) * ratio, axis=1)


def walk_on_spheres(scene, points, cfg: WalkConfig, rng: np.random.Generator) -> WalkSample:
    """One walk per starting point, advanced together; all-Dirichlet scenes only."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    params = cfg.kernel_params(scene)
    domain = scene.domain

    x = points.copy()
    weight = np.ones(n)
    value = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    terminated = np.zeros(n, dtype=bool)
    active = np.arange(n)

    for _ in range(cfg.max_steps):
        if len(active) == 0:
            break
        p = x[active]
        r = domain.distance(p)
        shell = r < cfg.epsilon
        if np.any(shell):
            done = active[shell]
            cp = domain.closest_point(p[shell])
            value[done] += weight[done] * scene.dirichlet(cp.point)
            terminated[done] = True
            active, p, r = active[~shell], p[~shell], r[~shell]
            if len(active) == 0:
                break

        steps[active] += 1
        value[active] += weight[active] * centered_source_term(rng, scene, p, r, params, cfg.source_samples)
        weight[active] *= centered_absorption(r, params)
        x[active] = p + r[:, None] * uniform_directions(rng, (len(active),), params.dim)

    if len(active):
        cp = domain.closest_point(x[active])
        value[active] += weight[active] * scene.dirichlet(cp.point)
        logger.warning(f"{len(active)} walks reached max_steps={cfg.max_steps} and were truncated")

    return WalkSample(value=value, steps=steps, terminated=terminated)


def wos_estimate(scene, p, cfg: WalkConfig, rng: np.random.Generator) -> WalkSample:
    """Single-sample Walk-on-Spheres estimate of u(p)."""
    points, single = as_points(p)
    if scene.domain.has_neumann:
        raise DomainError("walk on spheres needs an all-Dirichlet scene; use wost_estimate")
    if not np.all(scene.domain.contains(points)):
        raise DomainError("walk must start inside the domain")
    sample = walk_on_spheres(scene, points, cfg, rng)
    return sample[0] if single else sample
