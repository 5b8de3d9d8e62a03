from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np

from app.errors import DomainError
from app.kernels.greens import BallSpec, KernelParams, FOUR_PI, TWO_PI, sphere_area

logger = logging.getLogger(__name__)

NEWTON_TOLERANCE = 1e-12
NEWTON_MAX_ITER = 100
# keeps the inverted radius away from the pole and the sphere
UNIFORM_CLIP = 1e-15


@dataclass
class WeightedSample:
    """Sampled points with their pdf values; invalid samples carry pdf 0 and contribute nothing."""
    point: np.ndarray
    pdf: np.ndarray
    valid: np.ndarray


def uniform_directions(rng: np.random.Generator, shape: Tuple[int, ...], dim: int) -> np.ndarray:
    """Unit vectors uniform on S^{d-1}, embedded in 3D (z = 0 for d = 2)."""
    if dim == 3:
        v = rng.standard_normal(shape + (3,))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)
    theta = rng.uniform(0.0, TWO_PI, size=shape)
    return np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], axis=-1)


def radial_cdf(t, dim: int):
    """CDF of s / r under the centered Green's radial law."""
    t = np.asarray(t, dtype=float)
    if dim == 3:
        return t * t * (3.0 - 2.0 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t > 0, t * t * (1.0 - 2.0 * np.log(t)), 0.0)


def radial_pdf(t, dim: int):
    t = np.asarray(t, dtype=float)
    if dim == 3:
        return 6.0 * t * (1.0 - t)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t > 0, -4.0 * t * np.log(t), 0.0)


def invert_radial_cdf(u, dim: int) -> np.ndarray:
    """Newton iteration with bisection fallback on [0, 1]."""
    u = np.clip(np.asarray(u, dtype=float), UNIFORM_CLIP, 1.0 - UNIFORM_CLIP)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    t = np.sqrt(u / 3.0) if dim == 3 else np.sqrt(u)
    t = np.clip(t, 1e-300, 1.0 - 1e-16)
    for _ in range(NEWTON_MAX_ITER):
        f = radial_cdf(t, dim) - u
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_next = t - f / radial_pdf(t, dim)
        bad = ~np.isfinite(t_next) | (t_next <= lo) | (t_next >= hi)
        t_next = np.where(bad, 0.5 * (lo + hi), t_next)
        done = np.max(np.abs(t_next - t), initial=0.0) < NEWTON_TOLERANCE
        t = t_next
        if done:
            break
    return t


def source_pdf(s, r, dim: int):
    """Volume pdf of the centered Green's law at distance s from the center of a ball of radius r."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if dim == 3:
        return 6.0 * (r - s) / (FOUR_PI * s * r ** 3)
    return 2.0 * np.log(r / s) / (np.pi * r * r)


def _batch_shape(center: np.ndarray, radius: np.ndarray, size: Optional[Tuple[int, ...]]) -> Tuple[int, ...]:
    if size is not None:
        return tuple(size)
    return np.broadcast_shapes(center.shape[:-1], radius.shape)


def sample_sphere_uniform(rng: np.random.Generator, ball: BallSpec, params: Optional[KernelParams] = None,
                          size: Optional[Tuple[int, ...]] = None) -> WeightedSample:
    dim = params.dim if params else 3
    shape = _batch_shape(ball.center, ball.radius, size)
    r = np.broadcast_to(ball.radius, shape)
    point = ball.center + r[..., None] * uniform_directions(rng, shape, dim)
    return WeightedSample(point=point, pdf=1.0 / sphere_area(r, dim), valid=np.ones(shape, dtype=bool))


def _sample_green_law(rng: np.random.Generator, origin: np.ndarray, r: np.ndarray,
                      shape: Tuple[int, ...], dim: int) -> Tuple[np.ndarray, np.ndarray]:
    direction = uniform_directions(rng, shape, dim)
    t = invert_radial_cdf(rng.random(shape), dim)
    s = t * r
    return origin + s[..., None] * direction, source_pdf(s, r, dim)


def sample_source_centered(rng: np.random.Generator, ball: BallSpec, params: KernelParams,
                           size: Optional[Tuple[int, ...]] = None) -> WeightedSample:
    """Point in B with density proportional to the volume-weighted centered Green's function."""
    shape = _batch_shape(ball.center, ball.radius, size)
    r = np.broadcast_to(ball.radius, shape)
    point, pdf = _sample_green_law(rng, ball.center, r, shape, params.dim)
    return WeightedSample(point=point, pdf=pdf, valid=np.ones(shape, dtype=bool))


def sample_source_offcenter(rng: np.random.Generator, x, ball: BallSpec, params: KernelParams,
                            size: Optional[Tuple[int, ...]] = None) -> WeightedSample:
    """Two-stage sampler: direction from x, radius from the Green's law on B(x, r_y + |x - y|).

    Samples leaving B_y are flagged invalid and get pdf 0.
    """
    x = np.asarray(x, dtype=float)
    offset = np.linalg.norm(x - ball.center, axis=-1)
    if np.any(~(offset < ball.radius)):
        raise DomainError("x must lie strictly inside B_y")
    shape = size if size is not None else np.broadcast_shapes(x.shape[:-1], ball.center.shape[:-1],
                                                             ball.radius.shape)
    shape = tuple(shape)
    enlarged = np.broadcast_to(ball.radius + offset, shape)
    point, pdf = _sample_green_law(rng, x, enlarged, shape, params.dim)
    valid = np.linalg.norm(point - ball.center, axis=-1) < ball.radius
    return WeightedSample(point=point, pdf=np.where(valid, pdf, 0.0), valid=valid)
