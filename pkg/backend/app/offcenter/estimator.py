from dataclasses import dataclass
from typing import Literal
import logging

import numpy as np

from app.errors import DomainError
from app.kernels.greens import (
    BallSpec,
    KernelParams,
    green_ball,
    grad_green_ball,
    grad_poisson_kernel_ball,
    poisson_kernel_ball,
    sphere_area,
)
from app.kernels.sampling import sample_source_centered, sample_source_offcenter, sample_sphere_uniform
from app.walkers import WalkConfig, walk

logger = logging.getLogger(__name__)

SourceSampling = Literal["two-stage", "centered"]


@dataclass
class SampleRecord:
    """Stage-1 boundary samples: z on the sphere of B_owner and the walk value u(z)."""
    owner: np.ndarray
    center: np.ndarray
    radius: np.ndarray
    point: np.ndarray
    value: np.ndarray
    steps: np.ndarray
    terminated: np.ndarray

    def __len__(self) -> int:
        return len(self.owner)

    def __getitem__(self, index) -> "SampleRecord":
        return SampleRecord(self.owner[index], self.center[index], self.radius[index], self.point[index],
                            self.value[index], self.steps[index], self.terminated[index])

    @property
    def usable(self) -> np.ndarray:
        return np.isfinite(self.value)

    @classmethod
    def concatenate(cls, parts) -> "SampleRecord":
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                     ("owner", "center", "radius", "point", "value", "steps", "terminated")))

    @classmethod
    def failed(cls, owner: np.ndarray, center: np.ndarray, radius: np.ndarray) -> "SampleRecord":
        n = len(owner)
        return cls(owner, center, radius, np.full((n, 3), np.nan), np.full(n, np.nan),
                   np.zeros(n, dtype=np.int64), np.zeros(n, dtype=bool))


def stage1_samples(owner: np.ndarray, centers: np.ndarray, radii: np.ndarray, scene, cfg: WalkConfig,
                   rng: np.random.Generator) -> SampleRecord:
    """One record per point: z uniform on the sphere of B_x, then a pointwise walk from z."""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    params = cfg.kernel_params(scene)
    z = sample_sphere_uniform(rng, BallSpec(centers, radii), params).point
    sample = walk(scene, z, cfg, rng)
    return SampleRecord(owner=np.asarray(owner, dtype=np.int64), center=centers, radius=radii, point=z,
                        value=sample.value, steps=sample.steps, terminated=sample.terminated)


def stage1_sample(x, radius: float, scene, cfg: WalkConfig, rng: np.random.Generator, owner: int = 0) -> SampleRecord:
    """Single-point form of stage1_samples."""
    x = np.asarray(x, dtype=float).reshape(1, 3)
    if not radius > 0:
        raise DomainError("stage-1 sampling needs a positive radius")
    return stage1_samples(np.array([owner]), x, np.array([radius], dtype=float), scene, cfg, rng)[0]


def _source_draw(rng, x, ball: BallSpec, params: KernelParams, samples: int, sampling: SourceSampling):
    k = len(x)
    wide = BallSpec(ball.center[:, None, :], ball.radius[:, None])
    if sampling == "centered":
        return sample_source_centered(rng, wide, params, size=(k, samples))
    return sample_source_offcenter(rng, x[:, None, :], wide, params, size=(k, samples))


def _valid_subset(x, ball: BallSpec, draw, samples: int):
    """Flattened (x, w, ball) triples of the valid source draws that do not coincide with x."""
    k = len(x)
    xs = np.broadcast_to(x[:, None, :], (k, samples, 3))
    centers = np.broadcast_to(ball.center[:, None, :], (k, samples, 3))
    radii = np.broadcast_to(ball.radius[:, None], (k, samples))
    keep = draw.valid & (np.linalg.norm(draw.point - xs, axis=-1) > 0)
    return keep, xs[keep], draw.point[keep], BallSpec(centers[keep], radii[keep])


def pair_values(x: np.ndarray, record: SampleRecord, scene, cfg: WalkConfig, rng: np.random.Generator,
                sampling: SourceSampling = "two-stage") -> np.ndarray:
    """One realization of the off-centered estimator I_{x,y} per (x, record of y) pair.

    u(z) P(x, z) / p(z) with p uniform on the sphere of B_y, plus the mean over fresh source draws
    of f(w) G(x, w) / q(w). Draws that leave B_y contribute 0.
    """
    x = np.asarray(x, dtype=float)
    params = cfg.kernel_params(scene)
    ball = BallSpec(record.center, record.radius)
    offset = np.linalg.norm(x - record.center, axis=-1)
    if np.any(~(offset < record.radius)):
        raise DomainError("x must lie inside the ball of every reused record")

    kernel = poisson_kernel_ball(x, record.point, ball, params) * sphere_area(record.radius, params.dim)
    estimate = record.value * kernel

    m = cfg.source_samples
    if scene.source is None or m == 0 or len(x) == 0:
        return estimate
    draw = _source_draw(rng, x, ball, params, m, sampling)
    keep, xs, ws, sub = _valid_subset(x, ball, draw, m)
    contribution = np.zeros(keep.shape)
    if np.any(keep):
        contribution[keep] = scene.source(ws) * green_ball(xs, ws, sub, params) / draw.pdf[keep]
    return estimate + contribution.mean(axis=1)


def pair_gradients(x: np.ndarray, record: SampleRecord, scene, cfg: WalkConfig, rng: np.random.Generator,
                   sampling: SourceSampling = "two-stage") -> np.ndarray:
    """Gradient counterpart of pair_values, shape (n, 3)."""
    x = np.asarray(x, dtype=float)
    params = cfg.kernel_params(scene)
    ball = BallSpec(record.center, record.radius)
    offset = np.linalg.norm(x - record.center, axis=-1)
    if np.any(~(offset < record.radius)):
        raise DomainError("x must lie inside the ball of every reused record")

    area = sphere_area(record.radius, params.dim)
    kernel = grad_poisson_kernel_ball(x, record.point, ball, params) * area[:, None]
    estimate = record.value[:, None] * kernel

    m = cfg.source_samples
    if scene.source is None or m == 0 or len(x) == 0:
        return estimate
    draw = _source_draw(rng, x, ball, params, m, sampling)
    keep, xs, ws, sub = _valid_subset(x, ball, draw, m)
    contribution = np.zeros(keep.shape + (3,))
    if np.any(keep):
        g = grad_green_ball(xs, ws, sub, params)
        contribution[keep] = scene.source(ws)[:, None] * g / draw.pdf[keep][:, None]
    return estimate + contribution.mean(axis=1)


def pair_estimate(x, record: SampleRecord, scene, cfg: WalkConfig, rng: np.random.Generator,
                  sampling: SourceSampling = "two-stage") -> float:
    """Single-pair form of pair_values; record is one SampleRecord entry."""
    x = np.asarray(x, dtype=float).reshape(1, 3)
    batch = SampleRecord(*(np.asarray(v)[None] for v in (record.owner, record.center, record.radius,
                                                          record.point, record.value, record.steps,
                                                          record.terminated)))
    return float(pair_values(x, batch, scene, cfg, rng, sampling)[0])
