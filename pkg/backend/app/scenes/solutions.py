"""Manufactured solutions with exact gradients and Laplacians.

Each family yields consistent data for -(Delta u - sigma u) = f, g = u on the Dirichlet part and
h = grad u . n on the Neumann part.
"""
from dataclasses import dataclass

import numpy as np


def trig_solution(p, omega: float, dim: int = 3):
    """sin(wx) sin(wy) sin(wz); the z factor is dropped for 2D problems."""
    p = np.asarray(p, dtype=float)
    value = np.sin(omega * p[..., 0]) * np.sin(omega * p[..., 1])
    if dim == 3:
        value = value * np.sin(omega * p[..., 2])
    return value


def trig_gradient(p, omega: float, dim: int = 3):
    p = np.asarray(p, dtype=float)
    s = np.sin(omega * p)
    c = np.cos(omega * p)
    if dim == 2:
        return omega * np.stack([c[..., 0] * s[..., 1], s[..., 0] * c[..., 1], np.zeros(p.shape[:-1])], axis=-1)
    return omega * np.stack([c[..., 0] * s[..., 1] * s[..., 2],
                             s[..., 0] * c[..., 1] * s[..., 2],
                             s[..., 0] * s[..., 1] * c[..., 2]], axis=-1)


def trig_source(p, omega: float, sigma: float, dim: int = 3):
    """f = (d w^2 + sigma) u, so that Delta u - sigma u = -f."""
    return (dim * omega ** 2 + sigma) * trig_solution(p, omega, dim)


def trig_neumann(p, normal, omega: float, dim: int = 3):
    normal = np.asarray(normal, dtype=float)
    return np.einsum("...i,...i->...", trig_gradient(p, omega, dim), normal)


@dataclass(frozen=True)
class ManufacturedSolution:
    """Base family; subclasses provide value, gradient and laplacian."""
    dim: int = 3

    def value(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def source(self, p: np.ndarray, sigma: float) -> np.ndarray:
        return -self.laplacian(p) + sigma * self.value(p)

    def normal_derivative(self, p: np.ndarray, normal: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...i->...", self.gradient(p), np.asarray(normal, dtype=float))

    def has_source(self, sigma: float) -> bool:
        return True


@dataclass(frozen=True)
class TrigSolution(ManufacturedSolution):
    omega: float = np.pi

    def value(self, p):
        return trig_solution(p, self.omega, self.dim)

    def gradient(self, p):
        return trig_gradient(p, self.omega, self.dim)

    def laplacian(self, p):
        return -self.dim * self.omega ** 2 * self.value(p)


@dataclass(frozen=True)
class ConstantSolution(ManufacturedSolution):
    constant: float = 1.0

    def value(self, p):
        return np.full(np.shape(p)[:-1], self.constant, dtype=float)

    def gradient(self, p):
        return np.zeros(np.shape(p), dtype=float)

    def laplacian(self, p):
        return np.zeros(np.shape(p)[:-1], dtype=float)

    def has_source(self, sigma: float) -> bool:
        return sigma > 0 and self.constant != 0


@dataclass(frozen=True)
class LinearSolution(ManufacturedSolution):
    """u = x."""

    def value(self, p):
        return np.asarray(p, dtype=float)[..., 0].copy()

    def gradient(self, p):
        grad = np.zeros(np.shape(p), dtype=float)
        grad[..., 0] = 1.0
        return grad

    def laplacian(self, p):
        return np.zeros(np.shape(p)[:-1], dtype=float)

    def has_source(self, sigma: float) -> bool:
        return sigma > 0


@dataclass(frozen=True)
class HarmonicSolution(ManufacturedSolution):
    """u = x^2 - y^2."""

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return p[..., 0] ** 2 - p[..., 1] ** 2

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        grad = np.zeros(p.shape, dtype=float)
        grad[..., 0] = 2.0 * p[..., 0]
        grad[..., 1] = -2.0 * p[..., 1]
        return grad

    def laplacian(self, p):
        return np.zeros(np.shape(p)[:-1], dtype=float)

    def has_source(self, sigma: float) -> bool:
        return sigma > 0


@dataclass(frozen=True)
class ExponentialSolution(ManufacturedSolution):
    """u = offset + e^x cos y; positive on the unit ball for offset >= 0, unlike x^2 - y^2."""
    offset: float = 0.0

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return self.offset + np.exp(p[..., 0]) * np.cos(p[..., 1])

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        grad = np.zeros(p.shape, dtype=float)
        scale = np.exp(p[..., 0])
        grad[..., 0] = scale * np.cos(p[..., 1])
        grad[..., 1] = -scale * np.sin(p[..., 1])
        return grad

    def laplacian(self, p):
        return np.zeros(np.shape(p)[:-1], dtype=float)

    def has_source(self, sigma: float) -> bool:
        return sigma > 0


SOLUTIONS = {
    "trig": TrigSolution,
    "constant": ConstantSolution,
    "linear": LinearSolution,
    "harmonic": HarmonicSolution,
    "exponential": ExponentialSolution,
}
