from dataclasses import dataclass
import logging

import numpy as np
from scipy.special import spherical_in

from app.errors import ConfigError, DomainError, SingularityError

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi
TWO_PI = 2.0 * np.pi

# |x - y| below this fraction of the radius is treated as the centered case
CENTERED_TOLERANCE = 1e-9
# relative slack when checking that a point lies on a sphere
SPHERE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class KernelParams:
    dim: int = 3
    sigma: float = 0.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dim}", key="dim")
        if self.sigma < 0:
            raise ConfigError(f"screening must be non-negative, got {self.sigma}", key="sigma")
        if self.dim == 2 and self.sigma > 0:
            raise ConfigError("screened kernels are only available in 3D", key="sigma")

    @property
    def screened(self) -> bool:
        return self.sigma > 0

    @property
    def k(self) -> float:
        return float(np.sqrt(self.sigma))

    def laplace(self) -> "KernelParams":
        return KernelParams(dim=self.dim, sigma=0.0)


@dataclass(frozen=True)
class BallSpec:
    """Ball B(y, r); center may be (3,) or (n, 3) with matching radii."""
    center: np.ndarray
    radius: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radius", np.asarray(self.radius, dtype=float))
        if np.any(~(self.radius > 0)):
            raise DomainError("ball radius must be positive")


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(v * v, axis=-1))


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def sphere_area(r, dim: int):
    r = np.asarray(r, dtype=float)
    return FOUR_PI * r * r if dim == 3 else TWO_PI * r


def fundamental_solution(s, params: KernelParams):
    """Free-space fundamental solution Phi(s) of -(Delta - sigma)."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise SingularityError("fundamental solution evaluated at s <= 0")
    if params.dim == 3:
        if params.screened:
            return np.exp(-params.k * s) / (FOUR_PI * s)
        return 1.0 / (FOUR_PI * s)
    return -np.log(s) / TWO_PI


def _fundamental_derivative(s: np.ndarray, params: KernelParams) -> np.ndarray:
    if params.dim == 3:
        if params.screened:
            ks = params.k * s
            return -np.exp(-ks) * (1.0 + ks) / (FOUR_PI * s * s)
        return -1.0 / (FOUR_PI * s * s)
    return -1.0 / (TWO_PI * s)


def _sinh_ratio(num, den):
    """sinh(num) / sinh(den) for 0 <= num <= den without overflow."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.exp(num - den) * np.expm1(-2.0 * num) / np.expm1(-2.0 * den)


def centered_absorption(r, params: KernelParams):
    """Probability weight sqrt(sigma) r / sinh(sqrt(sigma) r) of reaching the sphere; 1 for sigma = 0."""
    r = np.asarray(r, dtype=float)
    if not params.screened:
        return np.ones_like(r)
    kr = params.k * r
    return -2.0 * kr * np.exp(-kr) / np.expm1(-2.0 * kr)


def poisson_dampening(s, r, params: KernelParams):
    """Direction-sampled centered Poisson kernel at distance s <= r inside B(., r).

    Equals 1 for Laplace and centered_absorption(r) at s = r.
    """
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if not params.screened:
        return np.ones(np.broadcast(s, r).shape)
    k = params.k
    kin = k * np.clip(r - s, 0.0, None)
    kr = k * r
    # cosh(k(r - s)) / sinh(kr)
    cosh_ratio = np.exp(kin - kr) * (1.0 + np.exp(-2.0 * kin)) / (-np.expm1(-2.0 * kr))
    return k * s * cosh_ratio + _sinh_ratio(kin, kr)


def green_centered(s, r, params: KernelParams):
    """Green's function of B(y, r) with the pole at the center, as a function of s = |z - y|."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(~(s > 0)):
        raise SingularityError("centered Green's function evaluated at its pole")
    if params.dim == 2:
        return np.log(r / s) / TWO_PI
    if params.screened:
        inner = np.clip(r - s, 0.0, None)
        return _sinh_ratio(params.k * inner, params.k * r) / (FOUR_PI * s)
    return (1.0 / s - 1.0 / r) / FOUR_PI


def _mirror_distance(a: np.ndarray, b: np.ndarray, r: np.ndarray) -> np.ndarray:
    # (|a| / r) |x* - z| written without the image point, exact at a = 0
    aa = _dot(a, a)
    bb = _dot(b, b)
    rho2 = r * r - 2.0 * _dot(a, b) + aa * bb / (r * r)
    return np.sqrt(np.clip(rho2, 0.0, None))


def _check_interior(a: np.ndarray, r: np.ndarray, what: str) -> np.ndarray:
    na = _norm(a)
    if np.any(~(na < r)):
        raise DomainError(f"{what} must lie strictly inside the ball")
    return na


def green_ball(x, z, ball: BallSpec, params: KernelParams):
    """Green's function G^{B_y}(x, z) by the mirror method; screened values use an attenuation."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y, r = ball.center, ball.radius
    a = x - y
    b = z - y
    na = _check_interior(a, r, "x")
    nb = _norm(b)
    if np.any(nb > r * (1.0 + SPHERE_TOLERANCE)):
        raise DomainError("z must lie inside the ball")
    s = _norm(x - z)
    if np.any(~(s > 0)):
        raise SingularityError("Green's function evaluated at z = x")

    laplace = params.laplace()
    rho = _mirror_distance(a, b, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        g0 = fundamental_solution(s, laplace) - fundamental_solution(np.maximum(rho, 1e-300), laplace)
    if params.screened:
        centered = na < CENTERED_TOLERANCE * r
        g = np.where(centered, green_centered(s, r, params), g0 * np.exp(-params.k * s))
    else:
        g = g0
    on_sphere = nb >= r * (1.0 - 1e-12)
    return np.where(on_sphere, 0.0, g)


def poisson_kernel_ball(x, z, ball: BallSpec, params: KernelParams):
    """Poisson kernel P^{B_y}(x, z) for z on the sphere, per unit area."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y, r = ball.center, ball.radius
    a = x - y
    na = _check_interior(a, r, "x")
    nb = _norm(z - y)
    if np.any(np.abs(nb - r) > SPHERE_TOLERANCE * r):
        raise DomainError("z must lie on the sphere")
    s = _norm(x - z)
    numer = r * r - na * na
    if params.dim == 3:
        p0 = numer / (FOUR_PI * r * s ** 3)
        centered_value = 1.0 / (FOUR_PI * r * r)
    else:
        p0 = numer / (TWO_PI * r * s * s)
        centered_value = 1.0 / (TWO_PI * r)
    p0 = np.where(na < CENTERED_TOLERANCE * r, centered_value, p0)
    return p0 * centered_absorption(r, params)


def grad_green_ball(x, z, ball: BallSpec, params: KernelParams):
    """Gradient of green_ball with respect to x."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y, r = ball.center, ball.radius
    a = x - y
    b = z - y
    na = _check_interior(a, r, "x")
    nb = _norm(b)
    if np.any(nb > r * (1.0 + SPHERE_TOLERANCE)):
        raise DomainError("z must lie inside the ball")
    d = x - z
    s = _norm(d)
    if np.any(~(s > 0)):
        raise SingularityError("Green's function gradient evaluated at z = x")

    laplace = params.laplace()
    r_ = np.asarray(r)[..., None]
    rho = _mirror_distance(a, b, r)[..., None]
    s_ = s[..., None]
    grad_rho = (-b + _dot(b, b)[..., None] * a / (r_ * r_)) / rho
    grad0 = _fundamental_derivative(s_, laplace) * d / s_ - _fundamental_derivative(rho, laplace) * grad_rho
    if not params.screened:
        return grad0

    k = params.k
    g0 = fundamental_solution(s, laplace) - fundamental_solution(rho[..., 0], laplace)
    off = np.exp(-k * s_) * (grad0 - k * g0[..., None] * d / s_)
    # exact centered form: free-space part minus the i1-weighted regular part
    ratio = spherical_in(1, k * s_) / spherical_in(1, k * r_)
    exact = (b / s_) * (-_fundamental_derivative(s_, params) + _fundamental_derivative(r_, params) * ratio)
    centered = (na < CENTERED_TOLERANCE * r)[..., None]
    return np.where(centered, exact, off)


def grad_poisson_kernel_ball(x, z, ball: BallSpec, params: KernelParams):
    """Gradient of poisson_kernel_ball with respect to x."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y, r = ball.center, ball.radius
    a = x - y
    na = _check_interior(a, r, "x")
    nb = _norm(z - y)
    if np.any(np.abs(nb - r) > SPHERE_TOLERANCE * r):
        raise DomainError("z must lie on the sphere")
    d = x - z
    s = _norm(d)[..., None]
    r_ = np.asarray(r)[..., None]
    numer = (r * r - na * na)[..., None]
    if params.dim == 3:
        grad = -2.0 * a / (FOUR_PI * r_ * s ** 3) - 3.0 * numer * d / (FOUR_PI * r_ * s ** 5)
    else:
        grad = -2.0 * a / (TWO_PI * r_ * s ** 2) - 2.0 * numer * d / (TWO_PI * r_ * s ** 4)
    return grad * centered_absorption(r, params)[..., None]
