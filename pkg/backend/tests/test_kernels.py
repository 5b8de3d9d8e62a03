import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.errors import ConfigError, DomainError, SingularityError
from app.kernels import (
    BallSpec,
    KernelParams,
    centered_absorption,
    fundamental_solution,
    grad_green_ball,
    grad_poisson_kernel_ball,
    green_ball,
    green_centered,
    poisson_dampening,
    poisson_kernel_ball,
)

LAPLACE = KernelParams(dim=3, sigma=0.0)
SCREENED = KernelParams(dim=3, sigma=4.0)
UNIT = BallSpec(np.zeros(3), 1.0)


def random_interior(rng, n, radius=0.8):
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


class TestKernelParams:
    def test_rejects_screened_2d(self):
        with pytest.raises(ConfigError):
            KernelParams(dim=2, sigma=1.0)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ConfigError):
            KernelParams(dim=3, sigma=-1.0)

    def test_ball_needs_positive_radius(self):
        with pytest.raises(DomainError):
            BallSpec(np.zeros(3), 0.0)


class TestFundamentalSolution:
    def test_laplace_3d_unit_distance(self):
        assert fundamental_solution(1.0, LAPLACE) == pytest.approx(1.0 / (4.0 * np.pi))

    def test_laplace_2d_unit_distance(self):
        assert fundamental_solution(1.0, KernelParams(dim=2)) == pytest.approx(0.0, abs=1e-15)

    def test_screened_3d(self):
        assert fundamental_solution(0.5, SCREENED) == pytest.approx(np.exp(-1.0) / (2.0 * np.pi))

    def test_singular_at_zero(self):
        with pytest.raises(SingularityError):
            fundamental_solution(0.0, LAPLACE)


class TestGreenBall:
    def test_centered_value(self):
        z = np.array([0.5, 0.0, 0.0])
        assert green_ball(np.zeros(3), z, UNIT, LAPLACE) == pytest.approx(1.0 / (4.0 * np.pi))

    @pytest.mark.parametrize("params", [LAPLACE, SCREENED])
    def test_vanishes_on_sphere(self, rng, params):
        x = random_interior(rng, 50)
        z = rng.standard_normal((50, 3))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        assert np.all(green_ball(x, z, UNIT, params) == 0.0)

    def test_symmetric_for_laplace(self, rng):
        x = random_interior(rng, 100)
        z = random_interior(rng, 100)
        assert_allclose(green_ball(x, z, UNIT, LAPLACE), green_ball(z, x, UNIT, LAPLACE), rtol=1e-12)

    def test_screened_centered_closed_form(self):
        s = np.array([0.1, 0.4, 0.9])
        z = np.stack([s, np.zeros(3), np.zeros(3)], axis=1)
        k = 2.0
        expected = np.sinh(k * (1.0 - s)) / np.sinh(k) / (4.0 * np.pi * s)
        assert_allclose(green_ball(np.zeros((3, 3)), z, UNIT, SCREENED), expected, rtol=1e-12)
        assert_allclose(green_centered(s, 1.0, SCREENED), expected, rtol=1e-12)

    def test_small_sigma_matches_laplace(self, rng):
        x = random_interior(rng, 20)
        z = random_interior(rng, 20)
        tiny = KernelParams(dim=3, sigma=1e-12)
        assert_allclose(green_ball(x, z, UNIT, tiny), green_ball(x, z, UNIT, LAPLACE), rtol=1e-6)

    def test_singular_at_pole(self):
        with pytest.raises(SingularityError):
            green_ball(np.array([0.2, 0.0, 0.0]), np.array([0.2, 0.0, 0.0]), UNIT, LAPLACE)

    def test_x_outside_raises(self):
        with pytest.raises(DomainError):
            green_ball(np.array([1.5, 0.0, 0.0]), np.zeros(3), UNIT, LAPLACE)

    def test_2d_centered(self):
        disc = KernelParams(dim=2)
        z = np.array([0.5, 0.0, 0.0])
        assert green_ball(np.zeros(3), z, UNIT, disc) == pytest.approx(np.log(2.0) / (2.0 * np.pi))


class TestPoissonKernel:
    def test_uniform_at_center(self, rng):
        z = rng.standard_normal((10, 3))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        assert_allclose(poisson_kernel_ball(np.zeros(3), z, UNIT, LAPLACE), 1.0 / (4.0 * np.pi))

    def test_off_center_value(self):
        value = poisson_kernel_ball(np.array([0.5, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), UNIT, LAPLACE)
        assert value == pytest.approx(0.75 / (0.5 * np.pi))

    def test_integrates_to_one(self, sphere_nodes):
        dirs, w = sphere_nodes
        for x in ([0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.1, -0.3, 0.2]):
            total = np.sum(poisson_kernel_ball(np.asarray(x), dirs, UNIT, LAPLACE) * w)
            assert total == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("u", [
        lambda p: np.ones(len(p)),
        lambda p: p[:, 0],
        lambda p: p[:, 0] * p[:, 1],
    ])
    def test_reproduces_harmonic_functions(self, rng, sphere_nodes, u):
        dirs, w = sphere_nodes
        for _ in range(20):
            center = rng.uniform(-1.0, 1.0, 3)
            radius = rng.uniform(0.5, 1.5)
            ball = BallSpec(center, radius)
            x = center + random_interior(rng, 1, radius=0.5 * radius)[0]
            z = center + radius * dirs
            integral = np.sum(u(z) * poisson_kernel_ball(x, z, ball, LAPLACE) * w * radius ** 2)
            assert integral == pytest.approx(u(x[None])[0], rel=1e-5, abs=1e-7)

    def test_screened_center_is_absorption(self):
        z = np.array([[0.0, 0.0, 1.0]])
        value = poisson_kernel_ball(np.zeros(3), z, UNIT, SCREENED) * 4.0 * np.pi
        assert_allclose(value, 2.0 / np.sinh(2.0), rtol=1e-12)

    def test_z_off_sphere_raises(self):
        with pytest.raises(DomainError):
            poisson_kernel_ball(np.zeros(3), np.array([0.5, 0.0, 0.0]), UNIT, LAPLACE)


class TestDamping:
    def test_laplace_is_one(self):
        assert_allclose(centered_absorption(np.array([0.5, 2.0]), LAPLACE), 1.0)
        assert_allclose(poisson_dampening(0.3, 1.0, LAPLACE), 1.0)

    def test_absorption_matches_closed_form(self):
        r = np.array([0.1, 1.0, 5.0])
        assert_allclose(centered_absorption(r, SCREENED), 2.0 * r / np.sinh(2.0 * r), rtol=1e-12)

    def test_dampening_at_sphere_is_absorption(self):
        r = np.array([0.3, 1.0, 2.0])
        assert_allclose(poisson_dampening(r, r, SCREENED), centered_absorption(r, SCREENED), rtol=1e-12)

    def test_large_radius_does_not_overflow(self):
        assert np.isfinite(centered_absorption(1e4, SCREENED))
        assert np.isfinite(poisson_dampening(10.0, 1e4, SCREENED))


def central_difference(fn, x, h):
    grad = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        grad[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return grad


class TestGradients:
    @pytest.mark.parametrize("params", [LAPLACE, SCREENED])
    def test_green_gradient_matches_finite_differences(self, rng, params):
        for _ in range(100):
            x = random_interior(rng, 1, radius=0.6)[0]
            z = random_interior(rng, 1, radius=0.9)[0]
            if np.linalg.norm(x - z) < 0.2:
                continue
            fd = central_difference(lambda p: green_ball(p, z, UNIT, params), x, 1e-5)
            assert_allclose(grad_green_ball(x, z, UNIT, params), fd, rtol=1e-5, atol=1e-8)

    def test_green_gradient_centered_laplace(self):
        z = np.array([0.3, -0.2, 0.4])
        fd = central_difference(lambda p: green_ball(p, z, UNIT, LAPLACE), np.zeros(3), 1e-5)
        assert_allclose(grad_green_ball(np.zeros(3), z, UNIT, LAPLACE), fd, rtol=1e-5, atol=1e-8)

    def test_green_gradient_with_z_on_sphere(self):
        x = np.array([0.2, 0.1, -0.3])
        z = np.array([0.0, 0.6, 0.8])
        fd = central_difference(lambda p: green_ball(p, z, UNIT, LAPLACE), x, 1e-5)
        grad = grad_green_ball(x, z, UNIT, LAPLACE)
        assert np.all(np.isfinite(grad))
        assert_allclose(grad, fd, atol=1e-6)

    @pytest.mark.parametrize("params", [LAPLACE, SCREENED])
    def test_poisson_gradient_matches_finite_differences(self, rng, params):
        for _ in range(100):
            x = random_interior(rng, 1, radius=0.6)[0]
            z = rng.standard_normal(3)
            z /= np.linalg.norm(z)
            fd = central_difference(lambda p: poisson_kernel_ball(p, z, UNIT, params), x, 1e-5)
            assert_allclose(grad_poisson_kernel_ball(x, z, UNIT, params), fd, rtol=1e-5, atol=1e-8)

    def test_mirror_symmetry(self, rng):
        x = random_interior(rng, 1, radius=0.5)[0]
        z = random_interior(rng, 1, radius=0.9)[0]
        assert_allclose(grad_green_ball(-x, -z, UNIT, LAPLACE), -grad_green_ball(x, z, UNIT, LAPLACE), rtol=1e-12)

    def test_poisson_gradient_at_center_is_scaled_normal(self):
        z = np.array([[0.0, 0.0, 1.0]])
        grad = grad_poisson_kernel_ball(np.zeros(3), z, UNIT, LAPLACE) * 4.0 * np.pi
        assert_allclose(grad, [[0.0, 0.0, 3.0]], atol=1e-12)
