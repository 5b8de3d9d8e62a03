import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from app.errors import DomainError
from app.kernels import BallSpec, KernelParams, green_ball, sample_source_centered, sample_source_offcenter, sample_sphere_uniform
from app.kernels.sampling import invert_radial_cdf, radial_cdf, source_pdf, uniform_directions

LAPLACE = KernelParams(dim=3)
DISC = KernelParams(dim=2)


class TestRadialLaw:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_cdf_endpoints(self, dim):
        assert radial_cdf(0.0, dim) == pytest.approx(0.0)
        assert radial_cdf(1.0, dim) == pytest.approx(1.0)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_inverse(self, dim):
        u = np.linspace(0.001, 0.999, 200)
        assert_allclose(radial_cdf(invert_radial_cdf(u, dim), dim), u, atol=1e-10)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_extreme_uniforms_stay_inside(self, dim):
        t = invert_radial_cdf(np.array([0.0, 1.0]), dim)
        assert np.all((t > 0) & (t < 1))

    def test_volume_pdf_integrates_to_one(self):
        s = np.linspace(0.0, 1.0, 200001)[1:]
        ds = s[1] - s[0]
        assert np.sum(source_pdf(s, 1.0, 3) * 4.0 * np.pi * s * s) * ds == pytest.approx(1.0, abs=1e-4)
        assert np.sum(source_pdf(s, 1.0, 2) * 2.0 * np.pi * s) * ds == pytest.approx(1.0, abs=1e-4)


class TestSphereSampling:
    def test_pdf_is_inverse_area(self, rng):
        sample = sample_sphere_uniform(rng, BallSpec(np.zeros(3), 1.0), size=(10,))
        assert_allclose(sample.pdf, 1.0 / (4.0 * np.pi))
        assert_allclose(np.linalg.norm(sample.point, axis=1), 1.0, atol=1e-12)

    def test_mean_is_center(self, rng):
        center = np.array([0.3, -0.2, 0.5])
        sample = sample_sphere_uniform(rng, BallSpec(center, 2.0), size=(100_000,))
        stderr = 2.0 / np.sqrt(3.0 * 100_000)
        assert np.all(np.abs(sample.point.mean(axis=0) - center) < 4.0 * stderr)

    def test_uniform_in_angle(self, rng):
        d = uniform_directions(rng, (100_000,), 3)
        assert stats.kstest((d[:, 2] + 1.0) / 2.0, "uniform").pvalue > 0.01
        phi = (np.arctan2(d[:, 1], d[:, 0]) + np.pi) / (2.0 * np.pi)
        assert stats.kstest(phi, "uniform").pvalue > 0.01

    def test_disc_directions_stay_in_plane(self, rng):
        d = uniform_directions(rng, (100,), 2)
        assert np.all(d[:, 2] == 0.0)
        assert_allclose(np.linalg.norm(d, axis=1), 1.0)


class TestSourceSampling:
    @pytest.mark.parametrize("params,expected", [(LAPLACE, 1.0 / 6.0), (DISC, 1.0 / 4.0)])
    def test_centered_weight_is_constant(self, rng, params, expected):
        ball = BallSpec(np.zeros(3), 1.0)
        draw = sample_source_centered(rng, ball, params, size=(1000,))
        ratio = green_ball(np.zeros((1000, 3)), draw.point, BallSpec(np.zeros((1000, 3)), np.ones(1000)),
                           params) / draw.pdf
        assert_allclose(ratio, expected, rtol=1e-8)

    def test_centered_radius_follows_law(self, rng):
        draw = sample_source_centered(rng, BallSpec(np.zeros(3), 1.0), LAPLACE, size=(50_000,))
        t = np.linalg.norm(draw.point, axis=1)
        assert stats.kstest(t, lambda v: radial_cdf(v, 3)).pvalue > 0.01

    def test_offcenter_invalid_samples_have_zero_pdf(self, rng):
        ball = BallSpec(np.zeros(3), 1.0)
        draw = sample_source_offcenter(rng, np.array([0.6, 0.0, 0.0]), ball, LAPLACE, size=(10_000,))
        inside = np.linalg.norm(draw.point, axis=1) < 1.0
        assert np.array_equal(draw.valid, inside)
        assert np.all(draw.pdf[~draw.valid] == 0.0)
        assert np.all(draw.pdf[draw.valid] > 0.0)
        assert 0 < np.count_nonzero(~draw.valid) < 10_000

    def test_offcenter_at_center_matches_centered_law(self, rng):
        draw = sample_source_offcenter(rng, np.zeros(3), BallSpec(np.zeros(3), 1.0), LAPLACE, size=(50_000,))
        assert np.all(draw.valid)
        t = np.linalg.norm(draw.point, axis=1)
        assert stats.kstest(t, lambda v: radial_cdf(v, 3)).pvalue > 0.01

    def test_offcenter_estimates_green_integral(self, rng):
        # integral of G(x, .) over the unit ball is (1 - |x|^2) / 6
        x = np.array([0.5, 0.0, 0.0])
        n = 200_000
        ball = BallSpec(np.zeros(3), 1.0)
        draw = sample_source_offcenter(rng, x, ball, LAPLACE, size=(n,))
        values = np.zeros(n)
        ok = draw.valid & (np.linalg.norm(draw.point - x, axis=1) > 0)
        wide = BallSpec(np.zeros((int(ok.sum()), 3)), np.ones(int(ok.sum())))
        values[ok] = green_ball(np.broadcast_to(x, (int(ok.sum()), 3)), draw.point[ok], wide, LAPLACE) / draw.pdf[ok]
        stderr = values.std() / np.sqrt(n)
        assert abs(values.mean() - 0.75 / 6.0) < 4.0 * stderr

    def test_offcenter_outside_raises(self, rng):
        with pytest.raises(DomainError):
            sample_source_offcenter(rng, np.array([1.2, 0.0, 0.0]), BallSpec(np.zeros(3), 1.0), LAPLACE)
