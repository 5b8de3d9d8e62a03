from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from app.errors import ConfigError, DomainError
from app.geometry import BallDomain
from app.offcenter import (
    SolveConfig,
    WeightingStrategy,
    mean_squared_error,
    pair_values,
    solve,
    solve_gradient,
    stage1_samples,
)
from app.offcenter.streams import STAGE_WALK, make_rng
from app.scenes import Bvp, SliceGrid, TrigSolution, build_scene, load_scene_config
from app.walkers import WalkConfig, walk_on_spheres

SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"
WALK = WalkConfig(epsilon=1e-4, max_steps=1000, source_samples=1)


def config(**kwargs):
    kwargs.setdefault("walk", WALK)
    kwargs.setdefault("rounds", 4)
    kwargs.setdefault("seed", 7)
    return SolveConfig(**kwargs)


def cluster(n=40, radius=0.3, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


class TestSolveConfig:
    def test_seconds_budget_needs_limit(self):
        with pytest.raises(ValidationError):
            SolveConfig(budget_mode="seconds")

    def test_alpha_range(self):
        with pytest.raises(ValidationError):
            SolveConfig(alpha=1.0)


class TestSolve:
    def test_constant_scene_after_one_round(self, constant_scene):
        result = solve(cluster(), constant_scene, config(rounds=1), WeightingStrategy(kind="vanilla"))
        assert_allclose(result.estimates, 2.5, rtol=1e-12)
        assert result.rounds == 1
        assert result.walks == 40

    @pytest.mark.parametrize("kind", ["uniform", "poisson-bound", "statistical"])
    def test_every_pair_is_used_in_the_first_round(self, constant_scene, kind):
        result = solve(cluster(), constant_scene, config(rounds=1), WeightingStrategy(kind=kind))
        assert result.neighbors.n_pairs > 40
        assert result.history[0].accepted_fraction == 1.0
        assert np.all(np.isfinite(result.estimates))

    def test_statistical_rejects_noisy_pairs_once_warm(self, constant_scene):
        # exact self estimates have no variance, so every noisy neighbor fails the test after warm-up
        strategy = WeightingStrategy(kind="statistical", min_samples=4)
        rounds = []
        solve(cluster(), constant_scene, config(rounds=6), strategy,
              on_round=lambda summary, estimate: rounds.append(summary.accepted_fraction))
        assert rounds[:3] == [1.0, 1.0, 1.0]
        assert rounds[3:] == [0.0, 0.0, 0.0]

    def test_same_output_for_any_worker_count(self, trig_scene):
        points = cluster(60)
        strategy = WeightingStrategy(kind="statistical", gamma=0.05)
        one = solve(points, trig_scene, config(workers=1, chunk_size=16), strategy)
        four = solve(points, trig_scene, config(workers=4, chunk_size=16), strategy)
        assert np.array_equal(one.estimates, four.estimates)

    def test_seed_changes_output(self, trig_scene):
        points = cluster(20)
        strategy = WeightingStrategy(kind="uniform")
        a = solve(points, trig_scene, config(seed=1), strategy)
        b = solve(points, trig_scene, config(seed=2), strategy)
        assert not np.array_equal(a.estimates, b.estimates)

    def test_vanilla_uses_self_pairs_only(self, trig_scene):
        result = solve(cluster(30), trig_scene, config(), WeightingStrategy(kind="vanilla"))
        assert result.neighbors.n_pairs == 30
        assert all(r.accepted_fraction == 0.0 for r in result.history)

    def test_reference_tracks_error(self, trig_scene):
        points = cluster(30)
        truth = trig_scene.solution(points)
        rounds = []
        result = solve(points, trig_scene, config(rounds=3), WeightingStrategy(), reference=truth,
                       on_round=lambda summary, estimate: rounds.append((summary.round, estimate.shape)))
        assert rounds == [(1, (30,)), (2, (30,)), (3, (30,))]
        assert [r.walks for r in result.history] == [30, 60, 90]
        assert result.history[-1].mse == pytest.approx(mean_squared_error(result.estimates, truth))

    def test_failed_walks_are_skipped(self, trig_scene):
        def fail_first_five(round_index, records):
            records.value[:5] = np.nan

        result = solve(cluster(20), trig_scene, config(rounds=1), WeightingStrategy(kind="vanilla"),
                       record_hook=fail_first_five)
        assert np.all(np.isnan(result.estimates[:5]))
        assert np.all(np.isfinite(result.estimates[5:]))
        assert result.history[0].failed == 5
        assert result.walks == 15

    def test_failed_walks_borrow_from_neighbors(self, trig_scene):
        def fail_first_five(round_index, records):
            records.value[:5] = np.nan

        result = solve(cluster(20), trig_scene, config(rounds=1), WeightingStrategy(kind="uniform"),
                       record_hook=fail_first_five)
        for x in range(5):
            borrows = np.any(result.neighbors[x] >= 5)
            assert np.isfinite(result.estimates[x]) == borrows
        assert np.all(np.isfinite(result.estimates[5:]))

    def test_failing_walk_does_not_sink_its_chunk(self, trig_scene, monkeypatch):
        def poisoned(owner, *args):
            if 3 in owner:
                raise FloatingPointError("walk diverged")
            return stage1_samples(owner, *args)

        monkeypatch.setattr("app.offcenter.solver.stage1_samples", poisoned)
        result = solve(cluster(20), trig_scene, config(rounds=2, chunk_size=8), WeightingStrategy(kind="vanilla"))
        assert np.isnan(result.estimates[3])
        assert np.all(np.isfinite(np.delete(result.estimates, 3)))
        assert [r.failed for r in result.history] == [1, 1]
        assert result.walks == 2 * 19

    def test_failing_reuse_does_not_sink_its_chunk(self, trig_scene, monkeypatch):
        points = cluster(20)

        def poisoned(x, *args):
            if np.any(np.all(x == points[3], axis=1)):
                raise FloatingPointError("kernel overflow")
            return pair_values(x, *args)

        monkeypatch.setattr("app.offcenter.solver.pair_values", poisoned)
        result = solve(points, trig_scene, config(rounds=2), WeightingStrategy(kind="uniform"))
        assert np.isnan(result.estimates[3])
        assert np.all(np.isfinite(np.delete(result.estimates, 3)))
        assert [r.failed for r in result.history] == [1, 1]
        # stage-1 walks are unaffected, so point 3's record still serves its neighbors
        assert result.walks == 2 * 20

    def test_self_only_matches_pointwise_walks(self, linear_scene):
        points = cluster(25)
        cfg = config(rounds=3, walk=WalkConfig(epsilon=1e-4, max_steps=100_000))
        result = solve(points, linear_scene, cfg, WeightingStrategy(kind="vanilla"))
        walks = [walk_on_spheres(linear_scene, points, cfg.walk, make_rng(cfg.seed, STAGE_WALK, 0, k)).value
                 for k in range(3)]
        assert_allclose(result.estimates, np.mean(walks, axis=0), rtol=1e-12, atol=1e-14)

    def test_outlier_is_rejected_by_statistical_weighting(self, linear_scene):
        points = np.zeros((9, 3))
        points[:, 0] = np.linspace(0.3, 0.5, 9)
        rounds = 8

        def inflate(round_index, records):
            if round_index == rounds - 1:
                records.value[4] = 1e3

        errors = {}
        for kind in ("uniform", "statistical"):
            result = solve(points, linear_scene, config(rounds=rounds), WeightingStrategy(kind=kind, gamma=0.05),
                           record_hook=inflate)
            errors[kind] = np.delete(np.abs(result.estimates - points[:, 0]), 4)
        assert np.all(errors["uniform"] > 5.0)
        assert np.all(errors["statistical"] < 1.0)

    def test_seconds_budget(self, trig_scene):
        cfg = config(budget_mode="seconds", max_seconds=0.01)
        result = solve(cluster(10), trig_scene, cfg, WeightingStrategy())
        assert result.rounds >= 1
        assert result.history[-1].elapsed_seconds >= 0.0

    def test_grid_mode(self, unit_ball):
        scene = Bvp.manufactured(unit_ball, TrigSolution(omega=np.pi))
        grid = SliceGrid(np.zeros(3), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], resolution=8).apply_domain(unit_ball)
        cfg = config(neighbor_mode="grid", beta=2.0, rounds=2)
        result = solve(grid.evaluation_points, scene, cfg, WeightingStrategy(), grid_index=grid.grid_index)
        assert result.neighbors.mean_size() <= 9.0
        assert np.all(np.isfinite(result.estimates))

    def test_grid_mode_needs_indices(self, trig_scene):
        with pytest.raises(ConfigError):
            solve(cluster(5), trig_scene, config(neighbor_mode="grid"), WeightingStrategy())

    def test_rejects_outside_points(self, trig_scene):
        with pytest.raises(DomainError):
            solve(np.array([[1.2, 0.0, 0.0]]), trig_scene, config(), WeightingStrategy())

    def test_disc_scene(self):
        disc = BallDomain([0.0, 0.0, 0.0], 1.0, dim=2)
        scene = Bvp.manufactured(disc, TrigSolution(omega=np.pi, dim=2))
        points = np.zeros((10, 3))
        points[:, 0] = np.linspace(-0.2, 0.2, 10)
        result = solve(points, scene, config(rounds=2), WeightingStrategy())
        assert np.all(np.isfinite(result.estimates))


class TestSolveGradient:
    @pytest.mark.parametrize("kind", ["vanilla", "statistical"])
    def test_linear_scene(self, linear_scene, kind):
        points = cluster(150, radius=0.3)
        result = solve_gradient(points, linear_scene, config(rounds=16), WeightingStrategy(kind=kind))
        assert result.estimates.shape == (150, 3)
        assert np.all(np.abs(result.estimates.mean(axis=0) - [1.0, 0.0, 0.0]) < 0.2)

    def test_constant_scene_is_zero(self, constant_scene):
        result = solve_gradient(cluster(200), constant_scene, config(rounds=16), WeightingStrategy(kind="vanilla"))
        assert np.all(np.abs(result.estimates.mean(axis=0)) < 0.5)


def strategy_errors(scene, grid, strategies, seeds, rounds=16):
    """MSE per strategy label and seed; every strategy sees the same stage-1 walks for a given seed."""
    points = grid.evaluation_points
    truth = scene.solution(points)
    errors = {strategy.label(): [] for strategy in strategies}
    for seed in seeds:
        cfg = config(rounds=rounds, seed=seed, walk=WalkConfig(epsilon=1e-4, source_samples=1))
        for strategy in strategies:
            result = solve(points, scene, cfg, strategy, grid_index=grid.grid_index)
            errors[strategy.label()].append(mean_squared_error(result.estimates, truth))
    return {label: np.array(values) for label, values in errors.items()}


@pytest.mark.slow
class TestStrategyRanking:
    VANILLA = WeightingStrategy(kind="vanilla")
    UNIFORM = WeightingStrategy(kind="uniform")
    BOUND = WeightingStrategy(kind="poisson-bound")
    STATISTICAL = WeightingStrategy(kind="statistical", gamma=0.05)

    @pytest.mark.parametrize("scene_file", ["ball_poisson.json", "ball_poisson_2pi.json"])
    def test_statistical_beats_vanilla_and_uniform(self, scene_file):
        scene, grid = build_scene(load_scene_config(SCENES_DIR / scene_file), resolution=64)
        errors = strategy_errors(scene, grid, (self.VANILLA, self.UNIFORM, self.STATISTICAL), seeds=range(10))
        statistical = errors[self.STATISTICAL.label()]
        wins = (statistical < errors["vanilla"]) & (statistical < errors["uniform"])
        assert np.count_nonzero(wins) >= 9

    def test_poisson_bound_suits_laplace_only(self):
        laplace, grid = build_scene(load_scene_config(SCENES_DIR / "disc_laplace.json"), resolution=32)
        errors = strategy_errors(laplace, grid, (self.UNIFORM, self.BOUND), seeds=range(4))
        assert errors["poisson-bound"].sum() < errors["uniform"].sum()

        poisson, grid = build_scene(load_scene_config(SCENES_DIR / "disc_poisson.json"), resolution=32)
        errors = strategy_errors(poisson, grid, (self.BOUND, self.STATISTICAL), seeds=range(4))
        assert errors[self.STATISTICAL.label()].sum() < errors["poisson-bound"].sum()

    def test_larger_gamma_removes_screening_bias(self, unit_ball):
        scene = Bvp.manufactured(unit_ball, TrigSolution(omega=np.pi), sigma=5.0)
        grid = SliceGrid([0.0, 0.0, 0.5], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], resolution=16).apply_domain(unit_ball)
        strict, loose = WeightingStrategy(gamma=0.3), WeightingStrategy(gamma=0.0)
        errors = strategy_errors(scene, grid, (strict, loose), seeds=[5], rounds=1024)
        assert errors[strict.label()][0] < errors[loose.label()][0]

    def test_mixed_scene_error_falls_with_budget(self):
        scene, grid = build_scene(load_scene_config(SCENES_DIR / "hemisphere_mixed.json"), resolution=16)
        points = grid.evaluation_points
        result = solve(points, scene, config(rounds=32), WeightingStrategy(), grid_index=grid.grid_index,
                       reference=scene.solution(points))
        mse = [result.history[budget - 1].mse for budget in (4, 8, 16, 32)]
        assert mse[0] > mse[1] > mse[2] > mse[3]
