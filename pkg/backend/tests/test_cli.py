from pathlib import Path

import matplotlib
import numpy as np
import pandas as pd
import pytest
from PIL import Image

from app.cli.main import build_parser, config_from_args, main
from app.cli.output import error_grid, read_pfm, write_convergence_csv, write_error_map, write_pfm, write_solution_map
from app.cli.run import RunConfig, compare, parse_run_config, run
from app.errors import ConfigError
from app.offcenter import RoundSummary

SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"
BALL = str(SCENES_DIR / "ball_poisson.json")


def small_config(out, **kwargs):
    data = {"scene": BALL, "spp": 3, "resolution": 8, "workers": 1, "seed": 3, "epsilon": 1e-3, "out": str(out)}
    data.update(kwargs)
    return RunConfig(**data)


class TestPfm:
    def test_round_trip(self, tmp_path, rng):
        image = rng.standard_normal((5, 7)).astype(np.float32)
        path = write_pfm(tmp_path / "map.pfm", image)
        assert np.array_equal(read_pfm(path), image)

    def test_rows_are_stored_bottom_up(self, tmp_path):
        image = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        raw = write_pfm(tmp_path / "map.pfm", image).read_bytes()
        header = b"Pf\n2 2\n-1.0\n"
        assert raw.startswith(header)
        assert np.array_equal(np.frombuffer(raw[len(header):], dtype="<f4"), [3.0, 4.0, 1.0, 2.0])

    def test_nan_cells_survive(self, tmp_path):
        image = np.array([[np.nan, 1.0]])
        assert np.isnan(read_pfm(write_pfm(tmp_path / "map.pfm", image))[0, 0])

    def test_rejects_vector_maps(self, tmp_path):
        with pytest.raises(ValueError):
            write_pfm(tmp_path / "map.pfm", np.zeros((2, 2, 3)))


class TestErrorMap:
    def test_zero_error_is_minimum_color(self, tmp_path):
        field = np.linspace(0.0, 1.0, 16).reshape(4, 4)
        written = write_error_map(field, field, tmp_path)
        assert written == [tmp_path / "error.pfm", tmp_path / "error.png"]
        assert np.all(read_pfm(tmp_path / "error.pfm") == 0.0)
        pixels = np.asarray(Image.open(tmp_path / "error.png"))
        expected = matplotlib.colormaps["turbo"](0.0, bytes=True)
        assert np.all(pixels == np.asarray(expected, dtype=np.uint8))

    def test_masked_cells_are_transparent(self, tmp_path):
        truth = np.zeros((3, 3))
        estimate = np.full((3, 3), 0.5)
        estimate[0, 0] = np.nan
        write_error_map(estimate, truth, tmp_path)
        pixels = np.asarray(Image.open(tmp_path / "error.png"))
        assert pixels[0, 0, 3] == 0
        assert pixels[1, 1, 3] == 255

    def test_vector_error_is_norm(self, tmp_path):
        truth = np.zeros((2, 2, 3))
        estimate = np.zeros((2, 2, 3))
        estimate[..., 0] = 3.0
        estimate[..., 1] = 4.0
        write_error_map(estimate, truth, tmp_path)
        assert np.allclose(error_grid(estimate, truth), 5.0)
        assert np.allclose(read_pfm(tmp_path / "error.pfm"), 5.0)

    def test_raw_map_without_image(self, tmp_path):
        written = write_error_map(np.ones((2, 2)), np.zeros((2, 2)), tmp_path, image=False)
        assert written == [tmp_path / "error.pfm"]
        assert not (tmp_path / "error.png").exists()


class TestSolutionMap:
    def test_returns_written_paths(self, tmp_path):
        field = np.linspace(0.0, 1.0, 9).reshape(3, 3)
        written = write_solution_map(field, None, tmp_path)
        assert written == [tmp_path / "solution.pfm", tmp_path / "solution.png"]
        assert np.allclose(read_pfm(written[0]), field)

    def test_raw_map_without_image(self, tmp_path):
        written = write_solution_map(np.zeros((3, 3)), None, tmp_path, image=False)
        assert written == [tmp_path / "solution.pfm"]


class TestConvergenceCsv:
    def summaries(self):
        return [RoundSummary(round=i + 1, walks=10 * (i + 1), accepted_fraction=0.5, failed=0, phase1_seconds=0.1,
                             phase2_seconds=0.1, elapsed_seconds=0.2 * (i + 1), mse=1.0 / (i + 1))
                for i in range(3)]

    def test_columns(self, tmp_path):
        frame = pd.read_csv(write_convergence_csv(self.summaries(), tmp_path / "c.csv"))
        assert list(frame.columns) == ["round", "walks", "mse"]
        assert frame["walks"].tolist() == [10, 20, 30]

    def test_time_column_in_seconds_mode(self, tmp_path):
        frame = pd.read_csv(write_convergence_csv(self.summaries(), tmp_path / "c.csv", include_time=True))
        assert list(frame.columns) == ["round", "walks", "mse", "elapsed_seconds"]

    def test_full_precision(self, tmp_path):
        frame = pd.read_csv(write_convergence_csv(self.summaries(), tmp_path / "c.csv"))
        assert frame["mse"].iloc[2] == 1.0 / 3.0


class TestRunConfig:
    def test_unknown_strategy_in_compare(self):
        with pytest.raises(ConfigError):
            parse_run_config({"scene": BALL, "compare": ["vanilla", "median"]})

    def test_seconds_mode_needs_limit(self):
        with pytest.raises(ConfigError):
            parse_run_config({"scene": BALL, "budget_mode": "seconds"})

    def test_gamma_range(self):
        with pytest.raises(ConfigError) as info:
            parse_run_config({"scene": BALL, "gamma": 1.0})
        assert info.value.key == "gamma"

    def test_settings_fill_defaults(self, monkeypatch):
        monkeypatch.setenv("OFFWOS_SEED", "11")
        monkeypatch.setenv("OFFWOS_WORKERS", "2")
        solve_config = RunConfig(scene=BALL).solve_config()
        assert solve_config.seed == 11
        assert solve_config.workers == 2

    def test_parser_maps_flags(self):
        args = build_parser().parse_args(["--scene", BALL, "--eps", "0.01", "--compare", "vanilla, statistical",
                                          "--no-images", "--min-samples", "4"])
        config = config_from_args(args)
        assert config.epsilon == 0.01
        assert config.weighting().min_samples == 4
        assert config.compare == ["vanilla", "statistical"]
        assert not config.write_images


class TestRun:
    def test_writes_outputs(self, tmp_path):
        report = run(small_config(tmp_path))
        frame = pd.read_csv(tmp_path / "convergence.csv")
        assert len(frame) == 3
        assert frame["round"].tolist() == [1, 2, 3]
        for name in ("solution.pfm", "solution.png", "error.pfm", "error.png", "timing.csv"):
            assert (tmp_path / name).exists()
        assert read_pfm(tmp_path / "solution.pfm").shape == (8, 8)
        assert report.mse is not None and np.isfinite(report.mse)

    def test_same_seed_same_files(self, tmp_path):
        run(small_config(tmp_path / "a"))
        run(small_config(tmp_path / "b"))
        for name in ("convergence.csv", "solution.pfm", "error.pfm"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_without_images_keeps_raw_maps(self, tmp_path):
        report = run(small_config(tmp_path, write_images=False))
        assert (tmp_path / "convergence.csv").exists()
        assert (tmp_path / "solution.pfm").exists()
        assert (tmp_path / "error.pfm").exists()
        assert not (tmp_path / "solution.png").exists()
        assert not (tmp_path / "error.png").exists()
        assert str(tmp_path / "error.pfm") in report.files

    def test_gradient_run(self, tmp_path):
        report = run(small_config(tmp_path, gradient=True, strategy="vanilla"))
        assert report.estimates.shape[1] == 3
        assert (tmp_path / "error.pfm").exists()

    def test_seconds_mode_records_time(self, tmp_path):
        run(small_config(tmp_path, budget_mode="seconds", seconds=0.01))
        frame = pd.read_csv(tmp_path / "convergence.csv")
        assert "elapsed_seconds" in frame.columns

    def test_missing_scene(self, tmp_path):
        with pytest.raises(ConfigError):
            run(small_config(tmp_path, scene=str(tmp_path / "missing.json")))

    def test_compare_shares_budget(self, tmp_path):
        reports = compare(small_config(tmp_path, compare=["vanilla", "statistical"]))
        frame = pd.read_csv(tmp_path / "comparison.csv")
        assert frame["strategy"].tolist() == ["vanilla", "statistical(gamma=0.05)"]
        assert reports[0].walks == reports[1].walks
        assert (tmp_path / "vanilla" / "convergence.csv").exists()
        assert (tmp_path / "statistical" / "convergence.csv").exists()


class TestMain:
    def test_success(self, tmp_path, capsys):
        code = main(["--scene", BALL, "--spp", "2", "--resolution", "6", "--workers", "1", "--out", str(tmp_path),
                     "--no-images"])
        assert code == 0
        assert "statistical(gamma=0.05): 2 rounds" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path):
        assert main(["--scene", BALL, "--compare", "vanilla,median", "--out", str(tmp_path)]) == 2

    def test_missing_scene_exit_code(self, tmp_path):
        assert main(["--scene", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
