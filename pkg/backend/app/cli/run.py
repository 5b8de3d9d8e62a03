from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional
import logging

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.cli.output import (
    write_comparison_csv,
    write_convergence_csv,
    write_error_map,
    write_solution_map,
    write_timing_csv,
)
from app.config import get_settings
from app.errors import ConfigError
from app.offcenter import STRATEGIES, RoundSummary, SolveConfig, WeightingStrategy, solve, solve_gradient
from app.scenes import build_scene, load_scene_config
from app.scenes.config import config_error
from app.walkers import WalkConfig

logger = logging.getLogger(__name__)


def _json_float(value: Optional[float]) -> Optional[float]:
    return value if value is not None and np.isfinite(value) else None


class RunConfig(BaseModel):
    scene: str
    strategy: Literal["vanilla", "uniform", "poisson-bound", "statistical"] = "statistical"
    gamma: float = Field(0.05, ge=0, lt=1)
    min_samples: int = Field(8, ge=2)
    alpha: float = Field(0.5, gt=0, lt=1)
    beta: float = Field(10.0, gt=0)
    epsilon: float = Field(1e-3, gt=0)
    spp: int = Field(16, ge=1)
    source_samples: int = Field(1, ge=0)
    max_steps: int = Field(1000, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    workers: Optional[int] = Field(None, ge=1)
    chunk_size: Optional[int] = Field(None, ge=1)
    out: Optional[str] = None
    budget_mode: Literal["rounds", "seconds"] = "rounds"
    seconds: Optional[float] = Field(None, gt=0)
    compare: List[str] = []
    gradient: bool = False
    neighbor_mode: Literal["distance", "grid"] = "distance"
    source_sampling: Literal["two-stage", "centered"] = "two-stage"
    resolution: Optional[int] = Field(None, ge=1)
    write_images: bool = True

    @field_validator("compare")
    @classmethod
    def check_compare(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies {unknown}; choose from {list(STRATEGIES)}")
        return value

    @model_validator(mode="after")
    def check_budget(self):
        if self.budget_mode == "seconds" and self.seconds is None:
            raise ValueError("seconds budget mode needs seconds")
        return self

    def weighting(self, kind: Optional[str] = None) -> WeightingStrategy:
        return WeightingStrategy(kind=kind or self.strategy, gamma=self.gamma, min_samples=self.min_samples)

    def solve_config(self) -> SolveConfig:
        settings = get_settings()
        return SolveConfig(
            walk=WalkConfig(epsilon=self.epsilon, max_steps=self.max_steps, source_samples=self.source_samples),
            rounds=self.spp,
            alpha=self.alpha,
            beta=self.beta,
            neighbor_mode=self.neighbor_mode,
            source_sampling=self.source_sampling,
            budget_mode=self.budget_mode,
            max_seconds=self.seconds,
            seed=settings.seed if self.seed is None else self.seed,
            workers=self.workers or settings.workers,
            chunk_size=self.chunk_size or settings.chunk_size,
        )

    def output_dir(self) -> Path:
        return Path(self.out or get_settings().output_dir)


@dataclass
class RunReport:
    strategy: str
    history: List[RoundSummary]
    estimates: np.ndarray
    reference: Optional[np.ndarray] = None
    out_dir: Optional[Path] = None
    truncated: int = 0
    files: List[str] = field(default_factory=list)

    @property
    def walks(self) -> int:
        return self.history[-1].walks if self.history else 0

    @property
    def mse(self) -> Optional[float]:
        return self.history[-1].mse if self.history else None

    def summary(self) -> dict:
        return {
            "strategy": self.strategy,
            "rounds": len(self.history),
            "walks": self.walks,
            "mse": _json_float(self.mse),
            "truncated": self.truncated,
            "history": [
                {"round": h.round, "walks": h.walks, "mse": _json_float(h.mse),
                 "elapsed_seconds": h.elapsed_seconds, "accepted_fraction": h.accepted_fraction}
                for h in self.history
            ],
            "files": self.files,
        }


def parse_run_config(data: dict) -> RunConfig:
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise config_error(e) from e


def _solve_config(config: RunConfig) -> SolveConfig:
    try:
        return config.solve_config()
    except ValidationError as e:
        raise config_error(e) from e


def run(config: RunConfig, strategy: Optional[str] = None, out_dir: Optional[Path] = None,
        on_round=None) -> RunReport:
    """Solve the scene's slice with one weighting strategy and write maps and CSVs to out_dir."""
    scene_config = load_scene_config(config.scene)
    scene, grid = build_scene(scene_config, base_dir=Path(config.scene).parent, resolution=config.resolution)
    weighting = config.weighting(strategy)
    solve_config = _solve_config(config)
    out_dir = Path(out_dir) if out_dir is not None else config.output_dir()

    points = grid.evaluation_points
    if config.gradient:
        reference = scene.gradient(points) if scene.gradient is not None else None
        result = solve_gradient(points, scene, solve_config, weighting, grid_index=grid.grid_index,
                                reference=reference, on_round=on_round)
    else:
        reference = scene.solution(points) if scene.solution is not None else None
        result = solve(points, scene, solve_config, weighting, grid_index=grid.grid_index,
                       reference=reference, on_round=on_round)

    report = RunReport(strategy=weighting.label(), history=result.history, estimates=result.estimates,
                       reference=reference, out_dir=out_dir, truncated=result.truncated)
    try:
        report.files = _write_outputs(report, grid, config, out_dir)
    except OSError as e:
        logger.error(f"Failed to write outputs to {out_dir}: {str(e)}")
        raise
    return report


def _write_outputs(report: RunReport, grid, config: RunConfig, out_dir: Path) -> List[str]:
    """CSV tables and the raw float maps always; PNG renderings only when write_images is set."""
    out_dir.mkdir(parents=True, exist_ok=True)
    files = [
        write_convergence_csv(report.history, out_dir / "convergence.csv",
                              include_time=config.budget_mode == "seconds"),
        write_timing_csv(report.history, out_dir / "timing.csv"),
    ]
    estimate = grid.scatter(report.estimates)
    magnitude = np.linalg.norm(estimate, axis=-1) if config.gradient else estimate
    truth = grid.scatter(report.reference) if report.reference is not None else None
    truth_magnitude = np.linalg.norm(truth, axis=-1) if (config.gradient and truth is not None) else truth
    files.extend(write_solution_map(magnitude, truth_magnitude, out_dir, image=config.write_images))
    if truth is not None:
        files.extend(write_error_map(estimate, truth, out_dir, image=config.write_images))
    logger.info(f"Wrote {len(files)} files to {out_dir}")
    return sorted(str(path) for path in files)


def compare(config: RunConfig, on_round=None) -> List[RunReport]:
    """Run every strategy in config.compare on identical seeds; writes comparison.csv next to the per-strategy dirs."""
    if not config.compare:
        raise ConfigError("no strategies to compare", key="compare")
    out_dir = config.output_dir()
    reports = []
    for name in config.compare:
        logger.info(f"Comparing strategy {name}")
        reports.append(run(config, strategy=name, out_dir=out_dir / name, on_round=on_round))

    rows = [{"strategy": r.strategy, "rounds": len(r.history), "walks": r.walks, "mse": r.mse} for r in reports]
    write_comparison_csv(rows, out_dir / "comparison.csv")
    return reports
