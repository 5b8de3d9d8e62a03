from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Literal, Optional
import logging
import time

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.errors import ConfigError, DomainError, InvariantViolation
from app.offcenter.estimator import SampleRecord, pair_gradients, pair_values, stage1_samples
from app.offcenter.neighbors import NeighborLists, select_neighbors, select_neighbors_grid, self_only
from app.offcenter.stats import PairStats
from app.offcenter.streams import STAGE_REUSE, STAGE_REUSE_RETRY, STAGE_WALK, STAGE_WALK_RETRY, chunk_slices, make_rng
from app.offcenter.weighting import WeightingStrategy, combine, pair_weights
from app.walkers import WalkConfig

logger = logging.getLogger(__name__)


class SolveConfig(BaseModel):
    walk: WalkConfig = Field(default_factory=WalkConfig)
    rounds: int = Field(16, ge=1)
    alpha: float = Field(0.5, gt=0, lt=1)
    beta: float = Field(10.0, gt=0)
    neighbor_mode: Literal["distance", "grid"] = "distance"
    source_sampling: Literal["two-stage", "centered"] = "two-stage"
    budget_mode: Literal["rounds", "seconds"] = "rounds"
    max_seconds: Optional[float] = Field(None, gt=0)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    chunk_size: int = Field(256, ge=1)
    check_invariants: bool = True

    @model_validator(mode="after")
    def _budget(self):
        if self.budget_mode == "seconds" and self.max_seconds is None:
            raise ValueError("seconds budget needs max_seconds")
        return self


@dataclass
class RoundSummary:
    round: int
    walks: int
    accepted_fraction: float
    failed: int
    phase1_seconds: float
    phase2_seconds: float
    elapsed_seconds: float
    mse: Optional[float] = None


@dataclass
class SolveResult:
    estimates: np.ndarray
    radii: np.ndarray
    neighbors: NeighborLists
    history: List[RoundSummary] = field(default_factory=list)
    truncated: int = 0

    @property
    def rounds(self) -> int:
        return len(self.history)

    @property
    def walks(self) -> int:
        return self.history[-1].walks if self.history else 0


RoundCallback = Callable[[RoundSummary, np.ndarray], None]
RecordHook = Callable[[int, SampleRecord], None]


def _gather(executor: ThreadPoolExecutor, fn, jobs) -> list:
    """Run every job and return results in order, exceptions in place of failed results."""
    futures = [executor.submit(fn, *job) for job in jobs]
    results = []
    for future in futures:
        try:
            results.append(future.result())
        except Exception as e:
            results.append(e)
    return results


def build_neighbors(points: np.ndarray, radii: np.ndarray, cfg: SolveConfig, strategy: WeightingStrategy,
                    grid_index: Optional[np.ndarray] = None) -> NeighborLists:
    if not strategy.reuses:
        return self_only(len(points))
    if cfg.neighbor_mode == "grid":
        if grid_index is None:
            raise ConfigError("grid neighbor selection needs lattice indices", key="neighbor_mode")
        return select_neighbors_grid(points, radii, grid_index, cfg.alpha, cfg.beta)
    return select_neighbors(points, radii, cfg.alpha, cfg.beta)


class ReuseSolver:
    """Round driver: stage-1 walks for every point, then local reuse across neighbor balls."""

    def __init__(self, points, scene, cfg: SolveConfig, strategy: WeightingStrategy, gradient: bool = False,
                 grid_index: Optional[np.ndarray] = None):
        self.points = np.asarray(points, dtype=float)
        self.scene = scene
        self.cfg = cfg
        self.strategy = strategy
        self.gradient = gradient
        n = len(self.points)

        if n == 0:
            raise DomainError("no evaluation points")
        if not np.all(scene.domain.contains(self.points)):
            raise DomainError("evaluation points must lie inside the domain")
        # full boundary distance: the cached spheres must not cross Neumann geometry
        self.radii = scene.domain.distance(self.points)
        if np.any(~(self.radii > 0)):
            raise DomainError("evaluation points must lie strictly inside the domain")

        self.neighbors = build_neighbors(self.points, self.radii, cfg, strategy, grid_index)
        self.owners = self.neighbors.owners()
        ys = self.neighbors.indices
        self.is_self = ys == self.owners
        self.center_slot = self.neighbors.self_slots()[self.owners]
        self.offsets = np.linalg.norm(self.points[self.owners] - self.points[ys], axis=1) / self.radii[ys]

        components = 3 if gradient else None
        self.stats = PairStats.zeros(self.neighbors.n_pairs, components)
        shape = (n, 3) if gradient else (n,)
        self.estimates = np.zeros(shape)
        self.counts = np.zeros(n, dtype=np.int64)
        self.walks = 0
        self.truncated = 0
        logger.info(f"{strategy.label()}: {n} points, {self.neighbors.mean_size():.1f} neighbors per point")

    def _walk_chunk(self, round_index: int, chunk: int, sl: slice) -> SampleRecord:
        rng = make_rng(self.cfg.seed, STAGE_WALK, chunk, round_index)
        owner = np.arange(sl.start, sl.stop)
        try:
            return stage1_samples(owner, self.points[sl], self.radii[sl], self.scene, self.cfg.walk, rng)
        except InvariantViolation:
            raise
        except Exception as e:
            logger.warning(f"Stage-1 chunk {chunk} failed in round {round_index}, retrying per point: {e}")
        return SampleRecord.concatenate([self._walk_point(round_index, i) for i in owner.tolist()])

    def _walk_point(self, round_index: int, i: int) -> SampleRecord:
        one = slice(i, i + 1)
        rng = make_rng(self.cfg.seed, STAGE_WALK_RETRY, i, round_index)
        try:
            return stage1_samples(np.array([i]), self.points[one], self.radii[one], self.scene, self.cfg.walk, rng)
        except InvariantViolation:
            raise
        except Exception as e:
            logger.error(f"Stage-1 walk for point {i} failed in round {round_index}: {e}")
            return SampleRecord.failed(np.array([i]), self.points[one], self.radii[one])

    def sample_records(self, executor: ThreadPoolExecutor, round_index: int) -> SampleRecord:
        jobs = [(round_index, chunk, sl) for chunk, sl in chunk_slices(len(self.points), self.cfg.chunk_size)]
        results = _gather(executor, self._walk_chunk, jobs)
        parts = []
        for (_, chunk, sl), result in zip(jobs, results):
            if isinstance(result, InvariantViolation):
                raise result
            if isinstance(result, Exception):
                logger.error(f"Stage-1 chunk {chunk} failed in round {round_index}: {result}")
                result = SampleRecord.failed(np.arange(sl.start, sl.stop), self.points[sl], self.radii[sl])
            parts.append(result)
        return SampleRecord.concatenate(parts)

    def _pair_values(self, round_index: int, chunk: int, pairs: np.ndarray, records: SampleRecord,
                     usable: np.ndarray) -> np.ndarray:
        """Reuse estimates for the usable pairs; NaN where a point's pairs could not be evaluated."""
        shape = (len(pairs), 3) if self.gradient else (len(pairs),)
        values = np.full(shape, np.nan)
        if not np.any(usable):
            return values
        estimator = pair_gradients if self.gradient else pair_values
        owners = self.owners[pairs]
        ys = self.neighbors.indices[pairs]
        rng = make_rng(self.cfg.seed, STAGE_REUSE, chunk, round_index)
        try:
            values[usable] = estimator(self.points[owners[usable]], records[ys[usable]], self.scene, self.cfg.walk,
                                       rng, self.cfg.source_sampling)
            return values
        except InvariantViolation:
            raise
        except Exception as e:
            logger.warning(f"Reuse chunk {chunk} failed in round {round_index}, retrying per point: {e}")

        values[:] = np.nan
        for i in np.unique(owners[usable]):
            mine = usable & (owners == i)
            rng = make_rng(self.cfg.seed, STAGE_REUSE_RETRY, int(i), round_index)
            try:
                values[mine] = estimator(self.points[owners[mine]], records[ys[mine]], self.scene, self.cfg.walk,
                                         rng, self.cfg.source_sampling)
            except InvariantViolation:
                raise
            except Exception as e:
                logger.error(f"Reuse for point {i} failed in round {round_index}: {e}")
        return values

    def _reuse_chunk(self, round_index: int, chunk: int, sl: slice, records: SampleRecord):
        lo, hi = self.neighbors.indptr[sl.start], self.neighbors.indptr[sl.stop]
        pairs = np.arange(lo, hi)
        ys = self.neighbors.indices[pairs]
        values = self._pair_values(round_index, chunk, pairs, records, records.usable[ys])
        usable = np.isfinite(values) if values.ndim == 1 else np.all(np.isfinite(values), axis=1)
        self.stats.update(pairs[usable], values[usable])

        local = self.stats[pairs]
        center = self.center_slot[pairs] - lo
        weights = pair_weights(self.strategy, local, center, self.is_self[pairs], self.offsets[pairs],
                               self.scene.dim, usable)
        indptr = self.neighbors.indptr[sl.start:sl.stop + 1] - lo
        # a point whose own walk failed and reuses nothing gets NaN this round
        totals = np.add.reduceat(weights, indptr[:-1])
        empty = np.flatnonzero(~(totals > 0))
        if len(empty):
            weights[center[indptr[empty]]] = 1.0
        estimate = combine(values, weights, indptr, check=self.cfg.check_invariants)
        accepted = int(np.count_nonzero((weights > 0) & ~self.is_self[pairs]))
        return estimate, accepted

    def reuse(self, executor: ThreadPoolExecutor, round_index: int, records: SampleRecord):
        jobs = [(round_index, chunk, sl, records) for chunk, sl in chunk_slices(len(self.points), self.cfg.chunk_size)]
        results = _gather(executor, self._reuse_chunk, jobs)
        estimate = np.full(self.estimates.shape, np.nan)
        accepted = 0
        for (_, chunk, sl, _), result in zip(jobs, results):
            if isinstance(result, InvariantViolation):
                raise result
            if isinstance(result, Exception):
                logger.error(f"Reuse chunk {chunk} failed in round {round_index}: {result}")
                continue
            estimate[sl], count = result
            accepted += count
        return estimate, accepted

    def accumulate(self, estimate: np.ndarray) -> int:
        """u <- (u (k - 1) + u_round) / k per point, skipping non-finite rounds."""
        finite = np.isfinite(estimate) if estimate.ndim == 1 else np.all(np.isfinite(estimate), axis=1)
        self.counts[finite] += 1
        k = self.counts[finite].astype(float)
        if self.gradient:
            k = k[:, None]
        self.estimates[finite] += (estimate[finite] - self.estimates[finite]) / k
        return int(np.count_nonzero(~finite))

    def current(self) -> np.ndarray:
        out = self.estimates.copy()
        out[self.counts == 0] = np.nan
        return out

    def run(self, reference: Optional[np.ndarray] = None, on_round: Optional[RoundCallback] = None,
            record_hook: Optional[RecordHook] = None) -> SolveResult:
        cfg = self.cfg
        n = len(self.points)
        others = self.neighbors.n_pairs - n
        history: List[RoundSummary] = []
        start = time.perf_counter()

        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            round_index = 0
            while True:
                t0 = time.perf_counter()
                records = self.sample_records(executor, round_index)
                if record_hook is not None:
                    record_hook(round_index, records)
                t1 = time.perf_counter()
                estimate, accepted = self.reuse(executor, round_index, records)
                t2 = time.perf_counter()

                failed = self.accumulate(estimate)
                usable = int(np.count_nonzero(records.usable))
                self.walks += usable
                self.truncated += int(np.count_nonzero(records.usable & ~records.terminated))
                if usable < n:
                    logger.warning(f"Round {round_index + 1}: {n - usable} stage-1 walks failed")

                summary = RoundSummary(
                    round=round_index + 1,
                    walks=self.walks,
                    accepted_fraction=accepted / others if others else 0.0,
                    failed=failed,
                    phase1_seconds=t1 - t0,
                    phase2_seconds=t2 - t1,
                    elapsed_seconds=t2 - start,
                    mse=mean_squared_error(self.current(), reference) if reference is not None else None,
                )
                history.append(summary)
                mse_text = f", mse {summary.mse:.3e}" if summary.mse is not None else ""
                logger.info(f"Round {summary.round}: {summary.walks} walks, "
                            f"{summary.accepted_fraction:.1%} pairs accepted{mse_text}")
                if on_round is not None:
                    on_round(summary, self.current())

                round_index += 1
                if cfg.budget_mode == "rounds" and round_index >= cfg.rounds:
                    break
                if cfg.budget_mode == "seconds" and time.perf_counter() - start >= cfg.max_seconds:
                    break

        if self.truncated:
            logger.warning(f"{self.truncated} stage-1 walks were truncated at max_steps")
        return SolveResult(estimates=self.current(), radii=self.radii, neighbors=self.neighbors,
                           history=history, truncated=self.truncated)


def mean_squared_error(estimates: np.ndarray, reference: np.ndarray) -> float:
    """Mean over points of the squared error (summed over components for vector fields)."""
    err = np.asarray(estimates, dtype=float) - np.asarray(reference, dtype=float)
    sq = err * err if err.ndim == 1 else np.sum(err * err, axis=1)
    finite = np.isfinite(sq)
    return float(np.mean(sq[finite])) if np.any(finite) else float("nan")


def solve(points, scene, cfg: SolveConfig, strategy: WeightingStrategy, grid_index: Optional[np.ndarray] = None,
          reference: Optional[np.ndarray] = None, on_round: Optional[RoundCallback] = None,
          record_hook: Optional[RecordHook] = None) -> SolveResult:
    """Estimate u at every point with off-centered sample reuse."""
    solver = ReuseSolver(points, scene, cfg, strategy, gradient=False, grid_index=grid_index)
    return solver.run(reference=reference, on_round=on_round, record_hook=record_hook)


def solve_gradient(points, scene, cfg: SolveConfig, strategy: WeightingStrategy,
                   grid_index: Optional[np.ndarray] = None, reference: Optional[np.ndarray] = None,
                   on_round: Optional[RoundCallback] = None,
                   record_hook: Optional[RecordHook] = None) -> SolveResult:
    """Estimate grad u at every point; pairs are accepted only when every component passes."""
    solver = ReuseSolver(points, scene, cfg, strategy, gradient=True, grid_index=grid_index)
    return solver.run(reference=reference, on_round=on_round, record_hook=record_hook)
