from typing import Literal
import logging

import numpy as np
from pydantic import BaseModel, Field

from app.errors import DomainError, InvariantViolation
from app.offcenter.stats import PairStats, w_star_values

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12
CONVEXITY_TOLERANCE = 1e-12

STRATEGIES = ("vanilla", "uniform", "poisson-bound", "statistical")


class WeightingStrategy(BaseModel):
    kind: Literal["vanilla", "uniform", "poisson-bound", "statistical"] = "statistical"
    gamma: float = Field(0.05, ge=0, lt=1)
    # samples both estimators need before w* is trusted; fewer and the pair is combined uniformly
    min_samples: int = Field(8, ge=2)

    @property
    def reuses(self) -> bool:
        return self.kind != "vanilla"

    def label(self) -> str:
        return f"statistical(gamma={self.gamma:g})" if self.kind == "statistical" else self.kind


def poisson_bound_weight(x, y, r_y, d: int = 3):
    """(1 - t)^(2d) / (1 - t^2)^2 with t = |x - y| / r_y; unnormalized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.linalg.norm(x - y, axis=-1) / np.asarray(r_y, dtype=float)
    if np.any(~(t < 1)):
        raise DomainError("poisson-bound weight needs |x - y| < r_y")
    weight = (1.0 - t) ** (2 * d) / (1.0 - t * t) ** 2
    return float(weight) if np.ndim(weight) == 0 else weight


def pair_weights(strategy: WeightingStrategy, stats: PairStats, center_slot: np.ndarray, is_self: np.ndarray,
                 offsets: np.ndarray, dim: int, usable: np.ndarray) -> np.ndarray:
    """Unnormalized weights m_xy per pair.

    center_slot maps each pair to the pair index of its evaluation point's self pair; offsets are
    |x - y| / r_y. Only the statistical strategy looks at the sample counts: until both sides hold
    strategy.min_samples samples the pair is accepted, afterwards it has to pass 1 - w* > gamma.
    """
    if strategy.kind == "vanilla":
        m = np.zeros(len(is_self))
    elif strategy.kind == "uniform":
        m = usable.astype(float)
    elif strategy.kind == "poisson-bound":
        t = np.clip(offsets, 0.0, 1.0 - 1e-15)
        m = np.where(usable, (1.0 - t) ** (2 * dim) / (1.0 - t * t) ** 2, 0.0)
    else:
        count = stats.count
        warming = np.minimum(count, count[center_slot]) < strategy.min_samples
        with np.errstate(invalid="ignore"):
            w = w_star_values(stats[center_slot], stats)
        if w.ndim > 1:
            # vector estimators: every component has to pass
            accepted = np.all(1.0 - w > strategy.gamma, axis=1)
        else:
            accepted = 1.0 - w > strategy.gamma
        m = (usable & (warming | accepted)).astype(float)
    return np.where(is_self & usable, 1.0, m)


def combine(values: np.ndarray, weights: np.ndarray, indptr: np.ndarray, check: bool = True) -> np.ndarray:
    """Per-point convex combination sum(lambda I) with lambda = m / sum(m) over each CSR segment."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    starts = indptr[:-1]
    totals = np.add.reduceat(weights, starts)
    if np.any(~(totals > 0)):
        raise InvariantViolation("a point has no accepted pair")
    owner = np.repeat(np.arange(len(starts)), np.diff(indptr))
    lam = weights / totals[owner]
    expand = (lambda a: a[:, None]) if values.ndim > 1 else (lambda a: a)
    safe = np.where(expand(lam > 0), values, 0.0)
    estimate = np.add.reduceat(expand(lam) * safe, starts, axis=0)

    if check:
        lam_sums = np.add.reduceat(lam, starts)
        if np.any(np.abs(lam_sums - 1.0) > NORMALIZATION_TOLERANCE):
            raise InvariantViolation(f"weights do not sum to one (max error {np.max(np.abs(lam_sums - 1.0)):.3e})")
        accepted = expand(lam > 0)
        lo = np.minimum.reduceat(np.where(accepted, values, np.inf), starts, axis=0)
        hi = np.maximum.reduceat(np.where(accepted, values, -np.inf), starts, axis=0)
        slack = CONVEXITY_TOLERANCE * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        if np.any(estimate < lo - slack) or np.any(estimate > hi + slack):
            raise InvariantViolation("combined estimate left the range of accepted pair estimates")
    return estimate
