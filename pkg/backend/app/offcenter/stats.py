from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.errors import InsufficientDataError


@dataclass
class PairStats:
    """Running count, mean and mean of squares for a batch of estimators.

    mean and meansq may carry a trailing component axis (gradient estimators).
    """
    count: np.ndarray
    mean: np.ndarray
    meansq: np.ndarray

    @classmethod
    def zeros(cls, n: int, components: Optional[int] = None) -> "PairStats":
        shape: Tuple[int, ...] = (n,) if components is None else (n, components)
        return cls(count=np.zeros(n, dtype=np.int64), mean=np.zeros(shape), meansq=np.zeros(shape))

    @classmethod
    def from_samples(cls, samples) -> "PairStats":
        samples = np.atleast_1d(np.asarray(samples, dtype=float))
        return cls(count=np.array([len(samples)]), mean=np.array([samples.mean(axis=0)]),
                   meansq=np.array([(samples ** 2).mean(axis=0)]))

    def __getitem__(self, index) -> "PairStats":
        return PairStats(self.count[index], self.mean[index], self.meansq[index])

    def _expand(self, values: np.ndarray) -> np.ndarray:
        return values if self.mean.ndim == 1 else values[:, None]

    def update(self, index, values: np.ndarray):
        """Fold one new sample per selected entry into the running moments."""
        values = np.asarray(values, dtype=float)
        self.count[index] += 1
        n = self._expand(self.count[index].astype(float))
        self.mean[index] += (values - self.mean[index]) / n
        self.meansq[index] += (values * values - self.meansq[index]) / n

    def merge(self, other: "PairStats") -> "PairStats":
        total = self.count + other.count
        safe = self._expand(np.maximum(total, 1).astype(float))
        w_self = self._expand(self.count.astype(float)) / safe
        w_other = self._expand(other.count.astype(float)) / safe
        return PairStats(count=total, mean=w_self * self.mean + w_other * other.mean,
                         meansq=w_self * self.meansq + w_other * other.meansq)

    def variance_of_mean(self) -> np.ndarray:
        """Unbiased variance of the sample mean, s^2 / n, with s^2 clamped at zero."""
        n = self._expand(self.count.astype(float))
        with np.errstate(divide="ignore", invalid="ignore"):
            sample_var = np.maximum(self.meansq - self.mean ** 2, 0.0) * n / (n - 1.0)
            return np.where(n >= 2, sample_var / n, np.nan)


def w_star_values(center: PairStats, pair: PairStats) -> np.ndarray:
    """Similarity statistic per entry; NaN where either side has fewer than two samples.

    When both the numerator and the center variance vanish the value is 0 (maximally similar).
    """
    delta2 = (pair.mean - center.mean) ** 2
    v_xy = pair.variance_of_mean()
    v_xx = center.variance_of_mean()
    numer = delta2 + v_xy
    denom = numer + v_xx
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(denom > 0, numer / denom, 0.0)
    return np.where(np.isnan(v_xy) | np.isnan(v_xx), np.nan, w)


def w_star(center: PairStats, pair: PairStats):
    """w* = (delta^2 + V_xy) / (delta^2 + V_xy + V_xx) in [0, 1]."""
    if np.any(np.asarray(center.count) < 2) or np.any(np.asarray(pair.count) < 2):
        raise InsufficientDataError("w* needs at least two samples on both estimators")
    w = w_star_values(center, pair)
    return float(w.reshape(-1)[0]) if w.size == 1 else w
