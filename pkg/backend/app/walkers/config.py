from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from app.kernels.greens import KernelParams


class WalkConfig(BaseModel):
    epsilon: float = Field(1e-3, gt=0)
    max_steps: int = Field(1000, ge=1)
    source_samples: int = Field(1, ge=0)
    # None inherits the scene's screening
    sigma: Optional[float] = Field(None, ge=0)
    # star radius floor for walks on stars; defaults to epsilon
    r_min: Optional[float] = Field(None, gt=0)

    def kernel_params(self, scene) -> KernelParams:
        sigma = scene.sigma if self.sigma is None else self.sigma
        return KernelParams(dim=scene.dim, sigma=sigma)

    @property
    def star_floor(self) -> float:
        return self.r_min if self.r_min is not None else self.epsilon


@dataclass
class WalkSample:
    """Batch of walk results; terminated is False for walks cut off at max_steps."""
    value: np.ndarray
    steps: np.ndarray
    terminated: np.ndarray

    def __getitem__(self, index) -> "WalkSample":
        return WalkSample(self.value[index], self.steps[index], self.terminated[index])

    @property
    def truncated(self) -> int:
        return int(np.count_nonzero(~self.terminated))
