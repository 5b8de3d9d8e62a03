import json
from pathlib import Path
from typing import List, Literal, Optional
import logging

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.errors import ConfigError, SceneError

logger = logging.getLogger(__name__)


class GeometryConfig(BaseModel):
    kind: Literal["ball", "box", "mesh"] = "ball"
    center: List[float] = [0.0, 0.0, 0.0]
    radius: float = Field(1.0, gt=0)
    min: List[float] = [-1.0, -1.0, -1.0]
    max: List[float] = [1.0, 1.0, 1.0]
    path: Optional[str] = None
    normalize: bool = True

    @model_validator(mode="after")
    def check_shape(self):
        if self.kind == "mesh" and not self.path:
            raise ValueError("mesh geometry requires a path")
        if self.kind == "box" and any(lo >= hi for lo, hi in zip(self.min, self.max)):
            raise ValueError("box requires min < max componentwise")
        return self


class PartitionConfig(BaseModel):
    rule: Literal["all-dirichlet", "half-space"] = "all-dirichlet"
    axis: List[float] = [0.0, 0.0, 1.0]
    threshold: float = 0.0


class ProblemConfig(BaseModel):
    type: Literal["poisson", "screened"] = "poisson"
    solution: Literal["trig", "constant", "linear", "harmonic", "exponential"] = "trig"
    omega: float = float(np.pi)
    sigma: float = Field(0.0, ge=0)
    constant: float = 1.0
    # level added to the exponential solution
    offset: float = 0.0

    @model_validator(mode="after")
    def check_screening(self):
        if self.type == "screened" and not self.sigma > 0:
            raise ValueError("screened problems need sigma > 0")
        if self.type == "poisson" and self.sigma != 0:
            raise ValueError("poisson problems have sigma = 0")
        return self


class SliceConfig(BaseModel):
    origin: List[float] = [0.0, 0.0, 0.0]
    axis_u: List[float] = [1.0, 0.0, 0.0]
    axis_v: List[float] = [0.0, 1.0, 0.0]
    resolution: int = Field(512, ge=1)


class SceneConfig(BaseModel):
    name: str = "scene"
    dim: Literal[2, 3] = 3
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    partition: PartitionConfig = Field(default_factory=PartitionConfig)
    problem: ProblemConfig = Field(default_factory=ProblemConfig)
    slice: SliceConfig = Field(default_factory=SliceConfig)

    @model_validator(mode="after")
    def check_dimension(self):
        if self.dim == 2 and self.problem.sigma > 0:
            raise ValueError("screened problems are only supported in 3D")
        if self.dim == 2 and self.geometry.kind == "mesh":
            raise ValueError("mesh domains are 3D")
        return self


def config_error(error: ValidationError) -> ConfigError:
    """First pydantic error as a ConfigError naming the offending key."""
    first = error.errors()[0]
    key = ".".join(str(part) for part in first.get("loc", ())) or None
    return ConfigError(first.get("msg", str(error)), key=key)


def load_scene_config(path) -> SceneConfig:
    path = Path(path)
    if not path.exists():
        raise SceneError(f"scene config not found: {path}", key="scene")
    try:
        with open(path, "r") as file:
            data = json.load(file)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid scene config {path}: {str(e)}")
        raise ConfigError(f"invalid JSON in {path}: {e}", key="scene") from e
    try:
        config = SceneConfig(**data)
    except ValidationError as e:
        raise config_error(e) from e
    if config.geometry.path and not Path(config.geometry.path).is_absolute():
        config.geometry.path = str((path.parent / config.geometry.path).resolve())
    return config
