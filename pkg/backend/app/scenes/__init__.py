from app.scenes.builder import build_scene
from app.scenes.bvp import Bvp, SliceGrid
from app.scenes.config import SceneConfig, load_scene_config
from app.scenes.solutions import (
    ConstantSolution,
    ExponentialSolution,
    HarmonicSolution,
    LinearSolution,
    ManufacturedSolution,
    TrigSolution,
    trig_neumann,
    trig_solution,
    trig_source,
)

__all__ = [
    "Bvp",
    "ConstantSolution",
    "ExponentialSolution",
    "HarmonicSolution",
    "LinearSolution",
    "ManufacturedSolution",
    "SceneConfig",
    "SliceGrid",
    "TrigSolution",
    "build_scene",
    "load_scene_config",
    "trig_neumann",
    "trig_solution",
    "trig_source",
]
