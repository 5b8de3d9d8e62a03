import numpy as np

from app.walkers.config import WalkConfig, WalkSample
from app.walkers.gradient import wos_gradient, wos_gradient_estimate
from app.walkers.wos import walk_on_spheres, wos_estimate
from app.walkers.wost import walk_on_stars, wost_estimate


def walk(scene, points, cfg: WalkConfig, rng: np.random.Generator) -> WalkSample:
    """Walk on stars for mixed scenes, walk on spheres otherwise."""
    if scene.domain.has_neumann:
        return walk_on_stars(scene, points, cfg, rng)
    return walk_on_spheres(scene, points, cfg, rng)


__all__ = [
    "WalkConfig",
    "WalkSample",
    "walk",
    "walk_on_spheres",
    "walk_on_stars",
    "wos_estimate",
    "wos_gradient",
    "wos_gradient_estimate",
    "wost_estimate",
]
