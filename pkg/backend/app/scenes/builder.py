from pathlib import Path
from typing import Optional, Tuple
import logging

import numpy as np

from app.errors import SceneError
from app.geometry.analytic import BallDomain, BoxDomain
from app.geometry.base import Domain, HalfSpacePartition
from app.geometry.mesh import BoundaryMesh, MeshDomain
from app.scenes.bvp import Bvp, SliceGrid
from app.scenes.config import SceneConfig
from app.scenes.solutions import SOLUTIONS, ManufacturedSolution

logger = logging.getLogger(__name__)


def _planar(vector, dim: int) -> np.ndarray:
    v = np.asarray(vector, dtype=float)
    if dim == 2:
        v = v.copy()
        v[2] = 0.0
    return v


def build_partition(config: SceneConfig) -> Optional[HalfSpacePartition]:
    if config.partition.rule == "all-dirichlet":
        return None
    return HalfSpacePartition(axis=tuple(config.partition.axis), threshold=config.partition.threshold)


def build_domain(config: SceneConfig, base_dir: Optional[Path] = None) -> Domain:
    geometry = config.geometry
    partition = build_partition(config)
    if geometry.kind == "ball":
        return BallDomain(_planar(geometry.center, config.dim), geometry.radius, partition, dim=config.dim)
    if geometry.kind == "box":
        return BoxDomain(geometry.min, geometry.max, partition, dim=config.dim)

    path = Path(geometry.path)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    mesh = BoundaryMesh.from_obj(path, partition, normalize=geometry.normalize)
    return MeshDomain(mesh)


def build_solution(config: SceneConfig) -> ManufacturedSolution:
    problem = config.problem
    if problem.solution == "trig":
        return SOLUTIONS["trig"](dim=config.dim, omega=problem.omega)
    if problem.solution == "constant":
        return SOLUTIONS["constant"](dim=config.dim, constant=problem.constant)
    if problem.solution == "exponential":
        return SOLUTIONS["exponential"](dim=config.dim, offset=problem.offset)
    return SOLUTIONS[problem.solution](dim=config.dim)


def build_scene(config: SceneConfig, base_dir: Optional[Path] = None,
                resolution: Optional[int] = None) -> Tuple[Bvp, SliceGrid]:
    """Assemble geometry, boundary partition, manufactured data and the evaluation slice."""
    domain = build_domain(config, base_dir)
    solution = build_solution(config)
    bvp = Bvp.manufactured(domain, solution, sigma=config.problem.sigma, name=config.name)
    bvp.check_consistency(np.random.default_rng(0))

    grid = SliceGrid(
        origin=_planar(config.slice.origin, config.dim),
        axis_u=_planar(config.slice.axis_u, config.dim),
        axis_v=_planar(config.slice.axis_v, config.dim),
        resolution=resolution or config.slice.resolution,
    ).apply_domain(domain)
    if not np.any(grid.mask):
        raise SceneError("evaluation slice does not intersect the domain", key="slice")

    logger.info(f"Built scene {config.name}: {config.geometry.kind} ({config.dim}D), "
                f"{'mixed' if bvp.mixed else 'Dirichlet'} boundary, sigma={bvp.sigma}, "
                f"{int(grid.mask.sum())} evaluation points")
    return bvp, grid
