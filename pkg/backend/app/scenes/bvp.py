from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple
import logging

import numpy as np

from app.errors import SceneError
from app.geometry.base import BoundaryLabel, Domain
from app.kernels.greens import KernelParams
from app.scenes.solutions import ManufacturedSolution

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]
FluxField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Bvp:
    """-(Delta u - sigma u) = f in the domain, u = g on the Dirichlet part, du/dn = h on the Neumann part."""
    domain: Domain
    dirichlet: ScalarField
    neumann: Optional[FluxField] = None
    source: Optional[ScalarField] = None
    sigma: float = 0.0
    solution: Optional[ScalarField] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "scene"

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def params(self) -> KernelParams:
        return KernelParams(dim=self.dim, sigma=self.sigma)

    @property
    def mixed(self) -> bool:
        return bool(self.domain.has_neumann)

    @classmethod
    def manufactured(cls, domain: Domain, solution: ManufacturedSolution, sigma: float = 0.0,
                     name: str = "scene") -> "Bvp":
        source = (lambda p: solution.source(p, sigma)) if solution.has_source(sigma) else None
        neumann = solution.normal_derivative if domain.has_neumann else None
        return cls(
            domain=domain,
            dirichlet=solution.value,
            neumann=neumann,
            source=source,
            sigma=sigma,
            solution=solution.value,
            gradient=solution.gradient,
            name=name,
        )

    def check_consistency(self, rng: np.random.Generator, n: int = 100, tol: float = 1e-9) -> float:
        """Spot-check g and h against the analytic solution on random boundary points; returns the max error."""
        if self.solution is None:
            return 0.0
        lo, hi = self.domain.bounds()
        samples = rng.uniform(lo, hi, size=(n, 3))
        cp = self.domain.closest_point(samples)
        worst = 0.0
        dirichlet = cp.label == BoundaryLabel.DIRICHLET
        if np.any(dirichlet):
            worst = max(worst, float(np.max(np.abs(self.dirichlet(cp.point[dirichlet])
                                                   - self.solution(cp.point[dirichlet])))))
        if self.neumann is not None and self.gradient is not None and np.any(~dirichlet):
            pts, nrm = cp.point[~dirichlet], cp.normal[~dirichlet]
            expected = np.einsum("ij,ij->i", self.gradient(pts), nrm)
            worst = max(worst, float(np.max(np.abs(self.neumann(pts, nrm) - expected))))
        if worst > tol:
            raise SceneError(f"boundary data inconsistent with the analytic solution (error {worst:.3e})",
                             key="problem")
        return worst


@dataclass
class SliceGrid:
    """n x n cell-centered samples of the plane origin + a u + b v with a, b in (-1, 1)."""
    origin: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    resolution: int
    mask: np.ndarray = field(default=None)
    points: np.ndarray = field(default=None)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.axis_u = np.asarray(self.axis_u, dtype=float)
        self.axis_v = np.asarray(self.axis_v, dtype=float)
        if self.resolution < 1:
            raise SceneError("slice resolution must be positive", key="slice.resolution")
        if np.linalg.norm(np.cross(self.axis_u, self.axis_v)) <= 1e-12 * max(
                np.linalg.norm(self.axis_u) * np.linalg.norm(self.axis_v), 1e-300):
            raise SceneError("slice axes are degenerate", key="slice.axis_u")
        ticks = (np.arange(self.resolution) + 0.5) / self.resolution * 2.0 - 1.0
        # rows follow axis_v, columns follow axis_u
        b, a = np.meshgrid(ticks, ticks, indexing="ij")
        self.points = self.origin + a[..., None] * self.axis_u + b[..., None] * self.axis_v
        if self.mask is None:
            self.mask = np.ones((self.resolution, self.resolution), dtype=bool)

    def apply_domain(self, domain: Domain) -> "SliceGrid":
        inside = domain.contains(self.points.reshape(-1, 3)).reshape(self.resolution, self.resolution)
        self.mask = inside & (domain.distance(self.points.reshape(-1, 3)).reshape(inside.shape) > 0)
        return self

    @property
    def evaluation_points(self) -> np.ndarray:
        return self.points[self.mask]

    @property
    def grid_index(self) -> np.ndarray:
        """(row, col) lattice index of every evaluation point."""
        return np.argwhere(self.mask)

    def scatter(self, values: np.ndarray) -> np.ndarray:
        """Place per-point values back on the grid; NaN outside the mask."""
        values = np.asarray(values)
        image = np.full((self.resolution, self.resolution) + values.shape[1:], np.nan, dtype=values.dtype)
        image[self.mask] = values
        return image

    def shape(self) -> Tuple[int, int]:
        return self.resolution, self.resolution
