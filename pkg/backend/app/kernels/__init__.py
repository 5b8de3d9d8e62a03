from app.kernels.greens import (
    BallSpec,
    KernelParams,
    centered_absorption,
    fundamental_solution,
    grad_green_ball,
    grad_poisson_kernel_ball,
    green_ball,
    green_centered,
    poisson_dampening,
    poisson_kernel_ball,
)
from app.kernels.sampling import (
    WeightedSample,
    sample_source_centered,
    sample_source_offcenter,
    sample_sphere_uniform,
    uniform_directions,
)

__all__ = [
    "BallSpec",
    "KernelParams",
    "WeightedSample",
    "centered_absorption",
    "fundamental_solution",
    "grad_green_ball",
    "grad_poisson_kernel_ball",
    "green_ball",
    "green_centered",
    "poisson_dampening",
    "poisson_kernel_ball",
    "sample_source_centered",
    "sample_source_offcenter",
    "sample_sphere_uniform",
    "uniform_directions",
]
