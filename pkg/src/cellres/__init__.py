"""Resonance error in numerical homogenization: solvers, sweeps, averaging."""

from .coefficients import (
    Coefficient1D,
    Coefficient2D,
    catalogue_1d,
    catalogue_2d,
)
from .kernels import (
    Kernel,
    build_exponential_kernel,
    build_polynomial_kernel,
    flat_kernel,
    parse_descriptor,
    verify_moments,
)
from .resonance1d import (
    expansion_diagnostic,
    rho_eps,
    smoothed_average,
    upsilon_r,
)
from .cell2d import (
    Grid2D,
    HomogenizedTensor,
    assemble,
    homogenized_estimate,
    reference_tensor,
    rho_estimate,
    solve_cell,
    solve_cell_problem,
    tubular_sweep,
)
from .sweep import (
    ErrorCurve,
    SweepConfig,
    average_reference,
    fit_envelope_rate,
    fit_rate,
    local_maxima,
    run_sweep,
    weighted_average,
)

__version__ = "0.1.0"

__all__ = [
    "Coefficient1D",
    "Coefficient2D",
    "catalogue_1d",
    "catalogue_2d",
    "Kernel",
    "build_exponential_kernel",
    "build_polynomial_kernel",
    "flat_kernel",
    "parse_descriptor",
    "verify_moments",
    "expansion_diagnostic",
    "rho_eps",
    "smoothed_average",
    "upsilon_r",
    "Grid2D",
    "HomogenizedTensor",
    "assemble",
    "homogenized_estimate",
    "reference_tensor",
    "rho_estimate",
    "solve_cell",
    "solve_cell_problem",
    "tubular_sweep",
    "ErrorCurve",
    "SweepConfig",
    "average_reference",
    "fit_envelope_rate",
    "fit_rate",
    "local_maxima",
    "run_sweep",
    "weighted_average",
    "__version__",
]
