"""Finite-difference laboratory for the regularized normalized p-Laplace
evolution u_t = a_ij(grad u) u_ij."""

__version__ = "0.1.0"

from .coeffs import PLaplaceParams, ellipticity_bounds  # noqa: E402
from .errors import ConfigError, NumericalError, PlapError  # noqa: E402
from .grid import ParabolicCylinder, make_grid  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .solver import SolveConfig, solve  # noqa: E402

__all__ = ["__version__", "BACKEND", "ConfigError", "NumericalError", "PlapError",
           "PLaplaceParams", "ParabolicCylinder", "SolveConfig", "ellipticity_bounds",
           "make_grid", "solve"]
