"""Executable functional integration: projected integrator families and their checks."""

__version__ = "0.1.0"

from .core import IntegralResult, Path, Projection, TimeGrid, coarsen, project  # noqa: E402
from .errors import FintError, NumericalError, ValidationError  # noqa: E402
from .gaussian import GaussianSpec, char_pair, normalization, propagator  # noqa: E402
from .symplectic import SkewFormSpec, pfaffian, symplectic_char_pair  # noqa: E402

__all__ = [
    "__version__",
    "TimeGrid",
    "Path",
    "Projection",
    "IntegralResult",
    "project",
    "coarsen",
    "FintError",
    "ValidationError",
    "NumericalError",
    "GaussianSpec",
    "char_pair",
    "normalization",
    "propagator",
    "SkewFormSpec",
    "pfaffian",
    "symplectic_char_pair",
]
