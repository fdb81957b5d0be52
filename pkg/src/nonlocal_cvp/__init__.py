"""Symmetric nonlocal Levy operators on a bounded interval: complement value
problems, spectral decompositions, and the nonlocal-to-local limit."""

__version__ = "0.1.0"

from . import (assembly, constants, convergence, fields, kernels,
               levy_operator, quadrature, solvers, spectral)

__all__ = ["assembly", "constants", "convergence", "fields", "kernels",
           "levy_operator", "quadrature", "solvers", "spectral", "__version__"]
