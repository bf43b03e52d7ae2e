"""Finite-truncation KAM and partial Birkhoff normal forms for lattice NLS.

The package builds the constructive side of the classical stability story for
the nonlinear Schroedinger equation on a d-dimensional torus, truncated to a
finite Fourier box: block decompositions of the lattice, a sparse Poisson
algebra over mixed action-angle / complex normal-mode coordinates, tame
vector-field and exponentially weighted matrix norms, Melnikov condition
checkers, the homological solvers, the quadratic KAM iteration, a partial
normal form around the constructed torus, and a numerical stability harness.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegreeOverflow,
    LieSeriesDiverged,
    ParameterExcluded,
    SmallDivisor,
    SolveFailure,
)
from .lattice import BlockDecomposition, LatticeConfig, build_blocks, is_normal_form

__all__ = [
    "__version__",
    "ConfigError",
    "DegreeOverflow",
    "LieSeriesDiverged",
    "ParameterExcluded",
    "SmallDivisor",
    "SolveFailure",
    "LatticeConfig",
    "BlockDecomposition",
    "build_blocks",
    "is_normal_form",
]
