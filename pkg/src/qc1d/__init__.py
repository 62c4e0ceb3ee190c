"""One-dimensional consistent energy-based quasicontinuum method for a periodic
chain with pair interactions up to second neighbours, a posteriori error
estimators and estimator-driven mesh refinement."""

__version__ = "0.1.0"

from .errors import (DomainError, MeshValidationError, QCError, SolverError,  # noqa: E402
                     StabilityLostError, ValidationError)
from .potential import Morse, MorseParams, morse  # noqa: E402
from .lattice import ChainConfig, Mesh, RegionDecomposition, build_mesh  # noqa: E402
from .atomistic import AtomisticState, solve_atomistic  # noqa: E402
from .qc import QcGeometry, QcState, solve_qc  # noqa: E402
from .estimator import estimate  # noqa: E402
from .refine import optimal_mesh, refine_adaptive  # noqa: E402
from .experiment import build_benchmark, run_sweep  # noqa: E402

__all__ = [
    "QCError", "ValidationError", "MeshValidationError", "DomainError", "SolverError",
    "StabilityLostError", "Morse", "MorseParams", "morse", "ChainConfig", "Mesh",
    "RegionDecomposition", "build_mesh", "AtomisticState", "solve_atomistic",
    "QcGeometry", "QcState", "solve_qc", "estimate", "optimal_mesh", "refine_adaptive",
    "build_benchmark", "run_sweep",
]
