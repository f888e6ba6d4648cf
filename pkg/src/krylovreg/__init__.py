"""Regularizing Krylov subspace methods for linear discrete ill-posed problems.

GMRES, LSQR and the Arnoldi-Tikhonov / Arnoldi-TSVD hybrids, circulant and
Arnoldi-based right preconditioners, matrix nearness measures and the
classical test problems.
"""

from .arnoldi import ArnoldiDecomposition, ArnoldiIteration, arnoldi_process, krylov_membership
from .krylov_solvers import DiscrepancyRule, SolveHistory, gmres, lsqr
from .nearness import NearnessReport, nearness_report
from .operator import CirculantOperator, DenseOperator, LinearOperator
from .preconditioners import Preconditioner, build_preconditioner, select_kp
from .problems import NoisyProblem, Rng, build_problem
from .regularization import arnoldi_tikhonov, arnoldi_tsvd, hybrid_solve

__version__ = "0.1.0"

__all__ = [
    "ArnoldiDecomposition",
    "ArnoldiIteration",
    "arnoldi_process",
    "krylov_membership",
    "DiscrepancyRule",
    "SolveHistory",
    "gmres",
    "lsqr",
    "NearnessReport",
    "nearness_report",
    "CirculantOperator",
    "DenseOperator",
    "LinearOperator",
    "Preconditioner",
    "build_preconditioner",
    "select_kp",
    "NoisyProblem",
    "Rng",
    "build_problem",
    "arnoldi_tikhonov",
    "arnoldi_tsvd",
    "hybrid_solve",
]
