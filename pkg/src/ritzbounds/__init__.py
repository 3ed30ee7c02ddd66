"""Block preconditioned eigensolvers and verification of their convergence bounds.

Modules
-------
matrixkit   symmetric operators, factorizations, subspaces, small eigenproblems
problems    test-problem generators and MatrixMarket / CSV I/O
precond     preconditioners and their quality parameters
eigsolve    Rayleigh-Ritz, block preconditioned gradient iteration, traces
analysis    auxiliary iteration, gamma-tilde measurement, bound curves, validation
oracle      reference eigenpairs (dense and Lanczos)
cli         configuration-driven experiment runner and SVG reports
"""

from .analysis import bound_curve, conv_factor, gamma_tilde, kappa, track_gamma, validate
from .eigsolve import RunConfig, bpg_step, rayleigh_ritz, run_iteration
from .errors import (ContractError, ConvergenceError, NotPositiveDefiniteError, NumericalError,
                     ParseError, RankDeficiencyError)
from .oracle import dense_reference, lanczos_extreme, pencil_reference
from .precond import assess_quality, make_preconditioner
from .problems import gen_diag_cluster, gen_laplacian_rect, gen_laplacian_slit

__version__ = "0.1.0"

__all__ = [
    "bound_curve", "conv_factor", "gamma_tilde", "kappa", "track_gamma", "validate",
    "RunConfig", "bpg_step", "rayleigh_ritz", "run_iteration",
    "ContractError", "ConvergenceError", "NotPositiveDefiniteError", "NumericalError",
    "ParseError", "RankDeficiencyError",
    "dense_reference", "lanczos_extreme", "pencil_reference",
    "assess_quality", "make_preconditioner",
    "gen_diag_cluster", "gen_laplacian_rect", "gen_laplacian_slit",
]
