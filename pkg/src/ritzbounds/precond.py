"""Preconditioners and their quality parameters.

A preconditioner here is an SPD map ``T`` that approximates ``A^{-1}``.  Its
quality is summarized by the extreme eigenvalues ``alpha <= beta`` of ``T A``;
the scaling ``omega = 2/(alpha+beta)`` makes ``||I - omega T A||_A`` equal to
``gamma = (beta-alpha)/(beta+alpha)``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError, NotPositiveDefiniteError
from .matrixkit import CholFactor, CSRSym, as_operator, banded_cholesky, cholesky, identity
from .oracle import lanczos_operator

__all__ = [
    "Preconditioner", "PrecondQuality", "make_exact_inverse", "make_ic_threshold",
    "make_perturbed_identity", "make_identity", "make_external", "assess_quality",
    "make_preconditioner",
]


@dataclass(frozen=True)
class Preconditioner:
    """Linear SPD action on column blocks.

    ``operator`` is set when the preconditioner is applied as a matrix
    product, ``factor`` when it is applied as ``(L L^T)^{-1}``.
    """

    kind: str
    n: int
    operator: object = field(default=None, repr=False)
    factor: CholFactor = field(default=None, repr=False)
    scale: float = 1.0
    params: dict = field(default_factory=dict)
    spd_hint: bool = True

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if self.factor is not None:
            Y = self.factor.solve(X)
        elif self.operator is not None:
            Y = self.operator.apply(X)
        else:
            Y = X.copy()
        return Y if self.scale == 1.0 else self.scale * Y

    __call__ = apply

    def scaled(self, c):
        """The preconditioner ``c * T``."""
        if not c > 0:
            raise ContractError("scale must be positive")
        return replace(self, scale=self.scale * float(c))


@dataclass(frozen=True)
class PrecondQuality:
    alpha: float
    beta: float
    omega: float
    gamma: float
    residuals: tuple = (0.0, 0.0)

    @classmethod
    def from_extremes(cls, alpha, beta, residuals=(0.0, 0.0)):
        if not 0.0 < alpha <= beta:
            raise ContractError(f"need 0 < alpha <= beta (got {alpha}, {beta})")
        return cls(float(alpha), float(beta), 2.0 / (alpha + beta),
                   (beta - alpha) / (beta + alpha), tuple(residuals))


def make_identity(n):
    return Preconditioner("identity", int(n))


def make_exact_inverse(A, scale=1.0):
    """``T = scale * A^{-1}`` through a Cholesky factorization."""
    A = as_operator(A)
    if A.is_identity:
        return Preconditioner("exact-inverse", A.n, scale=float(scale))
    return Preconditioner("exact-inverse", A.n, factor=cholesky(A), scale=float(scale))


def _column_norms(ab):
    """2-norms of the columns of the full symmetric matrix in lower band storage."""
    sq = ab**2
    out = sq.sum(axis=0)
    for k in range(1, ab.shape[0]):
        out[k:] += sq[k, : ab.shape[1] - k]
    return np.sqrt(out)


def make_ic_threshold(A, droptol):
    """Threshold incomplete Cholesky preconditioner ``(L L^T)^{-1}``.

    Entries of column j (taken before division by the pivot, so the rule
    does not depend on the scaling of A) smaller than
    ``droptol * ||A[:, j]||_2`` are dropped before they update the trailing
    matrix; diagonal entries are always kept.  On a pivot breakdown the
    factorization is retried once with the diagonal raised by
    ``1e-3 * max(diag A)``.
    """
    A = as_operator(A)
    if not droptol > 0:
        raise ContractError("droptol must be positive")
    ab = A.lower_banded()
    norms = _column_norms(ab)
    shift = 0.0
    try:
        L = banded_cholesky(ab, droptol, norms)
    except NotPositiveDefiniteError:
        shift = 1e-3 * float(ab[0].max())
        shifted = ab.copy()
        shifted[0] += shift
        L = banded_cholesky(shifted, droptol, norms)
    factor = CholFactor(np.arange(A.n), L, A)
    return Preconditioner("ic-threshold", A.n, factor=factor,
                          params={"droptol": float(droptol), "shift": shift,
                                  "nnz": factor.nnz})


def _smallest_eigenvalue_bound(N, seed):
    """Lower estimate of the smallest eigenvalue of N (Lanczos value minus residual)."""
    vals, _, _, res = lanczos_operator(N.apply, N.n, 1, which="smallest", tol=1e-8,
                                       seed=seed)
    return float(vals[0] - res[0])


def make_perturbed_identity(n, eta, density=None, seed=0):
    """``N = I + E + E^T`` with a sparse random nonnegative E.

    E has ``round(density * n^2)`` nonzeros (default density ``5/n``) at
    positions drawn uniformly without replacement, with values uniform on
    ``[0, eta)``.  Positive definiteness is checked by Gershgorin discs and,
    if those are inconclusive, by a Lanczos estimate of the smallest
    eigenvalue.
    """
    n = int(n)
    eta = float(eta)
    if n < 1 or eta < 0:
        raise ContractError("need n >= 1 and eta >= 0")
    density = 5.0 / n if density is None else float(density)
    if not 0.0 <= density <= 1.0:
        raise ContractError("density must lie in [0, 1]")
    params = {"eta": eta, "density": density, "seed": int(seed)}
    if eta == 0.0:
        return Preconditioner("perturbed-identity", n, operator=identity(n), params=params)
    rng = np.random.default_rng(seed)
    count = int(round(density * n * n))
    pos = rng.choice(n * n, size=count, replace=False)
    vals = rng.uniform(0.0, eta, size=count)
    r, c = pos // n, pos % n
    vals = np.where(r == c, 2.0 * vals, vals)  # E + E^T doubles diagonal hits
    diag = np.arange(n)
    N = CSRSym.from_coo(np.concatenate((r, diag)), np.concatenate((c, diag)),
                        np.concatenate((vals, np.ones(n))), n)
    margin = float((N.diagonal() - N.row_abs_offdiag()).min())
    params["spd_check"] = "gershgorin"
    if margin <= 0.0:
        lo = _smallest_eigenvalue_bound(N, seed)
        params["spd_check"] = "lanczos"
        if lo <= 0.0:
            raise ContractError(
                f"perturbed identity with eta = {eta} is not positive definite "
                f"(smallest eigenvalue estimate {lo:.3e}); use a smaller eta")
        params["min_eig"] = lo
    else:
        params["min_eig"] = margin
    N = CSRSym(N.indptr, N.indices, N.data, n, definiteness="positive-definite")
    return Preconditioner("perturbed-identity", n, operator=N, params=params)


def make_external(path, n=None):
    """Preconditioner ``N^{-1}`` for an SPD matrix N read from a MatrixMarket file."""
    from .problems import mm_read

    N = mm_read(path)
    if n is not None and N.n != n:
        raise ContractError(f"preconditioner dimension {N.n} does not match {n}")
    return Preconditioner("external-file", N.n, factor=cholesky(N),
                          params={"path": str(path)})


def make_preconditioner(kind, A, **params):
    """Dispatch on the preconditioner kind used in configuration files."""
    A = as_operator(A)
    if kind == "exact-inverse":
        return make_exact_inverse(A, params.get("scale", 1.0))
    if kind == "ic-threshold":
        return make_ic_threshold(A, params["droptol"])
    if kind == "perturbed-identity":
        return make_perturbed_identity(A.n, params.get("eta", 0.0),
                                       params.get("density"), params.get("seed", 0))
    if kind == "identity":
        return make_identity(A.n)
    if kind == "external-file":
        return make_external(params["path"], A.n)
    raise ContractError(f"unknown preconditioner kind {kind!r}")


def assess_quality(T, A, tol=1e-8, seed=0):
    """Extreme eigenvalues of ``T A`` by Lanczos in the A-inner product."""
    A = as_operator(A)
    if T.n != A.n:
        raise ContractError("preconditioner and matrix differ in dimension")
    inner = None if A.is_identity else A

    def op(x):
        return T.apply(A.apply(x))

    hi, _, _, rhi = lanczos_operator(op, A.n, 1, inner=inner, which="largest",
                                     tol=tol, seed=seed)
    lo, _, _, rlo = lanczos_operator(op, A.n, 1, inner=inner, which="smallest",
                                     tol=tol, seed=seed + 1)
    alpha, beta = float(lo[0]), float(hi[0])
    if np.isclose(alpha, beta, rtol=1e-13, atol=0.0):
        alpha = beta = 0.5 * (alpha + beta)
    return PrecondQuality.from_extremes(alpha, beta, (float(rlo[0]), float(rhi[0])))
