"""Reference eigenpairs: dense reduction and Lanczos with full reorthogonalization.

All spectra are stored in the orientation the solver uses: eigenvalues of the
pencil ``(M, A)`` in descending order.  ``Spectrum.reciprocal`` gives the
ascending reciprocal view used when the pencil is ``(I, A)`` and one thinks in
terms of the smallest eigenvalues of A.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ContractError, ConvergenceError
from .matrixkit import (as_operator, cholesky, identity, make_subspace,
                        sym_eig_small)

__all__ = ["Spectrum", "dense_reference", "lanczos_extreme", "diagonal_spectrum",
           "pencil_reference", "pair_residuals", "lanczos_operator"]


@dataclass(frozen=True)
class Spectrum:
    """Leading eigenvalues of a pencil, optionally with eigenvectors.

    ``values`` holds the known leading eigenvalues (all of them for dense or
    diagonal references).  ``far_end`` is the opposite extreme eigenvalue
    (the smallest one in descending orientation) which the bounds need.
    """

    values: np.ndarray
    vectors: object = field(default=None, repr=False)
    residuals: np.ndarray = field(default=None, repr=False)
    far_end: float = None
    n: int = None
    orientation: str = "descending"

    def __post_init__(self):
        if self.far_end is None:
            object.__setattr__(self, "far_end", float(self.values[-1]))
        if self.n is None:
            object.__setattr__(self, "n", len(self.values))

    def __len__(self):
        return len(self.values)

    def mu(self, k):
        """k-th value (1-based); ``k == n`` returns the far end."""
        if k == self.n:
            return self.far_end
        if not 1 <= k <= len(self.values):
            raise ContractError(f"eigenvalue {k} is not available (have {len(self.values)})")
        return float(self.values[k - 1])

    def vector_block(self, first, last):
        """Subspace of eigenvectors first..last (1-based, inclusive)."""
        if self.vectors is None or last > self.vectors.k:
            raise ContractError(f"eigenvectors up to {last} are not available")
        return self.vectors.columns(slice(first - 1, last))

    def reciprocal(self):
        """Values ``1/mu`` in the opposite orientation (vectors unchanged)."""
        flip = "ascending" if self.orientation == "descending" else "descending"
        return Spectrum(1.0 / np.asarray(self.values), self.vectors, self.residuals,
                        1.0 / self.far_end, self.n, flip)


def pair_residuals(M, A, values, W):
    """``||M w - mu A w|| / ||A w||`` for each column of W."""
    MW, AW = M.apply(W), A.apply(W)
    R = MW - AW * values
    return np.linalg.norm(R, axis=0) / np.linalg.norm(AW, axis=0)


def dense_reference(M, A=None, vectors=True):
    """Full spectrum of a small pencil by Cholesky reduction and Jacobi."""
    M = as_operator(M)
    A = identity(M.n) if A is None else as_operator(A)
    if M.n > 2000:
        raise ContractError("dense_reference is limited to n <= 2000")
    Md = M.to_dense()
    G = None if A.is_identity else A.to_dense()
    mu, W = sym_eig_small(Md, G)
    sub = make_subspace(W, None if A.is_identity else A) if vectors else None
    res = pair_residuals(M, A, mu, W)
    return Spectrum(mu, sub, res, float(mu[-1]), M.n)


def diagonal_spectrum(d, k=None):
    """Exact spectrum of ``(diag(d), I)`` with unit eigenvectors for the top k."""
    d = np.asarray(d, dtype=float)
    order = np.argsort(-d, kind="stable")
    vals = d[order]
    vec = None
    if k:
        W = np.zeros((d.size, k))
        W[order[:k], np.arange(k)] = 1.0
        vec = make_subspace(W)
    return Spectrum(vals, vec, np.zeros(d.size), float(vals[-1]), d.size)


class _SignedOp:
    """``x -> sign * op(x)``; ``inner`` is the self-adjointness inner product."""

    def __init__(self, op, inner, n, sign):
        self._op, self._inner, self.n, self.sign = op, inner, n, sign

    def op(self, x):
        return self.sign * self._op(x)

    def inner(self, x):
        return x if self._inner is None else self._inner.apply(x)


def _lanczos_restart(P, locked, glocked, want, tol, budget, rng):
    """One Lanczos run on the complement of the locked vectors.

    Returns ``(theta, X, GX, res, steps)`` for the converged leading Ritz
    pairs (at most ``want``), ``res`` being explicit G-norm residuals.
    """
    n = P.n
    nfree = n - locked.shape[1]
    mmax = max(1, min(nfree, budget))

    def purge(w, gw, Q, GQ):
        for _ in range(2):
            if locked.shape[1]:
                c = glocked.T @ w
                w = w - locked @ c
            if Q.shape[1]:
                c = GQ.T @ w
                w = w - Q @ c
            gw = P.inner(w)
        return w, gw

    q = rng.standard_normal(n)
    empty = np.zeros((n, 0))
    q, gq = purge(q, P.inner(q), empty, empty)
    nrm = np.sqrt(max(q @ gq, 0.0))
    if nrm == 0.0:
        return np.zeros(0), empty, empty, np.zeros(0), 0
    Q = np.zeros((n, mmax))
    GQ = np.zeros((n, mmax))
    Q[:, 0], GQ[:, 0] = q / nrm, gq / nrm
    alpha, beta = [], []
    m = 0
    done = False
    while not done:
        w = P.op(Q[:, m])
        alpha.append(float(GQ[:, m] @ w))
        w, gw = purge(w, None, Q[:, : m + 1], GQ[:, : m + 1])
        b = np.sqrt(max(w @ gw, 0.0))
        m += 1
        scale = max(abs(a) for a in alpha) + (max(beta) if beta else 0.0)
        if m == mmax or b <= 1e-14 * scale:
            done = True
        elif m % 10 == 0 or m >= nfree:
            theta, S = eigh_tridiagonal(np.array(alpha), np.array(beta),
                                        select="i", select_range=(max(0, m - want), m - 1))
            est = b * np.abs(S[-1, :])
            done = bool(np.all(est <= 0.1 * tol * np.maximum(np.abs(theta), 1e-300)))
        if not done:
            beta.append(b)
            Q[:, m], GQ[:, m] = w / b, gw / b
    a = np.array(alpha)
    theta, S = eigh_tridiagonal(a, np.array(beta[: m - 1]))
    theta, S = theta[::-1], S[:, ::-1]
    take = min(want, m)
    theta, S = theta[:take], S[:, :take]
    X = Q[:, :m] @ S
    GX = GQ[:, :m] @ S
    R = np.column_stack([P.op(X[:, c]) for c in range(take)]) - X * theta
    GR = np.column_stack([P.inner(R[:, c]) for c in range(take)])
    res = np.sqrt(np.maximum(np.einsum("ij,ij->j", R, GR), 0.0))
    return theta, X, GX, res, m


def lanczos_operator(op, n, k, *, inner=None, which="largest", tol=1e-12,
                     maxiter=None, seed=0):
    """k extreme eigenpairs of a linear map self-adjoint in the ``inner`` product.

    ``op`` maps a vector to a vector; ``inner`` is a SymOperator G (None for
    the identity) with ``<op x, y>_G = <x, op y>_G``.  Full reorthogonalization
    in the G-inner product.  Converged pairs are locked and Lanczos restarts
    from a fresh random vector G-orthogonal to them, which recovers every copy
    of a multiple eigenvalue.  Restarts stop once a run finds nothing that
    enters the leading k.  A pair is converged when its G-norm residual is at
    most ``tol * |theta|``.

    Returns ``(values, X, GX, residuals)`` ordered from the requested end.
    """
    if not 1 <= k <= n:
        raise ContractError("need 1 <= k <= n")
    if which not in ("largest", "smallest"):
        raise ContractError("which must be 'largest' or 'smallest'")
    sign = 1.0 if which == "largest" else -1.0
    P = _SignedOp(op, inner, n, sign)
    maxiter = 5 * n if maxiter is None else int(maxiter)
    rng = np.random.default_rng(seed)
    locked = np.zeros((n, 0))
    glocked = np.zeros((n, 0))
    vals = np.zeros(0)
    res_l = np.zeros(0)
    used = 0
    worst = np.inf
    span = max(4 * k + 40, 120)
    while used < maxiter and locked.shape[1] < n:
        budget = min(maxiter - used, span)
        theta, X, GX, res, steps = _lanczos_restart(P, locked, glocked, k, tol, budget, rng)
        used += steps
        if steps == 0:
            break
        ok = res <= tol * np.maximum(np.abs(theta), 1e-300)
        nconv = int(np.argmin(ok)) if not ok.all() else ok.size
        if nconv == 0:
            worst = float(res[0] / max(abs(theta[0]), 1e-300))
            span *= 2  # a fresh start must get further than the failed one
            continue
        theta, X, GX, res = theta[:nconv], X[:, :nconv], GX[:, :nconv], res[:nconv]
        entering = len(vals) < k or theta[0] > vals[k - 1] + 1e-12 * abs(vals[k - 1])
        locked = np.hstack((locked, X))
        glocked = np.hstack((glocked, GX))
        vals = np.concatenate((vals, theta))
        res_l = np.concatenate((res_l, res))
        order = np.argsort(-vals, kind="stable")
        locked, glocked, vals, res_l = locked[:, order], glocked[:, order], vals[order], res_l[order]
        if not entering and len(vals) >= k:
            break
    if len(vals) < k:
        raise ConvergenceError(
            f"Lanczos found {len(vals)} of {k} pairs within {maxiter} iterations "
            f"(relative residual {worst:.2e})", worst)
    return sign * vals[:k], locked[:, :k], glocked[:, :k], res_l[:k]


def lanczos_extreme(M, k, A=None, *, which="largest", solve=None, tol=1e-12,
                    maxiter=None, seed=0, vectors=True):
    """k extreme eigenpairs of the pencil ``(M, A)`` by restarted Lanczos.

    Works on ``A^{-1} M`` in the A-inner product (plain ``M`` when A is the
    identity); ``solve`` applies ``A^{-1}`` and defaults to a banded Cholesky
    factorization.  See ``lanczos_operator`` for the restart strategy.
    """
    M = as_operator(M)
    A = identity(M.n) if A is None else as_operator(A)
    n = M.n
    if A.is_identity:
        op, inner = M.apply, None
    else:
        if solve is None:
            solve = cholesky(A).solve
        op, inner = (lambda x: solve(M.apply(x))), A
    vals, X, GX, res = lanczos_operator(op, n, k, inner=inner, which=which, tol=tol,
                                        maxiter=maxiter, seed=seed)
    sub = make_subspace(X, inner, gbasis=GX) if vectors else None
    far = None if k < n else float(vals[-1])
    orient = "ascending" if which == "smallest" else "descending"
    return Spectrum(vals, sub, res, far, n, orient)


def pencil_reference(M, A=None, k=8, *, tol=1e-12, far_tol=1e-4, seed=0):
    """Leading k eigenpairs of ``(M, A)`` plus a safe estimate of the far end.

    The far end (smallest eigenvalue) only enters the bounds through
    differences with much larger values, so a cheap estimate is used:
    for ``M = I`` it is ``1/lambda_max(A)`` with ``lambda_max`` raised by the
    Lanczos residual, which keeps the estimate from exceeding the true value
    (a lower far end only loosens the bounds).
    """
    M = as_operator(M)
    A = identity(M.n) if A is None else as_operator(A)
    if M.storage == "diagonal" and A.is_identity:
        full = diagonal_spectrum(M.diagonal(), k)
        return full
    top = lanczos_extreme(M, k, A, tol=tol, seed=seed)
    if M.is_identity and not A.is_identity:
        hi = lanczos_extreme(A, 1, tol=far_tol, seed=seed + 1, vectors=False)
        far = 1.0 / (hi.values[0] + hi.residuals[0])
    else:
        lo = lanczos_extreme(M, 1, A, which="smallest", tol=far_tol, seed=seed + 1,
                             vectors=False)
        far = lo.values[0] - lo.residuals[0]
    return Spectrum(top.values, top.vectors, top.residuals, float(far), M.n)
