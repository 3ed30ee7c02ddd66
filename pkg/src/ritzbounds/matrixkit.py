"""Symmetric operators, banded Cholesky, block orthonormalization and small
dense eigen/singular value kernels.

All quantities are real float64.  Operators are immutable after construction.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, solve_triangular

from .errors import (ContractError, ConvergenceError, NotPositiveDefiniteError,
                     RankDeficiencyError)

EPS = np.finfo(float).eps


def _as_block(X, n):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n:
        raise ContractError(f"block of shape {X.shape} does not conform to dimension {n}")
    if X.shape[1] < 1:
        raise ContractError("block must have at least one column")
    return X


class SymOperator:
    """Real symmetric n x n matrix in one of four storage schemes."""

    storage = None

    def __init__(self, n, definiteness="unknown"):
        self.n = int(n)
        self.definiteness = definiteness

    @property
    def shape(self):
        return (self.n, self.n)

    def apply(self, X):
        """Return ``self @ X`` for a vector or an n x k block."""
        X = np.asarray(X, dtype=float)
        vec = X.ndim == 1
        Y = self._apply(_as_block(X, self.n))
        return Y[:, 0] if vec else Y

    def __matmul__(self, X):
        return self.apply(X)

    def _apply(self, X):
        raise NotImplementedError

    def to_dense(self):
        return self._apply(np.eye(self.n))

    def diagonal(self):
        raise NotImplementedError

    def max_abs(self):
        raise NotImplementedError

    def lower_banded(self):
        """Lower band storage ``ab[k, j] = A[j + k, j]`` of the stored matrix."""
        raise NotImplementedError

    @property
    def is_identity(self):
        return False

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class DenseSym(SymOperator):
    """Dense symmetric matrix; only the lower triangle is kept."""

    storage = "dense"

    def __init__(self, a, lower=False, definiteness="unknown"):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractError("dense symmetric matrix must be square")
        if not lower:
            scale = max(np.abs(a).max(initial=0.0), 1.0)
            if np.abs(a - a.T).max(initial=0.0) > 1e-13 * scale:
                raise ContractError("matrix is not symmetric")
        super().__init__(a.shape[0], definiteness)
        self.lower = np.tril(a)
        self.lower.setflags(write=False)
        full = self.lower + np.tril(self.lower, -1).T
        full.setflags(write=False)
        self._full = full

    def _apply(self, X):
        return self._full @ X

    def to_dense(self):
        return self._full.copy()

    def diagonal(self):
        return np.diag(self._full).copy()

    def max_abs(self):
        return np.abs(self.lower).max(initial=0.0)

    def lower_banded(self):
        nz = np.nonzero(self.lower)
        b = int((nz[0] - nz[1]).max(initial=0))
        ab = np.zeros((b + 1, self.n))
        for k in range(b + 1):
            ab[k, : self.n - k] = np.diagonal(self.lower, -k)
        return ab


class DiagonalSym(SymOperator):
    storage = "diagonal"

    def __init__(self, d, definiteness="unknown"):
        d = np.array(d, dtype=float).ravel()
        super().__init__(d.size, definiteness)
        d.setflags(write=False)
        self.d = d
        self._identity = bool(np.all(d == 1.0))

    def _apply(self, X):
        return self.d[:, None] * X

    def to_dense(self):
        return np.diag(self.d)

    def diagonal(self):
        return self.d.copy()

    def max_abs(self):
        return np.abs(self.d).max(initial=0.0)

    def lower_banded(self):
        return self.d[None, :].copy()

    @property
    def is_identity(self):
        return self._identity


class CSRSym(SymOperator):
    """Symmetric matrix with the upper triangle (diagonal included) in CSR form."""

    storage = "csr"

    def __init__(self, indptr, indices, data, n, definiteness="unknown"):
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=float)
        super().__init__(n, definiteness)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ContractError("inconsistent CSR row pointer")
        if indices.size != data.size:
            raise ContractError("CSR index and data arrays differ in length")
        rows = np.repeat(np.arange(self.n), np.diff(indptr))
        if np.any(indices < rows) or np.any(indices >= self.n):
            raise ContractError("CSR must store the upper triangle only")
        same_row = rows[1:] == rows[:-1]
        if np.any(indices[1:][same_row] <= indices[:-1][same_row]):
            raise ContractError("CSR column indices must be strictly increasing per row")
        for arr in (indptr, indices, data, rows):
            arr.setflags(write=False)
        self.indptr, self.indices, self.data, self._rows = indptr, indices, data, rows
        self._ondiag = rows == indices

    @classmethod
    def from_coo(cls, rows, cols, vals, n, definiteness="unknown"):
        """Build from triplets of the upper triangle; duplicates are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        key = lo * n + hi
        order = np.argsort(key, kind="stable")
        key, vals = key[order], vals[order]
        uniq, start = np.unique(key, return_index=True)
        summed = np.add.reduceat(vals, start) if vals.size else vals
        r, c = uniq // n, uniq % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return cls(np.cumsum(indptr), c, summed, n, definiteness)

    @classmethod
    def from_dense(cls, a, definiteness="unknown"):
        a = np.asarray(a, dtype=float)
        r, c = np.nonzero(np.triu(a))
        return cls.from_coo(r, c, a[r, c], a.shape[0], definiteness)

    @property
    def nnz(self):
        """Nonzeros of the full symmetric matrix."""
        return 2 * self.data.size - int(self._ondiag.sum())

    def _apply(self, X):
        n, k = X.shape
        Y = np.empty((n, k))
        offd = self.data * ~self._ondiag
        for c in range(k):
            x = X[:, c]
            y = np.bincount(self._rows, weights=self.data * x[self.indices], minlength=n)
            y += np.bincount(self.indices, weights=offd * x[self._rows], minlength=n)
            Y[:, c] = y
        return Y

    def diagonal(self):
        d = np.zeros(self.n)
        d[self._rows[self._ondiag]] = self.data[self._ondiag]
        return d

    def max_abs(self):
        return np.abs(self.data).max(initial=0.0)

    def row_abs_offdiag(self):
        """Row sums of |off-diagonal entries| (Gershgorin radii)."""
        w = np.abs(self.data) * ~self._ondiag
        return (np.bincount(self._rows, weights=w, minlength=self.n)
                + np.bincount(self.indices, weights=w, minlength=self.n))

    def lower_banded(self):
        b = int((self.indices - self._rows).max(initial=0))
        ab = np.zeros((b + 1, self.n))
        ab[self.indices - self._rows, self._rows] = self.data
        return ab


class BandedSym(SymOperator):
    """Symmetric band matrix in lower storage ``ab[k, j] = A[j + k, j]``."""

    storage = "banded"

    def __init__(self, ab, definiteness="unknown"):
        ab = np.array(ab, dtype=float)
        if ab.ndim != 2:
            raise ContractError("band storage must be two-dimensional")
        super().__init__(ab.shape[1], definiteness)
        for k in range(1, ab.shape[0]):
            ab[k, self.n - k:] = 0.0
        ab.setflags(write=False)
        self.ab = ab

    @property
    def bandwidth(self):
        return self.ab.shape[0] - 1

    def _apply(self, X):
        ab, n = self.ab, self.n
        Y = ab[0][:, None] * X
        for k in range(1, ab.shape[0]):
            band = ab[k, : n - k][:, None]
            Y[k:] += band * X[: n - k]
            Y[: n - k] += band * X[k:]
        return Y

    def to_dense(self):
        a = np.diag(self.ab[0])
        for k in range(1, self.ab.shape[0]):
            off = np.diag(self.ab[k, : self.n - k], -k)
            a += off + off.T
        return a

    def diagonal(self):
        return self.ab[0].copy()

    def max_abs(self):
        return np.abs(self.ab).max(initial=0.0)

    def lower_banded(self):
        return self.ab.copy()


def identity(n):
    return DiagonalSym(np.ones(n), definiteness="positive-definite")


def as_operator(a):
    """Wrap an ndarray (2-D dense or 1-D diagonal) as a SymOperator."""
    if isinstance(a, SymOperator):
        return a
    a = np.asarray(a, dtype=float)
    return DiagonalSym(a) if a.ndim == 1 else DenseSym(a)


def apply(op, X):
    """Symmetric product ``op @ X``; raises ContractError on shape mismatch."""
    return op.apply(X)


def combine(a, A, b, B):
    """Return the operator ``a*A + b*B`` in the narrowest common storage."""
    if A.n != B.n:
        raise ContractError("operators differ in dimension")
    kinds = {A.storage, B.storage}
    if kinds == {"diagonal"}:
        return DiagonalSym(a * A.d + b * B.d)
    if kinds <= {"diagonal", "banded"}:
        abA, abB = A.lower_banded(), B.lower_banded()
        w = max(abA.shape[0], abB.shape[0])
        ab = np.zeros((w, A.n))
        ab[: abA.shape[0]] += a * abA
        ab[: abB.shape[0]] += b * abB
        return BandedSym(ab)
    if "csr" in kinds and "dense" not in kinds:
        return CSRSym.from_dense(a * A.to_dense() + b * B.to_dense())
    return DenseSym(a * A.to_dense() + b * B.to_dense())


# ---------------------------------------------------------------------------
# Cholesky


@lru_cache(maxsize=32)
def _band_pairs(b):
    # (p, k) with 1 <= k <= p <= b: the rank-one update of column j touches
    # A[j+p, j+k], stored at ab[p-k, j+k].
    p, k = np.tril_indices(b)
    return p + 1, k + 1


def banded_cholesky(ab, droptol=0.0, col_norms=None):
    """Column-oriented Cholesky of a lower band matrix.

    With ``droptol > 0`` this becomes a threshold incomplete factorization:
    an entry of column ``j`` is discarded when its value before division by
    the pivot is below ``droptol * col_norms[j]`` (a rule invariant under
    scaling of the matrix); dropping happens before the column updates the
    trailing matrix.  Raises
    NotPositiveDefiniteError naming the failing pivot.
    """
    L = np.array(ab, dtype=float)
    b = L.shape[0] - 1
    n = L.shape[1]
    P, K = _band_pairs(b) if b else (None, None)
    for j in range(n):
        d = L[0, j]
        if not d > 0.0:
            raise NotPositiveDefiniteError(j, d)
        ljj = np.sqrt(d)
        L[0, j] = ljj
        m = min(b, n - 1 - j)
        if m == 0:
            continue
        col = L[1 : m + 1, j] / ljj
        if droptol > 0.0:
            col[np.abs(col) * ljj < droptol * col_norms[j]] = 0.0
        L[1 : m + 1, j] = col
        if not col.any():
            continue
        lcol = np.concatenate(([0.0], col))
        if m == b:
            Pm, Km = P, K
        else:
            sel = P <= m
            Pm, Km = P[sel], K[sel]
        L[Pm - Km, j + Km] -= lcol[Pm] * lcol[Km]
    return L


@dataclass(frozen=True)
class CholFactor:
    """``L L^T = P A P^T`` with L lower banded (``L[k, j] = L_{j+k, j}``)."""

    ordering: np.ndarray
    L: np.ndarray
    origin: SymOperator = field(repr=False)

    @property
    def n(self):
        return self.L.shape[1]

    def solve(self, B):
        B = np.asarray(B, dtype=float)
        vec = B.ndim == 1
        Bb = _as_block(B, self.n)
        X = np.empty_like(Bb)
        X[self.ordering] = cho_solve_banded((self.L, True), Bb[self.ordering],
                                            check_finite=False)
        return X[:, 0] if vec else X

    def lower_dense(self):
        n, L = self.n, self.L
        out = np.zeros((n, n))
        for k in range(L.shape[0]):
            out += np.diag(L[k, : n - k], -k)
        return out

    @property
    def nnz(self):
        return int(np.count_nonzero(self.L))


def cholesky(op):
    """Cholesky factorization of a positive definite SymOperator.

    The natural ordering is used; dense and CSR inputs are factored inside
    their band envelope, so this is only economical for narrow bands.
    """
    if op.storage == "diagonal":
        d = op.diagonal()
        bad = np.flatnonzero(~(d > 0.0))
        if bad.size:
            raise NotPositiveDefiniteError(int(bad[0]), d[bad[0]])
        L = np.sqrt(d)[None, :]
    else:
        L = banded_cholesky(op.lower_banded())
    return CholFactor(np.arange(op.n), L, op)


def dense_cholesky(G):
    """Lower Cholesky factor of a small dense SPD matrix."""
    G = np.asarray(G, dtype=float)
    k = G.shape[0]
    L = np.zeros_like(G)
    for j in range(k):
        d = G[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0.0:
            raise NotPositiveDefiniteError(j, d)
        L[j, j] = np.sqrt(d)
        L[j + 1 :, j] = (G[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


# ---------------------------------------------------------------------------
# Subspaces


@dataclass(frozen=True)
class Subspace:
    """Basis block orthonormal in the inner product of ``inner`` (None = identity).

    ``gbasis`` caches ``inner @ basis`` so G-inner products need no extra
    operator applications.
    """

    basis: np.ndarray
    gbasis: np.ndarray = field(repr=False)
    inner: SymOperator = field(default=None, repr=False)

    @property
    def n(self):
        return self.basis.shape[0]

    @property
    def k(self):
        return self.basis.shape[1]

    def gram_error(self):
        return np.linalg.norm(self.basis.T @ self.gbasis - np.eye(self.k))

    def coefficients(self, X):
        """G-inner products ``basis^T G X``."""
        return self.gbasis.T @ X

    def project(self, X):
        """G-orthogonal projection of X onto the span."""
        return self.basis @ self.coefficients(X)

    def rotate(self, Q):
        """Basis ``basis @ Q`` for an orthogonal (or column-orthonormal) Q."""
        return Subspace(self.basis @ Q, self.gbasis @ Q, self.inner)

    def columns(self, sel):
        return Subspace(self.basis[:, sel], self.gbasis[:, sel], self.inner)


def _gapply(G, X):
    return X.copy() if G is None or G.is_identity else G.apply(X)


def empty_subspace(n, inner=None):
    z = np.zeros((n, 0))
    return Subspace(z, z.copy(), inner)


def make_subspace(basis, inner=None, gbasis=None, check=True):
    basis = np.asarray(basis, dtype=float)
    if gbasis is None:
        gbasis = _gapply(inner, basis) if basis.shape[1] else basis.copy()
    sub = Subspace(basis, gbasis, inner)
    if check and __debug__ and sub.k:
        err = sub.gram_error()
        if err > 1e-10 * sub.k:
            raise ContractError(f"basis is not orthonormal (Gram error {err:.2e})")
    return sub


def _pivoted_cholesky(G, tol):
    """Pivoted Cholesky of a Gram matrix of unit columns.

    Returns (perm, R) with ``R^T R = G[perm][:, perm]`` restricted to the
    pivots above ``tol``; R is upper triangular of size rank x rank.
    """
    A = np.array(G, dtype=float)
    k = A.shape[0]
    perm = np.arange(k)
    R = np.zeros((k, k))
    rank = k
    for r in range(k):
        p = r + int(np.argmax(np.diag(A)[r:]))
        if A[p, p] <= tol:
            rank = r
            break
        if p != r:
            A[[r, p]] = A[[p, r]]
            A[:, [r, p]] = A[:, [p, r]]
            R[:, [r, p]] = R[:, [p, r]]
            perm[[r, p]] = perm[[p, r]]
        R[r, r] = np.sqrt(A[r, r])
        R[r, r + 1 :] = A[r, r + 1 :] / R[r, r]
        A[r + 1 :, r + 1 :] -= np.outer(R[r, r + 1 :], R[r, r + 1 :])
    return perm[:rank], R[:rank, :rank]


def _cholqr_pass(B, GB, shift=0.0):
    gram = B.T @ GB
    gram = 0.5 * (gram + gram.T)
    if shift:
        gram = gram + shift * np.eye(gram.shape[0])
    R = dense_cholesky(gram).T
    Bq = solve_triangular(R, B.T, trans="T", lower=False).T
    GBq = solve_triangular(R, GB.T, trans="T", lower=False).T
    return Bq, GBq


def orthonormalize(B, inner=None, *, against=None, truncate=False, gB=None,
                   rank_tol=None):
    """Orthonormal basis of span(B) in the inner product of ``inner``.

    Cholesky-QR with one reorthogonalization pass.  Columns are scaled to unit
    norm first; a pivoted Cholesky of their Gram matrix detects numerical rank
    (pivots below ``1e-13 * k``).  A Gram condition estimate above 1e7 switches
    the first pass to a shifted Cholesky.  With ``against`` (a Subspace in the
    same inner product) B is first projected out of that span, twice, and only
    the new directions are returned; their G-image is then recomputed.
    """
    B = np.array(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n, k = B.shape
    if k > n:
        raise ContractError("more columns than rows")
    GB = _gapply(inner, B) if gB is None else np.array(gB, dtype=float)
    pre = np.sqrt(np.maximum(np.einsum("ij,ij->j", B, GB), 0.0))
    if against is not None and against.k:
        for _ in range(2):
            C = against.coefficients(B)
            B -= against.basis @ C
            GB -= against.gbasis @ C
        if inner is not None:
            # the updated image loses accuracy when little of B survives
            GB = _gapply(inner, B)
    norms = np.sqrt(np.maximum(np.einsum("ij,ij->j", B, GB), 0.0))
    scale_ref = np.where(pre > 0, pre, 1.0)
    keep = (norms > 1e-13 * scale_ref) & (norms > 0)
    if against is not None:
        # directions that were (numerically) inside the span being projected out
        keep &= norms > 1e-12 * scale_ref
    idx = np.flatnonzero(keep)
    B, GB = B[:, idx] / norms[idx], GB[:, idx] / norms[idx]
    if rank_tol is None:
        rank_tol = 1e-13 * max(k, 1)
    if B.shape[1]:
        gram = B.T @ GB
        gram = 0.5 * (gram + gram.T)
        perm, R = _pivoted_cholesky(gram, rank_tol)
        B, GB = B[:, perm], GB[:, perm]
        piv = np.diag(R) ** 2 if R.size else np.ones(0)
    else:
        piv = np.ones(0)
    rank = B.shape[1]
    if rank < k and not truncate:
        raise RankDeficiencyError(rank, k)
    if rank == 0:
        return empty_subspace(n, inner)
    cond = piv.max() / piv.min()
    if cond > 1e7:
        shift = 11.0 * (n * rank + rank * (rank + 1)) * EPS * np.linalg.norm(B.T @ GB, 2)
        B, GB = _cholqr_pass(B, GB, shift=shift)
        B, GB = _cholqr_pass(B, GB)
    else:
        B, GB = _cholqr_pass(B, GB)
    B, GB = _cholqr_pass(B, GB)
    return make_subspace(B, inner, gbasis=GB)


# ---------------------------------------------------------------------------
# Small dense eigenproblems


@lru_cache(maxsize=64)
def _round_robin(k):
    """Disjoint index pairs for parallel-ordered cyclic Jacobi sweeps."""
    m = k + (k % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[t], players[m - 1 - t]) for t in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < k and b < k]
        if pairs:
            p, q = np.array(pairs).T
            rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(S, max_sweeps=60):
    S = np.array(S, dtype=float)
    k = S.shape[0]
    V = np.eye(k)
    if k == 1:
        return S.diagonal().copy(), V
    normS = np.linalg.norm(S)
    floor = 1e-3 * EPS * normS
    for _ in range(max_sweeps):
        rotated = False
        for p, q in _round_robin(k):
            apq = S[p, q]
            app, aqq = S[p, p], S[q, q]
            act = (np.abs(apq) > EPS * np.sqrt(np.abs(app * aqq))) & (np.abs(apq) > floor)
            if not act.any():
                continue
            rotated = True
            if k <= 64:
                # small blocks: one dense product per round beats fancy indexing
                tau = np.where(act, (aqq - app) / (2.0 * np.where(act, apq, 1.0)), 0.0)
                t = np.where(act, np.where(tau >= 0, 1.0, -1.0)
                             / (np.abs(tau) + np.sqrt(1.0 + tau * tau)), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                J = np.eye(k)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                S = J.T @ S @ J
                S[p[act], q[act]] = 0.0
                S[q[act], p[act]] = 0.0
                V = V @ J
                continue
            p, q, apq, app, aqq = p[act], q[act], apq[act], app[act], aqq[act]
            tau = (aqq - app) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Sp, Sq = S[:, p].copy(), S[:, q].copy()
            S[:, p], S[:, q] = c * Sp - s * Sq, s * Sp + c * Sq
            Sp, Sq = S[p, :].copy(), S[q, :].copy()
            S[p, :] = c[:, None] * Sp - s[:, None] * Sq
            S[q, :] = s[:, None] * Sp + c[:, None] * Sq
            S[p, q] = 0.0
            S[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
        if not rotated:
            return S.diagonal().copy(), V
    off = np.linalg.norm(S - np.diag(np.diag(S)))
    raise ConvergenceError(f"Jacobi iteration did not converge (off-diagonal norm {off:.3e})",
                           residual=off)


def sym_eig_small(S, G=None):
    """Eigenpairs of the pencil (S, G) for small dense symmetric S and SPD G.

    Cyclic Jacobi on the Cholesky-reduced standard problem.  Returns
    ``(theta, C)`` with theta descending and C G-orthonormal, ``S C = G C diag(theta)``.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError("S must be square")
    S = 0.5 * (S + S.T)
    if G is None:
        theta, C = _jacobi(S)
    else:
        G = np.asarray(G, dtype=float)
        if G.shape != S.shape:
            raise ContractError("S and G differ in shape")
        L = dense_cholesky(0.5 * (G + G.T))
        W = solve_triangular(L, S, lower=True)
        St = solve_triangular(L, W.T, lower=True)
        theta, Q = _jacobi(0.5 * (St + St.T))
        C = solve_triangular(L.T, Q, lower=False)
    order = np.argsort(-theta, kind="stable")
    return theta[order], C[:, order]


def svd_block(B, inner=None):
    """Singular values (descending) and right singular vectors of an n x k block.

    Uses the eigendecomposition of the k x k Gram matrix ``B^T G B``; singular
    values are then recomputed as the G-norms of ``B v`` which keeps small
    values accurate to roughly ``eps * sigma_1``.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[1] > B.shape[0]:
        raise ContractError("svd_block expects an n x k block with k <= n")
    if B.shape[1] == 0:
        return np.zeros(0), np.zeros((0, 0))
    GB = _gapply(inner, B)
    gram = B.T @ GB
    _, V = sym_eig_small(gram)
    BV, GBV = B @ V, GB @ V
    sig = np.sqrt(np.maximum(np.einsum("ij,ij->j", BV, GBV), 0.0))
    order = np.argsort(-sig, kind="stable")
    return sig[order], V[:, order]


def subspace_sines(X, Y):
    """Sines of the principal angles between span(X) and span(Y), descending.

    Both are Subspaces in the same inner product; returns ``Y.k`` values when
    ``Y.k <= X.k`` (largest sine first).
    """
    if X.k == 0 or Y.k == 0:
        return np.ones(Y.k)
    E = Y.basis - X.project(Y.basis)
    sig, _ = svd_block(E, X.inner)
    return np.minimum(sig, 1.0)


def subspace_distance(X, Y):
    """Largest principal angle (radians) between equal-dimension subspaces."""
    if X.k != Y.k:
        return np.pi / 2
    if X.k == 0:
        return 0.0
    return float(np.arcsin(max(subspace_sines(X, Y)[0], subspace_sines(Y, X)[0])))
