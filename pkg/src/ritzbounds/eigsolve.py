"""Rayleigh-Ritz extraction and block preconditioned iterations with traces.

Problems are pencils ``(M, A)`` with A SPD; the solver targets the s largest
eigenvalues.  A second orientation (smallest eigenvalues of a standard
problem) is available for the plain preconditioned subspace iteration.
"""

from dataclasses import dataclass, field
import csv

import numpy as np

from .errors import ContractError, NumericalError, RankDeficiencyError
from .matrixkit import (Subspace, as_operator, cholesky, identity, make_subspace,
                        orthonormalize, sym_eig_small)

__all__ = [
    "RitzSet", "rayleigh_ritz", "bpg_step", "pinvit_block_step", "RunConfig",
    "IterTrace", "run_iteration", "initial_block", "residual_norms",
]


@dataclass(frozen=True)
class RitzSet:
    """Ritz values with A-orthonormal Ritz vectors and cached products.

    ``vectors.gbasis`` holds ``A V`` and ``mv`` holds ``M V`` so residuals and
    projected matrices need no extra operator applications.
    """

    values: np.ndarray
    vectors: Subspace
    mv: np.ndarray = field(repr=False)
    orientation: str = "descending"

    @property
    def s(self):
        return self.values.size

    @property
    def basis(self):
        return self.vectors.basis

    @property
    def av(self):
        return self.vectors.gbasis

    @property
    def residual(self):
        """Block residual ``M V - A V Theta``."""
        return self.mv - self.av * self.values


def residual_norms(ritz, solve=None):
    """Column norms of the block residual: A^{-1}-norms with ``solve``, else 2-norms."""
    R = ritz.residual
    if solve is None:
        return np.linalg.norm(R, axis=0)
    return np.sqrt(np.maximum(np.einsum("ij,ij->j", R, solve(R)), 0.0))


def _inner(A):
    return None if A.is_identity else A


def _extract(basis, mb, M, s, which):
    """Rayleigh-Ritz on an orthonormal basis with ``mb = M @ basis``."""
    if basis.k < s:
        raise RankDeficiencyError(basis.k, s)
    P = basis.basis.T @ mb
    theta, C = sym_eig_small(0.5 * (P + P.T))
    if which == "largest":
        C, theta = C[:, :s], theta[:s]
    else:
        C, theta = C[:, ::-1][:, :s], theta[::-1][:s]
    vec = Subspace(basis.basis @ C, basis.gbasis @ C, basis.inner)
    return RitzSet(theta.copy(), vec, mb @ C,
                   "descending" if which == "largest" else "ascending")


def rayleigh_ritz(trial, M, A, s, which="largest"):
    """The s extreme Ritz pairs of ``(M, A)`` from the span of ``trial``.

    The trial block is A-orthonormalized with rank truncation first.
    """
    M, A = as_operator(M), as_operator(A)
    if which not in ("largest", "smallest"):
        raise ContractError("which must be 'largest' or 'smallest'")
    basis = orthonormalize(trial, _inner(A), truncate=True)
    if basis.k < s:
        raise RankDeficiencyError(basis.k, s)
    return _extract(basis, M.apply(basis.basis), M, s, which)


def _active_residuals(ritz):
    """Residual columns that are not zero up to rounding."""
    R = ritz.residual
    scale = (np.linalg.norm(ritz.mv, axis=0)
             + np.abs(ritz.values) * np.linalg.norm(ritz.av, axis=0))
    keep = np.linalg.norm(R, axis=0) > 1e-12 * scale
    return R[:, keep]


def bpg_step(current, M, A, T):
    """One block preconditioned gradient step.

    Rayleigh-Ritz of ``(M, A)`` on ``span{V, T R_V}`` keeping the s largest
    pairs.  Residual columns that vanish to rounding are skipped, so an
    invariant block stays fixed.
    """
    M, A = as_operator(M), as_operator(A)
    s = current.s
    R = _active_residuals(current)
    if R.shape[1] == 0:
        return current
    W = T.apply(R)
    new = orthonormalize(W, _inner(A), against=current.vectors, truncate=True)
    basis = Subspace(np.hstack((current.basis, new.basis)),
                     np.hstack((current.av, new.gbasis)), current.vectors.inner)
    mb = np.hstack((current.mv, M.apply(new.basis)))
    return _extract(basis, mb, M, s, "largest")


def pinvit_block_step(current, A, T):
    """Preconditioned subspace iteration for the smallest eigenvalues of A.

    Rayleigh-Ritz on ``span{X - T R}`` with ``R = A X - X Theta``.
    """
    A = as_operator(A)
    X = current.basis
    R = current.residual
    trial = X - T.apply(R)
    return rayleigh_ritz(trial, A, identity(A.n), current.s, which="smallest")


def initial_block(n, s, seed):
    """Seeded standard Gaussian n x s block."""
    return np.random.default_rng(seed).standard_normal((n, s))


@dataclass(frozen=True)
class RunConfig:
    s: int = 6
    max_steps: int = 200
    tol: float = 1e-10
    seed: int = 0
    method: str = "bpg"
    resnorm: str = "ainv"
    run_id: int = 0

    def __post_init__(self):
        if self.s < 1:
            raise ContractError("block size must be positive")
        if self.max_steps < 0:
            raise ContractError("max_steps must be non-negative")
        if self.method not in ("bpg", "pinvit"):
            raise ContractError(f"unknown method {self.method!r}")
        if self.resnorm not in ("ainv", "2"):
            raise ContractError("resnorm must be 'ainv' or '2'")

    def echo(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class IterTrace:
    """Per-step record of one run.

    ``values[l]`` and ``resnorms[l]`` are the Ritz values and residual norms
    after l steps.  ``phase_step`` is the first step with ``theta_s`` beyond
    ``mu_{s+1}`` (None if never, or if no reference was given) and ``entry``
    the Ritz set at that step.  Auxiliary-iteration samples are attached per
    tracked index i by the analysis module: ``gamma[i]``, ``dim_tilde[i]``,
    ``dim_hat[i]`` are arrays over steps (NaN / -1 where not computed).
    """

    run_id: int
    seed: int
    values: np.ndarray
    resnorms: np.ndarray
    phase_step: int = None
    entry: RitzSet = None
    complete: bool = True
    message: str = ""
    config: dict = field(default_factory=dict)
    reference: np.ndarray = None
    gamma: dict = field(default_factory=dict)
    dim_tilde: dict = field(default_factory=dict)
    dim_hat: dict = field(default_factory=dict)
    final: RitzSet = field(default=None, repr=False)

    @property
    def steps(self):
        return self.values.shape[0] - 1

    @property
    def s(self):
        return self.values.shape[1]

    def errors(self):
        """``mu_i - theta_i`` per step (requires the reference eigenvalues)."""
        if self.reference is None:
            raise ContractError("trace has no reference eigenvalues")
        return self.reference[None, : self.s] - self.values

    def attach(self, i, gamma, dim_tilde, dim_hat):
        self.gamma[i] = np.asarray(gamma, dtype=float)
        self.dim_tilde[i] = np.asarray(dim_tilde, dtype=int)
        self.dim_hat[i] = np.asarray(dim_hat, dtype=int)

    def rows(self):
        """Rows of the trace CSV (strings, empty where not computed)."""
        err = self.errors() if self.reference is not None else None
        out = []
        for step in range(self.steps + 1):
            phase = "" if self.phase_step is None else str(int(step >= self.phase_step))
            if self.reference is not None and self.phase_step is None:
                phase = "0"
            for i in range(1, self.s + 1):
                g = self.gamma.get(i)
                gt = "" if g is None or not np.isfinite(g[step]) else f"{g[step]:.17g}"
                dt = "" if i not in self.dim_tilde or self.dim_tilde[i][step] < 0 \
                    else str(self.dim_tilde[i][step])
                dh = "" if i not in self.dim_hat or self.dim_hat[i][step] < 0 \
                    else str(self.dim_hat[i][step])
                out.append([
                    str(self.run_id), str(step), str(i), f"{self.values[step, i - 1]:.17g}",
                    "" if err is None else f"{err[step, i - 1]:.17g}",
                    f"{self.resnorms[step, i - 1]:.17g}", phase, gt, dt, dh,
                ])
        return out


TRACE_HEADER = ["run_id", "step", "i", "theta", "err", "resnorm", "phase",
                "gamma_tilde", "dim_tilde", "dim_hat"]


def write_traces(path, traces, comment=""):
    """Write one or more traces to a CSV file with a ``#`` comment header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comment.splitlines():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for tr in traces:
            w.writerows(tr.rows())


def read_traces(path, reference=None):
    """Read a trace CSV back into IterTrace objects (keyed by run_id order)."""
    from .errors import ParseError

    comments, table = [], {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body_start = 0
    while body_start < len(lines) and lines[body_start].startswith("#"):
        comments.append(lines[body_start][1:].strip())
        body_start += 1
    if body_start == len(lines) or lines[body_start].split(",") != TRACE_HEADER:
        raise ParseError("missing trace header", body_start + 1)
    for lineno, row in enumerate(csv.reader(lines[body_start + 1 :]), start=body_start + 2):
        if not row:
            continue
        if len(row) != len(TRACE_HEADER):
            raise ParseError("wrong number of fields", lineno)
        try:
            rid, step, i = int(row[0]), int(row[1]), int(row[2])
            rec = (float(row[3]), float(row[4]) if row[4] else np.nan, float(row[5]),
                   int(row[6]) if row[6] else -1, float(row[7]) if row[7] else np.nan,
                   int(row[8]) if row[8] else -1, int(row[9]) if row[9] else -1)
        except ValueError:
            raise ParseError("malformed field", lineno) from None
        table.setdefault(rid, {})[(step, i)] = rec
    traces = []
    for rid in sorted(table):
        recs = table[rid]
        steps = max(k[0] for k in recs) + 1
        s = max(k[1] for k in recs)
        arr = np.full((steps, s, 7), np.nan)
        for (step, i), rec in recs.items():
            arr[step, i - 1] = rec
        phase_col = arr[:, 0, 3]
        on = np.flatnonzero(phase_col == 1)
        ref = reference
        if ref is None and np.all(np.isfinite(arr[:, :, 1])):
            ref = arr[0, :, 0] + arr[0, :, 1]
        tr = IterTrace(rid, rid, arr[:, :, 0], arr[:, :, 2],
                       phase_step=int(on[0]) if on.size else None, reference=ref)
        for i in range(1, s + 1):
            if np.any(np.isfinite(arr[:, i - 1, 4])) or np.any(arr[:, i - 1, 5] >= 0):
                tr.attach(i, arr[:, i - 1, 4], np.nan_to_num(arr[:, i - 1, 5], nan=-1),
                          np.nan_to_num(arr[:, i - 1, 6], nan=-1))
        traces.append(tr)
    return traces, comments


def run_iteration(M, A, T, config, reference=None, solve=None):
    """Run BPG (or the standard-problem variant) from a seeded random block.

    With ``method="pinvit"`` the pencil must be ``(I, A)`` and the run targets
    the smallest eigenvalues of A, the reciprocals of the largest ones of the
    pencil.  ``reference`` holds at least ``s + 1`` leading eigenvalues in the
    solver's orientation; with it the trace records errors and the phase entry step.
    The run stops after ``max_steps`` steps or when every residual norm is at
    most ``tol * |theta_i|``.  Numerical failures end the run early and the
    partial trace is returned flagged incomplete.
    """
    M, A = as_operator(M), as_operator(A)
    s = config.s
    if s >= M.n:
        raise ContractError("block size must be smaller than the dimension")
    if config.method == "pinvit" and not M.is_identity:
        raise ContractError("pinvit runs the standard problem, so M must be the identity")
    if config.resnorm == "ainv" and solve is None and not A.is_identity:
        solve = cholesky(A).solve
    if config.method == "bpg":
        which = "largest"
        step = lambda r: bpg_step(r, M, A, T)  # noqa: E731
    else:
        which = "smallest"
        step = lambda r: pinvit_block_step(r, A, T)  # noqa: E731
    ref = None if reference is None else np.asarray(reference, dtype=float)
    if ref is not None and ref.size < s + 1:
        raise ContractError("reference needs at least s + 1 eigenvalues")

    def entered(r):
        if ref is None:
            return False
        return r.values[-1] > ref[s] if which == "largest" else r.values[-1] < ref[s]

    X0 = initial_block(M.n, s, config.seed)
    if config.method == "bpg":
        ritz = rayleigh_ritz(X0, M, A, s)
    else:
        ritz = rayleigh_ritz(X0, A, identity(A.n), s, which="smallest")
    norm_solve = solve if config.resnorm == "ainv" else None
    values = [ritz.values.copy()]
    norms = [residual_norms(ritz, norm_solve)]
    phase_step, entry = (0, ritz) if entered(ritz) else (None, None)
    complete, message = True, ""
    for ell in range(1, config.max_steps + 1):
        if np.all(norms[-1] <= config.tol * np.abs(values[-1])):
            break
        try:
            ritz = step(ritz)
        except NumericalError as exc:
            complete, message = False, f"step {ell}: {exc}"
            break
        values.append(ritz.values.copy())
        norms.append(residual_norms(ritz, norm_solve))
        if phase_step is None and entered(ritz):
            phase_step, entry = ell, ritz
    return IterTrace(config.run_id, config.seed, np.array(values), np.array(norms),
                     phase_step, entry, complete, message, config.echo(),
                     None if ref is None else ref[:s].copy(), final=ritz)
