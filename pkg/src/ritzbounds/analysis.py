"""Auxiliary subspace iteration, the alternative quality parameter, and bounds.

Bound kinds (all expressed through a distance ratio
``(mu_ref - theta) / (theta - mu_low)`` and a per-step factor):

``lm2e1``, ``lm2e2``
    exact-inverse multi-step bounds (quality parameter 0), ``j = s`` and
    general ``j``.
``thm2e1``, ``thm2e2``
    the same with a measured quality parameter ``q``.
``thm2e3``
    sharp single-step bound for the last Ritz value, ``kappa`` built from
    ``mu_j`` and ``mu_{j+1}``, with the classical quality parameter.
``neighbor``
    ``thm2e1`` with ``kappa`` built from the neighbouring eigenvalue
    ``mu_{i+1}`` instead of ``mu_{s+1}``; undefined for a multiple eigenvalue.
``bpsde``
    ``thm2e2`` restated for the smallest eigenvalues ``lambda = 1/mu`` of the
    reciprocal problem.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericalError
from .matrixkit import (Subspace, as_operator, empty_subspace, make_subspace,
                        orthonormalize, subspace_distance, sym_eig_small)
from .eigsolve import RitzSet

__all__ = [
    "InvariantSplit", "GammaSample", "BoundCurve", "ValidationReport", "intersect",
    "aux_step", "gamma_tilde", "run_auxiliary", "track_gamma", "kappa", "conv_factor",
    "bound_curve", "ratio_to_error", "validate", "observed_ratios",
    "check_single_step", "KINDS",
]

KINDS = ("lm2e1", "lm2e2", "thm2e1", "thm2e2", "thm2e3", "neighbor", "bpsde")
RANK_TOL = 1e-10
SPLIT_TOL = 1e-8


# ---------------------------------------------------------------------------
# auxiliary subspaces


@dataclass(frozen=True)
class InvariantSplit:
    """Eigenvector groups removed by the two auxiliary subspaces.

    For indices ``1 <= i <= s <= j`` the tilde subspace is the A-orthogonal
    complement of ``w_{j-s+i+1..j}`` (``s - i`` vectors) and the hat subspace
    the complement of ``w_{j-s+1..j-s+i}`` (``i`` vectors).
    """

    spectrum: object
    i: int
    j: int
    s: int

    def __post_init__(self):
        n = self.spectrum.n
        if not (1 <= self.i <= self.s <= self.j <= n - 1):
            raise ContractError(f"need 1 <= i <= s <= j <= n-1 (got i={self.i}, "
                                f"s={self.s}, j={self.j}, n={n})")

    @property
    def skipped_tilde(self):
        lo = self.j - self.s + self.i + 1
        if lo > self.j:
            return empty_subspace(self.spectrum.n, self.spectrum.vectors.inner)
        return self.spectrum.vector_block(lo, self.j)

    @property
    def skipped_hat(self):
        return self.spectrum.vector_block(self.j - self.s + 1, self.j - self.s + self.i)


def intersect(Y, skipped):
    """``span(Y)`` intersected with the G-orthogonal complement of ``skipped``.

    Both arguments are G-orthonormal Subspaces.  The coefficient vectors c
    with ``skipped^T G Y c = 0`` form the null space of a small matrix whose
    entries are cosines (at most 1 in modulus); singular values below
    ``1e-10`` count as zero.
    """
    if skipped.k == 0 or Y.k == 0:
        return Y
    C = skipped.gbasis.T @ Y.basis  # (m, k), cosines
    _, sig, Vh = np.linalg.svd(C, full_matrices=True)
    r = int(np.sum(sig > RANK_TOL))
    if r == 0:
        return Y
    if r >= Y.k:
        return empty_subspace(Y.n, Y.inner)
    null = Vh[r:].T
    return Subspace(Y.basis @ null, Y.gbasis @ null, Y.inner)


def _span(blocks, inner):
    """Orthonormal basis of the sum of G-orthonormal Subspaces.

    Each block is orthonormalized against the span of the previous ones, so
    nearly parallel directions are judged by their relative remaining norm
    rather than by squared Gram pivots.
    """
    acc = None
    for b in blocks:
        if b.k == 0:
            continue
        if acc is None:
            acc = b
            continue
        new = orthonormalize(b.basis, inner, against=acc, truncate=True, gB=b.gbasis)
        acc = Subspace(np.hstack((acc.basis, new.basis)),
                       np.hstack((acc.gbasis, new.gbasis)), inner)
    if acc is None:
        return empty_subspace(blocks[0].n, inner)
    return acc


def _rr(basis, M, count):
    """Leading ``count`` Ritz pairs of (M, A) from an A-orthonormal basis."""
    if count == 0 or basis.k == 0:
        return None
    if basis.k < count:
        raise NumericalError(f"trial space of dimension {basis.k} cannot hold {count} Ritz vectors")
    mb = M.apply(basis.basis)
    P = basis.basis.T @ mb
    theta, C = sym_eig_small(0.5 * (P + P.T))
    C = C[:, :count]
    return RitzSet(theta[:count].copy(),
                   Subspace(basis.basis @ C, basis.gbasis @ C, basis.inner), mb @ C)


@dataclass
class GammaSample:
    step: int
    dim_tilde: int
    dim_hat: int
    dim_u_tilde: int
    gamma_tilde: float
    valid: bool
    note: str = ""
    split_ok: bool = None
    resolution: float = np.inf


def gamma_tilde(Vt, Ut_space, M, A, solve=None):
    """Alternative quality parameter for one auxiliary step.

    ``Vt`` is an A-orthonormal basis of the tilde iterate, ``Ut_space`` the
    tilde part of the preconditioned trial block.  With ``H V = A^{-1} M V``,
    ``R = H V - V V^T M V`` and ``X = H V - U U^T M V`` (U chosen inside
    ``Ut_space`` as the A-orthonormalized A-projection of ``H V``), the value
    is the largest generalized singular value ``sqrt(lambda_max(X^T A X,
    R^T A R))``.  Returns NaN when R is rank-deficient or ``Ut_space`` has
    dimension below ``dim Vt``.
    """
    return _gamma_detail(Vt, Ut_space, M, A, solve)[0]


def _gamma_detail(Vt, Ut_space, M, A, solve):
    """``(value, valid, note, resolution)`` for one sample.

    ``resolution`` estimates the absolute rounding floor of the value,
    ``64 eps ||H V||_A / sigma_min(R)_A``: X vanishes in exact arithmetic for
    an exact inverse but is computed from quantities of size ``||H V||``.
    Exact-inverse runs on the 6000-dimensional diagonal test problem stay
    below a sixth of this value.
    """
    M, A = as_operator(M), as_operator(A)
    i = Vt.k
    if i == 0:
        return np.nan, False, "empty tilde subspace", np.inf
    MV = M.apply(Vt.basis)
    HV = MV if A.is_identity else solve(MV)
    R = HV - Vt.basis @ (Vt.basis.T @ MV)
    AR = MV - Vt.gbasis @ (Vt.basis.T @ MV)  # A R without another product
    GR = R.T @ AR
    GR = 0.5 * (GR + GR.T)
    ev = np.linalg.eigvalsh(GR)
    scale = float(np.linalg.eigvalsh(HV.T @ MV)[-1])  # ||H V||_A^2
    if ev[0] <= 0 or ev[0] <= (RANK_TOL**2) * scale:
        return np.nan, False, "residual block rank-deficient", np.inf
    resolution = 64.0 * np.finfo(float).eps * np.sqrt(scale / ev[0])
    if Ut_space.k < i:
        return np.nan, False, f"dim U~ = {Ut_space.k} < {i}", resolution
    coef = Ut_space.basis.T @ MV  # A-projection of H V onto Ut_space
    P = Ut_space.basis @ coef
    GP = Ut_space.gbasis @ coef
    try:
        U = orthonormalize(P, Ut_space.inner, gB=GP)
    except NumericalError:
        return np.nan, False, "projection of H V onto U~ is rank-deficient", resolution
    X = HV - U.basis @ (U.basis.T @ MV)
    AX = MV - U.gbasis @ (U.basis.T @ MV)
    GX = X.T @ AX
    GX = 0.5 * (GX + GX.T)
    theta, _ = sym_eig_small(GX, GR)
    value = float(np.sqrt(max(theta[0], 0.0)))
    return value, value < 1.0, "" if value < 1.0 else "gamma~ >= 1", resolution


def aux_step(state, M, A, T, split, solve=None, step=0):
    """One step of the auxiliary mixture iteration.

    ``state`` is a RitzSet (Ritz vectors of the current auxiliary iterate).
    Returns the next RitzSet, the GammaSample of this step, and the two partial
    results (tilde and hat Subspaces) for checking the next intersection.
    """
    M, A = as_operator(M), as_operator(A)
    s = split.s
    V = state.vectors
    inner = V.inner
    sk_t, sk_h = split.skipped_tilde, split.skipped_hat
    Vt = intersect(V, sk_t)
    Vh = intersect(V, sk_h)
    U = state.basis * state.values + T.apply(state.residual)
    Uspace = orthonormalize(U, inner, truncate=True)
    Ut = intersect(Uspace, sk_t)
    Uh = intersect(Uspace, sk_h)
    notes = []
    if Vt.k != split.i:
        notes.append(f"dim V~ = {Vt.k} != {split.i}")
    if Vh.k != s - split.i:
        notes.append(f"dim V^ = {Vh.k} != {s - split.i}")
    dims_ok = not notes
    g, ok, note, res = _gamma_detail(Vt, Ut, M, A, solve)
    if note:
        notes.append(note)
    sample = GammaSample(step, Vt.k, Vh.k, Ut.k, g, ok and dims_ok, "; ".join(notes),
                         resolution=res)
    half_t = _rr(_span([Vt, Ut], inner), M, Vt.k)
    half_h = _rr(_span([Vh, Uh], inner), M, Vh.k)
    parts = [p.vectors for p in (half_t, half_h) if p is not None]
    joint = _span(parts, inner)
    nxt = _rr(joint, M, joint.k)
    return nxt, sample, (half_t.vectors if half_t else empty_subspace(V.n, inner),
                         half_h.vectors if half_h else empty_subspace(V.n, inner))


def run_auxiliary(entry, M, A, T, split, steps, solve=None):
    """Run the auxiliary iteration from ``entry`` for ``steps`` steps.

    Returns the list of GammaSamples (one per step) and the tilde Ritz values
    (smallest Ritz value of the tilde iterate) per step.  After each step the
    intersections of the new iterate are compared with the partial results;
    ``split_ok`` records whether they agree within a principal angle of 1e-8.
    It stays None on invalid steps: once the residual block is numerically
    negligible the partial Ritz subspaces are no longer well determined.
    """
    M, A = as_operator(M), as_operator(A)
    state = entry
    samples = []
    prev_parts = None
    for ell in range(steps):
        if state is None or state.s < split.s:
            samples.append(GammaSample(ell, -1, -1, -1, np.nan, False, "iterate lost rank"))
            state = None
            continue
        try:
            nxt, sample, parts = aux_step(state, M, A, T, split, solve, ell)
        except NumericalError as exc:
            samples.append(GammaSample(ell, -1, -1, -1, np.nan, False, str(exc)))
            state = None
            continue
        if prev_parts is not None and sample.valid:
            Vt = intersect(state.vectors, split.skipped_tilde)
            Vh = intersect(state.vectors, split.skipped_hat)
            sample.split_ok = bool(subspace_distance(Vt, prev_parts[0]) <= SPLIT_TOL
                                   and subspace_distance(Vh, prev_parts[1]) <= SPLIT_TOL)
        samples.append(sample)
        prev_parts = parts
        state = nxt
    return samples


def track_gamma(trace, M, A, T, spectrum, i_list=None, j=None, solve=None):
    """Attach auxiliary-iteration samples to a trace, one run per tracked i.

    The auxiliary iteration starts from the Ritz set at phase entry and runs
    for the remaining steps of the trace.  Returns ``{i: [GammaSample]}``.
    """
    if trace.entry is None:
        return {}
    s = trace.s
    j = s if j is None else j
    i_list = range(1, s + 1) if i_list is None else i_list
    l0 = trace.phase_step
    steps = trace.steps - l0
    out = {}
    for i in i_list:
        split = InvariantSplit(spectrum, i, j, s)
        samples = run_auxiliary(trace.entry, M, A, T, split, steps, solve)
        g = np.full(trace.steps + 1, np.nan)
        dt = np.full(trace.steps + 1, -1)
        dh = np.full(trace.steps + 1, -1)
        for smp in samples:
            if smp.valid:
                g[l0 + smp.step] = smp.gamma_tilde
            dt[l0 + smp.step] = smp.dim_tilde
            dh[l0 + smp.step] = smp.dim_hat
        trace.attach(i, g, dt, dh)
        out[i] = samples
    return out


# ---------------------------------------------------------------------------
# bounds


def kappa(spectrum, i, j, s):
    """``(mu_{j+1} - mu_n) / (mu_{j-s+i} - mu_n)``."""
    top = spectrum.mu(j - s + i)
    den = top - spectrum.far_end
    if not den > 0:
        raise ContractError(f"degenerate kappa: mu_{j - s + i} equals the far end")
    return (spectrum.mu(j + 1) - spectrum.far_end) / den


def conv_factor(kappa_value, q):
    """``(kappa + q (2 - kappa)) / ((2 - kappa) + q kappa)``."""
    k = float(kappa_value)
    return (k + q * (2.0 - k)) / ((2.0 - k) + q * k)


def ratio_to_error(c, mu_ref, mu_lower):
    """Largest distance to ``mu_ref`` allowed by a distance-ratio bound c."""
    return c * abs(mu_ref - mu_lower) / (1.0 + c)


@dataclass
class BoundCurve:
    kind: str
    i: int
    j: int
    s: int
    kappa: float
    q: float
    ratio_bounds: np.ndarray
    error_bounds: np.ndarray
    mu_ref: float
    mu_low: float
    defined: bool = True
    note: str = ""
    factor: float = field(default=np.nan)

    def rows(self):
        out = []
        for step, (c, e) in enumerate(zip(self.ratio_bounds, self.error_bounds)):
            out.append([self.kind, str(self.i), str(self.j), str(self.s),
                        f"{self.kappa:.17g}", f"{self.q:.17g}", str(step),
                        f"{c:.17g}" if self.defined else "",
                        f"{e:.17g}" if self.defined else ""])
        return out


def _curve(kind, i, j, s, kap, q, init, L, ref, low, note=""):
    fac = conv_factor(kap, q)
    ratios = init * fac ** (2.0 * np.arange(L + 1))
    errs = ratio_to_error(ratios, ref, low)
    return BoundCurve(kind, i, j, s, kap, q, ratios, errs, ref, low, True, note, fac)


def bound_curve(kind, spectrum, i, j, s, q, theta_s0, L):
    """Evaluate a bound for steps ``0..L`` counted from the start value ``theta_s0``.

    ``theta_s0`` is the last Ritz value at the (reset) start; for ``bpsde`` it
    is given in the reciprocal orientation (``1/theta``).
    """
    if kind not in KINDS:
        raise ContractError(f"unknown bound kind {kind!r}")
    if not 0.0 <= q < 1.0:
        raise ContractError("quality parameter must lie in [0, 1)")
    if kind in ("lm2e1", "thm2e1", "neighbor"):
        j = s
    if kind.startswith("lm2"):
        q = 0.0
    mu = spectrum.mu
    if kind == "thm2e3":
        ref, low = mu(j), mu(j + 1)
        if not low < theta_s0 < ref:
            raise ContractError(f"theta_s0 = {theta_s0} is not in (mu_{j+1}, mu_{j}) "
                                f"= ({low}, {ref})")
        kap = (low - spectrum.far_end) / (ref - spectrum.far_end)
        init = (ref - theta_s0) / (theta_s0 - low)
        return _curve(kind, i, j, s, kap, q, init, L, ref, low)
    if kind == "bpsde":
        lam_ref, lam_hi = 1.0 / mu(j - s + i), 1.0 / mu(j + 1)
        lam_n = 1.0 / spectrum.far_end
        if not lam_ref <= theta_s0 < lam_hi:
            raise ContractError(f"theta_s0 = {theta_s0} is not in [lambda_{j - s + i}, "
                                f"lambda_{j + 1}) = [{lam_ref}, {lam_hi})")
        kap = lam_ref * (lam_n - lam_hi) / (lam_hi * (lam_n - lam_ref))
        init = (theta_s0 - lam_ref) / (lam_hi - theta_s0)
        return _curve(kind, i, j, s, kap, q, init, L, lam_ref, lam_hi)
    ref, low = mu(j - s + i), mu(j + 1)
    if not low < theta_s0 <= ref:
        raise ContractError(f"theta_s0 = {theta_s0} is not in (mu_{j + 1}, mu_{j - s + i}] "
                            f"= ({low}, {ref})")
    init = (ref - theta_s0) / (theta_s0 - low)
    if kind == "neighbor":
        nxt = mu(i + 1)
        if abs(mu(i) - nxt) <= 1e-8 * abs(mu(i)):
            nan = np.full(L + 1, np.nan)
            return BoundCurve(kind, i, j, s, 1.0, q, nan, nan, ref, low, False,
                              f"undefined: mu_{i} and mu_{i + 1} coincide")
        kap = (nxt - spectrum.far_end) / (mu(i) - spectrum.far_end)
        return _curve(kind, i, j, s, kap, q, init, L, ref, low)
    return _curve(kind, i, j, s, kappa(spectrum, i, j, s), q, init, L, ref, low)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    kind: str
    i: int
    applicable: bool
    start_step: int = None
    checked: int = 0
    violations: list = field(default_factory=list)
    note: str = ""

    @property
    def passed(self):
        return self.applicable and not self.violations


def observed_ratios(values, mu_ref, mu_low, ascending=False):
    """Distance ratios of a sequence of Ritz values."""
    v = np.asarray(values, dtype=float)
    if ascending:
        return (v - mu_ref) / (mu_low - v)
    return (mu_ref - v) / (v - mu_low)


def _start(trace, spectrum, j):
    """First step with ``theta_s > mu_{j+1}`` (the reset origin)."""
    above = np.flatnonzero(trace.values[:, -1] > spectrum.mu(j + 1))
    return int(above[0]) if above.size else None


def validate(trace, kind, spectrum, i, q=0.0, j=None, tol=1e-9):
    """Check one bound kind for index i along a trace.

    The step counter is reset at the first step where ``theta_s`` exceeds
    ``mu_{j+1}``.  Ratios are compared with an absolute tolerance ``tol``;
    once a Ritz value is within 1e-12 (relative) of its target the error is
    compared with the converted error bound instead.
    """
    s = trace.s
    j = s if (j is None or kind in ("lm2e1", "thm2e1", "neighbor")) else j
    l0 = _start(trace, spectrum, j)
    if l0 is None:
        return ValidationReport(kind, i, False, note="phase never entered")
    L = trace.steps - l0
    if kind == "bpsde":
        theta0 = 1.0 / trace.values[l0, -1]
        curve = bound_curve(kind, spectrum, i, j, s, q, theta0, L)
        vals = 1.0 / trace.values[l0:, i - 1]
        ratios = observed_ratios(vals, curve.mu_ref, curve.mu_low, ascending=True)
        err = vals - curve.mu_ref
    else:
        curve = bound_curve(kind, spectrum, i, j, s, q, trace.values[l0, -1], L)
        if not curve.defined:
            return ValidationReport(kind, i, False, l0, note=curve.note)
        vals = trace.values[l0:, i - 1]
        ratios = observed_ratios(vals, curve.mu_ref, curve.mu_low)
        err = curve.mu_ref - vals
    rep = ValidationReport(kind, i, True, l0)
    near = 1e-12 * max(1.0, abs(curve.mu_ref))
    for ell in range(L + 1):
        rep.checked += 1
        if abs(err[ell]) <= near:
            ok = err[ell] <= curve.error_bounds[ell] + near
        else:
            ok = ratios[ell] <= curve.ratio_bounds[ell] + tol
        if not ok:
            rep.violations.append((i, ell, float(ratios[ell]), float(curve.ratio_bounds[ell])))
    return rep


def check_single_step(trace, spectrum, gamma, tol=1e-9):
    """Check the sharp single-step bound for the last Ritz value at every step.

    For each step with ``theta_s`` strictly inside ``(mu_{j+1}, mu_j)`` for
    some ``j >= s``, the next ratio must not exceed ``factor^2`` times the
    current one.  Returns ``(checked, violations)``.
    """
    s = trace.s
    vals = np.asarray(spectrum.values)
    checked, bad = 0, []
    for ell in range(trace.steps):
        th = trace.values[ell, -1]
        # j >= s with mu_{j+1} < th < mu_j
        below = np.flatnonzero(vals[s:] < th)
        if below.size == 0:
            continue
        j = s + int(below[0])  # mu_{j+1} = vals[j] is the first value below th
        if j >= len(vals) or not (vals[j] < th < vals[j - 1]):
            continue
        ref, low = vals[j - 1], vals[j]
        kap = (low - spectrum.far_end) / (ref - spectrum.far_end)
        fac = conv_factor(kap, gamma) ** 2
        r0 = (ref - th) / (th - low)
        th1 = trace.values[ell + 1, -1]
        r1 = (ref - th1) / (th1 - low)
        checked += 1
        if r1 > fac * r0 + tol:
            bad.append((ell, j, float(r1), float(fac * r0)))
    return checked, bad
