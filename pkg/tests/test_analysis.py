import copy

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from ritzbounds.analysis import (InvariantSplit, aux_step, bound_curve, check_single_step,
                                 conv_factor, gamma_tilde, intersect, kappa, ratio_to_error,
                                 run_auxiliary, validate)
from ritzbounds.eigsolve import IterTrace, bpg_step, rayleigh_ritz
from ritzbounds.errors import ContractError
from ritzbounds.matrixkit import DenseSym, make_subspace, orthonormalize, subspace_distance
from ritzbounds.oracle import dense_reference, diagonal_spectrum
from ritzbounds.precond import Preconditioner

import _shared


def e(n, *idx):
    E = np.zeros((n, len(idx)))
    for c, k in enumerate(idx):
        E[k, c] = 1.0
    return E


def spd(rng, n):
    C = rng.standard_normal((n, n))
    return C @ C.T / n + np.eye(n)


# --- intersections -----------------------------------------------------------------


def test_intersect_examples():
    Y = make_subspace(e(4, 0, 1))
    got = intersect(Y, make_subspace(e(4, 0)))
    assert got.k == 1
    assert_allclose(np.abs(got.basis[:, 0]), [0, 1, 0, 0], atol=1e-15)
    tilt = make_subspace(np.array([[1.0], [0.0], [1.0], [0.0]]) / np.sqrt(2))
    got = intersect(Y, tilt)
    assert got.k == 1
    assert_allclose(np.abs(got.basis[:, 0]), [0, 1, 0, 0], atol=1e-15)
    assert intersect(Y, make_subspace(e(4, 2))).k == 2
    assert intersect(Y, make_subspace(e(4, 0, 1))).k == 0


@pytest.mark.parametrize("seed", range(50))
def test_intersect_vs_null_space(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 15))
    k, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    G = DenseSym(spd(rng, n))
    Y = orthonormalize(rng.standard_normal((n, k)), G)
    S = orthonormalize(rng.standard_normal((n, m)), G)
    got = intersect(Y, S)
    assert got.k == max(k - m, 0)
    if got.k:
        null = sla.null_space(S.basis.T @ G.to_dense() @ Y.basis)
        ref = orthonormalize(Y.basis @ null, G)
        assert subspace_distance(got, ref) <= 1e-10
        assert_allclose(S.gbasis.T @ got.basis, 0.0, atol=1e-12)


# --- auxiliary iteration ------------------------------------------------------------


def random_setup(seed, n=40, s=3):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    M = DenseSym((B + B.T) / 2)
    A = DenseSym(spd(rng, n))
    sp = dense_reference(M, A)
    E = rng.standard_normal((n, n))
    T = Preconditioner("dense", n, operator=DenseSym(E @ E.T / n + np.eye(n) * 0.5))
    r = rayleigh_ritz(rng.standard_normal((n, s)), M, A, s)
    return M, A, sp, T, r


@pytest.mark.parametrize("seed", range(3))
def test_aux_step_i_equals_s_is_bpg(seed):
    M, A, sp, T, r = random_setup(seed)
    solve = lambda X: np.linalg.solve(A.to_dense(), X)  # noqa: E731
    nxt, sample, _ = aux_step(r, M, A, T, InvariantSplit(sp, 3, 3, 3), solve)
    ref = bpg_step(r, M, A, T)
    assert_allclose(nxt.values, ref.values, rtol=1e-10)
    assert sample.dim_tilde == 3 and sample.dim_hat == 0


def test_exact_inverse_gamma_tilde_vanishes_small():
    M, A, sp, _, r = random_setup(7)
    Ainv = np.linalg.inv(A.to_dense())
    T = Preconditioner("exact", A.n, operator=DenseSym((Ainv + Ainv.T) / 2))
    solve = lambda X: Ainv @ X  # noqa: E731
    for i in (1, 2):
        smp = run_auxiliary(r, M, A, T, InvariantSplit(sp, i, 3, 3), 3, solve)
        for x in smp:
            assert x.gamma_tilde <= max(1e-10, x.resolution)


def test_exact_inverse_cluster_samples():
    tr, samples = _shared.cluster_trace(0.0, 0, track=True)
    checked = 0
    for i, smp in samples.items():
        for x in smp:
            if x.valid:
                checked += 1
                assert x.gamma_tilde <= max(1e-10, x.resolution)
                assert (x.dim_tilde, x.dim_hat) == (i, tr.s - i)
                assert x.split_ok in (True, None)
    assert checked >= 6 * 10


# --- gamma tilde --------------------------------------------------------------------


def gamma_bruteforce(Vt, Ut, M, A):
    """Definition evaluated with dense square roots (independent of the module)."""
    Ah = np.real(sla.sqrtm(A))
    H = np.linalg.solve(A, M)
    V = Vt
    HV = H @ V
    R = HV - V @ (V.T @ M @ V)
    P = Ut @ (Ut.T @ M @ V)  # A-projection of H V onto span(Ut)
    Pa = Ah @ P
    proj = Pa @ np.linalg.pinv(Pa)
    Xa = (np.eye(len(A)) - proj) @ Ah @ HV
    Ra = Ah @ R
    W = np.real(sla.sqrtm(np.linalg.inv(Ra.T @ Ra)))
    return np.linalg.norm(Xa @ W, 2)


@pytest.mark.parametrize("seed", range(6))
def test_gamma_tilde_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n, i = 8, 2
    B = rng.standard_normal((n, n))
    M, A = (B + B.T) / 2, spd(rng, n)
    Vt = orthonormalize(rng.standard_normal((n, i)), DenseSym(A))
    # U~ space close to span(H V) so the value lies in [0, 1)
    HV = np.linalg.solve(A, M @ Vt.basis)
    Ut = orthonormalize(np.hstack((HV + 0.05 * rng.standard_normal((n, i)),
                                   rng.standard_normal((n, 1)))), DenseSym(A))
    got = gamma_tilde(Vt, Ut, DenseSym(M), DenseSym(A), solve=lambda X: np.linalg.solve(A, X))
    ref = gamma_bruteforce(Vt.basis, Ut.basis, M, A)
    assert got == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_gamma_tilde_basis_invariance():
    rng = np.random.default_rng(3)
    n, i = 12, 3
    B = rng.standard_normal((n, n))
    M, A = DenseSym((B + B.T) / 2), DenseSym(spd(rng, n))
    solve = lambda X: np.linalg.solve(A.to_dense(), X)  # noqa: E731
    Vt = orthonormalize(rng.standard_normal((n, i)), A)
    Ut = orthonormalize(rng.standard_normal((n, i + 2)), A)
    Q1, _ = np.linalg.qr(rng.standard_normal((i, i)))
    Q2, _ = np.linalg.qr(rng.standard_normal((i + 2, i + 2)))
    g1 = gamma_tilde(Vt, Ut, M, A, solve)
    g2 = gamma_tilde(make_subspace(Vt.basis @ Q1, A), make_subspace(Ut.basis @ Q2, A),
                     M, A, solve)
    assert np.isnan(g1) or g1 == pytest.approx(g2, abs=1e-10)
    assert np.isfinite(g1) == np.isfinite(g2)


def test_gamma_tilde_zero_for_image():
    rng = np.random.default_rng(4)
    n, i = 10, 2
    B = rng.standard_normal((n, n))
    M, A = (B + B.T) / 2, spd(rng, n)
    Vt = orthonormalize(rng.standard_normal((n, i)), DenseSym(A))
    Ut = orthonormalize(np.linalg.solve(A, M @ Vt.basis), DenseSym(A))
    g = gamma_tilde(Vt, Ut, DenseSym(M), DenseSym(A), solve=lambda X: np.linalg.solve(A, X))
    assert g <= 1e-10


def test_gamma_tilde_too_small_space_is_nan():
    rng = np.random.default_rng(5)
    n = 10
    A = DenseSym(spd(rng, n))
    Vt = orthonormalize(rng.standard_normal((n, 2)), A)
    Ut = orthonormalize(rng.standard_normal((n, 1)), A)
    assert np.isnan(gamma_tilde(Vt, Ut, DenseSym(np.eye(n)), A,
                                solve=lambda X: np.linalg.solve(A.to_dense(), X)))


# --- kappa and factors --------------------------------------------------------------


def test_kappa_cluster_problem():
    _, _, sp = _shared.cluster_problem()
    assert kappa(sp, 1, 6, 6) == pytest.approx(8 / 9.06, rel=1e-14)
    assert kappa(sp, 1, 6, 6) == pytest.approx(0.883002, abs=1e-6)


def test_kappa_extremes():
    assert kappa(diagonal_spectrum([3.0, 1.0, 1.0]), 1, 1, 1) == 0.0
    assert kappa(diagonal_spectrum([3.0, 3.0, 1.0]), 1, 1, 1) == 1.0
    assert kappa(diagonal_spectrum([3.0, 2.0, 1.0]), 1, 1, 1) == 0.5
    with pytest.raises(ContractError):
        kappa(diagonal_spectrum([1.0, 1.0, 1.0]), 1, 1, 1)


def test_conv_factor_values():
    assert conv_factor(8 / 9.06, 0.0) == pytest.approx(8 / 10.12, rel=1e-14)
    assert conv_factor(1.0, 0.3) == pytest.approx(1.0, rel=1e-15)
    assert conv_factor(0.0, 0.3) == pytest.approx(0.3, rel=1e-15)
    assert conv_factor(0.5, 0.0) == pytest.approx(1 / 3, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(k1=st.floats(0.0, 1.0), k2=st.floats(0.0, 1.0), q1=st.floats(0.0, 0.99),
       q2=st.floats(0.0, 0.99))
def test_conv_factor_monotone(k1, k2, q1, q2):
    lo_k, hi_k = sorted((k1, k2))
    lo_q, hi_q = sorted((q1, q2))
    f = conv_factor
    assert 0.0 <= f(lo_k, lo_q) <= 1.0 + 1e-15
    assert f(lo_k, lo_q) <= f(hi_k, lo_q) + 1e-15
    assert f(lo_k, lo_q) <= f(lo_k, hi_q) + 1e-15


def test_ratio_to_error():
    assert ratio_to_error(3.0, 2.0, 1.0) == pytest.approx(0.75)
    assert ratio_to_error(0.0, 2.0, 1.0) == 0.0
    # inverse of the distance ratio
    mu, low, th = 10.06, 9.0, 9.7
    c = (mu - th) / (th - low)
    assert ratio_to_error(c, mu, low) == pytest.approx(mu - th, rel=1e-14)


# --- bound curves -------------------------------------------------------------------


def test_bound_curve_zero_steps():
    _, _, sp = _shared.cluster_problem()
    c = bound_curve("lm2e1", sp, 1, 6, 6, 0.0, 9.5, 0)
    assert c.ratio_bounds.shape == (1,)
    assert c.ratio_bounds[0] == pytest.approx((10.06 - 9.5) / (9.5 - 9.0))


def test_bound_curve_product_identity():
    _, _, sp = _shared.cluster_problem()
    c = bound_curve("thm2e1", sp, 2, 6, 6, 0.25, 9.5, 40)
    r = c.ratio_bounds[0]
    for ell in range(1, 41):
        r = r * c.factor * c.factor
        assert c.ratio_bounds[ell] == pytest.approx(r, rel=1e-14)
    assert c.factor == pytest.approx(conv_factor(kappa(sp, 2, 6, 6), 0.25))


def test_thm2e3_matches_thm2e1_at_i_equals_s():
    _, _, sp = _shared.cluster_problem()
    a = bound_curve("thm2e3", sp, 6, 6, 6, 0.1, 9.4, 5)
    b = bound_curve("thm2e1", sp, 6, 6, 6, 0.1, 9.4, 5)
    assert_allclose(a.ratio_bounds, b.ratio_bounds, rtol=1e-14)


def test_neighbor_matches_thm2e1_at_i_equals_s():
    _, _, sp = _shared.cluster_problem()
    a = bound_curve("neighbor", sp, 6, 6, 6, 0.2, 9.4, 5)
    b = bound_curve("thm2e1", sp, 6, 6, 6, 0.2, 9.4, 5)
    assert_allclose(a.ratio_bounds, b.ratio_bounds, rtol=1e-14)
    n1 = bound_curve("neighbor", sp, 1, 6, 6, 0.0, 9.4, 1)
    assert n1.kappa == pytest.approx(9.05 / 9.06, rel=1e-14)


def test_neighbor_undefined_for_double_eigenvalue():
    sp = diagonal_spectrum([5.0, 4.0, 4.0, 3.0, 1.0])
    c = bound_curve("neighbor", sp, 2, 3, 3, 0.0, 3.5, 3)
    assert not c.defined
    assert all(row[-1] == "" for row in c.rows())


def test_lm2_ignores_q_and_j():
    _, _, sp = _shared.cluster_problem()
    a = bound_curve("lm2e1", sp, 1, 7, 6, 0.5, 9.5, 3)
    assert a.q == 0.0 and a.j == 6


def test_bpsde_is_rescaled_thm2e2():
    sp = diagonal_spectrum([5.0, 4.5, 4.0, 2.0, 1.0])
    i, j, s, q, th = 1, 3, 2, 0.2, 3.0
    a = bound_curve("thm2e2", sp, i, j, s, q, th, 6)
    b = bound_curve("bpsde", sp, i, j, s, q, 1.0 / th, 6)
    assert b.kappa == pytest.approx(a.kappa, rel=1e-14)
    mu_r, mu_l = sp.mu(j - s + i), sp.mu(j + 1)
    assert_allclose(b.ratio_bounds, a.ratio_bounds * mu_l / mu_r, rtol=1e-13)


def test_bound_curve_contracts():
    _, _, sp = _shared.cluster_problem()
    with pytest.raises(ContractError):
        bound_curve("nope", sp, 1, 6, 6, 0.0, 9.5, 1)
    with pytest.raises(ContractError):
        bound_curve("thm2e1", sp, 1, 6, 6, 1.0, 9.5, 1)
    with pytest.raises(ContractError):
        bound_curve("thm2e1", sp, 1, 6, 6, 0.0, 8.0, 1)
    with pytest.raises(ContractError):
        bound_curve("thm2e3", sp, 6, 6, 6, 0.0, 10.02, 1)


# --- validation ---------------------------------------------------------------------


def test_validate_cluster_exact_inverse():
    tr, _ = _shared.cluster_trace(0.0, 1)
    _, _, sp = _shared.cluster_problem()
    for i in range(1, 7):
        rep = validate(tr, "lm2e1", sp, i)
        assert rep.passed, rep.violations
        assert rep.start_step == tr.phase_step


def test_validate_detects_injected_violation():
    tr, _ = _shared.cluster_trace(0.0, 1)
    _, _, sp = _shared.cluster_problem()
    bad = copy.deepcopy(tr)
    ell = bad.phase_step + 5
    bad.values[ell, 0] = 9.2  # much farther from mu_1 than allowed
    rep = validate(bad, "lm2e1", sp, 1)
    assert not rep.passed
    assert rep.violations[0][1] == 5


def test_validate_not_applicable():
    _, _, sp = _shared.cluster_problem()
    tr = IterTrace(0, 0, np.full((3, 6), 5.0), np.ones((3, 6)))
    rep = validate(tr, "thm2e1", sp, 1, q=0.2)
    assert not rep.applicable and not rep.passed
    assert "never" in rep.note


def test_check_single_step_perturbed():
    tr, _ = _shared.cluster_trace(0.16, 0)
    _, q = _shared.cluster_precond(0.16)
    _, _, sp = _shared.cluster_problem()
    checked, bad = check_single_step(tr, sp, q.gamma)
    assert checked > 0 and bad == []
    worse = copy.deepcopy(tr)
    worse.values[-1, -1] = worse.values[-2, -1] - 0.3
    _, bad = check_single_step(worse, sp, q.gamma)
    assert bad and bad[-1][0] == worse.steps - 1


def test_invariant_split_contract():
    sp = diagonal_spectrum(np.arange(10.0, 0, -1), 6)
    with pytest.raises(ContractError):
        InvariantSplit(sp, 0, 3, 3)
    with pytest.raises(ContractError):
        InvariantSplit(sp, 2, 2, 3)
    s = InvariantSplit(sp, 2, 4, 3)
    assert s.skipped_tilde.k == 1 and s.skipped_hat.k == 2
    assert_array_equal(np.abs(s.skipped_tilde.basis[:, 0]), np.eye(10)[3])
