"""Cached problem data shared by the test modules (expensive to rebuild)."""

from functools import lru_cache

from ritzbounds.analysis import track_gamma
from ritzbounds.eigsolve import RunConfig, run_iteration
from ritzbounds.matrixkit import cholesky, identity
from ritzbounds.oracle import diagonal_spectrum, pencil_reference
from ritzbounds.precond import (assess_quality, make_exact_inverse, make_ic_threshold,
                                make_perturbed_identity)
from ritzbounds.problems import gen_diag_cluster, gen_laplacian_slit

N1 = 6000
PERTURB_SEED = 5


@lru_cache(maxsize=None)
def cluster_problem():
    M, A = gen_diag_cluster(N1)
    return M, A, diagonal_spectrum(M.diagonal(), 8)


@lru_cache(maxsize=None)
def cluster_precond(eta):
    """Scaled preconditioner and its quality (eta = 0 is the exact inverse)."""
    M, A, _ = cluster_problem()
    T0 = make_exact_inverse(A) if eta == 0 else make_perturbed_identity(N1, eta,
                                                                         seed=PERTURB_SEED)
    q = assess_quality(T0, A)
    return T0.scaled(q.omega), q


@lru_cache(maxsize=None)
def cluster_trace(eta, seed, max_steps=60, track=False):
    M, A, sp = cluster_problem()
    T, _ = cluster_precond(eta)
    tr = run_iteration(M, A, T, RunConfig(s=6, max_steps=max_steps, seed=seed),
                       reference=sp.values[:7])
    samples = track_gamma(tr, M, A, T, sp) if track else None
    return tr, samples


@lru_cache(maxsize=None)
def slit_problem():
    A = gen_laplacian_slit(1 / 70)
    M = identity(A.n)
    return M, A, pencil_reference(M, A, k=8), cholesky(A).solve


@lru_cache(maxsize=None)
def slit_run(droptol=1e-5, seed=0):
    M, A, sp, solve = slit_problem()
    T0 = make_ic_threshold(A, droptol)
    q = assess_quality(T0, A)
    T = T0.scaled(q.omega)
    tr = run_iteration(M, A, T, RunConfig(s=6, max_steps=200, tol=1e-8, seed=seed),
                       reference=sp.values[:7], solve=solve)
    samples = track_gamma(tr, M, A, T, sp, solve=solve)
    return tr, samples, q
