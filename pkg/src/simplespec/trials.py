"""Seeded trial ensembles.

Trial ``t`` of a run with base seed ``s`` draws from
``numpy.random.default_rng([s, t])``, so every report can be rebuilt from
its ``inputs_digest`` alone.

The random selfadjoint/unitary ensembles are well conditioned on purpose:
eigenvalue spacings vary within a factor of three and every eigenvector
overlap of a coupling vector has modulus in ``[0.5, 1.5]`` before
normalization.  Near-coincident eigenvalues or near-zero overlaps would
make any fixed floating-point gap threshold meaningless, and they say
nothing about the theorems.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np
from scipy.stats import ortho_group, unitary_group

from simplespec.decoupling import decouple_cmv, decouple_jacobi
from simplespec.errors import DomainError
from simplespec.harness import (
    DEFAULT_TOL,
    verify_cmv_simplicity,
    verify_corollary21,
    verify_jacobi_simplicity,
    verify_overlap_structure,
    verify_theorem1,
    verify_theorem2,
    verify_theorem42,
    verify_unitary_ad,
)
from simplespec.operators import (
    SELFADJOINT,
    UNITARY,
    CMVWindow,
    DenseOperator,
    JacobiWindow,
    anderson_jacobi,
    materialize_jacobi,
    random_verblunsky,
    unitarity_residual,
)
from simplespec.reports import VerificationReport


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def spread_spectrum(rng, n: int, width: float = 2.0) -> np.ndarray:
    """``n`` ascending points with spacings uniform in ``[0.5, 1.5]``, centred,
    spread over roughly ``width``."""
    if n == 1:
        return np.array([rng.uniform(-0.5, 0.5) * width])
    gaps = rng.uniform(0.5, 1.5, n - 1)
    pts = np.concatenate([[0.0], np.cumsum(gaps)])
    pts = (pts - pts.mean()) * width / (n - 1)
    return pts


def random_basis(rng, n: int, complex_: bool = False) -> np.ndarray:
    if n == 1:
        return np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]]) if complex_ else np.ones((1, 1))
    group = unitary_group if complex_ else ortho_group
    return group.rvs(n, random_state=rng)


def generic_overlaps(rng, n: int, complex_: bool = False) -> np.ndarray:
    mags = rng.uniform(0.5, 1.5, n)
    if complex_:
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    else:
        phases = rng.choice([-1.0, 1.0], n)
    c = mags * phases
    return c / np.linalg.norm(c)


def selfadjoint_from(eigs, basis) -> DenseOperator:
    m = (basis * eigs) @ basis.conj().T
    return DenseOperator(0.5 * (m + m.conj().T), SELFADJOINT)


def generic_pair(rng, n: int, eigs=None):
    """Selfadjoint ``A`` with prescribed or spread spectrum and a unit cyclic vector."""
    if eigs is None:
        eigs = spread_spectrum(rng, n)
    q = random_basis(rng, n)
    return selfadjoint_from(eigs, q), q @ generic_overlaps(rng, n)


def spread_angles(rng, n: int) -> np.ndarray:
    """``n`` angles whose cyclic spacings (wrap-around included) are uniform
    in ``[0.5, 1.5]`` before normalization to a full turn."""
    gaps = rng.uniform(0.5, 1.5, n)
    theta = np.cumsum(gaps) * (2 * np.pi / gaps.sum())
    return np.mod(theta + rng.uniform(0, 2 * np.pi), 2 * np.pi)


def generic_unitary_pair(rng, n: int):
    theta = spread_angles(rng, n)
    q = random_basis(rng, n, complex_=True)
    m = (q * np.exp(1j * theta)) @ q.conj().T
    return DenseOperator(m, UNITARY), q @ generic_overlaps(rng, n, complex_=True)


def random_phase(rng, margin: float = 0.1) -> complex:
    return complex(np.exp(1j * rng.uniform(margin, 2 * np.pi - margin)))


LAMBDA_CHOICES = (1.0, -1.0, 0.5, -0.5)


# ---------------------------------------------------------------------------
# one function per theorem id; each takes (seed, trial, **params)


def trial_thm1(seed, trial, size=50, lam=None, tol=DEFAULT_TOL, non_cyclic=False):
    rng = trial_rng(seed, trial)
    n = int(rng.integers(2, size + 1)) if size > 2 else size
    lam = float(LAMBDA_CHOICES[trial % 4]) if lam is None else float(lam)
    if non_cyclic:
        eigs = spread_spectrum(rng, n)
        q = random_basis(rng, n)
        a = selfadjoint_from(eigs, q)
        phi = q[:, 0]
    else:
        a, phi = generic_pair(rng, n)
    digest = dict(theorem="thm1", seed=seed, trial=trial, n=n, lam=lam, non_cyclic=non_cyclic)
    return verify_theorem1(a, phi, lam, tol, digest)


def trial_thm2(seed, trial, size=20, lam=1.0, tol=DEFAULT_TOL):
    """``A2 = Q A1 Q^T`` so ``A1 (+) A2`` is doubly degenerate everywhere."""
    rng = trial_rng(seed, trial)
    n = size
    eigs = spread_spectrum(rng, n)
    a1, phi1 = generic_pair(rng, n, eigs)
    a2, phi2 = generic_pair(rng, n, eigs)
    digest = dict(theorem="thm2", seed=seed, trial=trial, n=n, lam=lam)
    return verify_theorem2(a1, a2, phi1, phi2, lam, tol, digest)


def _overlapping_pair(rng, size):
    """Two spectra sharing a random subset of eigenvalues; the rest of the
    second spectrum sits at midpoints of the first."""
    n1 = int(rng.integers(2, size + 1))
    s1 = spread_spectrum(rng, n1)
    k = int(rng.integers(0, n1 + 1))
    shared = rng.choice(s1, size=k, replace=False)
    mids = 0.5 * (s1[1:] + s1[:-1])
    extra_pool = np.concatenate([mids, [s1[0] - 0.5, s1[-1] + 0.5]])
    m = int(rng.integers(0 if k else 1, extra_pool.size + 1))
    extra = rng.choice(extra_pool, size=m, replace=False)
    s2 = np.sort(np.concatenate([shared, extra]))
    a1, phi1 = generic_pair(rng, n1, s1)
    a2, phi2 = generic_pair(rng, s2.size, s2)
    return a1, a2, phi1, phi2, k


def trial_cor21(seed, trial, size=12, lam=1.0, tol=DEFAULT_TOL):
    rng = trial_rng(seed, trial)
    a1, a2, phi1, phi2, k = _overlapping_pair(rng, size)
    digest = dict(theorem="cor21", seed=seed, trial=trial, n1=a1.dim, n2=a2.dim, shared=k, lam=lam)
    return verify_corollary21(a1, a2, phi1, phi2, lam, tol, digest)


def trial_eq21(seed, trial, size=12, tol=DEFAULT_TOL):
    rng = trial_rng(seed, trial)
    a1, a2, phi1, phi2, k = _overlapping_pair(rng, size)
    digest = dict(theorem="eq21", seed=seed, trial=trial, n1=a1.dim, n2=a2.dim, shared=k)
    return verify_overlap_structure(a1, a2, phi1, phi2, tol, digest)


def trial_eq43(seed, trial, size=32, grid_radius=0.9, grid_count=128, tol=DEFAULT_TOL):
    rng = trial_rng(seed, trial)
    n = int(rng.integers(1, size + 1))
    v, phi = generic_unitary_pair(rng, n)
    lam = random_phase(rng)
    digest = dict(theorem="eq43", seed=seed, trial=trial, n=n, lam=lam,
                  grid_radius=grid_radius, grid_count=grid_count)
    return verify_unitary_ad(v, phi, lam, grid_radius, grid_count, tol, digest)


def trial_thm42(seed, trial, size=10, tol=DEFAULT_TOL):
    rng = trial_rng(seed, trial)
    n1 = size // 2
    eigs = spread_spectrum(rng, n1)
    a1, phi1 = generic_pair(rng, n1, eigs)
    a2, phi2 = generic_pair(rng, size - n1, eigs if size - n1 == n1 else None)
    lam = random_phase(rng)
    digest = dict(theorem="thm42", seed=seed, trial=trial, n=size, lam=lam)
    return verify_theorem42(a1, a2, phi1, phi2, lam, tol, digest)


def _centered(size):
    n_min = -(size // 2)
    return n_min, n_min + size - 1


def trial_thm31(seed, trial, size=500, coupling=1.0, tol=DEFAULT_TOL):
    n_min, n_max = _centered(size)
    w = anderson_jacobi(seed + trial, n_min, n_max, coupling)
    digest = dict(theorem="thm31", seed=seed + trial, n_min=n_min, n_max=n_max, coupling=coupling)
    return verify_jacobi_simplicity(w, tol, digest=digest)


def cmv_range(size):
    if size < 4 or size % 2:
        raise DomainError(f"CMV size must be even and at least 4, got {size}")
    half = size // 2
    j_min = -half if half % 2 == 0 else -(half + 1)
    return j_min, j_min + size


def trial_thm51(seed, trial, size=128, radius=0.9, tol=DEFAULT_TOL):
    j_min, j_max = cmv_range(size)
    w = random_verblunsky(seed + trial, j_min, j_max, radius)
    digest = dict(theorem="thm51", seed=seed + trial, j_min=j_min, j_max=j_max, radius=radius)
    return verify_cmv_simplicity(w, tol, digest=digest)


def random_jacobi_window(rng, max_size=200) -> JacobiWindow:
    size = int(rng.integers(2, max_size + 1))
    n_min = -int(rng.integers(1, size))
    n_max = n_min + size - 1
    b = rng.normal(size=size) * rng.uniform(0.1, 10.0)
    a = rng.uniform(0.05, 3.0, size - 1)
    return JacobiWindow(n_min, n_max, b, a)


def random_cmv_window(rng, max_size=200, radius=0.9) -> CMVWindow:
    size = 2 * int(rng.integers(2, max_size // 2 + 1))
    j_min = -2 * int(rng.integers(1, size // 2))
    j_max = j_min + size
    r = radius * np.sqrt(rng.uniform(size=size))
    alpha = r * np.exp(1j * rng.uniform(0, 2 * np.pi, size))
    bl, br = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
    return CMVWindow(j_min, j_max, alpha, bl, br)


def trial_dec_jacobi(seed, trial, size=200, tol=DEFAULT_TOL):
    rng = trial_rng(seed, trial)
    w = random_jacobi_window(rng, size)
    dec = decouple_jacobi(w)
    j = materialize_jacobi(w).entries
    norm = float(np.linalg.norm(j, 2))
    r = VerificationReport("dec-jacobi", inputs_digest=dict(theorem="dec-jacobi", seed=seed, trial=trial,
                                                           n_min=w.n_min, n_max=w.n_max))
    r.add("reconstruction_residual", float(np.max(np.abs(j - dec.reassemble()))), 2.0 ** -50 * norm)
    return r


def trial_dec_cmv(seed, trial, size=200, radius=0.9, tol=DEFAULT_TOL):
    rng = trial_rng(seed, trial)
    w = random_cmv_window(rng, size, radius)
    dec = decouple_cmv(w)
    e = dec.e.entries
    sv = np.linalg.svd(e - dec.e_tilde.entries, compute_uv=False)
    r = VerificationReport("dec-cmv", inputs_digest=dict(theorem="dec-cmv", seed=seed, trial=trial,
                                                        j_min=w.j_min, j_max=w.j_max, radius=radius))
    r.add("difference_sigma2", sv[1], tol.rank_one * float(np.linalg.norm(e, 2)))
    r.add("e_tilde_unitarity", unitarity_residual(dec.e_tilde.entries), 1e-12)
    return r


TRIALS = {
    "thm1": trial_thm1,
    "thm2": trial_thm2,
    "cor21": trial_cor21,
    "eq21": trial_eq21,
    "eq43": trial_eq43,
    "thm42": trial_thm42,
    "thm31": trial_thm31,
    "thm51": trial_thm51,
    "dec-jacobi": trial_dec_jacobi,
    "dec-cmv": trial_dec_cmv,
}


def run_trials(theorem: str, trials: int, seed: int = 0, jobs: int = 1, **params) -> list:
    """Run ``trials`` seeded trials; results are ordered by trial index."""
    if theorem not in TRIALS:
        raise DomainError(f"unknown theorem id {theorem!r}; choose from {', '.join(TRIALS)}")
    fn = partial(_run_one, theorem, seed, params)
    if jobs <= 1:
        return [fn(t) for t in range(trials)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(trials)))


def _run_one(theorem, seed, params, trial):
    return TRIALS[theorem](seed, trial, **params)
