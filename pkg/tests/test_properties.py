"""Invariants checked over generated inputs."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from simplespec.decoupling import cayley, decouple_cmv, decouple_jacobi, inverse_cayley
from simplespec.operators import (
    SELFADJOINT,
    CMVWindow,
    DenseOperator,
    JacobiWindow,
    format_window,
    materialize_cmv,
    materialize_jacobi,
    parse_window,
    theta_block,
    unitarity_residual,
)
from simplespec.spectral import (
    AtomicSpectralMeasure,
    borel_transform,
    eigendecompose,
    krylov_dimension,
    spectral_measure,
)

finite = st.floats(-10, 10, allow_nan=False)
positive = st.floats(0.05, 10, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


@st.composite
def jacobi_windows(draw, max_size=40):
    n = draw(st.integers(2, max_size))
    n_min = draw(st.integers(-n + 1, -1))
    b = draw(st.lists(finite, min_size=n, max_size=n))
    a = draw(st.lists(positive, min_size=n - 1, max_size=n - 1))
    return JacobiWindow(n_min, n_min + n - 1, b, a)


@st.composite
def disc_points(draw, radius=1.0):
    r = draw(st.floats(0, radius))
    t = draw(st.floats(0, 2 * np.pi))
    return complex(r * np.cos(t), r * np.sin(t))


@st.composite
def cmv_windows(draw, max_half=20):
    half = draw(st.integers(2, max_half))
    j_min = -2 * draw(st.integers(1, half - 1))
    size = 2 * half
    alpha = draw(st.lists(disc_points(0.95), min_size=size, max_size=size))
    return CMVWindow(j_min, j_min + size, alpha)


@given(disc_points())
def test_theta_unitary(alpha):
    assert unitarity_residual(theta_block(alpha)) <= 1e-14


@given(cmv_windows())
@settings(max_examples=50, deadline=None)
def test_cmv_unitary(w):
    assert unitarity_residual(materialize_cmv(w).entries) <= 1e-12


@given(jacobi_windows(), st.data())
@settings(max_examples=100, deadline=None)
def test_jacobi_reconstruction_exact(w, data):
    cut = data.draw(st.integers(w.n_min, w.n_max - 1))
    dec = decouple_jacobi(w, cut)
    j = materialize_jacobi(w).entries
    assert np.max(np.abs(j - dec.reassemble())) <= 2.0**-50 * np.linalg.norm(j, 2)


@given(seeds, st.integers(2, 30))
@settings(max_examples=50, deadline=None)
def test_jacobi_spectrum_simple(seed, n):
    # off-diagonals bounded away from zero keep the gaps resolvable
    rng = np.random.default_rng(seed)
    w = JacobiWindow(0, n - 1, rng.uniform(-2, 2, n), rng.uniform(0.5, 1.5, n - 1))
    ev = np.linalg.eigvalsh(materialize_jacobi(w).entries)
    assert np.min(np.diff(ev)) > 1e-10


@given(cmv_windows(), st.data())
@settings(max_examples=50, deadline=None)
def test_cmv_decoupling_rank_one(w, data):
    cut = data.draw(st.sampled_from(list(range(w.j_min + 1, w.j_max - 1, 2))))
    dec = decouple_cmv(w, cut)
    e = dec.e.entries
    sv = np.linalg.svd(e - dec.e_tilde.entries, compute_uv=False)
    assert sv[1] <= 1e-12 * np.linalg.norm(e, 2)
    assert unitarity_residual(dec.e_tilde.entries) <= 1e-12


@given(jacobi_windows(max_size=12))
@settings(max_examples=50, deadline=None)
def test_window_text_round_trip(w):
    back = parse_window(format_window(w))
    np.testing.assert_array_equal(back.b, w.b)
    np.testing.assert_array_equal(back.a, w.a)


@given(cmv_windows(max_half=6))
@settings(max_examples=50, deadline=None)
def test_cmv_text_round_trip(w):
    back = parse_window(format_window(w))
    np.testing.assert_array_equal(back.alpha, w.alpha)


def _selfadjoint(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    return DenseOperator((x + x.T) / 2, SELFADJOINT), rng


@given(seeds, st.integers(1, 40))
@settings(max_examples=50, deadline=None)
def test_measure_total_mass(seed, n):
    a, rng = _selfadjoint(seed, n)
    phi = rng.standard_normal(n)
    mu = spectral_measure(eigendecompose(a), phi)
    assert abs(mu.total_weight + mu.discarded - phi @ phi) <= 1e-10 * (phi @ phi)


@given(seeds, st.integers(2, 12), st.integers(1, 4))
@settings(max_examples=100, deadline=None)
def test_krylov_dimension_counts_atoms(seed, n_distinct, repeat):
    # integer spectrum with controlled repetition; overlaps of modulus >= 0.5
    rng = np.random.default_rng(seed)
    eigs = np.repeat(np.arange(n_distinct, dtype=float), rng.integers(1, repeat + 1, n_distinct))
    n = eigs.size
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    a = DenseOperator(q @ np.diag(eigs) @ q.T, SELFADJOINT, validate=False)
    phi = q @ (rng.choice([-1, 1], n) * rng.uniform(0.5, 1.5, n))
    mu = spectral_measure(eigendecompose(a), phi)
    assert krylov_dimension(a, phi) == len(mu) == n_distinct


@given(seeds, st.integers(1, 100))
@settings(max_examples=30, deadline=None)
def test_cayley_spectral_mapping(seed, n):
    a, _ = _selfadjoint(seed, n)
    e = np.linalg.eigvalsh(a.entries)
    mapped = (e + 1j) / (e - 1j)
    got = np.linalg.eigvals(cayley(a).entries)
    cost = np.abs(mapped[:, None] - got[None, :])
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() <= 1e-10


@given(seeds, st.integers(1, 20))
@settings(max_examples=30, deadline=None)
def test_cayley_round_trip(seed, n):
    a, _ = _selfadjoint(seed, n)
    assert np.max(np.abs(inverse_cayley(cayley(a)).entries - a.entries)) <= 1e-10


@given(
    st.lists(st.tuples(finite, positive), min_size=1, max_size=8),
    st.floats(-20, 20),
    st.floats(1e-3, 20),
)
def test_borel_herglotz(atoms, re, im):
    locs, weights = zip(*atoms)
    mu = AtomicSpectralMeasure(locs, weights)
    assert borel_transform(mu, complex(re, im)).imag > 0
