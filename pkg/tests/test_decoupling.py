import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment
from scipy.stats import unitary_group

from simplespec.decoupling import (
    boundary_replacement,
    cayley,
    decouple_cmv,
    decouple_jacobi,
    inverse_cayley,
    unitary_rank_one,
)
from simplespec.errors import DomainError, SingularDecouplingError, UnboundedPreimageError
from simplespec.operators import (
    SELFADJOINT,
    UNITARY,
    CMVWindow,
    DenseOperator,
    JacobiWindow,
    anderson_jacobi,
    free_jacobi,
    materialize_jacobi,
    random_verblunsky,
    theta_block,
    unitarity_residual,
)


def _random_selfadjoint(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return DenseOperator((x + x.conj().T) / 2, SELFADJOINT)


# --- Jacobi ----------------------------------------------------------------


def test_free_decoupling_corners():
    w = free_jacobi(-4, 3)
    dec = decouple_jacobi(w)
    d1, d2 = np.diag(dec.a1.entries), np.diag(dec.a2.entries)
    assert d1[-1] == -1.0 and d2[0] == -1.0
    assert np.all(d1[:-1] == 0) and np.all(d2[1:] == 0)
    assert dec.a1.site_labels == (-4, -3, -2, -1)
    assert dec.a2.site_labels == (0, 1, 2, 3)


def test_minimal_window_hand_arithmetic():
    w = JacobiWindow(-1, 0, [0.0, 0.0], [1.0])
    dec = decouple_jacobi(w)
    np.testing.assert_array_equal(dec.a1.entries, [[-1.0]])
    np.testing.assert_array_equal(dec.a2.entries, [[-1.0]])
    assert dec.lam == 1.0
    np.testing.assert_array_equal(dec.reassemble(), [[0, 1], [1, 0]])


@pytest.mark.parametrize("cut", [3, 4, -5])
def test_cut_out_of_range(cut):
    with pytest.raises(DomainError):
        decouple_jacobi(free_jacobi(-4, 3), cut)


@pytest.mark.parametrize("seed,cut", [(0, -1), (1, -5), (2, 4), (3, 0)])
def test_reconstruction_exact(seed, cut):
    w = anderson_jacobi(seed, -6, 5, 3.0)
    dec = decouple_jacobi(w, cut)
    np.testing.assert_array_equal(dec.reassemble(), materialize_jacobi(w).entries)


# --- CMV -------------------------------------------------------------------


def _window_with_cut_alpha(alpha, seed=0):
    w = random_verblunsky(seed, -4, 4, 0.7)
    a = w.alpha.copy()
    a[-1 - w.j_min] = alpha
    return CMVWindow(w.j_min, w.j_max, a)


def test_replacement_alpha_zero():
    x = boundary_replacement(0.0)
    assert x == 1.0
    delta = theta_block(0.0) - np.diag([x, 1.0])
    np.testing.assert_array_equal(delta, [[-1, 1], [1, -1]])
    assert np.linalg.matrix_rank(delta) == 1


def test_replacement_alpha_half():
    x = boundary_replacement(0.5)
    assert x == 1.0
    det = np.linalg.det(theta_block(0.5) - np.diag([x, 1.0]))
    # (-0.5)(-1.5) - 0.75
    assert abs(det) < 1e-15


def test_replacement_alpha_i():
    x = boundary_replacement(1j)
    np.testing.assert_allclose(x, -1j, atol=1e-15)
    assert abs(abs(x) - 1) < 1e-15
    delta = theta_block(1j) - np.diag([x, 1.0])
    assert abs(np.linalg.det(delta)) < 1e-15
    sv = np.linalg.svd(delta, compute_uv=False)
    assert sv[1] < 1e-15 < sv[0]


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.9j, 0.3 - 0.6j])
def test_decouple_cmv_rank_one(alpha):
    dec = decouple_cmv(_window_with_cut_alpha(alpha))
    e = dec.e.entries
    sv = np.linalg.svd(e - dec.e_tilde.entries, compute_uv=False)
    assert sv[1] <= 1e-12 * np.linalg.norm(e, 2)
    assert unitarity_residual(dec.e_tilde.entries) <= 1e-12
    s = dec.split
    assert np.all(dec.e_tilde.entries[:s, s:] == 0) and np.all(dec.e_tilde.entries[s:, :s] == 0)


def test_decouple_cmv_unitary_rank_one_form():
    dec = decouple_cmv(random_verblunsky(3, -6, 6, 0.9))
    eta = dec.eta
    rebuilt = dec.e_tilde.entries @ (np.eye(eta.size) + (dec.mu - 1) * np.outer(eta, eta.conj()))
    np.testing.assert_allclose(rebuilt, dec.e.entries, atol=1e-13)
    assert abs(np.linalg.norm(eta) - 1) < 1e-14


def test_decouple_cmv_minus_one():
    with pytest.raises(SingularDecouplingError):
        decouple_cmv(_window_with_cut_alpha(-1.0))
    with pytest.raises(SingularDecouplingError):
        boundary_replacement(-1.0)


def test_decouple_cmv_even_cut():
    with pytest.raises(DomainError):
        decouple_cmv(random_verblunsky(0, -4, 4, 0.5), 0)


# --- Cayley ----------------------------------------------------------------


def test_cayley_scalars():
    np.testing.assert_allclose(cayley(DenseOperator([[0.0]], SELFADJOINT)).entries, [[-1.0]], atol=1e-15)
    np.testing.assert_allclose(cayley(DenseOperator([[1.0]], SELFADJOINT)).entries, [[1j]], atol=1e-15)


def test_cayley_eigenvectors():
    rng = np.random.default_rng(5)
    a = _random_selfadjoint(rng, 12)
    u = cayley(a)
    assert u.kind == UNITARY
    assert unitarity_residual(u.entries) <= 1e-12
    evals, vecs = np.linalg.eigh(a.entries)
    for e, v in zip(evals, vecs.T):
        assert np.linalg.norm(u.entries @ v - (e + 1j) / (e - 1j) * v) <= 1e-10


@pytest.mark.parametrize("n", [5, 40, 100])
def test_cayley_spectral_mapping(n):
    rng = np.random.default_rng(n)
    a = _random_selfadjoint(rng, n)
    mapped = (np.linalg.eigvalsh(a.entries) + 1j) / (np.linalg.eigvalsh(a.entries) - 1j)
    got = np.linalg.eigvals(cayley(a).entries)
    cost = np.abs(mapped[:, None] - got[None, :])
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() <= 1e-10


def test_inverse_cayley_scalars():
    np.testing.assert_allclose(inverse_cayley(DenseOperator([[-1.0 + 0j]], UNITARY)).entries, [[0.0]], atol=1e-15)
    np.testing.assert_allclose(inverse_cayley(DenseOperator([[1j]], UNITARY)).entries, [[1.0]], atol=1e-14)


def test_inverse_cayley_round_trip():
    rng = np.random.default_rng(8)
    a = _random_selfadjoint(rng, 8)
    back = inverse_cayley(cayley(a))
    assert back.kind == SELFADJOINT
    assert np.max(np.abs(back.entries - a.entries)) <= 1e-10


def test_inverse_cayley_random_unitary_round_trip():
    u = DenseOperator(unitary_group.rvs(10, random_state=3), UNITARY)
    assert np.max(np.abs(cayley(inverse_cayley(u)).entries - u.entries)) <= 1e-10


def test_inverse_cayley_unbounded():
    with pytest.raises(UnboundedPreimageError):
        inverse_cayley(DenseOperator(np.diag([1.0, 1j]).astype(complex), UNITARY))


# --- unitary rank one ------------------------------------------------------


def test_unitary_rank_one_scalar():
    w = unitary_rank_one(DenseOperator([[1.0 + 0j]], UNITARY), np.array([1.0]), 1j)
    np.testing.assert_allclose(w.entries, [[1j]], atol=1e-15)


def test_unitary_rank_one_identity():
    w = unitary_rank_one(DenseOperator(np.eye(2, dtype=complex), UNITARY), np.array([1.0, 0.0]), -1.0)
    np.testing.assert_allclose(w.entries, np.diag([-1.0, 1.0]), atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_unitary_rank_one_properties(seed):
    rng = np.random.default_rng(seed)
    v = DenseOperator(unitary_group.rvs(9, random_state=seed), UNITARY)
    phi = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    phi /= np.linalg.norm(phi)
    lam = np.exp(1j * rng.uniform(0.1, 6.0))
    w = unitary_rank_one(v, phi, lam)
    assert unitarity_residual(w.entries) <= 1e-12
    assert np.linalg.svd(w.entries - v.entries, compute_uv=False)[1] <= 1e-12
    assert np.linalg.norm(w.entries @ phi - lam * v.entries @ phi) <= 1e-12


def test_unitary_rank_one_rejects():
    v = DenseOperator(np.eye(2, dtype=complex), UNITARY)
    with pytest.raises(DomainError):
        unitary_rank_one(v, np.array([1.0, 0.0]), 1.0)
    with pytest.raises(DomainError):
        unitary_rank_one(v, np.array([2.0, 0.0]), 1j)
    with pytest.raises(DomainError):
        unitary_rank_one(v, np.array([1.0, 0.0]), 2j)
