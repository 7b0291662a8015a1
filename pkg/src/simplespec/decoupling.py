"""Exact rank-one decouplings and the Cayley bridge.

A Jacobi window splits at a cut into two half-line Jacobi matrices plus a
rank-one coupling across the cut.  A CMV window splits by swapping one
Theta block of the L factor for a diagonal block, again changing the matrix
by rank one.  The Cayley transform moves between selfadjoint and unitary
rank-one problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from simplespec.errors import DomainError, SingularDecouplingError, UnboundedPreimageError
from simplespec.operators import (
    SELFADJOINT,
    UNITARY,
    CMVWindow,
    DenseOperator,
    JacobiWindow,
    cmv_factors,
    direct_sum,
    materialize_cmv,
    theta_block,
)


@dataclass(frozen=True, eq=False)
class JacobiDecoupling:
    a1: DenseOperator
    a2: DenseOperator
    phi: np.ndarray
    lam: float
    cut: int

    def reassemble(self) -> np.ndarray:
        """``a1 (+) a2 + lam * phi phi^T``."""
        return direct_sum(self.a1, self.a2).entries + self.lam * np.outer(self.phi, self.phi)


def decouple_jacobi(w: JacobiWindow, cut: int = -1) -> JacobiDecoupling:
    """Remove the bond ``a_cut`` between sites ``cut`` and ``cut + 1``.

    The bond is re-expressed as ``a_cut * (d_cut + d_{cut+1})(...)^T`` minus
    the diagonal corrections, so both halves see ``b - a_cut`` at the cut.
    """
    if not w.n_min <= cut < w.n_max:
        raise DomainError(f"cut {cut} must satisfy {w.n_min} <= cut < {w.n_max}")
    k = cut - w.n_min
    lam = float(w.a[k])
    b1 = w.b[: k + 1].copy()
    b2 = w.b[k + 1:].copy()
    b1[-1] -= lam
    b2[0] -= lam
    a1 = _tridiag(b1, w.a[:k], range(w.n_min, cut + 1))
    a2 = _tridiag(b2, w.a[k + 1:], range(cut + 1, w.n_max + 1))
    phi = np.zeros(w.size)
    phi[k] = phi[k + 1] = 1.0
    return JacobiDecoupling(a1, a2, phi, lam, cut)


def _tridiag(b, a, sites) -> DenseOperator:
    m = np.diag(np.asarray(b, dtype=float))
    idx = np.arange(len(a))
    m[idx, idx + 1] = a
    m[idx + 1, idx] = a
    return DenseOperator(m, SELFADJOINT, tuple(sites), validate=False)


@dataclass(frozen=True, eq=False)
class CMVDecoupling:
    e: DenseOperator
    e_tilde: DenseOperator
    difference: DenseOperator
    x: complex
    cut: int
    # E = E_tilde (I + (mu - 1) eta eta^*), the unitary rank-one form
    eta: np.ndarray
    mu: complex

    @property
    def split(self) -> int:
        """Row index of the first site right of the cut."""
        return self.e.index_of(self.cut + 1)

    def halves(self) -> tuple[DenseOperator, DenseOperator]:
        s = self.split
        m = self.e_tilde.entries
        labels = self.e_tilde.site_labels
        left = DenseOperator(m[:s, :s], UNITARY, labels[:s], validate=False)
        right = DenseOperator(m[s:, s:], UNITARY, labels[s:], validate=False)
        return left, right


def boundary_replacement(alpha: complex) -> complex:
    """``x = (1 + conj(alpha)) / (1 + alpha)``, unimodular for ``alpha != -1``."""
    alpha = complex(alpha)
    if abs(1.0 + alpha) < 1e-14:
        raise SingularDecouplingError(f"alpha = {alpha!r} is -1; the replacement x is undefined")
    return (1.0 + alpha.conjugate()) / (1.0 + alpha)


def decouple_cmv(w: CMVWindow, cut_alpha_index: int = -1) -> CMVDecoupling:
    """Replace ``theta(alpha_cut)`` by ``diag(x, 1)`` in the L factor."""
    j = cut_alpha_index
    if j % 2 == 0:
        raise DomainError(f"cut index {j} is even; the replaced block must belong to L")
    if not w.j_min < j < w.j_max - 1:
        raise DomainError(f"cut index {j} must satisfy {w.j_min} < j < {w.j_max - 1}")
    alpha = w.alpha_at(j)
    x = boundary_replacement(alpha)
    replacement = np.diag([x, 1.0 + 0j])
    L, M = cmv_factors(w)
    Lt, _ = cmv_factors(w, {j: replacement})
    e = materialize_cmv(w)
    e_tilde = DenseOperator(Lt @ M, UNITARY, e.site_labels)

    # diag(conj x, 1) theta(alpha) is unitary with eigenvalues 1 and mu = -conj(x);
    # minus I it is (mu - 1) eta0 eta0^*.
    k = j - w.j_min
    block = np.diag([x.conjugate(), 1.0]) @ theta_block(alpha)
    mu = -x.conjugate()
    delta = block - np.eye(2)
    col = delta[:, np.argmax(np.linalg.norm(delta, axis=0))]
    eta0 = np.zeros(w.size, dtype=complex)
    eta0[k:k + 2] = col / np.linalg.norm(col)
    eta = M.conj().T @ eta0

    diff = DenseOperator(e.entries - e_tilde.entries, validate=False)
    return CMVDecoupling(e, e_tilde, diff, x, j, eta, mu)


def cayley(a: DenseOperator) -> DenseOperator:
    """``(A + i)(A - i)^{-1}``; eigenvalues map as ``E -> (E + i)/(E - i)``."""
    if a.kind != SELFADJOINT:
        raise DomainError("cayley needs a selfadjoint operator")
    m = a.entries
    eye = np.eye(a.dim)
    # the two factors commute, so a left solve is the same product
    u = np.linalg.solve(m - 1j * eye, m + 1j * eye)
    return DenseOperator(u, UNITARY, a.site_labels, validate=False)


def inverse_cayley(u: DenseOperator, tol: float = 1e-8) -> DenseOperator:
    """Bounded selfadjoint ``A`` with ``cayley(A) = u``.

    Built spectrally: an eigenvalue ``exp(i t)`` of ``u`` maps to
    ``cot(t / 2)``.  Eigenvalue 1 is the image of infinity and is rejected.
    """
    from simplespec.spectral import eigendecompose

    if u.kind != UNITARY:
        raise DomainError("inverse_cayley needs a unitary operator")
    d = eigendecompose(u)
    dist = np.abs(d.eigenvalues - 1.0)
    if dist.size and dist.min() <= tol:
        k = int(np.argmin(dist))
        raise UnboundedPreimageError(
            f"eigenvalue {d.eigenvalues[k]:.6g} lies within {tol:g} of 1; preimage is unbounded"
        )
    t = np.angle(d.eigenvalues)
    vals = 1.0 / np.tan(t / 2.0)
    v = d.eigenvectors
    m = (v * vals) @ v.conj().T
    m = 0.5 * (m + m.conj().T)
    return DenseOperator(m, SELFADJOINT, u.site_labels, validate=False)


def unitary_rank_one(v: DenseOperator, phi, lam: complex) -> DenseOperator:
    """``W = V (I + (lam - 1) phi phi^*)`` so that ``W phi = lam V phi``."""
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    lam = complex(lam)
    if phi.size != v.dim:
        raise DomainError(f"phi has dimension {phi.size}, operator {v.dim}")
    if abs(np.linalg.norm(phi) - 1.0) > 1e-12:
        raise DomainError("phi must be a unit vector")
    if abs(abs(lam) - 1.0) > 1e-12:
        raise DomainError(f"lambda = {lam!r} is not unimodular")
    if abs(lam - 1.0) < 1e-15:
        raise DomainError("lambda = 1 gives a vanishing perturbation")
    w = v.entries + (lam - 1.0) * np.outer(v.entries @ phi, phi.conj())
    return DenseOperator(w, UNITARY, v.site_labels, validate=False)
