"""Finite windows of whole-line Jacobi and extended CMV operators.

Windows carry explicit integer site ranges.  Materialization produces a
:class:`DenseOperator`, a plain square array plus a kind tag and the site
labels of its rows/columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from simplespec.errors import DomainError

SELFADJOINT = "selfadjoint"
UNITARY = "unitary"
GENERAL = "general"
KINDS = (SELFADJOINT, UNITARY, GENERAL)

_HERMITIAN_TOL = 1e-12
_UNITARY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """A square matrix with a kind tag and increasing integer site labels."""

    entries: np.ndarray
    kind: str = GENERAL
    site_labels: tuple = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"operator entries must be square, got shape {m.shape}")
        if not np.issubdtype(m.dtype, np.complexfloating):
            m = m.astype(float)
        object.__setattr__(self, "entries", m)
        if self.kind not in KINDS:
            raise DomainError(f"unknown operator kind {self.kind!r}")
        labels = self.site_labels
        if labels is None:
            labels = tuple(range(m.shape[0]))
        labels = tuple(int(s) for s in labels)
        if len(labels) != m.shape[0]:
            raise DomainError("site_labels must match the matrix dimension")
        if any(b <= a for a, b in zip(labels, labels[1:])):
            raise DomainError("site_labels must be strictly increasing")
        object.__setattr__(self, "site_labels", labels)
        if self.validate:
            if self.kind == SELFADJOINT:
                dev = hermitian_deviation(m)
                if dev > _HERMITIAN_TOL * (1.0 + np.max(np.abs(m), initial=0.0)):
                    raise DomainError(f"matrix is not selfadjoint (deviation {dev:.3e})")
            elif self.kind == UNITARY:
                dev = unitarity_residual(m)
                if dev > _UNITARY_TOL:
                    raise DomainError(f"matrix is not unitary (residual {dev:.3e})")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def index_of(self, site: int) -> int:
        try:
            return self.site_labels.index(int(site))
        except ValueError:
            raise DomainError(f"site {site} is not part of this operator") from None

    def norm_estimate(self) -> float:
        """Max absolute row sum, an upper bound for the spectral norm."""
        if self.dim == 0:
            return 0.0
        return float(np.max(np.sum(np.abs(self.entries), axis=1)))


def hermitian_deviation(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def unitarity_residual(m: np.ndarray) -> float:
    """Max entry of ``|M* M - I|``."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def direct_sum(first: DenseOperator, second: DenseOperator, kind: str | None = None) -> DenseOperator:
    """Block-diagonal sum; labels are concatenated when they stay increasing."""
    n1, n2 = first.dim, second.dim
    dtype = np.result_type(first.entries, second.entries)
    m = np.zeros((n1 + n2, n1 + n2), dtype=dtype)
    m[:n1, :n1] = first.entries
    m[n1:, n1:] = second.entries
    labels = first.site_labels + second.site_labels
    if n1 and n2 and labels[n1] <= labels[n1 - 1]:
        labels = None
    if kind is None:
        kind = first.kind if first.kind == second.kind else GENERAL
    return DenseOperator(m, kind, labels, validate=False)


# ---------------------------------------------------------------------------
# Jacobi windows


@dataclass(frozen=True, eq=False)
class JacobiWindow:
    """Sites ``n_min..n_max``; ``b[k]`` sits at ``n_min + k`` and ``a[k]``
    couples sites ``n_min + k`` and ``n_min + k + 1``."""

    n_min: int
    n_max: int
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        a = np.asarray(self.a, dtype=float).reshape(-1)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)
        if self.n_max < self.n_min:
            raise DomainError(f"empty window: n_min={self.n_min} > n_max={self.n_max}")
        if b.size != self.n_max - self.n_min + 1:
            raise DomainError(f"expected {self.n_max - self.n_min + 1} diagonal values, got {b.size}")
        if a.size != b.size - 1:
            raise DomainError(f"expected {b.size - 1} off-diagonal values, got {a.size}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DomainError("Jacobi coefficients must be finite")
        bad = np.flatnonzero(a <= 0)
        if bad.size:
            k = int(bad[0])
            raise DomainError(f"off-diagonal a_{self.n_min + k} = {a[k]!r} is not positive")

    @property
    def sites(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @property
    def size(self) -> int:
        return self.b.size

    def b_at(self, n: int) -> float:
        return float(self.b[n - self.n_min])

    def a_at(self, n: int) -> float:
        return float(self.a[n - self.n_min])

    def norm_estimate(self) -> float:
        """``sup(|a_n| + |b_n|)`` over the window."""
        a_pad = np.append(self.a, 0.0)
        return float(np.max(np.abs(a_pad) + np.abs(self.b)))


def free_jacobi(n_min: int, n_max: int) -> JacobiWindow:
    size = n_max - n_min + 1
    return JacobiWindow(n_min, n_max, np.zeros(size), np.ones(max(size - 1, 0)))


def materialize_jacobi(w: JacobiWindow) -> DenseOperator:
    """Tridiagonal matrix with ``(n, n) = b_n`` and ``(n, n+1) = (n+1, n) = a_n``."""
    m = np.diag(w.b)
    if w.a.size:
        idx = np.arange(w.a.size)
        m[idx, idx + 1] = w.a
        m[idx + 1, idx] = w.a
    return DenseOperator(m, SELFADJOINT, tuple(w.sites), validate=False)


def anderson_jacobi(seed: int, n_min: int, n_max: int, coupling: float) -> JacobiWindow:
    """Anderson model window: ``a = 1`` and ``b_n`` uniform on ``[-coupling, coupling]``."""
    if not n_min <= -1 < 0 <= n_max:
        raise DomainError(f"site range {n_min}..{n_max} must contain -1 and 0")
    if coupling < 0:
        raise DomainError("coupling must be non-negative")
    rng = np.random.default_rng(seed)
    size = n_max - n_min + 1
    b = rng.uniform(-coupling, coupling, size) if coupling > 0 else np.zeros(size)
    return JacobiWindow(n_min, n_max, b, np.ones(size - 1))


# ---------------------------------------------------------------------------
# CMV windows


@dataclass(frozen=True, eq=False)
class CMVWindow:
    """Verblunsky coefficients ``alpha[k] = alpha_{j_min + k}`` for
    ``j_min <= j < j_max`` acting on sites ``j_min..j_max - 1``.

    The two blocks that straddle the window edges are replaced by 1x1
    unimodular closures: site ``j_min`` gets ``boundary_left`` and site
    ``j_max - 1`` gets ``boundary_right``.  The last coefficient
    ``alpha_{j_max - 1}`` is therefore superseded by the right closure.
    """

    j_min: int
    j_max: int
    alpha: np.ndarray
    boundary_left: complex = 1.0
    boundary_right: complex = 1.0

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex).reshape(-1)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "boundary_left", complex(self.boundary_left))
        object.__setattr__(self, "boundary_right", complex(self.boundary_right))
        if self.j_min % 2 or self.j_max % 2:
            raise DomainError(f"cut indices must be even, got {self.j_min}, {self.j_max}")
        if self.j_max <= self.j_min:
            raise DomainError("empty CMV window")
        if alpha.size != self.j_max - self.j_min:
            raise DomainError(f"expected {self.j_max - self.j_min} coefficients, got {alpha.size}")
        # |alpha| = 1 is allowed: such a coefficient splits the window, and
        # it is the one value the decoupling step must be able to reject
        bad = np.flatnonzero(~(np.abs(alpha) <= 1.0))
        if bad.size:
            j = int(bad[0])
            raise DomainError(f"|alpha_{self.j_min + j}| = {abs(alpha[j])!r} exceeds 1")
        for name in ("boundary_left", "boundary_right"):
            val = getattr(self, name)
            if abs(abs(val) - 1.0) > 1e-12:
                raise DomainError(f"{name} = {val!r} is not unimodular")

    @property
    def sites(self) -> range:
        return range(self.j_min, self.j_max)

    @property
    def size(self) -> int:
        return self.j_max - self.j_min

    def alpha_at(self, j: int) -> complex:
        return complex(self.alpha[j - self.j_min])

    def rho(self) -> np.ndarray:
        return np.sqrt(1.0 - np.abs(self.alpha) ** 2)


def theta_block(alpha: complex) -> np.ndarray:
    """``[[conj(a), rho], [rho, -a]]`` with ``rho = sqrt(1 - |a|^2)``."""
    alpha = complex(alpha)
    mod2 = abs(alpha) ** 2
    if mod2 > 1.0 + 1e-15:
        raise DomainError(f"|alpha| = {abs(alpha)!r} exceeds 1")
    rho = np.sqrt(max(0.0, 1.0 - mod2))
    return np.array([[alpha.conjugate(), rho], [rho, -alpha]], dtype=complex)


def cmv_factors(w: CMVWindow, replace: dict | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The two block-diagonal factors ``(L, M)`` with ``E = L @ M``.

    ``M`` carries ``theta(alpha_j)`` on sites ``(j, j+1)`` for even ``j``,
    ``L`` for odd ``j``.  ``replace`` maps an odd index ``j`` to a 2x2 block
    used instead of ``theta(alpha_j)``.
    """
    replace = replace or {}
    n = w.size
    L = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    for k in range(0, n, 2):
        M[k:k + 2, k:k + 2] = theta_block(w.alpha[k])
    L[0, 0] = w.boundary_left
    L[n - 1, n - 1] = w.boundary_right
    for k in range(1, n - 1, 2):
        j = w.j_min + k
        L[k:k + 2, k:k + 2] = replace[j] if j in replace else theta_block(w.alpha[k])
    return L, M


def materialize_cmv(w: CMVWindow) -> DenseOperator:
    L, M = cmv_factors(w)
    return DenseOperator(L @ M, UNITARY, tuple(w.sites))


def random_verblunsky(seed: int, j_min: int, j_max: int, radius: float) -> CMVWindow:
    """Coefficients uniform on the disc ``|z| <= radius``; closures 1."""
    if not 0.0 <= radius < 1.0:
        raise DomainError(f"radius must lie in [0, 1), got {radius!r}")
    rng = np.random.default_rng(seed)
    n = j_max - j_min
    if n <= 0:
        raise DomainError("empty CMV window")
    r = radius * np.sqrt(rng.uniform(size=n))
    t = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return CMVWindow(j_min, j_max, r * np.exp(1j * t))


# ---------------------------------------------------------------------------
# rank-one couplings


@dataclass(frozen=True, eq=False)
class RankOneCoupling:
    phi: np.ndarray
    lam: complex

    def __post_init__(self):
        phi = np.asarray(self.phi)
        if not np.issubdtype(phi.dtype, np.complexfloating):
            phi = phi.astype(float)
        object.__setattr__(self, "phi", phi.reshape(-1))
        if not np.any(phi):
            raise DomainError("coupling vector phi must be nonzero")
        if self.lam == 0:
            raise DomainError("coupling constant must be nonzero")


def apply_rank_one(base: DenseOperator, c: RankOneCoupling) -> DenseOperator:
    """``base + lam * phi phi^*`` for selfadjoint ``base`` and real ``lam``."""
    if base.kind != SELFADJOINT:
        raise DomainError("apply_rank_one needs a selfadjoint base")
    if c.phi.size != base.dim:
        raise DomainError(f"phi has dimension {c.phi.size}, operator {base.dim}")
    lam = complex(c.lam)
    if lam.imag != 0.0:
        raise DomainError("coupling constant must be real for a selfadjoint base")
    if lam.real == 0.0:
        raise DomainError("coupling constant must be nonzero")
    m = base.entries + lam.real * np.outer(c.phi, c.phi.conj())
    return DenseOperator(m, SELFADJOINT, base.site_labels, validate=False)


# ---------------------------------------------------------------------------
# window files


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_window(w: JacobiWindow | CMVWindow) -> str:
    """Plain-text window format.

    Jacobi: header ``jacobi n_min n_max``, then the diagonal (``index value``
    for each site) followed by the off-diagonal (``index value`` for each
    ``a_n``).  CMV: header ``cmv j_min j_max bl_re bl_im br_re br_im`` then
    ``index re im`` per coefficient.
    """
    lines = []
    if isinstance(w, JacobiWindow):
        lines.append(f"jacobi {w.n_min} {w.n_max}")
        lines.extend(f"{n} {_fmt(v)}" for n, v in zip(w.sites, w.b))
        lines.extend(f"{w.n_min + k} {_fmt(v)}" for k, v in enumerate(w.a))
    elif isinstance(w, CMVWindow):
        bl, br = w.boundary_left, w.boundary_right
        lines.append(
            f"cmv {w.j_min} {w.j_max} {_fmt(bl.real)} {_fmt(bl.imag)} {_fmt(br.real)} {_fmt(br.imag)}"
        )
        lines.extend(f"{j} {_fmt(v.real)} {_fmt(v.imag)}" for j, v in zip(w.sites, w.alpha))
    else:
        raise TypeError(f"cannot serialize {type(w).__name__}")
    return "\n".join(lines) + "\n"


def parse_window(text: str) -> JacobiWindow | CMVWindow:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise DomainError("window file is empty")
    head, body = rows[0], rows[1:]
    try:
        if head[0] == "jacobi" and len(head) == 3:
            n_min, n_max = int(head[1]), int(head[2])
            size = n_max - n_min + 1
            if len(body) != 2 * size - 1 or any(len(r) != 2 for r in body):
                raise DomainError(f"jacobi window {n_min}..{n_max} needs {2 * size - 1} 'index value' lines")
            diag, off = body[:size], body[size:]
            _check_indices([int(r[0]) for r in diag], n_min)
            _check_indices([int(r[0]) for r in off], n_min)
            return JacobiWindow(n_min, n_max, [float(r[1]) for r in diag], [float(r[1]) for r in off])
        if head[0] == "cmv" and len(head) == 7:
            j_min, j_max = int(head[1]), int(head[2])
            bl = complex(float(head[3]), float(head[4]))
            br = complex(float(head[5]), float(head[6]))
            if len(body) != j_max - j_min or any(len(r) != 3 for r in body):
                raise DomainError(f"cmv window {j_min}..{j_max} needs {j_max - j_min} 'index re im' lines")
            _check_indices([int(r[0]) for r in body], j_min)
            alpha = [complex(float(r[1]), float(r[2])) for r in body]
            return CMVWindow(j_min, j_max, alpha, bl, br)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed window file: {exc}") from exc
    raise DomainError(f"unrecognized window header: {' '.join(head)!r}")


def _check_indices(indices: Sequence[int], start: int) -> None:
    if list(indices) != list(range(start, start + len(indices))):
        raise DomainError("window indices must be consecutive starting at the header's lower site")


def save_window(w: JacobiWindow | CMVWindow, path) -> None:
    Path(path).write_text(format_window(w))


def load_window(path) -> JacobiWindow | CMVWindow:
    return parse_window(Path(path).read_text())
