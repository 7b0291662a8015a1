"""Finite spectral theory: eigendecompositions, atomic spectral measures,
cyclic subspaces and the Borel/Caratheodory/Schur transforms.

In finite dimensions every spectral measure is a finite sum of point
masses.  Eigenvalues closer than a merge tolerance are treated as one
atom; the defaults scale with the spectral diameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from simplespec.errors import AmbiguousMatchError, ConvergenceError, DomainError, PoleError
from simplespec.operators import SELFADJOINT, UNITARY, DenseOperator

REAL_LINE = "real-line"
UNIT_CIRCLE = "unit-circle"

DEFAULT_REL_TOL = 1e-8
# Arnoldi rank cutoff relative to |M|.  Exactly repeated eigenvalues that
# differ only by rounding leave deflation residuals up to ~1e-8 |M|, while
# genuine directions in well-separated spectra stay above ~1e-3 |M|.
KRYLOV_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    kind: str

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def measure_kind(self) -> str:
        return UNIT_CIRCLE if self.kind == UNITARY else REAL_LINE


def eigendecompose(m: DenseOperator, tol: float | None = None) -> EigenDecomposition:
    """Unitary diagonalization of a selfadjoint or unitary operator.

    Selfadjoint input goes through the Hermitian solver (ascending real
    eigenvalues).  Unitary input goes through a complex Schur form, which
    for a normal matrix is diagonal up to rounding and keeps the basis
    orthonormal even inside degenerate eigenspaces; eigenvalues are then
    ordered by argument in ``[0, 2 pi)``.
    """
    if m.kind not in (SELFADJOINT, UNITARY):
        raise DomainError(f"eigendecompose needs a selfadjoint or unitary operator, got {m.kind}")
    a = m.entries
    n = m.dim
    if tol is None:
        tol = 1e-10 * (1.0 + m.norm_estimate())
    try:
        if m.kind == SELFADJOINT:
            vals, vecs = scipy.linalg.eigh(a)
            order = np.argsort(vals, kind="stable")
        else:
            t, vecs = scipy.linalg.schur(np.asarray(a, dtype=complex), output="complex")
            vals = np.diag(t).copy()
            order = np.lexsort((np.abs(vals), _arg(vals)))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    vals = vals[order]
    vecs = vecs[:, order]
    residual = float(np.max(np.linalg.norm(a @ vecs - vecs * vals, axis=0))) if n else 0.0
    if not residual <= tol:
        raise ConvergenceError(f"eigen-residual {residual:.3e} exceeds tolerance {tol:.3e}", residual)
    return EigenDecomposition(vals, vecs, residual, m.kind)


def _arg(z) -> np.ndarray:
    return np.mod(np.angle(z), 2.0 * np.pi)


def spectral_diameter(points, kind: str = REAL_LINE) -> float:
    pts = np.asarray(points)
    if pts.size < 2:
        return 0.0
    if kind == REAL_LINE:
        return float(np.max(pts.real) - np.min(pts.real))
    return float(np.max(np.abs(pts[:, None] - pts[None, :])))


def default_scale(points, kind: str = REAL_LINE) -> float:
    """Spectral diameter, or a unit-ish fallback for a single point."""
    diam = spectral_diameter(points, kind)
    if diam > 0:
        return diam
    pts = np.asarray(points)
    return max(1.0, float(np.max(np.abs(pts), initial=0.0)))


def _clusters(points: np.ndarray, kind: str, tol: float) -> list[np.ndarray]:
    """Single-linkage clusters of sorted points (indices into ``points``).

    On the circle the last and first cluster are joined across angle 0.
    """
    n = points.size
    if n == 0:
        return []
    if kind == REAL_LINE:
        order = np.argsort(points.real, kind="stable")
        gaps = np.diff(points.real[order])
    else:
        order = np.argsort(_arg(points), kind="stable")
        p = points[order]
        gaps = np.abs(np.diff(p))
    cuts = np.flatnonzero(gaps > tol) + 1
    groups = np.split(order, cuts)
    if kind == UNIT_CIRCLE and len(groups) > 1:
        p = points
        if abs(p[groups[-1][-1]] - p[groups[0][0]]) <= tol:
            groups[0] = np.concatenate([groups[-1], groups[0]])
            groups.pop()
    return groups


def _average(points: np.ndarray, weights: np.ndarray, kind: str):
    tw = weights.sum()
    w = weights if tw > 0 else np.ones_like(weights)
    loc = np.sum(points * w) / w.sum()
    if kind == REAL_LINE:
        return float(np.real(loc))
    return complex(loc / abs(loc)) if abs(loc) > 0 else complex(points[0])


@dataclass(frozen=True, eq=False)
class AtomicSpectralMeasure:
    locations: np.ndarray
    weights: np.ndarray
    kind: str = REAL_LINE
    discarded: float = 0.0

    def __post_init__(self):
        dtype = float if self.kind == REAL_LINE else complex
        object.__setattr__(self, "locations", np.asarray(self.locations, dtype=dtype).reshape(-1))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float).reshape(-1))
        if self.kind not in (REAL_LINE, UNIT_CIRCLE):
            raise DomainError(f"unknown measure kind {self.kind!r}")
        if self.locations.size != self.weights.size:
            raise DomainError("locations and weights must have equal length")
        if np.any(self.weights <= 0):
            raise DomainError("atom weights must be positive")

    def __len__(self) -> int:
        return self.locations.size

    @property
    def atoms(self) -> list[tuple]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def normalized(self) -> "AtomicSpectralMeasure":
        return AtomicSpectralMeasure(self.locations, self.weights / self.total_weight, self.kind)


def spectral_measure(
    d: EigenDecomposition,
    phi,
    merge_tol: float | None = None,
    weight_floor: float | None = None,
) -> AtomicSpectralMeasure:
    """Atoms ``sum |<v_k, phi>|^2`` over clusters of eigenvalues.

    Atoms at or below ``weight_floor`` (default ``1e-12 |phi|^2``) are
    dropped; their mass is kept in ``discarded``.
    """
    phi = np.asarray(phi).reshape(-1)
    if phi.size != d.dim:
        raise DomainError(f"phi has dimension {phi.size}, decomposition {d.dim}")
    kind = d.measure_kind
    if merge_tol is None:
        merge_tol = DEFAULT_REL_TOL * default_scale(d.eigenvalues, kind)
    norm2 = float(np.vdot(phi, phi).real)
    if weight_floor is None:
        weight_floor = 1e-12 * norm2
    overlaps = np.abs(d.eigenvectors.conj().T @ phi) ** 2
    locs, weights = [], []
    discarded = 0.0
    for idx in _clusters(d.eigenvalues, kind, merge_tol):
        w = float(overlaps[idx].sum())
        if w <= weight_floor:
            discarded += w
            continue
        locs.append(_average(d.eigenvalues[idx], overlaps[idx], kind))
        weights.append(w)
    return AtomicSpectralMeasure(np.array(locs), np.array(weights), kind, discarded)


def krylov_basis(m: DenseOperator, phi, tol: float = KRYLOV_TOL) -> np.ndarray:
    """Orthonormal basis of ``span{phi, M phi, M^2 phi, ...}`` (columns).

    Arnoldi with two Gram-Schmidt passes; the sequence stops once the new
    direction has norm at most ``tol * |M|``.  For unitary ``M`` forward
    powers suffice: on a finite space ``M^{-1} = M^*`` is a polynomial in
    ``M``, so the subspace generated by ``M`` and ``M^{-1}`` is the same.
    """
    phi = np.asarray(phi).reshape(-1)
    n = m.dim
    if phi.size != n:
        raise DomainError(f"phi has dimension {phi.size}, operator {n}")
    norm = np.linalg.norm(phi)
    if norm == 0:
        raise DomainError("phi must be nonzero")
    a = m.entries
    dtype = np.result_type(a, phi, float)
    q = np.zeros((n, n), dtype=dtype)
    q[:, 0] = phi / norm
    scale = m.norm_estimate()
    k = 1
    while k < n:
        w = a @ q[:, k - 1]
        for _ in range(2):
            w = w - q[:, :k] @ (q[:, :k].conj().T @ w)
        h = np.linalg.norm(w)
        if h <= tol * scale:
            break
        q[:, k] = w / h
        k += 1
    return q[:, :k]


def cyclic_subspace_basis(d: EigenDecomposition, phi, merge_tol: float | None = None,
                          weight_floor: float | None = None) -> np.ndarray:
    """Orthonormal basis ``{P(x) phi / |P(x) phi|}`` of the cyclic subspace,
    one column per atom of the spectral measure of ``phi``."""
    phi = np.asarray(phi).reshape(-1)
    kind = d.measure_kind
    if merge_tol is None:
        merge_tol = DEFAULT_REL_TOL * default_scale(d.eigenvalues, kind)
    if weight_floor is None:
        weight_floor = 1e-12 * float(np.vdot(phi, phi).real)
    coeff = d.eigenvectors.conj().T @ phi
    cols = []
    for idx in _clusters(d.eigenvalues, kind, merge_tol):
        if np.sum(np.abs(coeff[idx]) ** 2) <= weight_floor:
            continue
        v = d.eigenvectors[:, idx] @ coeff[idx]
        cols.append(v / np.linalg.norm(v))
    if not cols:
        return np.zeros((d.dim, 0), dtype=d.eigenvectors.dtype)
    return np.column_stack(cols)


def krylov_dimension(m: DenseOperator, phi, tol: float = KRYLOV_TOL) -> int:
    """Dimension of the cyclic subspace of ``phi``; ``phi`` is cyclic iff
    this equals ``m.dim``."""
    return krylov_basis(m, phi, tol).shape[1]


@dataclass(frozen=True, eq=False)
class SupportPartition:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    # weights of the common atoms in the first and second measure
    x_weights1: np.ndarray = field(default=None)
    x_weights2: np.ndarray = field(default=None)
    kind: str = REAL_LINE


def support_partition(mu1: AtomicSpectralMeasure, mu2: AtomicSpectralMeasure,
                      match_tol: float | None = None) -> SupportPartition:
    """Split the joint support into common atoms (X), atoms of ``mu2`` only
    (Y) and atoms of ``mu1`` only (Z)."""
    if mu1.kind != mu2.kind:
        raise DomainError("measures live on different spaces")
    kind = mu1.kind
    if match_tol is None:
        both = np.concatenate([mu1.locations, mu2.locations])
        match_tol = DEFAULT_REL_TOL * default_scale(both, kind)
    l1, l2 = mu1.locations, mu2.locations
    close = np.abs(l1[:, None] - l2[None, :]) <= match_tol if l1.size and l2.size \
        else np.zeros((l1.size, l2.size), dtype=bool)
    if np.any(close.sum(axis=1) > 1) or np.any(close.sum(axis=0) > 1):
        raise AmbiguousMatchError(
            f"an atom matches several atoms within {match_tol:.3e}; use a smaller merge tolerance"
        )
    i1, i2 = np.nonzero(close)
    x = [
        _average(np.array([l1[i], l2[j]]), np.array([mu1.weights[i], mu2.weights[j]]), kind)
        for i, j in zip(i1, i2)
    ]
    dtype = float if kind == REAL_LINE else complex
    only1 = np.setdiff1d(np.arange(l1.size), i1)
    only2 = np.setdiff1d(np.arange(l2.size), i2)
    return SupportPartition(
        np.array(x, dtype=dtype),
        l2[only2],
        l1[only1],
        mu1.weights[i1],
        mu2.weights[i2],
        kind,
    )


def match_points(p, q, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs ``(i, j)`` with ``|p_i - q_j| <= tol``."""
    p = np.asarray(p).reshape(-1)
    q = np.asarray(q).reshape(-1)
    if not p.size or not q.size:
        return np.array([], dtype=int), np.array([], dtype=int)
    return np.nonzero(np.abs(p[:, None] - q[None, :]) <= tol)


def borel_transform(mu: AtomicSpectralMeasure, z: complex, pole_guard: float = 1e-12) -> complex:
    """``F(z) = sum w_k / (x_k - z)``; Herglotz on the upper half plane."""
    if mu.kind != REAL_LINE:
        raise DomainError("borel_transform needs a measure on the real line")
    diff = mu.locations - complex(z)
    near = np.flatnonzero(np.abs(diff) <= pole_guard)
    if near.size:
        x = float(mu.locations[near[0]])
        raise PoleError(f"z = {z!r} is within {pole_guard:g} of the atom at {x!r}", x)
    return complex(np.sum(mu.weights / diff))


def caratheodory(mu: AtomicSpectralMeasure, z: complex) -> complex:
    """``F(z) = sum w_k (x_k + z) / (x_k - z)`` for ``|z| < 1``."""
    if mu.kind != UNIT_CIRCLE:
        raise DomainError("caratheodory needs a measure on the unit circle")
    z = complex(z)
    if not abs(z) < 1.0:
        raise DomainError(f"|z| = {abs(z)!r} must be < 1")
    x = mu.locations
    return complex(np.sum(mu.weights * (x + z) / (x - z)))


def schur_function(mu: AtomicSpectralMeasure, z: complex) -> complex:
    """``g(z) = (F(z) - 1) / (z (F(z) + 1))``, the inverse of
    ``F = (1 + z g) / (1 - z g)``."""
    z = complex(z)
    if z == 0:
        raise DomainError("schur_function is evaluated off the origin")
    f = caratheodory(mu, z)
    if abs(f + 1.0) == 0.0:
        raise PoleError("Caratheodory function equals -1", None)
    return (f - 1.0) / (z * (f + 1.0))


def circle_grid(radius: float = 0.9, count: int = 128) -> np.ndarray:
    if not 0.0 < radius < 1.0:
        raise DomainError("grid radius must lie in (0, 1)")
    return radius * np.exp(2j * np.pi * np.arange(count) / count)


@dataclass(frozen=True, eq=False)
class MultiplicityProfile:
    locations: np.ndarray
    multiplicities: np.ndarray
    min_gap: float

    @property
    def simple(self) -> bool:
        return bool(np.all(self.multiplicities == 1))

    def as_dict(self) -> dict:
        return {loc: int(k) for loc, k in zip(self.locations.tolist(), self.multiplicities)}


def multiplicity_profile(d: EigenDecomposition, gap_tol: float | None = None) -> MultiplicityProfile:
    """Cluster eigenvalues within ``gap_tol`` and report cluster sizes and the
    smallest distance between distinct clusters."""
    kind = d.measure_kind
    if gap_tol is None:
        gap_tol = DEFAULT_REL_TOL * default_scale(d.eigenvalues, kind)
    groups = _clusters(d.eigenvalues, kind, gap_tol)
    locs = np.array([_average(d.eigenvalues[g], np.ones(g.size), kind) for g in groups],
                    dtype=float if kind == REAL_LINE else complex)
    mult = np.array([g.size for g in groups], dtype=int)
    return MultiplicityProfile(locs, mult, min_separation(locs, kind))


def min_separation(points, kind: str = REAL_LINE) -> float:
    pts = np.asarray(points).reshape(-1)
    if pts.size < 2:
        return float("inf")
    if kind == REAL_LINE:
        return float(np.min(np.diff(np.sort(pts.real))))
    p = pts[np.argsort(_arg(pts))]
    return float(np.min(np.abs(p - np.roll(p, 1))))


def atom_overlap_excess(mu_a: AtomicSpectralMeasure, mu_b: AtomicSpectralMeasure, coupling: float) -> float:
    """``max over atom pairs of coupling * sqrt(w_a w_b) - |x_a - x_b|``.

    For two operators differing by ``coupling * phi phi^*`` (selfadjoint,
    ``coupling = |lambda|``) or by ``V (mu - 1) phi phi^*`` (unitary,
    ``coupling = |mu - 1|``) and measures taken at ``phi``, this quantity is
    never positive in exact arithmetic: two atoms at distance ``d`` satisfy
    ``coupling * sqrt(w_a w_b) <= d``, so in particular no location carries
    weight in both measures.
    """
    if mu_a.kind != mu_b.kind:
        raise DomainError("measures live on different spaces")
    if not len(mu_a) or not len(mu_b):
        return float("-inf")
    dist = np.abs(mu_a.locations[:, None] - mu_b.locations[None, :])
    mass = coupling * np.sqrt(np.outer(mu_a.weights, mu_b.weights))
    return float(np.max(mass - dist))


def format_measure_csv(mu: AtomicSpectralMeasure) -> str:
    """``# kind: ...`` header, then ``location_re,location_im,weight`` rows."""
    lines = [f"# kind: {mu.kind}", "location_re,location_im,weight"]
    for loc, w in zip(mu.locations, mu.weights):
        z = complex(loc)
        lines.append(f"{z.real:.17g},{z.imag:.17g},{w:.17g}")
    return "\n".join(lines) + "\n"


def parse_measure_csv(text: str) -> AtomicSpectralMeasure:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# kind:"):
        raise DomainError("measure CSV must start with a '# kind:' header")
    kind = lines[0].split(":", 1)[1].strip()
    rows = [ln.split(",") for ln in lines[2:]]
    locs = [complex(float(r[0]), float(r[1])) for r in rows]
    weights = [float(r[2]) for r in rows]
    if kind == REAL_LINE:
        locs = [z.real for z in locs]
    return AtomicSpectralMeasure(np.array(locs), np.array(weights), kind)
