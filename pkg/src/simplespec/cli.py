"""Command-line front end.

Exit codes: 0 all checks pass, 1 verification failures, 2 usage or
configuration errors, 3 numerical errors (convergence, pole, singular
decoupling, unbounded preimage).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from simplespec import reports
from simplespec.decoupling import decouple_cmv, decouple_jacobi
from simplespec.errors import DomainError, NumericalError
from simplespec.harness import Tolerances, verify_cmv_simplicity, verify_jacobi_simplicity
from simplespec.operators import (
    CMVWindow,
    JacobiWindow,
    anderson_jacobi,
    format_window,
    free_jacobi,
    load_window,
    materialize_cmv,
    materialize_jacobi,
    random_verblunsky,
    unitarity_residual,
)
from simplespec.spectral import (
    DEFAULT_REL_TOL,
    default_scale,
    eigendecompose,
    format_measure_csv,
    multiplicity_profile,
    spectral_measure,
)
from simplespec.trials import TRIALS, cmv_range, run_trials

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

MODELS = ("free", "anderson", "cmv-random")
TRIAL_DEFAULTS = {
    "thm1": dict(size=50),
    "thm2": dict(size=20),
    "cor21": dict(size=12),
    "eq21": dict(size=12),
    "eq43": dict(size=32),
    "thm42": dict(size=10),
    "thm31": dict(size=500),
    "thm51": dict(size=128),
    "dec-jacobi": dict(size=200),
    "dec-cmv": dict(size=200),
}


class UsageError(Exception):
    pass


def _positive(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return x


def _nonneg_int(value: str) -> int:
    x = int(value)
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return x


def _add_source(p, default_size=None):
    p.add_argument("--input", type=Path, help="window file (operator-core text format)")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--size", type=int, default=default_size)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--coupling", type=float, default=1.0, help="Anderson disorder strength")
    p.add_argument("--radius", type=float, default=0.9, help="Verblunsky coefficient radius")


def _add_tolerances(p):
    d = Tolerances()
    p.add_argument("--tol-gap", type=_positive, default=d.gap, help="relative gap / matching tolerance")
    p.add_argument("--tol-identity", type=_positive, default=d.identity)
    p.add_argument("--tol-rank", type=_positive, default=d.rank_one)
    p.add_argument("--tol-secular", type=_positive, default=d.secular)
    p.add_argument("--tol-krylov", type=_positive, default=d.krylov)
    p.add_argument("--tol-resolvent", type=_positive, default=d.resolvent_rank)
    p.add_argument("--tol-unbounded", type=_positive, default=d.unbounded)


def _tolerances(args) -> Tolerances:
    return Tolerances(
        gap=args.tol_gap,
        identity=args.tol_identity,
        rank_one=args.tol_rank,
        secular=args.tol_secular,
        krylov=args.tol_krylov,
        resolvent_rank=args.tol_resolvent,
        unbounded=args.tol_unbounded,
    )


def _window_from(args):
    if args.input is not None:
        if not args.input.exists():
            raise UsageError(f"no such file: {args.input}")
        return load_window(args.input)
    if args.model is None:
        raise UsageError("give --input FILE or --model")
    size = args.size if args.size is not None else 10
    if size < 2:
        raise UsageError(f"--size must be at least 2, got {size}")
    if args.model == "free":
        n_min = -(size // 2)
        return free_jacobi(n_min, n_min + size - 1)
    if args.model == "anderson":
        n_min = -(size // 2)
        return anderson_jacobi(args.seed, n_min, n_min + size - 1, args.coupling)
    j_min, j_max = cmv_range(size)
    return random_verblunsky(args.seed, j_min, j_max, args.radius)


def _operator_of(w):
    return materialize_jacobi(w) if isinstance(w, JacobiWindow) else materialize_cmv(w)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _timestamp(args) -> dict:
    if getattr(args, "no_timestamp", False):
        return {}
    return {"timestamp": datetime.now(timezone.utc).isoformat()}


# ---------------------------------------------------------------------------


def cmd_construct(args) -> int:
    w = _window_from(args)
    text = format_window(w)
    op = _operator_of(w)
    summary = {
        "schema": reports.SCHEMA_VERSION,
        "kind": "jacobi" if isinstance(w, JacobiWindow) else "cmv",
        "dimension": op.dim,
        "norm_estimate": w.norm_estimate() if isinstance(w, JacobiWindow) else 1.0,
        "out": str(args.out) if args.out else None,
    }
    if args.out is None:
        sys.stdout.write(text)
        sys.stderr.write(json.dumps(summary) + "\n")
    else:
        args.out.write_text(text)
        sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


def _array_json(m) -> list:
    """Nested lists; complex entries become ``[re, im]`` pairs."""
    m = np.asarray(m)
    if np.iscomplexobj(m):
        return np.stack([m.real, m.imag], axis=-1).tolist()
    return m.tolist()


def cmd_decouple(args) -> int:
    w = _window_from(args)
    tol = _tolerances(args)
    report = reports.VerificationReport("decouple")
    pieces = {}
    if isinstance(w, JacobiWindow):
        cut = -1 if args.cut is None else args.cut
        dec = decouple_jacobi(w, cut)
        j = materialize_jacobi(w).entries
        norm = float(np.linalg.norm(j, 2))
        report.add("reconstruction_residual", float(np.max(np.abs(j - dec.reassemble()))), 2.0 ** -50 * norm)
        halves = np.zeros_like(j)
        n1 = dec.a1.dim
        halves[:n1, :n1] = dec.a1.entries
        halves[n1:, n1:] = dec.a2.entries
        sv = np.linalg.svd(j - halves, compute_uv=False)
        report.add("difference_sigma2", sv[1] if sv.size > 1 else 0.0, tol.rank_one * norm)
        report.info.update(cut=cut, coupling=dec.lam, a1_corner=float(dec.a1.entries[-1, -1]),
                           a2_corner=float(dec.a2.entries[0, 0]))
        pieces = {"a1": dec.a1.entries, "a2": dec.a2.entries, "phi": dec.phi}
        report.inputs_digest = {"window": "jacobi", "n_min": w.n_min, "n_max": w.n_max}
    else:
        cut = -1 if args.cut is None else args.cut
        dec = decouple_cmv(w, cut)
        e = dec.e.entries
        sv = np.linalg.svd(e - dec.e_tilde.entries, compute_uv=False)
        report.add("difference_sigma2", sv[1] if sv.size > 1 else 0.0, tol.rank_one * float(np.linalg.norm(e, 2)))
        report.add("e_tilde_unitarity", unitarity_residual(dec.e_tilde.entries), 1e-12)
        report.info.update(cut=cut, x=dec.x, mu=dec.mu)
        pieces = {"e_tilde": dec.e_tilde.entries, "difference": dec.difference.entries, "eta": dec.eta}
        report.inputs_digest = {"window": "cmv", "j_min": w.j_min, "j_max": w.j_max}
    doc = report.as_dict()
    if args.pieces:
        doc["pieces"] = {k: _array_json(v) for k, v in pieces.items()}
    doc.update(_timestamp(args))
    _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def _parse_vector(spec: str, labels) -> np.ndarray:
    kind, _, arg = spec.partition(":")
    if kind != "delta" or not arg:
        raise UsageError(f"unsupported vector spec {spec!r}; use delta:SITE")
    site = int(arg)
    if site not in labels:
        raise UsageError(f"site {site} is outside the window")
    v = np.zeros(len(labels))
    v[labels.index(site)] = 1.0
    return v


def cmd_spectrum(args) -> int:
    w = _window_from(args)
    op = _operator_of(w)
    d = eigendecompose(op)
    kind = d.measure_kind
    gap_tol = args.tol_gap * default_scale(d.eigenvalues, kind)
    prof = multiplicity_profile(d, gap_tol)
    cluster_size = np.empty(d.dim, dtype=int)
    for loc, k in zip(prof.locations, prof.multiplicities):
        cluster_size[np.abs(d.eigenvalues - loc) <= gap_tol] = k
    lines = [f"# spectrum kind={kind} dimension={d.dim}", "index,re,im,multiplicity"]
    for i, (e, k) in enumerate(zip(d.eigenvalues, cluster_size)):
        z = complex(e)
        lines.append(f"{i},{z.real:.17g},{z.imag:.17g},{k}")
    lines.append(f"# min_gap={prof.min_gap:.17g}")
    lines.append(f"# simple={'true' if prof.simple else 'false'}")
    text = "\n".join(lines) + "\n"
    if args.vector:
        phi = _parse_vector(args.vector, list(op.site_labels))
        mu = spectral_measure(d, phi, merge_tol=gap_tol)
        text += f"# atoms vector={args.vector} discarded={mu.discarded:.17g}\n" + format_measure_csv(mu)
    _emit(text, args.out)
    return EXIT_OK


def _trial_params(args, theorem) -> dict:
    params = dict(TRIAL_DEFAULTS[theorem])
    if args.size is not None:
        params["size"] = args.size
    if params["size"] < 2:
        raise UsageError(f"--size must be at least 2, got {params['size']}")
    if theorem in ("thm2", "cor21") and args.lam is not None:
        params["lam"] = args.lam
    if theorem == "thm1":
        if args.lam is not None:
            params["lam"] = args.lam
        params["non_cyclic"] = args.non_cyclic_demo
    if theorem in ("thm2", "cor21", "thm1") and params.get("lam", 1.0) == 0:
        raise UsageError("--lambda must be nonzero")
    if theorem == "eq43":
        params.update(grid_radius=args.grid_radius, grid_count=args.grid_count)
    if theorem == "thm31":
        params["coupling"] = args.coupling
    if theorem in ("thm51", "dec-cmv"):
        params["radius"] = args.radius
    params["tol"] = _tolerances(args)
    return params


def cmd_verify(args) -> int:
    theorem = args.theorem
    if theorem not in TRIALS:
        raise UsageError(f"unknown theorem id {theorem!r}; choose from {', '.join(TRIALS)}")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if args.input is not None:
        w = _window_from(args)
        tol = _tolerances(args)
        if theorem == "thm31" and isinstance(w, JacobiWindow):
            results = [verify_jacobi_simplicity(w, tol, digest={"input": str(args.input)})]
        elif theorem == "thm51" and isinstance(w, CMVWindow):
            results = [verify_cmv_simplicity(w, tol, digest={"input": str(args.input)})]
        else:
            raise UsageError("--input works with --theorem thm31 (jacobi) or thm51 (cmv)")
    else:
        params = _trial_params(args, theorem)
        results = run_trials(theorem, args.trials, args.seed, args.jobs, **params)
    summary = reports.summarize(results)
    summary["theorem_id"] = theorem
    summary.update(_timestamp(args))
    if args.format == "table":
        text = reports.format_table(results)
        text += " ".join(f"{k}={v}" for k, v in summary.items() if k not in ("schema", "summary")) + "\n"
    else:
        text = "".join(r.to_json() + "\n" for r in results) + json.dumps(summary) + "\n"
    _emit(text, args.out)
    return EXIT_FAIL if summary[reports.FAILED] else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplespec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="write a Jacobi or CMV window file")
    _add_source(p, default_size=10)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("decouple", help="rank-one decoupling of a window at a cut")
    _add_source(p)
    _add_tolerances(p)
    p.add_argument("--cut", type=int, help="Jacobi site or odd CMV coefficient index (default -1)")
    p.add_argument("--pieces", action="store_true", help="include the decoupled matrices in the report")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_decouple)

    p = sub.add_parser("spectrum", help="eigenvalues, multiplicities and spectral-measure atoms")
    _add_source(p)
    p.add_argument("--tol-gap", type=_positive, default=DEFAULT_REL_TOL)
    p.add_argument("--vector", help="vector for the spectral measure, e.g. delta:0")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("verify", help="run seeded verification trials")
    p.add_argument("--theorem", required=True, help=", ".join(TRIALS))
    p.add_argument("--trials", type=int, default=1)
    _add_source(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--grid-radius", type=float, default=0.9)
    p.add_argument("--grid-count", type=int, default=128)
    p.add_argument("--non-cyclic-demo", action="store_true", help="thm1 with phi an eigenvector")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--no-timestamp", action="store_true")
    _add_tolerances(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"simplespec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"simplespec: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
