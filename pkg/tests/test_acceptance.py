"""End-to-end acceptance runs at full ensemble sizes.

Each criterion records one PASS/FAIL line; the lines are printed in the
terminal summary (and immediately when run with ``-s``).
"""

import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from simplespec import reports
from simplespec.cli import main
from simplespec.harness import (
    verify_corollary21,
    verify_overlap_structure,
    verify_theorem2,
    verify_unitary_ad,
)
from simplespec.operators import SELFADJOINT, UNITARY, DenseOperator
from simplespec.trials import run_trials

SEED = 0
HALF = np.array([1.0, 1.0]) / np.sqrt(2)
S5 = np.sqrt(5.0)

# first-run report bytes per (theorem, trials, params), reused by criterion 10
_RUNS = {}


def record(number, title, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def sa(m):
    return DenseOperator(np.asarray(m, dtype=float), SELFADJOINT)


def timed_run(theorem, trials, **params):
    t0 = time.perf_counter()
    out = run_trials(theorem, trials, seed=SEED, **params)
    elapsed = time.perf_counter() - t0
    _RUNS[(theorem, trials, tuple(sorted(params.items())))] = [r.to_json() for r in out]
    return out, elapsed


def count(out, status):
    return sum(r.status == status for r in out)


def worst(out, name):
    return max(c.measured for r in out for c in r.checks if c.name == name)


def test_criterion_01_jacobi_decoupling():
    out, t = timed_run("dec-jacobi", 500, size=200)
    ok = count(out, reports.PASSED) == 500 and t < 10
    record(1, "Jacobi decoupling exact", ok,
           f"{count(out, reports.PASSED)}/500, max residual {worst(out, 'reconstruction_residual'):.1e}, {t:.1f}s")


def test_criterion_02_cmv_decoupling():
    out, t = timed_run("dec-cmv", 500, size=200, radius=0.9)
    ok = count(out, reports.PASSED) == 500 and t < 60
    record(2, "CMV rank-one decoupling", ok,
           f"{count(out, reports.PASSED)}/500, max sigma2 {worst(out, 'difference_sigma2'):.1e}, "
           f"max unitarity {worst(out, 'e_tilde_unitarity'):.1e}, {t:.1f}s")


def test_criterion_03_rank_one_disjointness():
    out, t = timed_run("thm1", 1000, size=50)
    ok = count(out, reports.PASSED) == 1000 and t < 60
    record(3, "rank-one spectra disjoint, secular equation, simple", ok,
           f"{count(out, reports.PASSED)}/1000, max secular {worst(out, 'secular_residual'):.1e}, {t:.1f}s")


def test_criterion_04_coupled_sum_simple():
    out, t = timed_run("thm2", 1000, size=20)
    a = sa(np.diag([0.0, 1.0]))
    hand = verify_theorem2(a, a, HALF, HALF, 1.0)
    expected = np.array([0.0, (3 - S5) / 2, 1.0, (3 + S5) / 2])
    hand_err = float(np.max(np.abs(np.sort(hand.info["C_eigenvalues"]) - expected)))
    degenerate = all(r.info["B_max_multiplicity"] == 2 for r in out)
    ok = (count(out, reports.PASSED) == 1000 and degenerate and hand.passed
          and hand_err <= 1e-12 and t < 60)
    record(4, "coupled direct sum has simple spectrum", ok,
           f"{count(out, reports.PASSED)}/1000 with doubled B spectrum, handcrafted error {hand_err:.1e}, {t:.1f}s")


def test_criterion_05_common_atoms():
    a = sa(np.diag([0.0, 1.0]))
    hand = [
        verify_corollary21(a, a, HALF, HALF, 1.0),
        verify_corollary21(sa(np.diag([0.0, 2.0])), sa(np.diag([1.0, 3.0])), HALF, HALF, 1.0),
        verify_corollary21(a, sa(np.diag([50.0, 51.0])), HALF, HALF, 1.0),
    ]
    out, _ = timed_run("cor21", 200, size=12)
    ok = all(r.passed for r in hand) and count(out, reports.PASSED) == 200
    record(5, "intersection of spectra equals common-atom set", ok,
           f"handcrafted {sum(r.passed for r in hand)}/3, ensemble {count(out, reports.PASSED)}/200")


def test_criterion_06_orthogonal_splitting():
    a = sa(np.diag([0.0, 1.0]))
    hand = [
        verify_overlap_structure(a, a, HALF, HALF),
        verify_overlap_structure(sa(np.diag([0.0, 2.0])), sa(np.diag([1.0, 3.0])), HALF, HALF),
        verify_overlap_structure(a, sa(np.diag([1.0, 2.0])), HALF, HALF),
    ]
    out, _ = timed_run("eq21", 200, size=12)
    ok = all(r.passed for r in hand) and count(out, reports.PASSED) == 200
    record(6, "cyclic subspaces orthogonal, complement dimension = |X|", ok,
           f"handcrafted {sum(r.passed for r in hand)}/3, ensemble {count(out, reports.PASSED)}/200, "
           f"max cross overlap {worst(out, 'krylov_cross_overlap'):.1e}")


def test_criterion_07_schur_identity():
    out, _ = timed_run("eq43", 200, size=32, grid_radius=0.9, grid_count=128)
    scalar = verify_unitary_ad(DenseOperator([[1.0 + 0j]], UNITARY), np.array([1.0]), 1j)
    scalar_res = next(c.measured for c in scalar.checks if c.name == "schur_identity_residual")
    ok = count(out, reports.PASSED) == 200 and scalar.passed and scalar_res <= 4 * np.finfo(float).eps
    record(7, "Schur functions related by the coupling phase", ok,
           f"{count(out, reports.PASSED)}/200, max residual {worst(out, 'schur_identity_residual'):.1e}, "
           f"scalar residual {scalar_res:.1e}")


def test_criterion_08_cayley_pipeline():
    out, _ = timed_run("thm42", 100, size=10)
    skipped = count(out, reports.SKIPPED)
    ran = [r for r in out if r.status != reports.SKIPPED]
    ok = all(r.passed for r in ran) and skipped / len(out) < 0.05
    sigma2 = max((c.measured for r in ran for c in r.checks if c.name == "resolvent_difference_sigma2"),
                 default=0.0)
    record(8, "Cayley pipeline: rank-one resolvent difference, simple spectrum", ok,
           f"{sum(r.passed for r in ran)}/{len(ran)} non-skipped, skip rate {skipped / len(out):.0%}, "
           f"max sigma2 {sigma2:.1e}")


def test_criterion_09_jacobi_and_cmv():
    t0 = time.perf_counter()
    jac, _ = timed_run("thm31", 20, size=500, coupling=1.0)
    cmv, _ = timed_run("thm51", 20, size=128, radius=0.9)
    t = time.perf_counter() - t0
    ok = count(jac, reports.PASSED) == 20 and count(cmv, reports.PASSED) == 20 and t < 300
    record(9, "Anderson and random CMV windows have simple spectrum", ok,
           f"Jacobi {count(jac, reports.PASSED)}/20, CMV {count(cmv, reports.PASSED)}/20, {t:.1f}s")


ENSEMBLES = [
    ("dec-jacobi", 500, dict(size=200)),
    ("dec-cmv", 500, dict(size=200, radius=0.9)),
    ("thm1", 1000, dict(size=50)),
    ("thm2", 1000, dict(size=20)),
    ("cor21", 200, dict(size=12)),
    ("eq21", 200, dict(size=12)),
    ("eq43", 200, dict(size=32, grid_radius=0.9, grid_count=128)),
    ("thm42", 100, dict(size=10)),
    ("thm31", 20, dict(size=500, coupling=1.0)),
    ("thm51", 20, dict(size=128, radius=0.9)),
]


def test_criterion_10_determinism(capsys):
    mismatched = []
    for theorem, trials, params in ENSEMBLES:
        key = (theorem, trials, tuple(sorted(params.items())))
        first = _RUNS.get(key)
        if first is None:
            first = [r.to_json() for r in run_trials(theorem, trials, seed=SEED, **params)]
        second = [r.to_json() for r in run_trials(theorem, trials, seed=SEED, jobs=2, **params)]
        if first != second:
            mismatched.append(theorem)
    argv = ["verify", "--theorem", "thm2", "--trials", "20", "--seed", "42", "--no-timestamp"]
    main(argv)
    cli_first = capsys.readouterr().out
    main(argv)
    cli_second = capsys.readouterr().out
    json.loads(cli_first.splitlines()[-1])
    if cli_first != cli_second:
        mismatched.append("cli")
    record(10, "byte-identical reruns", not mismatched,
           f"{len(ENSEMBLES)} ensembles rerun in parallel plus CLI; mismatches: {mismatched or 'none'}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
