"""Verification reports and their JSON / table renderings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

SCHEMA_VERSION = 1

PASSED = "passed"
FAILED = "failed"
INCONCLUSIVE = "inconclusive-precondition"
SKIPPED = "skipped"

FINITE_NOTE = (
    "finite-dimensional analog: all spectral measures are pure point, so simple singular "
    "spectrum is tested as all eigenvalues simple and disjoint singular measures as no common atoms"
)


@dataclass
class Check:
    name: str
    measured: float
    threshold: float
    relation: str = "<="
    passed: bool = field(init=False)

    def __post_init__(self):
        m, t = float(self.measured), float(self.threshold)
        if self.relation == "<=":
            self.passed = m <= t
        elif self.relation == ">":
            self.passed = m > t
        elif self.relation == "==":
            self.passed = m == t
        elif self.relation == ">=":
            self.passed = m >= t
        else:
            raise ValueError(f"unknown relation {self.relation!r}")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": _num(self.measured),
            "relation": self.relation,
            "threshold": _num(self.threshold),
            "pass": self.passed,
        }


@dataclass
class VerificationReport:
    theorem_id: str
    checks: list = field(default_factory=list)
    inputs_digest: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    precondition_failed: bool = False
    skipped: bool = False

    def add(self, name, measured, threshold, relation="<=") -> Check:
        c = Check(name, measured, threshold, relation)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks) and not self.skipped

    @property
    def status(self) -> str:
        if self.skipped:
            return SKIPPED
        if self.precondition_failed:
            return INCONCLUSIVE
        return PASSED if self.passed else FAILED

    def failed_checks(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "theorem_id": self.theorem_id,
            "status": self.status,
            "passed": self.passed,
            "header": FINITE_NOTE,
            "checks": [c.as_dict() for c in self.checks],
            "info": {k: _jsonable(v) for k, v in self.info.items()},
            "inputs_digest": {k: _jsonable(v) for k, v in self.inputs_digest.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=False, allow_nan=False)


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _jsonable(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, complex):
        return [_num(v.real), _num(v.imag)]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "tolist"):
        return _jsonable(v.tolist())
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return str(v)


def format_table(reports) -> str:
    """Human-readable table, one row per check."""
    rows = [("report", "status", "check", "measured", "rel", "threshold", "ok")]
    for i, r in enumerate(reports):
        for c in r.checks:
            rows.append((
                f"{r.theorem_id}#{i}",
                r.status,
                c.name,
                f"{float(c.measured):.3e}",
                c.relation,
                f"{float(c.threshold):.3e}",
                "yes" if c.passed else "NO",
            ))
        if not r.checks:
            rows.append((f"{r.theorem_id}#{i}", r.status, "-", "-", "-", "-", "-"))
    widths = [max(len(row[k]) for row in rows) for k in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows) + "\n"


def summarize(reports) -> dict:
    counts = {PASSED: 0, FAILED: 0, INCONCLUSIVE: 0, SKIPPED: 0}
    for r in reports:
        counts[r.status] += 1
    return {"schema": SCHEMA_VERSION, "summary": True, "trials": len(reports), **counts}
