"""Experiment reports: echoed inputs, output tables and tolerance-carrying assertions."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np


def _plain(obj):
    """Convert numpy containers and scalars to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


@dataclass
class Assertion:
    name: str
    value: float | bool | None
    op: str
    target: float | bool | None
    tol: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: {self.value!r} {self.op} {self.target!r} (tol {self.tol:g})"


@dataclass
class ExperimentReport:
    scenario: str
    seed: int = 0
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name, value, op, target=None, tol=0.0) -> bool:
        """Record an assertion.

        ``op`` is one of ``"~"`` (``|value - target| <= tol``), ``"<="``,
        ``">="`` (each with ``tol`` slack), ``"<"``, ``">"`` or ``"is"`` for
        booleans.
        """
        v = _plain(value)
        if op == "~":
            ok = abs(v - target) <= tol
        elif op == "<=":
            ok = v <= target + tol
        elif op == ">=":
            ok = v >= target - tol
        elif op == "<":
            ok = v < target
        elif op == ">":
            ok = v > target
        elif op == "is":
            ok = bool(v) is bool(target)
        else:
            raise ValueError(f"unknown comparison {op!r}")
        self.assertions.append(Assertion(name, v, op, _plain(target), float(tol), bool(ok)))
        self.tolerances[name] = float(tol)
        return bool(ok)

    def to_dict(self) -> dict:
        out = _plain(asdict(self))
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        data = dict(data)
        data.pop("passed", None)
        data["assertions"] = [Assertion(**a) for a in data.get("assertions", [])]
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Assertions first, then every table, each block introduced by a ``# name`` line."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        buf.write(f"# scenario {self.scenario} seed {self.seed}\n")
        w.writerow(["assertion", "value", "op", "target", "tol", "passed"])
        for a in self.assertions:
            w.writerow([a.name, a.value, a.op, a.target, a.tol, a.passed])
        for key in sorted(self.outputs):
            val = _plain(self.outputs[key])
            if not isinstance(val, (dict, list)):
                w.writerow([f"output:{key}", val])
        for name in sorted(self.tables):
            rows = _plain(self.tables[name])
            if not rows:
                continue
            buf.write(f"# {name}\n")
            cols = list(rows[0].keys())
            w.writerow(cols)
            for r in rows:
                w.writerow([json.dumps(r[c]) if isinstance(r[c], (list, dict)) else r[c] for c in cols])
        return buf.getvalue()

    def summary(self) -> str:
        return "\n".join(a.line() for a in self.assertions)
