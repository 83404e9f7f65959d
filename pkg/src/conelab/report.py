"""Machine-readable run reports and their serialization."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__

_OPS = {
    "<=": lambda value, bound: value <= bound,
    ">=": lambda value, bound: value >= bound,
    "<": lambda value, bound: value < bound,
    ">": lambda value, bound: value > bound,
    "==": lambda value, bound: value == bound,
    "in": lambda value, bound: bound[0] <= value <= bound[1],
}


@dataclass
class CheckResult:
    """One named measurement compared against its bound."""

    name: str
    value: float
    bound: object
    op: str = "<="
    note: str = ""

    def __post_init__(self):
        self.value = float(self.value)
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison {self.op!r}")

    @property
    def passed(self) -> bool:
        return bool(_OPS[self.op](self.value, self.bound))

    def to_dict(self) -> dict:
        bound = list(self.bound) if isinstance(self.bound, (tuple, list)) \
            else self.bound
        return {"name": self.name, "value": self.value, "bound": bound,
                "op": self.op, "pass": self.passed, "note": self.note}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: value={self.value:.6e} " \
               f"{self.op} {self.bound}"


@dataclass
class RunReport:
    """Scenario echo plus per-check outcomes; overall pass is their AND."""

    experiment: str
    scenario: dict
    checks: list
    artifacts: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "scenario": self.scenario,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
            "artifacts": list(self.artifacts),
            "wall_clock_s": self.wall_clock_s,
            "versions": {"conelab": __version__, "numpy": np.__version__},
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")


class Stopwatch:
    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._start
        return False
