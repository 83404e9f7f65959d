"""Scenario-file parsing and validation.

Grammar: INI-style sections [grid], [region], [solver], [checks],
[output]; keys are lower_snake_case; numbers in decimal or scientific
notation; booleans true/false; lists comma-separated.  The experiment
name lives under [solver].  Validation reports every problem it finds
(with line numbers), not just the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError

SECTIONS = ("grid", "region", "solver", "checks", "output")

EXPERIMENTS = (
    "em_locality", "kg_locality", "dirac_locality", "sqrt_kg_leakage",
    "gaussian_locality", "entropy_scan", "two_point_scan", "nw_probe",
    "fock_regional", "nonseparability",
)

REQUIRED = object()


@dataclass(frozen=True)
class Key:
    """Schema entry: type name, default (or REQUIRED), allowed range."""

    kind: str
    default: object = REQUIRED
    low: float | None = None
    high: float | None = None
    low_open: bool = False
    choices: tuple = ()


@dataclass
class Issue:
    line: int
    where: str
    message: str

    def __str__(self):
        return f"line {self.line}: [{self.where}] {self.message}"


@dataclass
class ScenarioConfig:
    experiment: str
    grid: dict = field(default_factory=dict)
    region: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"experiment": self.experiment, "grid": dict(self.grid),
                "region": dict(self.region), "solver": dict(self.solver),
                "checks": dict(self.checks), "output": dict(self.output)}


_GRID_COMMON = {
    "n": Key("int", 512, low=4),
    "spacing": Key("float", 0.5, low=0, low_open=True),
    "dim": Key("int", 1, choices=(1, 3)),
    "boundary": Key("str", "periodic", choices=("periodic", "absorbing-pad")),
}

_REGION_COMMON = {
    "center": Key("float", 96.0),
    "radius": Key("float", 48.0, low=0, low_open=True),
}

_OUTPUT_COMMON = {
    "out_dir": Key("str", "."),
    "report_name": Key("str", "report.json"),
    "write_csv": Key("bool", True),
}

_TWIN_SOLVER = {
    "mass": Key("float", 0.0, low=0),
    "cfl": Key("float", 1.0, low=0, high=1, low_open=True),
    "seeds": Key("int_list", (0,)),
    "guard_band": Key("int", 2, low=0),
    "horizon_time": Key("float", 0.0, low=0),  # 0: run to cone vanishing
    "bump_gap": Key("float", 2.0, low=0),
    "bump_halfwidth": Key("float", 3.0, low=0, low_open=True),
    "refinements": Key("int", 1, choices=(1, 3)),
}

SCHEMAS = {
    "kg_locality": {
        "grid": dict(_GRID_COMMON),
        "region": dict(_REGION_COMMON),
        "solver": {"experiment": Key("str"), **_TWIN_SOLVER},
        "checks": {
            "inside_sup_tol": Key("float", 1e-13, low=0, low_open=True),
            "order_min": Key("float", 1.9),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "em_locality": {
        "grid": dict(_GRID_COMMON),
        "region": dict(_REGION_COMMON),
        "solver": {"experiment": Key("str"), **_TWIN_SOLVER,
                   "source_speed": Key("float", 0.4, low=-1, high=1)},
        "checks": {
            "order_min": Key("float", 1.9),
            "continuity_order_min": Key("float", 1.9),
            "lorenz_order_min": Key("float", 1.9),
            # single-grid sanity bounds (used when refinements = 1),
            # calibrated to the default n = 512, spacing = 0.5 grid
            "lorenz_abs_tol": Key("float", 0.2, low=0, low_open=True),
            "outside_sup_tol": Key("float", 1e-3, low=0, low_open=True),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "dirac_locality": {
        "grid": dict(_GRID_COMMON),
        "region": dict(_REGION_COMMON),
        "solver": {"experiment": Key("str"),
                   "mass": Key("float", 1.0, low=0),
                   "seeds": Key("int_list", (0,)),
                   "guard_band": Key("int", 2, low=0),
                   "bump_gap": Key("float", 2.0, low=0),
                   "bump_halfwidth": Key("float", 3.0, low=0, low_open=True),
                   "norm_drift_steps": Key("int", 1000, low=1)},
        "checks": {
            "gamma_tol": Key("float", 1e-14, low=0, low_open=True),
            "inside_sup_tol": Key("float", 1e-13, low=0, low_open=True),
            "norm_drift_tol": Key("float", 1e-12, low=0, low_open=True),
            "order_min": Key("float", 1.9),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "sqrt_kg_leakage": {
        "grid": {"n": Key("int", 4096, low=16),
                 "spacing": Key("float", 0.03125, low=0, low_open=True),
                 "dim": Key("int", 1, choices=(1,)),
                 "boundary": Key("str", "periodic", choices=("periodic",))},
        "region": {},
        "solver": {"experiment": Key("str"),
                   "mass": Key("float", 1.0, low=0, low_open=True),
                   "bump_halfwidth": Key("float", 0.5, low=0, low_open=True),
                   "t_span": Key("float", 2.0, low=0, low_open=True),
                   "control_cfl": Key("float", 0.5, low=0, high=1,
                                      low_open=True)},
        "checks": {
            "leakage_floor": Key("float", 1e-8, low=0, low_open=True),
            "control_order_min": Key("float", 1.9),
            "contrast_min": Key("float", 1e3, low=0, low_open=True),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "gaussian_locality": {
        "grid": {"n": Key("int", 256, low=8),
                 "spacing": Key("float", 1.0, low=0, low_open=True),
                 "dim": Key("int", 1, choices=(1,)),
                 "boundary": Key("str", "periodic", choices=("periodic",))},
        "region": {"center": Key("float", 64.0),
                   "radius": Key("float", 32.0, low=0, low_open=True)},
        "solver": {"experiment": Key("str"),
                   "mass": Key("float", 0.5, low=0, low_open=True),
                   "margin_sites": Key("int", 32, low=1),
                   "dt": Key("float", 0.5, low=0, low_open=True),
                   "d_phi": Key("float", 0.7),
                   "d_pi": Key("float", -0.3)},
        "checks": {
            "purity_tol": Key("float", 1e-10, low=0, low_open=True),
            "tail_r2_min": Key("float", 0.95, low=0, high=1),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "entropy_scan": {
        "grid": {"n": Key("int", 64, low=8),
                 "spacing": Key("float", 1.0, low=0, low_open=True),
                 "dim": Key("int", 1, choices=(1,)),
                 "boundary": Key("str", "periodic", choices=("periodic",))},
        "region": {},
        "solver": {"experiment": Key("str"),
                   "mass": Key("float", 0.5, low=0, low_open=True),
                   "seeds": Key("int_list", (0,)),
                   "intervals": Key("int", 10, low=1),
                   "critical_n": Key("int", 128, low=16),
                   "critical_mass": Key("float", 1e-3, low=0, low_open=True)},
        "checks": {
            "complement_tol": Key("float", 1e-8, low=0, low_open=True),
            "slope_low": Key("float", 0.25),
            "slope_high": Key("float", 0.45),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "two_point_scan": {
        "grid": {},
        "region": {},
        "solver": {"experiment": Key("str"),
                   "mass": Key("float", 1.0, low=0, low_open=True),
                   "r_values": Key("float_list", (0.5, 1.0, 2.0, 4.0, 5.0)),
                   "spacelike_points": Key("float_list",
                                           (1.0, 2.0, 0.5, 3.0, 1.5, 2.5,
                                            2.0, 4.0, 0.25, 1.5, 1.0, 3.5,
                                            2.0, 3.0, 0.75, 2.0)),
                   "falloff_r": Key("float_list", (4.0, 5.0, 6.0)),
                   "falloff_t": Key("float", 1.0, low=0)},
        "checks": {
            "wightman_rtol": Key("float", 1e-6, low=0, low_open=True),
            "spacelike_tol": Key("float", 1e-8, low=0, low_open=True),
            "contrast_min": Key("float", 1e3, low=0, low_open=True),
            "falloff_rel_tol": Key("float", 0.2, low=0, low_open=True),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "nw_probe": {
        "grid": {"n": Key("int", 2048, low=64),
                 "spacing": Key("float", 0.125, low=0, low_open=True),
                 "dim": Key("int", 1, choices=(1,)),
                 "boundary": Key("str", "periodic", choices=("periodic",))},
        "region": {"center": Key("float", 100.0),
                   "radius": Key("float", 20.0, low=0, low_open=True)},
        "solver": {"experiment": Key("str"),
                   "mass": Key("float", 1.0, low=0, low_open=True),
                   "t_span": Key("float", 2.0, low=0, low_open=True),
                   "distances": Key("float_list", (3.0, 4.0, 5.0, 6.0)),
                   "bump_halfwidth": Key("float", 2.0, low=0, low_open=True)},
        "checks": {
            "penetration_floor": Key("float", 1e-10, low=0, low_open=True),
            "rate_rel_tol": Key("float", 0.2, low=0, low_open=True),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "fock_regional": {
        "grid": {"n": Key("int", 12, low=4),
                 "spacing": Key("float", 0.5, low=0, low_open=True),
                 "dim": Key("int", 1, choices=(1,)),
                 "boundary": Key("str", "periodic", choices=("periodic",))},
        "region": {"sites": Key("int_list", (0, 1, 2, 3, 4))},
        "solver": {"experiment": Key("str"),
                   "seeds": Key("int_list", tuple(range(8))),
                   "n_max": Key("int", 2, low=0, high=3)},
        "checks": {
            "oracle_tol": Key("float", 1e-10, low=0, low_open=True),
            "trace_tol": Key("float", 1e-10, low=0, low_open=True),
            "eigen_floor": Key("float", -1e-10),
            "purity_tol": Key("float", 1e-12, low=0, low_open=True),
        },
        "output": dict(_OUTPUT_COMMON),
    },
    "nonseparability": {
        "grid": {},
        "region": {},
        "solver": {"experiment": Key("str")},
        "checks": {"tol": Key("float", 1e-15, low=0, low_open=True)},
        "output": dict(_OUTPUT_COMMON),
    },
}


def _parse_scalar(text: str, kind: str):
    if kind == "str":
        return text
    if kind == "bool":
        if text.lower() in ("true", "false"):
            return text.lower() == "true"
        raise ValueError("expected true or false")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "int_list":
        return tuple(int(part.strip()) for part in text.split(",") if part.strip())
    if kind == "float_list":
        return tuple(float(part.strip()) for part in text.split(",")
                     if part.strip())
    raise ValueError(f"unknown schema kind {kind}")


def _range_message(spec: Key) -> str:
    lo = "(" if spec.low_open else "["
    low = "-inf" if spec.low is None else repr(spec.low)
    high = "inf" if spec.high is None else repr(spec.high)
    return f"{lo}{low}, {high}]"


def _check_range(value, spec: Key):
    if spec.choices and value not in spec.choices:
        raise ValueError(f"must be one of {spec.choices}")
    if isinstance(value, bool) or isinstance(value, str) \
            or isinstance(value, tuple):
        return
    if spec.low is not None:
        if spec.low_open and not value > spec.low:
            raise ValueError(f"must be in {_range_message(spec)}")
        if not spec.low_open and not value >= spec.low:
            raise ValueError(f"must be in {_range_message(spec)}")
    if spec.high is not None and not value <= spec.high:
        raise ValueError(f"must be in {_range_message(spec)}")


def _tokenize(text: str):
    """Yield (line_no, section, key, value, issue) tuples."""
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                yield line_no, None, None, None, \
                    f"unknown section [{section}]; expected one of {SECTIONS}"
                section = None
            continue
        if "=" not in line:
            yield line_no, None, None, None, \
                f"expected 'key = value', got {line!r}"
            continue
        if section is None:
            yield line_no, None, None, None, \
                "key outside any recognized section"
            continue
        key, _, value = line.partition("=")
        yield line_no, section, key.strip(), value.strip(), None


def parse_config(text: str):
    """Parse and validate a scenario file.

    Returns (config, issues).  config is None whenever issues is
    non-empty; issues carries every detected problem with its line
    number.
    """
    issues = []
    entries = {}
    experiment = None
    experiment_line = 0
    for line_no, section, key, value, problem in _tokenize(text):
        if problem:
            issues.append(Issue(line_no, "syntax", problem))
            continue
        if (section, key) in entries:
            issues.append(Issue(line_no, f"{section}.{key}", "duplicate key"))
            continue
        entries[(section, key)] = (value, line_no)
        if section == "solver" and key == "experiment":
            experiment = value
            experiment_line = line_no

    if experiment is None:
        issues.append(Issue(0, "solver.experiment",
                            "missing required key 'experiment' in [solver]"))
        return None, issues
    if experiment not in EXPERIMENTS:
        issues.append(Issue(experiment_line, "solver.experiment",
                            f"unknown experiment {experiment!r}; valid names: "
                            f"{', '.join(EXPERIMENTS)}"))
        return None, issues

    schema = SCHEMAS[experiment]
    config = ScenarioConfig(experiment=experiment)
    config.solver["experiment"] = experiment

    for (section, key), (value, line_no) in entries.items():
        if section == "solver" and key == "experiment":
            continue
        spec = schema.get(section, {}).get(key)
        if spec is None:
            issues.append(Issue(
                line_no, f"{section}.{key}",
                f"unknown key for experiment {experiment!r}"))
            continue
        try:
            parsed = _parse_scalar(value, spec.kind)
            _check_range(parsed, spec)
        except ValueError as err:
            message = str(err)
            if key == "cfl" and "must be in" in message:
                message = "cfl must be in (0,1]"
            issues.append(Issue(line_no, f"{section}.{key}", message))
            continue
        getattr(config, section)[key] = parsed

    for section, keys in schema.items():
        for key, spec in keys.items():
            if key == "experiment":
                continue
            bucket = getattr(config, section)
            if key not in bucket:
                if spec.default is REQUIRED:
                    issues.append(Issue(0, f"{section}.{key}",
                                        "missing required key"))
                else:
                    bucket[key] = spec.default

    if "seeds" in config.solver and not config.solver["seeds"]:
        line = entries.get(("solver", "seeds"), ("", 0))[1]
        issues.append(Issue(line, "solver.seeds",
                            "randomized experiments need a non-empty seed list"))

    if issues:
        return None, issues
    return config, []


def load_config(path):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def format_issues(issues) -> str:
    return "\n".join(str(issue) for issue in issues)


def require_config(text: str) -> ScenarioConfig:
    config, issues = parse_config(text)
    if config is None:
        raise ConfigurationError(format_issues(issues))
    return config
