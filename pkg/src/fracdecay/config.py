"""Experiment configuration: a flat ``key = value`` format with ``[section]`` headers.

Grammar (one item per line)::

    # comment            ; also "; comment"
    [section]
    key = value          ; whitespace around "=" is ignored

Keys before the first header belong to ``[problem]``.  Values are plain
text; lists are comma separated.  Every problem found while parsing is
collected into a :class:`ConfigError` with line numbers, so one pass reports
all mistakes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .errors import FracDecayError, ParameterError
from .evolve import SCHEMES, ProblemSpec
from .frac_time import MixedDerivativeSpec
from .grid import Grid, GridFunction
from .operators import (
    FracKirchhoff,
    FracLaplacian,
    FracMagnetic,
    Kirchhoff,
    Laplacian,
    Magnetic,
    MagneticField,
    PorousMedium,
    SchrodingerControl,
    check_admissible_s,
)

__all__ = [
    "Diagnostic",
    "ConfigError",
    "ExperimentConfig",
    "OPERATORS",
    "parse_config",
    "load_config",
    "build_operator",
    "build_problem",
    "with_overrides",
]

OPERATORS = (
    "laplacian",
    "frac_laplacian",
    "porous",
    "kirchhoff",
    "frac_kirchhoff",
    "magnetic",
    "frac_magnetic",
    "schrodinger",
)
INITIAL = ("sine", "bump", "modes")
FIELDS = ("constant", "linear", "sine")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    key: str
    message: str

    def __str__(self):
        where = f"line {self.line}" if self.line else "config"
        return f"{where}: {self.key}: {self.message}" if self.key else f"{where}: {self.message}"


class ConfigError(FracDecayError, ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# ------------------------------------------------------------------ value parsers


def _float(text):
    return float(text)


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _floats(text):
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(p) for p in items)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _str(text):
    return text


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    default: Any = None
    required: bool = False
    check: Callable[[Any], str | None] | None = None


def _in_open(lo, hi):
    return lambda v: None if lo < v < hi else f"must lie in ({lo:g}, {hi:g})"


def _at_least(lo):
    return lambda v: None if v >= lo else f"must be >= {lo:g}"


def _positive(v):
    return None if v > 0 else "must be positive"


def _all_at_least(lo):
    return lambda vs: None if all(v >= lo for v in vs) else f"every value must be >= {lo:g}"


SCHEMA: dict[str, dict[str, _Key]] = {
    "problem": {
        "operator": _Key(_choice(OPERATORS), required=True),
        "alpha": _Key(_float, 0.5, check=_in_open(0.0, 1.0)),
        "lambda1": _Key(_float, required=True, check=lambda v: None if 0 <= v <= 1 else "must lie in [0, 1]"),
        "lambda2": _Key(_float, None, check=lambda v: None if 0 <= v <= 1 else "must lie in [0, 1]"),
        "s": _Key(_floats, (2.0,), check=_all_at_least(1.0)),
        "gamma": _Key(_float, None, check=_positive),
        "sigma": _Key(_float, 0.5, check=_in_open(0.0, 1.0)),
        "epsilon": _Key(_float, None, check=_positive),
        "c_kernel": _Key(_float, 1.0, check=_positive),
        "m0": _Key(_float, 1.0, check=_at_least(0.0)),
        "b": _Key(_float, 0.0, check=_at_least(0.0)),
        "potential": _Key(_float, 0.0),
        "field": _Key(_choice(FIELDS), "constant"),
        "field_strength": _Key(_float, 1.0),
        "magnetic_form": _Key(_choice(("peierls", "expanded")), "peierls"),
        "initial": _Key(_choice(INITIAL), "sine"),
        "amplitude": _Key(_float, 1.0, check=_positive),
        "phase": _Key(_float, 0.0),
        "dimension": _Key(_int, 1, check=_at_least(1)),
    },
    "grid": {
        "a": _Key(_float, 0.0),
        "b": _Key(_float, 1.0),
        "n": _Key(_int, 63, check=_at_least(3)),
    },
    "time": {
        "dt": _Key(_float, required=True, check=_positive),
        "T": _Key(_float, required=True, check=_at_least(0.0)),
        "scheme": _Key(_choice(SCHEMES), None),
    },
    "analysis": {
        "window_lo": _Key(_float, None, check=_at_least(0.0)),
        "window_hi": _Key(_float, None, check=_positive),
        "power_tol": _Key(_float, None, check=_in_open(0.0, 1.0)),
        "kirchhoff_tol": _Key(_float, None, check=_in_open(0.0, 1.0)),
    },
    "output": {
        "dir": _Key(_str, "fracdecay-out"),
        "svg": _Key(_bool, True),
        "seed": _Key(_int, 0, check=_at_least(0)),
    },
    "sweep": {
        "alpha": _Key(_floats, None, check=lambda vs: None if all(0 < v < 1 for v in vs) else "values must lie in (0, 1)"),
        "sigma": _Key(_floats, None, check=lambda vs: None if all(0 < v < 1 for v in vs) else "values must lie in (0, 1)"),
        "s": _Key(_floats, None, check=_all_at_least(1.0)),
        "gamma": _Key(_floats, None, check=lambda vs: None if all(v > 0 for v in vs) else "values must be positive"),
        "workers": _Key(_int, 1, check=_at_least(1)),
    },
    "verify": {
        "samples": _Key(_int, 100_000, check=_at_least(10)),
        "structural_samples": _Key(_int, 100, check=_at_least(4)),
        "comparisons": _Key(_int, 100, check=_at_least(1)),
    },
}

# seed may also appear at the top level
_ROOT_ALIASES = {"seed": ("output", "seed")}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration: one dict of typed values per section."""

    problem: dict
    grid: dict
    time: dict
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def seed(self) -> int:
        return self.output["seed"]

    def section(self, name: str) -> dict:
        return getattr(self, name)


_HEADER = re.compile(r"^\[\s*([A-Za-z_][\w-]*)\s*\]$")


def parse_config(text: str, *, require_problem: bool = True) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem.

    With ``require_problem=False`` a config that defines no ``[problem]`` and
    no ``[time]`` keys is accepted (the verification battery needs neither).
    """
    diags: list[Diagnostic] = []
    raw: dict[str, dict[str, tuple[str, int]]] = {name: {} for name in SCHEMA}
    section = "problem"
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = _HEADER.match(stripped)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                diags.append(Diagnostic(lineno, "", f"unknown section [{section}]"))
                section = None
            continue
        if "=" not in stripped:
            diags.append(Diagnostic(lineno, "", f"expected 'key = value', got {stripped!r}"))
            continue
        key, value = (p.strip() for p in stripped.split("=", 1))
        value = re.split(r"\s+[#;]", value, maxsplit=1)[0].strip()
        if section is None:
            continue
        target = section
        if key in _ROOT_ALIASES and key not in SCHEMA[section]:
            target, key = _ROOT_ALIASES[key]
        if key not in SCHEMA[target]:
            diags.append(Diagnostic(lineno, key, f"unknown key in [{target}]"))
            continue
        if key in raw[target]:
            diags.append(Diagnostic(lineno, key, f"duplicate key (first set on line {raw[target][key][1]})"))
            continue
        raw[target][key] = (value, lineno)

    skip_problem = not require_problem and not raw["problem"] and not raw["time"]
    values: dict[str, dict] = {}
    lines: dict[tuple[str, str], int] = {}
    for sect, keys in SCHEMA.items():
        values[sect] = {}
        for key, spec in keys.items():
            if key not in raw[sect]:
                if spec.required and not skip_problem:
                    diags.append(Diagnostic(0, f"[{sect}] {key}", "missing required key"))
                values[sect][key] = spec.default
                continue
            text_value, lineno = raw[sect][key]
            lines[(sect, key)] = lineno
            try:
                parsed = spec.parse(text_value)
            except ValueError as exc:
                diags.append(Diagnostic(lineno, key, f"bad value {text_value!r}: {exc}"))
                values[sect][key] = spec.default
                continue
            problem = spec.check(parsed) if spec.check else None
            if problem:
                diags.append(Diagnostic(lineno, key, f"{text_value} {problem}"))
            values[sect][key] = parsed
    if diags:
        raise ConfigError(diags)

    cfg = ExperimentConfig(lines=lines, **values)
    if skip_problem:
        return cfg
    diags.extend(_cross_checks(cfg))
    if diags:
        raise ConfigError(diags)
    return cfg


def load_config(path, *, require_problem: bool = True) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), require_problem=require_problem)


def _line(cfg, sect, key):
    return cfg.lines.get((sect, key), 0)


def _cross_checks(cfg: ExperimentConfig) -> list[Diagnostic]:
    """Invariants that involve more than one key; reported on the most specific line."""
    out = []
    p = cfg.problem
    lam2 = p["lambda2"] if p["lambda2"] is not None else 1.0 - p["lambda1"]
    if abs(p["lambda1"] + lam2 - 1.0) > 1e-12:
        out.append(Diagnostic(_line(cfg, "problem", "lambda2"), "lambda2", "lambda1 + lambda2 must equal 1"))
    if p["operator"] == "porous" and p["sigma"] >= 0.5:
        out.append(
            Diagnostic(
                _line(cfg, "problem", "sigma"),
                "sigma",
                f"porous kernel exponent 1 - 2 sigma must be positive in 1-D (sigma < 0.5), got {p['sigma']:g}",
            )
        )
    if p["operator"] in ("kirchhoff", "frac_kirchhoff") and p["m0"] + p["b"] <= 0:
        out.append(Diagnostic(_line(cfg, "problem", "m0"), "m0", "m0 + b must be positive"))
    if cfg.grid["a"] >= cfg.grid["b"]:
        out.append(Diagnostic(_line(cfg, "grid", "b"), "b", "need a < b"))
    a = cfg.analysis
    if a["window_lo"] is not None and a["window_hi"] is not None and a["window_lo"] >= a["window_hi"]:
        out.append(Diagnostic(_line(cfg, "analysis", "window_hi"), "window_hi", "must exceed window_lo"))
    if out:
        return out
    # build everything once so module-level invariants surface here
    try:
        problem = build_problem(cfg)
    except (ParameterError, TypeError) as exc:
        key = "dt" if "step" in str(exc) or "CrankNicolson" in str(exc) else "operator"
        sect = "time" if key == "dt" else "problem"
        if "CrankNicolson" in str(exc):
            key = "scheme"
        return [Diagnostic(_line(cfg, sect, key), key, str(exc))]
    gamma = p["gamma"]
    expected = problem.op.theorem_gamma
    if gamma is not None and (expected is None or not np.isclose(gamma, expected)):
        out.append(
            Diagnostic(
                _line(cfg, "problem", "gamma"),
                "gamma",
                f"{gamma:g} does not match the proved exponent {expected} for {p['operator']}",
            )
        )
    for s in p["s"]:
        try:
            check_admissible_s(problem.op, s, p["dimension"])
        except ParameterError as exc:
            out.append(Diagnostic(_line(cfg, "problem", "s"), "s", str(exc)))
    return out


# ------------------------------------------------------------------ builders


def build_operator(p: dict, grid: Grid):
    name = p["operator"]
    if name == "laplacian":
        return Laplacian()
    if name == "frac_laplacian":
        return FracLaplacian(p["sigma"])
    if name == "porous":
        return PorousMedium(p["sigma"], p["epsilon"], p["c_kernel"])
    if name == "kirchhoff":
        return Kirchhoff(p["m0"], p["b"])
    if name == "frac_kirchhoff":
        return FracKirchhoff(p["sigma"], p["m0"], p["b"])
    if name == "schrodinger":
        return SchrodingerControl(p["potential"])
    A0 = p["field_strength"]
    shape = {
        "constant": lambda x: A0 + 0.0 * x,
        "linear": lambda x: A0 * x,
        "sine": lambda x: A0 * np.sin(2.0 * np.pi * (x - grid.a) / grid.length),
    }[p["field"]]
    field_ = MagneticField.from_function(grid, shape)
    if name == "magnetic":
        return Magnetic(field_, p["magnetic_form"])
    return FracMagnetic(p["sigma"], field_)


def _initial(p: dict, grid: Grid) -> np.ndarray:
    y = (grid.x - grid.a) / grid.length
    if p["initial"] == "sine":
        prof = np.sin(np.pi * y)
    elif p["initial"] == "bump":
        prof = np.where(np.abs(y - 0.5) < 0.25, np.cos(2.0 * np.pi * (y - 0.5)) ** 2, 0.0)
    else:
        prof = np.sin(np.pi * y) + 0.3 * np.sin(3.0 * np.pi * y)
    vals = p["amplitude"] * prof
    if p["phase"]:
        vals = vals * np.exp(1j * p["phase"] * grid.x)
    return vals


def build_problem(cfg: ExperimentConfig) -> ProblemSpec:
    p = cfg.problem
    grid = Grid(cfg.grid["a"], cfg.grid["b"], cfg.grid["n"])
    lam2 = p["lambda2"] if p["lambda2"] is not None else 1.0 - p["lambda1"]
    mixed = MixedDerivativeSpec(p["lambda1"], lam2, p["alpha"])
    op = build_operator(p, grid)
    scheme = cfg.time["scheme"] or ("CrankNicolson" if p["operator"] == "schrodinger" else "SemiImplicitL1")
    return ProblemSpec(
        mixed=mixed,
        op=op,
        u0=GridFunction(grid, _initial(p, grid)),
        dt=cfg.time["dt"],
        T=cfg.time["T"],
        scheme=scheme,
        s_list=p["s"],
    )


def with_overrides(cfg: ExperimentConfig, **problem_values) -> ExperimentConfig:
    """Copy of ``cfg`` with some ``[problem]`` values replaced (used by sweeps)."""
    merged = dict(cfg.problem)
    merged.update(problem_values)
    return replace(cfg, problem=merged)
