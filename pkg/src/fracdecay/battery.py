"""Seeded verification sweeps over the inequality checkers and barriers.

Each function returns a :class:`CheckResult`; ``run_battery`` runs them all.
Everything is driven by a ``numpy.random.Generator`` so results are
reproducible from the seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .barriers import compare_series, mixed_power_barrier, verify_supersolution
from .frac_time import MixedDerivativeSpec, ScalarHistory, solve_scalar_mixed
from .grid import Grid
from .operators import (
    FracKirchhoff,
    FracLaplacian,
    FracMagnetic,
    Kirchhoff,
    Laplacian,
    Magnetic,
    MagneticField,
    PorousMedium,
    check_magnetic_quadratic,
    check_monotone_pairing,
    diamagnetic_gaps_batch,
    estimate_structural_constant,
    power_ratio,
    power_ratio_sup,
    random_smooth_samples,
)

__all__ = [
    "CheckResult",
    "SLACK",
    "monotone_pairing_sweep",
    "magnetic_quadratic_sweep",
    "power_ratio_sweep",
    "diamagnetic_sweep",
    "structural_battery",
    "barrier_residual_battery",
    "comparison_battery",
    "run_battery",
]

SLACK = 1e-12
STABILITY_RATIO = 1.1


@dataclass
class CheckResult:
    name: str
    passed: bool
    n: int
    violations: int
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} n={self.n:<7d} violations={self.violations:<4d} {self.detail}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def monotone_pairing_sweep(rng: np.random.Generator, n: int = 100_000) -> CheckResult:
    a = rng.normal(0.0, 3.0, n)
    b = rng.normal(0.0, 3.0, n)
    s = rng.uniform(1.0, 8.0, n)
    ok = check_monotone_pairing(a, b, s, slack=SLACK)
    bad = int(np.count_nonzero(~ok))
    return CheckResult("monotone pairing", bad == 0, n, bad, "s in [1, 8]")


@_timed
def magnetic_quadratic_sweep(rng: np.random.Generator, n: int = 100_000, dim: int = 3) -> CheckResult:
    a = rng.normal(size=n)
    b = rng.normal(size=n)
    al, be, t = (rng.normal(size=(n, dim)) for _ in range(3))
    ok = check_magnetic_quadratic(a, b, al, be, t, rtol=SLACK)
    bad = int(np.count_nonzero(~ok))
    return CheckResult("magnetic quadratic form", bad == 0, n, bad, f"vectors in R^{dim}")


@_timed
def power_ratio_sweep(rng: np.random.Generator, n: int = 100_000, n_s: int = 12) -> CheckResult:
    """``g(lambda) <= sup g`` with ``p = max(2, (s+2)/2)``, including points near +-1."""
    s_values = np.linspace(1.1, 6.0, n_s)
    sups = np.array([power_ratio_sup(s, max(2.0, (s + 2.0) / 2.0)) for s in s_values])
    pick = rng.integers(0, n_s, n)
    lam = rng.uniform(-1.0, 1.0, n)
    edge = rng.random(n) < 0.2
    lam[edge] = np.sign(rng.uniform(-1, 1, edge.sum())) * (1.0 - 10.0 ** -rng.uniform(2, 12, edge.sum()))
    bad = 0
    for i, s in enumerate(s_values):
        m = pick == i
        g = power_ratio(lam[m], s, max(2.0, (s + 2.0) / 2.0))
        bad += int(np.count_nonzero(~np.isfinite(g) | (g > sups[i] * (1.0 + SLACK))))
    ok = bad == 0 and bool(np.all(np.isfinite(sups)))
    return CheckResult("g(lambda) boundedness", ok, n, bad, f"max sup {sups.max():.4g}")


@_timed
def diamagnetic_sweep(
    rng: np.random.Generator, n: int = 100_000, *, fractional: bool = False, n_nodes: int = 12
) -> CheckResult:
    grid = Grid(0.0, 1.0, n_nodes)
    U = rng.normal(size=(n, n_nodes)) + 1j * rng.normal(size=(n, n_nodes))
    A = rng.normal(0.0, 3.0, size=(n, 2 * n_nodes + 3))
    s = rng.uniform(1.0, 5.0, n)
    if fractional:
        sig = rng.choice([0.2, 0.4, 0.6, 0.8], n)
        bad = 0
        for value in np.unique(sig):
            m = sig == value
            lhs, rhs, scale = diamagnetic_gaps_batch(grid, U[m], A[m], float(value), s[m])
            bad += int(np.count_nonzero(lhs < rhs - SLACK * scale))
        name, detail = "diamagnetic (fractional)", "sigma in {0.2,0.4,0.6,0.8}"
    else:
        lhs, rhs, scale = diamagnetic_gaps_batch(grid, U, A, None, s)
        bad = int(np.count_nonzero(lhs < rhs - SLACK * scale))
        name, detail = "diamagnetic (classical)", "s in [1, 5]"
    return CheckResult(name, bad == 0, n, bad, detail)


def _structural_families(grid: Grid):
    field_ = MagneticField.from_function(grid, lambda x: 2.0 + np.sin(2.0 * np.pi * x))
    return [
        (Laplacian(), False),
        (FracLaplacian(0.5), False),
        (PorousMedium(0.25), False),
        (Kirchhoff(1.0, 1.0), False),
        (Kirchhoff(0.0, 1.0), False),
        (FracKirchhoff(0.5, 1.0, 1.0), False),
        (FracKirchhoff(0.5, 0.0, 1.0), False),
        (Magnetic(field_), True),
        (FracMagnetic(0.5, field_), True),
    ]


def structural_battery(rng: np.random.Generator, n: int = 100, s: float = 2.0, n_nodes: int = 63):
    """Structural constants for every family at its proved exponent.

    Returns ``(results, constants)`` where ``constants`` maps a label to
    ``C_est``.  A family passes when every dissipation is positive and the
    maximum over the second half of the samples is at most 1.1 times the
    maximum over the first half.
    """
    grid = Grid(0.0, 1.0, n_nodes)
    real_samples = random_smooth_samples(grid, n, rng)
    cplx_samples = random_smooth_samples(grid, n, rng, complex_phase=True)
    results, constants = [], {}
    for op, cplx in _structural_families(grid):
        start = time.perf_counter()
        rep = estimate_structural_constant(op, op.theorem_gamma, s, cplx_samples if cplx else real_samples)
        half = n // 2
        first, second = rep.ratios[:half].max(), rep.ratios[half:].max()
        stable = second <= STABILITY_RATIO * first
        label = _label(op)
        constants[label] = rep.C_est
        results.append(
            CheckResult(
                f"structural {label}",
                rep.passed and stable,
                n,
                0 if rep.passed else int(np.count_nonzero(~np.isfinite(rep.ratios))),
                f"gamma={op.theorem_gamma:g} C_est={rep.C_est:.5g} drift={second / first:.3f}",
                time.perf_counter() - start,
            )
        )
    return results, constants


def _label(op) -> str:
    if isinstance(op, Kirchhoff):
        return f"kirchhoff(m0={op.m0:g})"
    if isinstance(op, FracKirchhoff):
        return f"frac_kirchhoff(M0={op.M0:g})"
    return op.name


@_timed
def barrier_residual_battery(
    alphas=(0.4, 0.7), gammas=(1.0, 2.0, 3.0), *, u0: float = 1.0, nu: float = 1.0
) -> CheckResult:
    """Mixed-power barriers checked on both sides of the kink, for pure and mixed time derivatives."""
    bad, total, worst = 0, 0, np.inf
    for alpha in alphas:
        for gamma in gammas:
            b = mixed_power_barrier(u0, alpha, gamma, nu)
            t_grid = np.concatenate([np.linspace(0.05, 0.9 * b.t0, 10), np.geomspace(1.1 * b.t0, 20.0 * b.t0, 30)])
            for spec in (MixedDerivativeSpec.fractional(alpha), MixedDerivativeSpec(0.5, 0.5, alpha)):
                rep = verify_supersolution(b, spec, nu, gamma, t_grid)
                total += 1
                bad += not rep.passed
                worst = min(worst, float(np.min((rep.residual + rep.tolerance) / rep.tolerance)))
    return CheckResult("barrier residuals", bad == 0, total, bad, f"min (r+tol)/tol={worst:.3g}")


@_timed
def comparison_battery(rng: np.random.Generator, n: int = 100, *, T: float = 40.0, dt: float = 0.02) -> CheckResult:
    """Scalar trajectories started strictly below a verified barrier never cross it."""
    bad, unverified = 0, 0
    for _ in range(n):
        alpha = rng.uniform(0.3, 0.9)
        gamma = float(rng.choice([1.0, 2.0, 3.0]))
        k = rng.uniform(0.5, 3.0)
        v0 = rng.uniform(0.5, 2.0)
        lam1 = rng.uniform(0.2, 1.0)
        spec = MixedDerivativeSpec(lam1, 1.0 - lam1, alpha)
        b = mixed_power_barrier(v0 * (1.0 + rng.uniform(1e-3, 0.2)), alpha, gamma, k)
        probe = [t for t in (0.5 * b.t0, 2.0 * b.t0, 5.0 * b.t0) if abs(t - b.t0) > 0.1 and t <= 10.0 * T]
        if not verify_supersolution(b, spec, k, gamma, probe).passed:
            unverified += 1
            continue
        v = solve_scalar_mixed(spec, k, gamma, v0, T, dt)
        w = ScalarHistory(v.t, b.evaluate(v.t))
        bad += not compare_series(w, v)
    ok = bad == 0 and unverified == 0
    return CheckResult("comparison principle", ok, n, bad + unverified, f"unverified barriers={unverified}")


def run_battery(seed: int = 0, *, samples: int = 100_000, structural_samples: int = 100, comparisons: int = 100):
    """Every check, in a fixed order, from one seed."""
    rng = np.random.default_rng(seed)
    out = [
        monotone_pairing_sweep(rng, samples),
        magnetic_quadratic_sweep(rng, samples),
        power_ratio_sweep(rng, samples),
        diamagnetic_sweep(rng, samples),
        diamagnetic_sweep(rng, samples, fractional=True),
    ]
    structural, _ = structural_battery(rng, structural_samples)
    out.extend(structural)
    out.append(barrier_residual_battery())
    out.append(comparison_battery(rng, comparisons))
    return out
