"""Explicit supersolutions of the scalar comparison problem.

The norm ``v(t) = ||u(t)||_s`` of a solution satisfies

    lambda1 D^alpha v + lambda2 v' <= -k v^gamma

and is therefore dominated by any function ``w`` with the reverse
inequality and ``w(0) >= v(0)``.  Three piecewise barriers are provided:

* ``MixedPower``: ``u0`` up to ``t0``, then ``K t^(-alpha/gamma)``;
* ``Exponential`` (classical, ``gamma <= 1``): the exact solution of
  ``w' = -w^gamma / C`` until ``t0``, then ``theta0 exp((t0 - t)/C)``;
* ``ClassicalPower`` (classical, ``gamma > 1``): ``w0`` up to ``t = 1``, then
  ``w0 t^(-1/(gamma-1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError
from .frac_time import MixedDerivativeSpec, ScalarHistory, caputo_l1

__all__ = [
    "BarrierSpec",
    "SupersolutionReport",
    "mixed_power_barrier",
    "classical_barrier",
    "verify_supersolution",
    "compare_series",
]

VARIANTS = ("MixedPower", "Exponential", "ClassicalPower")


@dataclass(frozen=True)
class BarrierSpec:
    """A piecewise barrier; :meth:`evaluate` and :meth:`derivative` are closed form."""

    variant: str
    u0_or_w0: float
    t0: float
    C: float
    gamma: float
    K: float | None = None
    theta0: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown barrier variant {self.variant!r}")
        if self.u0_or_w0 < 0 or self.t0 < 0 or not self.C > 0 or not self.gamma > 0:
            raise ParameterError("barrier constants out of range")
        if self.variant == "MixedPower" and (self.K is None or self.alpha is None):
            raise ParameterError("MixedPower barrier needs K and alpha")
        if self.variant == "Exponential" and self.theta0 is None:
            raise ParameterError("Exponential barrier needs theta0")

    @property
    def decay_exponent(self) -> float | None:
        """Power-law exponent of the tail, ``None`` for the exponential tail."""
        if self.variant == "MixedPower":
            return self.alpha / self.gamma
        if self.variant == "ClassicalPower":
            return 1.0 / (self.gamma - 1.0)
        return None

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ParameterError("barriers are defined for t >= 0")
        w0, t0, g = self.u0_or_w0, self.t0, self.gamma
        if self.variant == "MixedPower":
            with np.errstate(divide="ignore"):
                tail = self.K * np.where(t > 0, t, 1.0) ** (-self.alpha / g)
            return np.where(t <= t0, w0, tail)
        if self.variant == "ClassicalPower":
            with np.errstate(divide="ignore"):
                tail = w0 * np.where(t > 0, t, 1.0) ** (-1.0 / (g - 1.0))
            return np.where(t <= t0, w0, tail)
        tail = self.theta0 * np.exp((t0 - t) / self.C)
        if g == 1.0:
            return tail
        base = np.maximum(w0 ** (1.0 - g) - (1.0 - g) * np.minimum(t, t0) / self.C, 0.0)
        return np.where(t <= t0, base ** (1.0 / (1.0 - g)), tail)

    def derivative(self, t) -> np.ndarray:
        """``w'(t)``; at the kink the left derivative is returned."""
        t = np.asarray(t, dtype=float)
        w = self.evaluate(t)
        g, t0 = self.gamma, self.t0
        if self.variant == "MixedPower":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(t <= t0, 0.0, -(self.alpha / g) * w / t)
        if self.variant == "ClassicalPower":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(t <= t0, 0.0, -w / ((g - 1.0) * t))
        if g == 1.0:
            return -w / self.C
        return np.where(t <= t0, -(w**g) / self.C, -w / self.C)

    def envelope_constant(self) -> float:
        """``c`` with ``w(t) <= c / (1 + t^p)`` for the tail exponent ``p``.

        For the exponential barrier ``c`` bounds ``w(t) e^(t/C)`` instead.
        """
        if self.variant == "MixedPower":
            return self.u0_or_w0 * (1.0 + self.t0 ** (self.alpha / self.gamma))
        if self.variant == "ClassicalPower":
            return 2.0 * self.u0_or_w0
        return max(self.theta0 * math.exp(self.t0 / self.C), self.u0_or_w0)


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be positive, got {value}")


def mixed_power_barrier(
    u0: float, alpha: float, gamma: float, nu: float, *, scale_consistent: bool = True
) -> BarrierSpec:
    """Barrier for ``lambda1 D^alpha w + lambda2 w' >= -nu w^gamma``.

    With ``X = u0^(1-gamma)/nu`` and
    ``B = 2^alpha/Gamma(1-alpha) + (alpha/gamma) 2^(alpha+alpha/gamma)/Gamma(2-alpha)``,
    ``t0`` is the largest of ``X B``, ``1`` and ``alpha X / gamma``; the
    last two cover the classical part.  ``K = u0 t0^(alpha/gamma)`` makes the
    barrier continuous.

    Rescaling time shows the fractional part actually needs
    ``t0^alpha >= X B``, which is stronger than ``t0 >= X B`` once
    ``X B > 1``.  ``scale_consistent=True`` (default) adds that condition;
    ``False`` reproduces the bare three-way maximum, which can fail the
    residual check for large ``X``.
    """
    for name, value in (("u0", u0), ("gamma", gamma), ("nu", nu)):
        _positive(name, value)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    scale = u0 ** (1.0 - gamma) / nu
    frac_cond = scale * (
        2.0**alpha / math.gamma(1.0 - alpha)
        + (alpha / gamma) * 2.0 ** (alpha + alpha / gamma) / math.gamma(2.0 - alpha)
    )
    t0 = max(frac_cond, 1.0, (alpha / gamma) * scale)
    if scale_consistent:
        t0 = max(t0, frac_cond ** (1.0 / alpha))
    return BarrierSpec(
        variant="MixedPower",
        u0_or_w0=float(u0),
        t0=float(t0),
        C=1.0 / nu,
        gamma=float(gamma),
        K=float(u0 * t0 ** (alpha / gamma)),
        alpha=float(alpha),
    )


def classical_barrier(w0_norm: float, gamma: float, C: float) -> BarrierSpec:
    """Barrier for ``w' >= -w^gamma / C``."""
    if not (np.isfinite(w0_norm) and w0_norm >= 0):
        raise ParameterError(f"w0_norm must be >= 0, got {w0_norm}")
    _positive("gamma", gamma)
    _positive("C", C)
    if gamma > 1.0:
        w0 = max(w0_norm, (C / (gamma - 1.0)) ** (1.0 / (gamma - 1.0)))
        return BarrierSpec("ClassicalPower", float(w0), 1.0, float(C), float(gamma))
    if gamma == 1.0:
        return BarrierSpec("Exponential", float(w0_norm), 0.0, float(C), 1.0, theta0=float(w0_norm))
    t0 = max(0.0, C * (w0_norm ** (1.0 - gamma) - 1.0) / (1.0 - gamma))
    # continuity at t0: theta0 = w(t0-)
    theta0 = (w0_norm ** (1.0 - gamma) - (1.0 - gamma) * t0 / C) ** (1.0 / (1.0 - gamma))
    return BarrierSpec("Exponential", float(w0_norm), float(t0), float(C), float(gamma), theta0=float(theta0))


@dataclass
class SupersolutionReport:
    t: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    tolerance: np.ndarray = field(repr=False)
    min_residual: float = 0.0
    worst_time: float = 0.0
    passed: bool = True


def verify_supersolution(
    b: BarrierSpec,
    spec: MixedDerivativeSpec,
    k: float,
    gamma: float,
    t_grid,
    *,
    dt: float | None = None,
    rtol: float = 1e-2,
) -> SupersolutionReport:
    """Check ``lambda1 D^alpha w + lambda2 w' + k w^gamma >= -rtol k w^gamma`` on ``t_grid``.

    The Caputo part uses the L1 scheme on a uniform sampling of ``w`` with
    step ``dt`` (default ``min(t_max/1000, t0/200)``, or
    ``min(1e-2, t_max/1000)`` without a kink) and the kink ``t0`` on a node;
    grid times are snapped to the nearest node.  ``w'`` is taken in closed form.
    Times within one step of the kink are rejected.
    """
    _positive("k", k)
    _positive("gamma", gamma)
    t_grid = np.asarray(t_grid, dtype=float).reshape(-1)
    if t_grid.size == 0 or np.any(t_grid <= 0):
        raise ParameterError("t_grid must be nonempty and positive")
    t_max = float(t_grid.max())
    has_kink = 0 < b.t0 < t_max + 1e-2
    if dt is None:
        # the barrier only varies on the scale t0, so the step follows it
        dt = min(t_max / 1000.0, b.t0 / 200.0) if has_kink else min(1e-2, t_max / 1000.0)
    if has_kink:
        dt = b.t0 / max(1, math.ceil(b.t0 / dt))
    if has_kink and np.any(np.abs(t_grid - b.t0) < dt):
        raise ParameterError(f"t_grid must avoid the kink t0={b.t0:g} by at least dt={dt:g}")

    idx = np.maximum(np.rint(t_grid / dt).astype(int), 1)
    t_nodes = dt * np.arange(idx.max() + 1)
    w_nodes = b.evaluate(t_nodes)
    t_eval = t_nodes[idx]
    frac = np.zeros(idx.size)
    if spec.lambda1 > 0:
        for j, m in enumerate(idx):
            frac[j] = caputo_l1(ScalarHistory(t_nodes[: m + 1], w_nodes[: m + 1]), spec.alpha)
    w = w_nodes[idx]
    forcing = k * w**gamma
    residual = spec.lambda1 * frac + spec.lambda2 * b.derivative(t_eval) + forcing
    tol = rtol * forcing
    margin = residual + tol
    worst = int(np.argmin(margin))
    return SupersolutionReport(
        t=t_eval,
        residual=residual,
        tolerance=tol,
        min_residual=float(residual.min()),
        worst_time=float(t_eval[worst]),
        passed=bool(np.all(margin >= 0)),
    )


def compare_series(w: ScalarHistory, v: ScalarHistory) -> bool:
    """True iff ``w >= v`` at every common grid time.  Requires ``w(0) > v(0)``."""
    if w.t.shape != v.t.shape or not np.allclose(w.t, v.t, rtol=1e-12, atol=0.0):
        raise ShapeError("histories live on different time grids")
    if not w.v[0] > v.v[0]:
        raise ParameterError("comparison needs w(0) > v(0)")
    return bool(np.all(w.v >= v.v))
