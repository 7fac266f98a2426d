"""Caputo derivatives, the mixed time derivative, Mittag-Leffler evaluation
and the scalar comparison equation.

Every Caputo derivative here carries the normalising factor ``1/Gamma(1-alpha)``
so that ``alpha -> 1`` recovers the ordinary derivative and ``E_alpha`` is the
standard one-parameter Mittag-Leffler function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ParameterError, ShapeError, SolverError, UnsupportedDomainError

__all__ = [
    "MixedDerivativeSpec",
    "ScalarHistory",
    "l1_weights",
    "l1_coefficient",
    "singular_start_weights",
    "caputo_l1",
    "caputo_l1_all",
    "caputo_pointwise",
    "backward_difference",
    "mixed_apply",
    "mittag_leffler",
    "solve_scalar_mixed",
    "ML_SWITCH",
    "ML_ASYMPTOTIC_TERMS",
]

ML_SWITCH = 10.0
ML_ASYMPTOTIC_TERMS = 8
# largest tolerated ratio sum|term| / |sum| for the binary64 series
_SERIES_MAX_CANCELLATION = 1e3
_ASYMPTOTIC_RTOL = 1e-12


def _check_alpha(alpha: float, *, allow_one: bool = False):
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise ParameterError(f"alpha must lie in {bound}, got {alpha}")


@dataclass(frozen=True)
class MixedDerivativeSpec:
    """Weights of ``lambda1 * d^alpha/dt^alpha + lambda2 * d/dt``."""

    lambda1: float
    lambda2: float
    alpha: float

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ParameterError("lambda1 and lambda2 must be nonnegative")
        if abs(self.lambda1 + self.lambda2 - 1.0) > 1e-12:
            raise ParameterError(
                f"lambda1 + lambda2 must equal 1, got {self.lambda1 + self.lambda2}"
            )
        _check_alpha(self.alpha)

    @classmethod
    def fractional(cls, alpha: float) -> "MixedDerivativeSpec":
        return cls(1.0, 0.0, alpha)

    @classmethod
    def classical(cls, alpha: float = 0.5) -> "MixedDerivativeSpec":
        return cls(0.0, 1.0, alpha)

    @property
    def is_classical(self) -> bool:
        return self.lambda1 == 0.0


@dataclass(frozen=True, eq=False)
class ScalarHistory:
    """Samples ``v(t_i)`` of a scalar function with ``t_0 = 0``."""

    t: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.array(self.t, dtype=float, copy=True).reshape(-1)
        v = np.array(self.v, dtype=float, copy=True).reshape(-1)
        if t.shape != v.shape:
            raise ShapeError(f"t and v lengths differ: {t.size} vs {v.size}")
        if t.size == 0 or t[0] != 0.0:
            raise ParameterError("history must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("history times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ParameterError("history values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    @classmethod
    def uniform(cls, v, dt: float) -> "ScalarHistory":
        v = np.asarray(v, dtype=float)
        return cls(dt * np.arange(v.size), v)

    @classmethod
    def sample(cls, f, T: float, dt: float) -> "ScalarHistory":
        n = int(round(T / dt))
        t = dt * np.arange(n + 1)
        return cls(t, f(t))

    def __len__(self):
        return self.t.size

    @property
    def dt(self) -> float:
        """The common step; raises if the steps are not uniform."""
        if self.t.size < 2:
            raise ParameterError("history needs at least two points")
        steps = np.diff(self.t)
        dt = self.t[-1] / (self.t.size - 1)
        # rounding in t grows with |t|, not with dt
        if not np.allclose(steps, dt, rtol=1e-9, atol=64 * np.finfo(float).eps * abs(self.t[-1])):
            raise ParameterError("time steps are not uniform")
        return float(dt)


def l1_weights(n: int, alpha: float) -> np.ndarray:
    """``b_k = (k+1)^(1-alpha) - k^(1-alpha)`` for ``k = 0..n-1``."""
    k = np.arange(n, dtype=float)
    return (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)


def l1_coefficient(dt: float, alpha: float) -> float:
    """Prefactor ``dt^-alpha / Gamma(2-alpha)`` of the L1 sum."""
    return dt ** (-alpha) / math.gamma(2.0 - alpha)


def singular_start_weights(n: int, dt: float, alpha: float) -> np.ndarray:
    """Weight of the first increment ``v_1 - v_0`` in the Caputo derivative at
    ``t_m``, ``m = 1..n``, when the first interval is interpolated by
    ``v_0 + (v_1 - v_0) (t/dt)^alpha`` instead of linearly.

    This basis is exact for the ``t^alpha`` start of fractional relaxation and
    removes the O(dt^alpha) first-step error of the plain L1 scheme.
    """
    m = np.arange(1, n + 1, dtype=float)
    return math.gamma(1.0 + alpha) * special.betainc(alpha, 1.0 - alpha, 1.0 / m) * dt ** (-alpha)


def caputo_l1(hist: ScalarHistory, alpha: float) -> float:
    """L1 approximation of the normalised Caputo derivative at the final time."""
    _check_alpha(alpha)
    dt = hist.dt
    inc = np.diff(hist.v)[::-1]  # v_m - v_{m-1}, v_{m-1} - v_{m-2}, ...
    return float(l1_coefficient(dt, alpha) * np.dot(l1_weights(inc.size, alpha), inc))


def caputo_l1_all(hist: ScalarHistory, alpha: float) -> np.ndarray:
    """L1 Caputo derivative at every node ``t_1..t_m`` (one causal convolution)."""
    _check_alpha(alpha)
    dt = hist.dt
    inc = np.diff(hist.v)
    conv = np.convolve(l1_weights(inc.size, alpha), inc)[: inc.size]
    return l1_coefficient(dt, alpha) * conv


def caputo_pointwise(hist: ScalarHistory, alpha: float) -> float:
    """Caputo derivative at the final time in the form

    ``[(v(t)-v(0))/t^alpha + alpha * int_0^t (v(t)-v(tau))/(t-tau)^(1+alpha) dtau] / Gamma(1-alpha)``.

    The memory integral is integrated exactly against the piecewise linear
    interpolant of the samples, interval by interval; on the last interval the
    integrand reduces to ``slope * (t-tau)^-alpha`` and is taken in closed form.
    In exact arithmetic this coincides with the L1 value.
    """
    _check_alpha(alpha)
    hist.dt  # uniformity check
    t, v = hist.t, hist.v
    T = t[-1]
    slope = np.diff(v) / np.diff(t)
    r_hi = T - t[:-1]
    r_lo = T - t[1:]
    c0 = v[-1] - v[1:] - slope * r_lo
    inner = np.zeros_like(slope)
    head = slice(0, slope.size - 1)
    inner[head] = c0[head] * (r_lo[head] ** -alpha - r_hi[head] ** -alpha) / alpha
    inner += slope * (r_hi ** (1.0 - alpha) - r_lo ** (1.0 - alpha)) / (1.0 - alpha)
    total = (v[-1] - v[0]) / T**alpha + alpha * inner.sum()
    return float(total / math.gamma(1.0 - alpha))


def backward_difference(hist: ScalarHistory) -> float:
    if len(hist) < 2:
        raise ParameterError("history needs at least two points")
    return float((hist.v[-1] - hist.v[-2]) / (hist.t[-1] - hist.t[-2]))


def mixed_apply(hist: ScalarHistory, spec: MixedDerivativeSpec) -> float:
    """``lambda1 * caputo_l1 + lambda2 * backward difference`` at the final time."""
    out = 0.0
    if spec.lambda1 != 0.0:
        out += spec.lambda1 * caputo_l1(hist, spec.alpha)
    if spec.lambda2 != 0.0:
        out += spec.lambda2 * backward_difference(hist)
    return out


# ---------------------------------------------------------------- Mittag-Leffler


def _ml_series(alpha: float, z: float):
    """Taylor series; returns ``None`` when binary64 cancellation is too severe."""
    total = 0.0
    largest = 0.0
    for k in range(2000):
        log_mag = k * math.log(-z) - math.lgamma(alpha * k + 1.0) if k else 0.0
        if log_mag > 700.0:
            return None
        term = math.exp(log_mag) if k % 2 == 0 else -math.exp(log_mag)
        total += term
        largest = max(largest, abs(term))
        if k > 2 and abs(term) <= 1e-17 * abs(total):
            break
    else:
        return None
    if total == 0.0 or largest / abs(total) > _SERIES_MAX_CANCELLATION:
        return None
    return total


def _ml_asymptotic(alpha: float, z: float):
    """``-sum_{k=1..K} z^-k / Gamma(1 - alpha k)``; ``None`` if not yet accurate."""
    terms = [-(z ** (-k)) * special.rgamma(1.0 - alpha * k) for k in range(1, ML_ASYMPTOTIC_TERMS + 1)]
    total = math.fsum(terms)
    nxt = abs(z ** (-(ML_ASYMPTOTIC_TERMS + 1)) * special.rgamma(1.0 - alpha * (ML_ASYMPTOTIC_TERMS + 1)))
    if total <= 0.0 or nxt > _ASYMPTOTIC_RTOL * total:
        return None
    return total


def _ml_integral(alpha: float, z: float) -> float:
    """Laplace-type representation of the relaxation branch,

    ``E_a(-x) = sin(a pi)/(a pi) * int_0^inf exp(-(u x)^(1/a)) / (u^2 + 2u cos(a pi) + 1) du``,
    whose integrand is smooth, positive and bounded for ``0 < a < 1``.
    """
    x = -z
    c = math.cos(alpha * math.pi)
    inv = 1.0 / alpha

    def f(u):
        return math.exp(-((u * x) ** inv)) / (u * u + 2.0 * u * c + 1.0)

    # the integrand decays like exp(-(u x)^(1/a)); beyond u_cut it is below 1e-300
    u_cut = 700.0 ** alpha / x
    peak = max(-c, 0.0)
    points = sorted({p for p in (peak, 1.0) if 0.0 < p < u_cut})
    edges = [0.0, *points, u_cut]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return math.sin(alpha * math.pi) / (alpha * math.pi) * total


def _mittag_leffler_scalar(alpha: float, z: float) -> float:
    if not math.isfinite(z):
        raise ParameterError(f"argument must be finite, got {z}")
    if z > 0.0:
        raise UnsupportedDomainError("only the relaxation branch z <= 0 is implemented")
    if z == 0.0:
        return 1.0
    if alpha == 1.0:
        if -z <= ML_SWITCH:
            val = _ml_series(1.0, z)
            if val is not None:
                return val
        return math.exp(z)
    if -z <= ML_SWITCH:
        val = _ml_series(alpha, z)
    else:
        val = _ml_asymptotic(alpha, z)
    if val is None:
        val = _ml_integral(alpha, z)
    return val


def mittag_leffler(alpha: float, z):
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` for real ``z <= 0``.

    Uses the Taylor series for ``|z| <= 10`` and the K = 8 term asymptotic
    expansion beyond.  Where the series would lose more than three digits to
    cancellation, or the asymptotic remainder exceeds ``1e-12`` relative, the
    value comes from a convergent integral representation instead.

    Accepts a scalar or an array of arguments.
    """
    _check_alpha(alpha, allow_one=True)
    if np.ndim(z) == 0:
        return _mittag_leffler_scalar(float(alpha), float(z))
    zz = np.asarray(z, dtype=float)
    flat = [_mittag_leffler_scalar(float(alpha), float(zi)) for zi in zz.ravel()]
    return np.array(flat).reshape(zz.shape)


# ------------------------------------------------------------ scalar comparison ODE


def _solve_implicit(a: float, k: float, gamma: float, rhs: float, guess: float, step: int) -> float:
    """Root of ``a v + k v^gamma = rhs`` on ``v >= 0`` by safeguarded Newton."""
    if rhs <= 0.0:
        return 0.0
    lo, hi = 0.0, rhs / a
    v = min(max(guess, lo), hi)
    for _ in range(50):
        f = a * v + k * v**gamma - rhs
        if f > 0.0:
            hi = v
        else:
            lo = v
        df = a + k * gamma * v ** (gamma - 1.0) if v > 0.0 else math.inf
        new = v - f / df
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if abs(new - v) <= 1e-12 * max(1.0, abs(v)):
            return max(new, 0.0)
        v = new
    raise SolverError("Newton iteration did not converge", step=step)


def solve_scalar_mixed(
    spec: MixedDerivativeSpec,
    k: float,
    gamma: float,
    v0: float,
    T: float,
    dt: float,
    *,
    start: str = "singular",
) -> ScalarHistory:
    """March ``lambda1 d^alpha v + lambda2 v' = -k v^gamma`` from ``v(0) = v0``.

    The Caputo memory is the L1 sum over past increments, treated explicitly;
    the new value solves the scalar implicit relation by Newton.  With
    ``start="singular"`` (default) the first interval uses the ``t^alpha``
    basis of :func:`singular_start_weights`; ``start="l1"`` gives the plain
    L1 scheme.
    """
    if k <= 0 or gamma <= 0:
        raise ParameterError("k and gamma must be positive")
    if v0 < 0:
        raise ParameterError("v0 must be nonnegative")
    if not 0 < dt <= T:
        raise ParameterError("need 0 < dt <= T")
    if start not in ("singular", "l1"):
        raise ParameterError(f"unknown start rule {start!r}")
    n = int(round(T / dt))
    lam1, lam2, alpha = spec.lambda1, spec.lambda2, spec.alpha
    b = l1_weights(n, alpha)
    c = l1_coefficient(dt, alpha)
    w_first = singular_start_weights(n, dt, alpha) if (start == "singular" and lam1 > 0) else None

    v = np.empty(n + 1)
    inc = np.zeros(n + 1)  # inc[i] = v_i - v_{i-1}
    v[0] = v0
    for m in range(1, n + 1):
        if w_first is None:
            hist = np.dot(b[1:m], inc[m - 1 : 0 : -1]) if m > 1 else 0.0
            a = lam1 * c + lam2 / dt
            mem = lam1 * c * hist
        elif m == 1:
            a = lam1 * w_first[0] + lam2 / dt
            mem = 0.0
        else:
            hist = np.dot(b[1 : m - 1], inc[m - 1 : 1 : -1]) if m > 2 else 0.0
            a = lam1 * c + lam2 / dt
            mem = lam1 * (c * hist + w_first[m - 1] * inc[1])
        rhs = a * v[m - 1] - mem
        v[m] = _solve_implicit(a, k, gamma, rhs, v[m - 1], m)
        inc[m] = v[m] - v[m - 1]
    return ScalarHistory(dt * np.arange(n + 1), v)
