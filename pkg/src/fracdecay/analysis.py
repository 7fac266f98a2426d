"""Decay-rate fitting and the predicted-rate table.

Fits are ordinary least squares on ``log v``: against ``log t`` for a power
law and against ``t`` for an exponential.  All predictions are upper bounds,
so a verdict only fails when the fitted decay is slower than predicted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import FitError, ParameterError
from .operators import FracKirchhoff, Kirchhoff, SchrodingerControl

__all__ = [
    "FitResult",
    "EnvelopeFit",
    "DecayReport",
    "POWER_TOL",
    "DEGENERATE_KIRCHHOFF_TOL",
    "NO_DECAY_LOG_DROP",
    "default_window",
    "fit_power",
    "fit_exp",
    "fit_envelope",
    "classify_decay",
    "predicted_rate",
    "default_tolerance",
    "build_report",
]

POWER_TOL = 0.15
DEGENERATE_KIRCHHOFF_TOL = 0.20
MIN_POINTS = 10
# total change of log v over the window below which a history counts as not decaying
NO_DECAY_LOG_DROP = 1e-3


@dataclass(frozen=True)
class FitResult:
    model: str
    rate: float
    stderr: float
    intercept: float
    residual_ss: float
    window: tuple
    n_points: int


@dataclass(frozen=True)
class EnvelopeFit:
    exponent: float
    C: float
    C_sup: float
    residual: float
    window: tuple


@dataclass(frozen=True)
class DecayReport:
    model: str
    rate: float
    stderr: float
    window: tuple
    predicted_model: str
    predicted_rate: float | None
    passed: bool
    deviation: float
    tolerance: float
    power: FitResult
    exponential: FitResult

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def default_window(t) -> tuple:
    """Last decade of simulated time."""
    t_hi = float(np.max(t))
    return (t_hi / 10.0, t_hi)


def _select(t, v, window):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise FitError("t and v must be 1-D arrays of equal length")
    lo, hi = default_window(t) if window is None else window
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < MIN_POINTS:
        raise FitError(f"need at least {MIN_POINTS} points in window [{lo:g}, {hi:g}], got {mask.sum()}")
    if np.any(v[mask] <= 0) or not np.all(np.isfinite(v[mask])):
        raise FitError("norms in the fit window must be positive and finite")
    return t[mask], v[mask], (float(lo), float(hi))


def _linfit(model, x, y, window):
    if np.ptp(x) == 0:
        raise FitError("fit window has no spread")
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    return FitResult(
        model=model,
        rate=float(-res.slope),
        stderr=float(res.stderr),
        intercept=float(res.intercept),
        residual_ss=float(resid @ resid),
        window=window,
        n_points=int(x.size),
    )


def fit_power(t, v, window=None) -> FitResult:
    """``v ~ A t^(-p)``: returns ``p`` as ``rate``.  The window must start at ``t >= 1``."""
    ts, vs, win = _select(t, v, window)
    if win[0] < 1.0:
        if window is not None:
            raise FitError(f"power-law windows must start at t >= 1, got {win[0]:g}")
        ts, vs, win = _select(t, v, (1.0, win[1]))
    return _linfit("PowerLaw", np.log(ts), np.log(vs), win)


def fit_exp(t, v, window=None) -> FitResult:
    """``v ~ A exp(-r t)``: returns ``r`` as ``rate``."""
    ts, vs, win = _select(t, v, window)
    return _linfit("Exponential", ts, np.log(vs), win)


def fit_envelope(t, v, exponent: float = 1.0, window=None) -> EnvelopeFit:
    """Fit ``C / (1 + t)^exponent`` to ``v`` on the window.

    ``C`` is the geometric-mean fit, ``C_sup = max v (1+t)^exponent`` over the
    whole history (so ``v <= C_sup / (1+t)^exponent`` everywhere) and
    ``residual`` is the largest relative deviation from the fitted envelope
    inside the window.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    ts, vs, win = _select(t, v, window)
    scaled = vs * (1.0 + ts) ** exponent
    C = float(np.exp(np.mean(np.log(scaled))))
    return EnvelopeFit(
        exponent=float(exponent),
        C=C,
        C_sup=float(np.max(v * (1.0 + t) ** exponent)),
        residual=float(np.max(np.abs(scaled / C - 1.0))),
        window=win,
    )


def _span_check(t):
    t = np.asarray(t, dtype=float)
    pos = t[t > 0]
    if pos.size < 2 or np.log10(pos.max() / pos.min()) < 2.0:
        raise FitError("classification needs a history spanning at least two decades in t")


def classify_decay(t, v, window=None):
    """Pick the model with the smaller log-residual on the tail window.

    Returns ``(model, power_fit, exp_fit)`` where ``model`` is ``"PowerLaw"``,
    ``"Exponential"`` or ``"None"``; the last is reported when ``log v``
    changes by less than :data:`NO_DECAY_LOG_DROP` across the window.
    """
    _span_check(t)
    win = default_window(t) if window is None else window
    ex = fit_exp(t, v, win)
    pw = fit_power(t, v, (max(win[0], 1.0), win[1]))
    lo, hi = ex.window
    if abs(ex.rate) * (hi - lo) < NO_DECAY_LOG_DROP:
        return "None", pw, ex
    model = "PowerLaw" if pw.residual_ss < ex.residual_ss else "Exponential"
    return model, pw, ex


def predicted_rate(mixed, gamma: float | None):
    """``(model, rate)`` predicted for a time derivative and structural exponent.

    ``lambda1 > 0``: power law ``alpha / gamma``.  ``lambda1 = 0``: exponential
    for ``gamma <= 1`` (rate ``1/C``, not known a priori, so ``None``) and
    power law ``1 / (gamma - 1)`` for ``gamma > 1``.  ``gamma=None`` means no
    decay is predicted.
    """
    if gamma is None:
        return "None", None
    if mixed.lambda1 > 0:
        return "PowerLaw", mixed.alpha / gamma
    if gamma <= 1:
        return "Exponential", None
    return "PowerLaw", 1.0 / (gamma - 1.0)


def default_tolerance(op) -> float:
    degenerate = (isinstance(op, Kirchhoff) and op.m0 == 0) or (isinstance(op, FracKirchhoff) and op.M0 == 0)
    return DEGENERATE_KIRCHHOFF_TOL if degenerate else POWER_TOL


def build_report(problem, hist, gamma_theorem, *, s: float = 2.0, tolerance: float | None = None, window=None) -> DecayReport:
    """Fit ``hist`` (a :class:`~fracdecay.evolve.TimeHistory`) and judge it against the prediction."""
    expected = problem.op.theorem_gamma
    if isinstance(problem.op, SchrodingerControl):
        if gamma_theorem is not None:
            raise ParameterError("the Schrodinger control has no structural exponent; pass gamma_theorem=None")
    elif gamma_theorem is None or not np.isclose(gamma_theorem, expected):
        raise ParameterError(
            f"gamma={gamma_theorem} does not match the proved exponent {expected:g} for {problem.op.name}"
        )
    tol = default_tolerance(problem.op) if tolerance is None else float(tolerance)
    t = hist.t
    v = hist.norm(s)
    model, pw, ex = classify_decay(t, v, window)
    pred_model, pred_rate = predicted_rate(problem.mixed, gamma_theorem)
    chosen = pw if model == "PowerLaw" else ex
    deviation = 0.0
    if pred_model == "None":
        passed = model == "None"
        deviation = abs(ex.rate)
    elif pred_model == "Exponential":
        passed = model == "Exponential" and ex.rate > 0
    else:
        # exponential decay beats any power law
        fast = model == "Exponential" and ex.rate > 0
        deviation = (pred_rate - pw.rate) / pred_rate
        passed = fast or pw.rate >= pred_rate * (1.0 - tol)
    return DecayReport(
        model=model,
        rate=chosen.rate,
        stderr=chosen.stderr,
        window=chosen.window,
        predicted_model=pred_model,
        predicted_rate=pred_rate,
        passed=bool(passed),
        deviation=float(deviation),
        tolerance=tol,
        power=pw,
        exponential=ex,
    )
