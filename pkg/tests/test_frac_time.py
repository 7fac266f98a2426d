import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx, gamma as Gamma

from fracdecay.errors import ParameterError, ShapeError, UnsupportedDomainError
from fracdecay.frac_time import (
    MixedDerivativeSpec,
    ScalarHistory,
    backward_difference,
    caputo_l1,
    caputo_l1_all,
    caputo_pointwise,
    l1_coefficient,
    l1_weights,
    mittag_leffler,
    mixed_apply,
    solve_scalar_mixed,
)


# ---------------------------------------------------------------- types


def test_spec_invariants():
    MixedDerivativeSpec(0.25, 0.75, 0.5)
    for args in [(0.5, 0.4, 0.5), (-0.1, 1.1, 0.5), (1.0, 0.0, 1.0), (1.0, 0.0, 0.0)]:
        with pytest.raises(ParameterError):
            MixedDerivativeSpec(*args)
    assert MixedDerivativeSpec.classical().is_classical
    assert not MixedDerivativeSpec.fractional(0.3).is_classical


def test_history_invariants():
    with pytest.raises(ParameterError):
        ScalarHistory([0.1, 0.2], [1.0, 1.0])
    with pytest.raises(ParameterError):
        ScalarHistory([0.0, 0.2, 0.2], [1.0, 1.0, 1.0])
    with pytest.raises(ParameterError):
        ScalarHistory([0.0, 1.0], [1.0, np.inf])
    with pytest.raises(ShapeError):
        ScalarHistory([0.0, 1.0], [1.0])
    with pytest.raises(ParameterError):
        _ = ScalarHistory([0.0, 1.0, 3.0], [1.0, 1.0, 1.0]).dt
    h = ScalarHistory.uniform([3.0, 2.0, 1.0], 0.5)
    assert h.dt == 0.5 and len(h) == 3


# ---------------------------------------------------------------- Caputo


def test_l1_weights():
    b = l1_weights(4, 0.5)
    np.testing.assert_allclose(b, [1.0, math.sqrt(2) - 1, math.sqrt(3) - math.sqrt(2), 2 - math.sqrt(3)])
    assert np.all(np.diff(b) < 0)
    assert l1_coefficient(0.01, 0.5) == pytest.approx(0.01**-0.5 / Gamma(1.5))


@pytest.mark.parametrize("rule", [caputo_l1, caputo_pointwise])
def test_caputo_of_constant_vanishes(rule):
    assert rule(ScalarHistory.uniform(np.full(50, 3.7), 0.1), 0.4) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_caputo_of_linear_is_exact(alpha):
    h = ScalarHistory.sample(lambda t: t, 1.0, 1e-2)
    exact = 1.0 / Gamma(2 - alpha)
    assert caputo_l1(h, alpha) == pytest.approx(exact, rel=1e-12)
    assert caputo_pointwise(h, alpha) == pytest.approx(exact, rel=1e-3)


def test_caputo_near_one_recovers_derivative():
    h = ScalarHistory.sample(lambda t: t**2, 1.0, 1e-3)
    assert caputo_l1(h, 0.999) == pytest.approx(2.0, rel=1e-2)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_caputo_of_square_converges(alpha):
    exact = 2.0 / Gamma(3 - alpha)
    errs = [abs(caputo_l1(ScalarHistory.sample(lambda t: t**2, 1.0, dt), alpha) - exact) for dt in (1e-2, 5e-3)]
    assert errs[1] < errs[0] < 1e-2


def test_pointwise_matches_l1_on_smooth_data():
    h = ScalarHistory.sample(lambda t: np.exp(-t) * np.cos(t), 2.0, 1e-3)
    assert caputo_pointwise(h, 0.6) == pytest.approx(caputo_l1(h, 0.6), abs=1e-3)


def test_caputo_all_matches_final_value():
    h = ScalarHistory.sample(np.sin, 1.0, 0.01)
    allv = caputo_l1_all(h, 0.4)
    assert allv[-1] == pytest.approx(caputo_l1(h, 0.4), rel=1e-12)
    short = ScalarHistory(h.t[:40], h.v[:40])
    # entries start at t_1
    assert allv[38] == pytest.approx(caputo_l1(short, 0.4), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=40), st.floats(0.1, 0.9))
def test_nonincreasing_to_zero_has_nonpositive_caputo(steps, alpha):
    v = np.concatenate(([0.0], np.cumsum(steps)))[::-1]
    h = ScalarHistory.uniform(v, 0.1)
    assert caputo_l1(h, alpha) <= 1e-12
    assert caputo_pointwise(h, alpha) <= 1e-12


def test_caputo_errors():
    with pytest.raises(ParameterError):
        caputo_l1(ScalarHistory([0.0], [1.0]), 0.5)
    with pytest.raises(ParameterError):
        caputo_l1(ScalarHistory([0.0, 1.0, 3.0], [1.0, 1.0, 1.0]), 0.5)
    with pytest.raises(ParameterError):
        caputo_l1(ScalarHistory.uniform([1.0, 2.0], 1.0), 1.0)


def test_mixed_apply_limits():
    h = ScalarHistory.sample(lambda t: t**1.5, 1.0, 0.01)
    assert mixed_apply(h, MixedDerivativeSpec(0.0, 1.0, 0.5)) == pytest.approx(backward_difference(h))
    assert mixed_apply(h, MixedDerivativeSpec(1.0, 0.0, 0.5)) == pytest.approx(caputo_l1(h, 0.5))
    assert mixed_apply(ScalarHistory.uniform(np.ones(9), 0.1), MixedDerivativeSpec(0.5, 0.5, 0.5)) == 0.0
    mid = mixed_apply(h, MixedDerivativeSpec(0.3, 0.7, 0.5))
    assert mid == pytest.approx(0.3 * caputo_l1(h, 0.5) + 0.7 * backward_difference(h))


# ---------------------------------------------------------------- Mittag-Leffler


def test_mittag_leffler_reductions():
    t = np.linspace(0.0, 50.0, 101)
    np.testing.assert_allclose(mittag_leffler(1.0, -t), np.exp(-t), rtol=1e-10, atol=1e-300)
    np.testing.assert_allclose(mittag_leffler(0.5, -t), erfcx(t), rtol=1e-10)
    assert mittag_leffler(0.3, 0.0) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1e4))
def test_mittag_leffler_half_against_erfcx(x):
    assert mittag_leffler(0.5, -x) == pytest.approx(erfcx(x), rel=1e-9)


@pytest.mark.parametrize("alpha", [0.2, 0.45, 0.75, 0.95])
def test_mittag_leffler_shape(alpha):
    z = -np.geomspace(1e-3, 1e3, 200)
    e = mittag_leffler(alpha, z)
    assert np.all((e > 0) & (e < 1))
    assert np.all(np.diff(e) < 0)
    # leading asymptotic term -1/(z Gamma(1-alpha))
    tail = -1.0 / (z[-1] * Gamma(1 - alpha))
    assert e[-1] == pytest.approx(tail, rel=0.05)


def test_mittag_leffler_branch_continuity():
    # the series / asymptotic switch sits at |z| = 10
    for alpha in (0.3, 0.6, 0.9):
        lo, hi = mittag_leffler(alpha, np.array([-10.0 + 1e-9, -10.0 - 1e-9]))
        assert lo == pytest.approx(hi, rel=1e-8)


def test_mittag_leffler_domain():
    with pytest.raises(UnsupportedDomainError):
        mittag_leffler(0.5, 1.0)
    with pytest.raises(ParameterError):
        mittag_leffler(0.5, np.nan)
    with pytest.raises(ParameterError):
        mittag_leffler(1.5, -1.0)


# ---------------------------------------------------------------- scalar solver


def test_scalar_classical_linear_and_quadratic():
    h = solve_scalar_mixed(MixedDerivativeSpec.classical(), 2.0, 1.0, 1.0, 3.0, 1e-3)
    np.testing.assert_allclose(h.v, np.exp(-2 * h.t), rtol=1e-2)
    h = solve_scalar_mixed(MixedDerivativeSpec.classical(), 1.0, 2.0, 2.0, 5.0, 1e-3)
    np.testing.assert_allclose(h.v, 2.0 / (1.0 + 2.0 * h.t), rtol=1e-2)


def test_scalar_fractional_relaxation_rate():
    h = solve_scalar_mixed(MixedDerivativeSpec.fractional(0.6), 1.0, 1.0, 1.0, 5.0, 1e-2)
    exact = mittag_leffler(0.6, -(h.t**0.6))
    assert np.max(np.abs(h.v - exact) / exact) < 2e-2


def test_singular_start_beats_plain_l1():
    spec = MixedDerivativeSpec.fractional(0.4)
    errs = {}
    for start in ("singular", "l1"):
        h = solve_scalar_mixed(spec, 1.0, 1.0, 1.0, 2.0, 1e-2, start=start)
        errs[start] = np.max(np.abs(h.v - mittag_leffler(0.4, -(h.t**0.4))))
    assert errs["singular"] < errs["l1"]


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.2, 0.9), st.sampled_from([1.0, 2.0, 3.0]), st.floats(0.1, 3.0))
def test_scalar_solution_positive_and_nonincreasing(lam1, alpha, gamma, v0):
    h = solve_scalar_mixed(MixedDerivativeSpec(lam1, 1.0 - lam1, alpha), 1.0, gamma, v0, 5.0, 0.05)
    assert np.all(h.v >= 0)
    assert np.all(np.diff(h.v) <= 1e-12)


def test_scalar_zero_stays_zero():
    h = solve_scalar_mixed(MixedDerivativeSpec.fractional(0.5), 1.0, 2.0, 0.0, 1.0, 0.1)
    assert np.all(h.v == 0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=0.0), dict(gamma=-1.0), dict(v0=-1.0), dict(dt=0.0), dict(dt=2.0), dict(start="magic")],
)
def test_scalar_solver_rejects(kwargs):
    args = dict(spec=MixedDerivativeSpec.fractional(0.5), k=1.0, gamma=1.0, v0=1.0, T=1.0, dt=0.1)
    args.update(kwargs)
    with pytest.raises(ParameterError):
        solve_scalar_mixed(**args)
