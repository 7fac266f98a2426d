import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import zeta

from fracdecay.errors import ParameterError, ShapeError
from fracdecay.grid import Grid, GridFunction, dirichlet_energy, lebesgue_norm
from fracdecay.operators import (
    FracKirchhoff,
    FracLaplacian,
    FracMagnetic,
    Kirchhoff,
    Laplacian,
    Magnetic,
    MagneticField,
    PorousMedium,
    SchrodingerControl,
    apply,
    check_admissible_s,
    check_diamagnetic,
    check_magnetic_quadratic,
    check_monotone_pairing,
    check_power_ratio_bound,
    diamagnetic_gap,
    diamagnetic_gaps_batch,
    dissipation,
    estimate_structural_constant,
    frac_laplacian_matrix,
    gagliardo_seminorm,
    laplacian_matrix,
    operator_matrix,
    power_ratio,
    power_ratio_sup,
    random_smooth_samples,
    spectral_bound,
)

G = Grid(0.0, 1.0, 31)
vals31 = arrays(float, 31, elements=st.floats(-10, 10, allow_nan=False))


def sine(grid=G, k=1):
    return grid.function(lambda x: np.sin(k * np.pi * x))


# ------------------------------------------------------------ linear operators


def test_laplacian_apply_matches_matrix_and_eigenvalue():
    u = sine()
    np.testing.assert_allclose(Laplacian().apply(u).values, laplacian_matrix(G) @ u.values)
    lam = (2.0 / G.h * math.sin(math.pi * G.h / 2)) ** 2
    np.testing.assert_allclose(apply(Laplacian(), u).values, lam * u.values, atol=1e-9)


def test_frac_laplacian_matrix_structure():
    sigma = 0.3
    L = frac_laplacian_matrix(G, sigma)
    np.testing.assert_allclose(L, L.T)
    assert L[0, 0] == pytest.approx(2 * G.h ** (-2 * sigma) * zeta(1 + 2 * sigma))
    assert L[0, 3] == pytest.approx(-G.h ** (-2 * sigma) / 3 ** (1 + 2 * sigma))
    assert np.all(np.linalg.eigvalsh(L) > 0)
    # strictly diagonally dominant thanks to the exterior mass
    assert np.all(np.diag(L) > np.sum(np.abs(L), axis=1) - np.diag(L))


def test_frac_laplacian_half_first_eigenvalue():
    # unnormalised sigma = 1/2 kernel is pi (-Delta)^(1/2); its first Dirichlet
    # eigenvalue on (-1, 1) is 1.1577738, so 2 * 1.1577738 * pi on (0, 1)
    lam = np.linalg.eigvalsh(frac_laplacian_matrix(Grid(0.0, 1.0, 127), 0.5))[0]
    assert lam == pytest.approx(2 * 1.1577738 * math.pi, rel=1e-2)


@settings(max_examples=30, deadline=None)
@given(vals31, st.sampled_from([0.2, 0.5, 0.8]))
def test_gagliardo_identity(v, sigma):
    u = GridFunction(G, v)
    lhs = gagliardo_seminorm(u, sigma) ** 2
    rhs = 2 * G.h * float(v @ frac_laplacian_matrix(G, sigma) @ v)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_bad_sigma():
    for s in (0.0, 1.0, -0.2):
        with pytest.raises(ParameterError):
            FracLaplacian(s)


def test_spectral_bound_dominates_eigenvalues():
    u = sine()
    for op in (Laplacian(), FracLaplacian(0.4), Kirchhoff(1.0, 1.0)):
        ev = np.abs(np.linalg.eigvals(operator_matrix(op, G, u)))
        assert ev.max() <= spectral_bound(op, u) * (1 + 1e-12)


# ------------------------------------------------------------ nonlinear operators


def test_porous_apply_matches_frozen_matrix():
    op = PorousMedium(0.25)
    u = sine()
    np.testing.assert_allclose(op.apply(u).values, op.matrix(G, u) @ u.values, rtol=1e-12, atol=1e-9)
    assert op.pressure_matrix(G).shape == (33, 31)
    assert op.theorem_gamma == 2


def test_porous_conserves_mass_for_compact_support():
    y = G.x
    u = GridFunction(G, np.where(np.abs(y - 0.5) < 0.2, np.cos(2.5 * np.pi * (y - 0.5)) ** 2, 0.0))
    assert abs(np.sum(PorousMedium(0.25).apply(u).values)) * G.h < 1e-10


def test_porous_rejections():
    with pytest.raises(ParameterError):
        PorousMedium(0.5)
    with pytest.raises(ParameterError):
        PorousMedium(0.25, epsilon=0.0)
    with pytest.raises(ParameterError):
        PorousMedium(0.25).matrix(G)
    with pytest.raises(TypeError):
        apply(PorousMedium(0.25), sine() * 1j)


def test_kirchhoff_coefficient_and_gamma():
    u = sine()
    op = Kirchhoff(0.5, 2.0)
    assert op.coefficient(u) == pytest.approx(0.5 + 2.0 * dirichlet_energy(u))
    np.testing.assert_allclose(op.apply(u).values, op.coefficient(u) * Laplacian().apply(u).values)
    assert Kirchhoff(1.0, 1.0).theorem_gamma == 1 and Kirchhoff(0.0, 1.0).theorem_gamma == 3
    with pytest.raises(ParameterError):
        Kirchhoff(0.0, 0.0)
    with pytest.raises(ParameterError):
        Kirchhoff(0.0, 1.0).matrix(G)
    np.testing.assert_allclose(Kirchhoff(2.0, 0.0).matrix(G), 2 * laplacian_matrix(G))


def test_frac_kirchhoff_reduces_to_frac_laplacian():
    u = sine()
    np.testing.assert_allclose(FracKirchhoff(0.4, 1.0, 0.0).apply(u).values, FracLaplacian(0.4).apply(u).values)
    op = FracKirchhoff(0.4, 0.0, 1.0)
    assert op.coefficient(u) == pytest.approx(gagliardo_seminorm(u, 0.4) ** 2)
    assert op.theorem_gamma == 3


# ------------------------------------------------------------ magnetic operators


def field_of(f, grid=G):
    return MagneticField.from_function(grid, f)


def test_magnetic_zero_field_is_laplacian():
    u = sine()
    np.testing.assert_allclose(Magnetic(MagneticField.zero(G)).apply(u).values, Laplacian().apply(u).values, atol=1e-9)
    np.testing.assert_allclose(
        FracMagnetic(0.4, MagneticField.zero(G)).apply(u).values, FracLaplacian(0.4).apply(u).values, atol=1e-9
    )


@pytest.mark.parametrize("form", ["peierls", "expanded"])
def test_magnetic_hermitian(form):
    M = Magnetic(field_of(lambda x: 1 + np.cos(3 * x)), form).matrix(G)
    np.testing.assert_allclose(M, M.conj().T, atol=1e-9 * np.abs(M).max())


def test_frac_magnetic_hermitian():
    M = FracMagnetic(0.5, field_of(lambda x: 2 + x**2)).matrix(G)
    np.testing.assert_allclose(M, M.conj().T, atol=1e-12 * np.abs(M).max())


@settings(max_examples=20, deadline=None)
@given(st.floats(-20, 20), vals31)
def test_constant_field_gauge_covariance(c, v):
    u = GridFunction(G, v)
    gauge = np.exp(1j * c * G.x)
    lhs = Magnetic(MagneticField.constant(G, c)).apply(GridFunction(G, gauge * v)).values
    np.testing.assert_allclose(lhs, gauge * Laplacian().apply(u).values, atol=1e-8 * (1 + np.abs(v).max()) / G.h**2)
    lhs = FracMagnetic(0.5, MagneticField.constant(G, c)).apply(GridFunction(G, gauge * v)).values
    np.testing.assert_allclose(lhs, gauge * FracLaplacian(0.5).apply(u).values, atol=1e-8 * (1 + np.abs(v).max()) / G.h)


def test_peierls_gauge_covariance_general():
    chi = lambda x: np.sin(4 * x) + x**3
    base = field_of(lambda x: np.cos(x))
    # on edges the gauge shift is the exact difference quotient of chi
    nodes = G.a + G.h * np.arange(G.n_interior + 2)
    shifted = np.array(base.half_values)
    shifted[1::2] += np.diff(chi(nodes)) / G.h
    u = sine(k=2) * (1 + 0.5j)
    gauge = np.exp(1j * chi(G.x))
    lhs = Magnetic(MagneticField(G, shifted)).apply(GridFunction(G, gauge * u.values)).values
    rhs = gauge * Magnetic(base).apply(u).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_peierls_and_expanded_agree_on_smooth_data():
    grid = Grid(0.0, 1.0, 255)
    f = field_of(lambda x: 1 + np.sin(2 * np.pi * x), grid)
    u = grid.function(lambda x: np.sin(np.pi * x) ** 3)
    a = Magnetic(f).apply(u).values
    b = Magnetic(f, "expanded").apply(u).values
    inner = slice(5, -5)
    assert np.max(np.abs(a - b)[inner]) < 1e-2 * np.max(np.abs(a))


def test_magnetic_grid_and_form_checks():
    with pytest.raises(ParameterError):
        Magnetic(MagneticField.zero(G), "bogus")
    with pytest.raises(ShapeError):
        Magnetic(MagneticField.zero(G)).apply(Grid(0.0, 1.0, 7).zeros())
    with pytest.raises(ShapeError):
        MagneticField(G, np.zeros(10))


def test_schrodinger_is_skew():
    M = SchrodingerControl(1.0).matrix(G)
    np.testing.assert_allclose(M, -M.conj().T, atol=1e-9)
    assert SchrodingerControl().theorem_gamma is None
    u = sine() * (1 + 1j)
    assert abs(dissipation(SchrodingerControl(1.0), u, 2)) < 1e-9 * np.abs(M).max()


# ------------------------------------------------------------ structural inequality


def test_laplacian_constant_is_inverse_pi_squared():
    rng = np.random.default_rng(0)
    rep = estimate_structural_constant(Laplacian(), 1.0, 2.0, random_smooth_samples(Grid(0.0, 1.0, 63), 100, rng))
    assert rep.passed and rep.counterexample is None
    assert rep.C_est == pytest.approx(1 / math.pi**2, rel=0.1)


def test_structural_scaling_under_amplitude():
    # gamma is the exponent that makes the ratio scale-invariant
    u = sine()
    for op, gamma in ((PorousMedium(0.25), 2.0), (Kirchhoff(0.0, 1.0), 3.0), (FracLaplacian(0.5), 1.0)):
        r = [lebesgue_norm(c * u, 2) ** (1 + gamma) / dissipation(op, c * u, 2) for c in (0.5, 3.0)]
        assert r[0] == pytest.approx(r[1], rel=1e-9)


def test_structural_counterexample_reported():
    u = sine()
    rep = estimate_structural_constant(SchrodingerControl(0.0), 1.0, 2.0, [u * 1j])
    assert not rep.passed and rep.counterexample == 0
    with pytest.raises(ParameterError):
        estimate_structural_constant(Laplacian(), 1.0, 2.0, [])
    with pytest.raises(ParameterError):
        estimate_structural_constant(Laplacian(), 1.0, 2.0, [G.zeros()])


def test_random_samples_positive_and_seeded():
    a = random_smooth_samples(G, 5, np.random.default_rng(7))
    b = random_smooth_samples(G, 5, np.random.default_rng(7))
    for u, w in zip(a, b):
        assert np.array_equal(u.values, w.values)
        assert np.all(u.real > 0)
    c = random_smooth_samples(G, 3, np.random.default_rng(7), complex_phase=True)
    assert not c[0].is_real


# ------------------------------------------------------------ elementary inequalities


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1.0, 8.0))
def test_monotone_pairing_property(a, b, s):
    assert check_monotone_pairing(a, b, s, slack=1e-12)


def test_monotone_pairing_rejects_small_s():
    with pytest.raises(ParameterError):
        check_monotone_pairing(1.0, 2.0, 0.5)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-10, 10),
    st.floats(-10, 10),
    *[arrays(float, 3, elements=st.floats(-10, 10)) for _ in range(3)],
)
def test_magnetic_quadratic_property(a, b, al, be, t):
    assert check_magnetic_quadratic(a, b, al, be, t)


def test_magnetic_quadratic_equality_case():
    # a t = beta and b t = -alpha leaves only the cross term; holds with equality when it is zero
    assert check_magnetic_quadratic(1.0, 0.0, np.zeros(2), np.ones(2), np.ones(2), rtol=0.0)
    with pytest.raises(ShapeError):
        check_magnetic_quadratic(1.0, 1.0, np.zeros(2), np.zeros(3), np.zeros(2))


def test_power_ratio_limits():
    s = 3.0
    assert power_ratio(-1.0 + 1e-15, s, 2.0) == pytest.approx(0.0, abs=1e-10)
    limit = ((s + 2) / 4) ** 4 / (s - 1)
    assert power_ratio(1 - 1e-7, s, 2.0) == pytest.approx(limit, rel=1e-5)
    assert power_ratio_sup(s, 2.0) >= limit
    assert power_ratio(1 - 1e-7, s, 3.0) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(1.05, 6.0), st.floats(2.0, 5.0))
def test_power_ratio_bounded_by_sup(s, p):
    lam = np.linspace(-0.999999, 0.999999, 2001)
    assert check_power_ratio_bound(s, p, lam) <= power_ratio_sup(s, p) * (1 + 1e-9)


def test_power_ratio_argument_checks():
    with pytest.raises(ParameterError):
        power_ratio_sup(1.0, 2.0)
    with pytest.raises(ParameterError):
        power_ratio_sup(2.0, 1.5)
    with pytest.raises(ParameterError):
        check_power_ratio_bound(2.0, 2.0, [1.0])


@pytest.mark.parametrize("sigma", [None, 0.3, 0.7])
@pytest.mark.parametrize("s", [1.0, 1.5, 2.0, 4.0])
def test_diamagnetic_holds(sigma, s):
    rng = np.random.default_rng(11)
    f = field_of(lambda x: 3 * np.sin(5 * x) + 1)
    for _ in range(10):
        u = GridFunction(G, rng.normal(size=31) + 1j * rng.normal(size=31))
        assert check_diamagnetic(u, f, sigma, s)


def test_diamagnetic_equality_for_real_positive_and_zero_field():
    u = sine()
    lhs, rhs, _ = diamagnetic_gap(u, MagneticField.zero(G), None, 2.0)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    lhs, rhs, _ = diamagnetic_gap(u, MagneticField.zero(G), 0.5, 2.0)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("sigma", [None, 0.4])
def test_diamagnetic_batch_matches_single(sigma):
    rng = np.random.default_rng(5)
    grid = Grid(0.0, 1.0, 9)
    U = rng.normal(size=(6, 9)) + 1j * rng.normal(size=(6, 9))
    A = rng.normal(size=(6, 21))
    s = rng.uniform(1, 5, 6)
    lhs, rhs, _ = diamagnetic_gaps_batch(grid, U, A, sigma, s, chunk=4)
    for i in range(6):
        one = diamagnetic_gap(GridFunction(grid, U[i]), MagneticField(grid, A[i]), sigma, s[i])
        assert lhs[i] == pytest.approx(one[0], rel=1e-10, abs=1e-10)
        assert rhs[i] == pytest.approx(one[1], rel=1e-10, abs=1e-10)
    with pytest.raises(ShapeError):
        diamagnetic_gaps_batch(grid, U, A[:, :5])


def test_admissible_s():
    check_admissible_s(Kirchhoff(0.0, 1.0), 10.0, 1)
    with pytest.raises(ParameterError):
        check_admissible_s(Kirchhoff(0.0, 1.0), 7.0, 6)
    with pytest.raises(ParameterError):
        check_admissible_s(FracKirchhoff(0.5, 0.0, 1.0), 7.0, 3)
    check_admissible_s(FracKirchhoff(0.5, 1.0, 1.0), 7.0, 3)
    check_admissible_s(Kirchhoff(0.0, 1.0), 6.0, 6)
    with pytest.raises(ParameterError):
        check_admissible_s(Laplacian(), 0.5)
