"""Discrete spatial operators, dissipation functionals and the elementary
inequality checkers used to validate them.

Operators act on :class:`~fracdecay.grid.GridFunction` objects whose exterior
values are zero.  Every operator can also hand out the dense matrix of its
(frozen-coefficient) linearisation, which is what the time steppers use.

Fractional operators use the singular-integral form without a normalising
constant::

    L_sigma u(x) = int (u(x) - u(y)) / |x - y|^(1 + 2 sigma) dy
                 = -1/2 int (u(x+y) + u(x-y) - 2 u(x)) / |y|^(1 + 2 sigma) dy

discretised on the infinite lattice ``x + j h`` with exterior zeros.  The
lattice sum of the weights ``h / |j h|^(1 + 2 sigma)`` over all ``j != 0`` is
``2 h^(-2 sigma) zeta(1 + 2 sigma)``, which replaces any far-field cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

from .errors import ParameterError, ShapeError
from .grid import (
    Grid,
    GridFunction,
    dirichlet_energy,
    edge_gradient,
    lebesgue_norm,
    signed_power,
    weighted_pairing,
)

__all__ = [
    "MagneticField",
    "OperatorSpec",
    "Laplacian",
    "FracLaplacian",
    "PorousMedium",
    "Kirchhoff",
    "FracKirchhoff",
    "Magnetic",
    "FracMagnetic",
    "SchrodingerControl",
    "StructuralReport",
    "apply",
    "operator_matrix",
    "spectral_bound",
    "laplacian_matrix",
    "frac_laplacian_matrix",
    "gagliardo_seminorm",
    "dissipation",
    "estimate_structural_constant",
    "random_smooth_samples",
    "check_monotone_pairing",
    "check_magnetic_quadratic",
    "power_ratio",
    "power_ratio_sup",
    "check_power_ratio_bound",
    "diamagnetic_gap",
    "check_diamagnetic",
    "diamagnetic_gaps_batch",
    "check_admissible_s",
]


# ------------------------------------------------------------------ matrices


def laplacian_matrix(grid: Grid) -> np.ndarray:
    """Dense ``-Delta_h`` (3-point stencil, Dirichlet exterior)."""
    n, h = grid.n_interior, grid.h
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = 2.0 / h**2
    mat[idx[:-1], idx[:-1] + 1] = -1.0 / h**2
    mat[idx[1:], idx[1:] - 1] = -1.0 / h**2
    return mat


def _check_sigma(sigma: float):
    if not 0.0 < sigma < 1.0:
        raise ParameterError(f"sigma must lie in (0, 1), got {sigma}")


def _lattice_kernel(grid: Grid, sigma: float):
    """Off-diagonal weights ``h / |x_i - x_k|^(1+2 sigma)`` and the full lattice mass."""
    n, h = grid.n_interior, grid.h
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    with np.errstate(divide="ignore"):
        w = np.where(d > 0, h ** (-2.0 * sigma) * d ** (-1.0 - 2.0 * sigma), 0.0)
    mass = 2.0 * h ** (-2.0 * sigma) * special.zeta(1.0 + 2.0 * sigma, 1.0)
    return w, mass


def frac_laplacian_matrix(grid: Grid, sigma: float) -> np.ndarray:
    """Dense matrix of ``L_sigma`` on the interior nodes."""
    _check_sigma(sigma)
    w, mass = _lattice_kernel(grid, sigma)
    return mass * np.eye(grid.n_interior) - w


def _exterior_mass(grid: Grid, sigma: float) -> np.ndarray:
    """Lattice weight each interior node sends to exterior nodes."""
    w, mass = _lattice_kernel(grid, sigma)
    return mass - w.sum(axis=1)


# ------------------------------------------------------------------ magnetic field


@dataclass(frozen=True, eq=False)
class MagneticField:
    """Real vector potential sampled at all nodes and midpoints ``a + m h/2``.

    ``half_values[m]`` is ``A(a + m h / 2)`` for ``m = 0..2n+2``; node ``j``
    sits at ``m = 2j`` and the midpoint of nodes ``i`` and ``k`` at ``m = i+k``.
    """

    grid: Grid
    half_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.half_values, dtype=float, copy=True).reshape(-1)
        if vals.size != 2 * self.grid.n_interior + 3:
            raise ShapeError(
                f"field needs {2 * self.grid.n_interior + 3} half-node samples, got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ParameterError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "half_values", vals)

    @classmethod
    def from_function(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> "MagneticField":
        return cls(grid, np.broadcast_to(f(grid.half_nodes), grid.half_nodes.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "MagneticField":
        return cls(grid, np.full(2 * grid.n_interior + 3, float(value)))

    @classmethod
    def zero(cls, grid: Grid) -> "MagneticField":
        return cls.constant(grid, 0.0)

    @property
    def nodes(self) -> np.ndarray:
        """Values at nodes ``0..n+1`` (including the two boundary nodes)."""
        return self.half_values[::2]

    @property
    def edges(self) -> np.ndarray:
        """Values at the ``n+1`` edge midpoints ``j + 1/2``, ``j = 0..n``."""
        return self.half_values[1::2]


# ------------------------------------------------------------------ operators


def _require_real(u: GridFunction, name: str):
    if not u.is_real:
        raise TypeError(f"{name} acts on real-valued functions only")


def _require_grid(op_grid: Grid, u: GridFunction):
    if op_grid != u.grid:
        raise ShapeError("operator field and function live on different grids")


class OperatorSpec:
    """Base class of the spatial operators.

    Subclasses implement :meth:`apply` and :meth:`matrix`.  ``matrix(grid, u)``
    is the linear operator with every nonlinear coefficient frozen at ``u``; for
    linear operators it does not depend on ``u``.
    """

    name = "operator"
    linear = True
    real_only = False

    @property
    def theorem_gamma(self):
        """Exponent of the structural inequality proved for this family."""
        return 1.0

    def apply(self, u: GridFunction) -> GridFunction:
        return u.with_values(self.matrix(u.grid, u) @ u.values)

    def matrix(self, grid: Grid, u: GridFunction | None = None) -> np.ndarray:
        raise NotImplementedError

    def check_input(self, u: GridFunction):
        if self.real_only:
            _require_real(u, self.name)


@dataclass(frozen=True)
class Laplacian(OperatorSpec):
    name = "laplacian"

    def apply(self, u):
        padded = np.concatenate(([0.0], u.values, [0.0]))
        return u.with_values((2.0 * padded[1:-1] - padded[2:] - padded[:-2]) / u.grid.h**2)

    def matrix(self, grid, u=None):
        return laplacian_matrix(grid)


@dataclass(frozen=True)
class FracLaplacian(OperatorSpec):
    sigma: float = 0.5
    name = "frac_laplacian"

    def __post_init__(self):
        _check_sigma(self.sigma)

    def matrix(self, grid, u=None):
        return frac_laplacian_matrix(grid, self.sigma)


@dataclass(frozen=True)
class PorousMedium(OperatorSpec):
    """``-div(u grad K_eps u)`` with ``K_eps(y) = c / (y^2 + eps^2)^((1-2 sigma)/2)``.

    The pressure ``K_eps u`` is a direct discrete convolution evaluated at the
    interior and the two boundary nodes; the flux ``u grad p`` lives on the
    edges with ``u`` averaged to the midpoint.  ``epsilon=None`` means ``h``.
    """

    sigma: float = 0.25
    epsilon: float | None = None
    c_kernel: float = 1.0
    name = "porous"
    linear = False
    real_only = True

    def __post_init__(self):
        _check_sigma(self.sigma)
        if self.sigma >= 0.5:
            raise ParameterError(
                f"porous kernel exponent 1 - 2 sigma must be positive in 1-D; got sigma={self.sigma}"
            )
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if not self.c_kernel > 0:
            raise ParameterError("c_kernel must be positive")

    @property
    def theorem_gamma(self):
        return 2.0

    def eps(self, grid: Grid) -> float:
        return grid.h if self.epsilon is None else self.epsilon

    def pressure_matrix(self, grid: Grid) -> np.ndarray:
        """Maps interior values to ``K_eps u`` at nodes ``0..n+1``."""
        n, h = grid.n_interior, grid.h
        xs = grid.a + h * np.arange(n + 2)
        d2 = np.subtract.outer(xs, grid.x) ** 2
        return h * self.c_kernel * (d2 + self.eps(grid) ** 2) ** (-(1.0 - 2.0 * self.sigma) / 2.0)

    def apply(self, u):
        self.check_input(u)
        h = u.grid.h
        v = u.real
        p = self.pressure_matrix(u.grid) @ v
        padded = np.concatenate(([0.0], v, [0.0]))
        flux = 0.5 * (padded[1:] + padded[:-1]) * np.diff(p) / h
        return u.with_values(-np.diff(flux) / h)

    def matrix(self, grid, u=None):
        """Mobility frozen at ``u``: ``v -> -div(u grad K_eps v)``."""
        if u is None:
            raise ParameterError("porous linearisation needs the frozen state u")
        self.check_input(u)
        n, h = grid.n_interior, grid.h
        padded = np.concatenate(([0.0], u.real, [0.0]))
        mobility = 0.5 * (padded[1:] + padded[:-1])
        grad_p = np.diff(self.pressure_matrix(grid), axis=0) / h  # (n+1, n)
        flux = mobility[:, None] * grad_p
        return -np.diff(flux, axis=0) / h


@dataclass(frozen=True)
class Kirchhoff(OperatorSpec):
    """``m(||grad u||^2) (-Delta u)`` with ``m(xi) = m0 + b xi``."""

    m0: float = 1.0
    b: float = 0.0
    name = "kirchhoff"
    linear = False
    real_only = True

    def __post_init__(self):
        if self.m0 < 0 or self.b < 0 or self.m0 + self.b <= 0:
            raise ParameterError("need m0, b >= 0 and m0 + b > 0")

    @property
    def theorem_gamma(self):
        return 1.0 if self.m0 > 0 else 3.0

    def coefficient(self, u: GridFunction) -> float:
        return self.m0 + self.b * dirichlet_energy(u)

    def apply(self, u):
        self.check_input(u)
        return self.coefficient(u) * Laplacian().apply(u)

    def matrix(self, grid, u=None):
        if u is None:
            if self.b != 0:
                raise ParameterError("Kirchhoff linearisation needs the frozen state u")
            return self.m0 * laplacian_matrix(grid)
        return self.coefficient(u) * laplacian_matrix(grid)


@dataclass(frozen=True)
class FracKirchhoff(OperatorSpec):
    """``M(||u||_Z^2) L_sigma u`` with ``M(xi) = M0 + b xi``."""

    sigma: float = 0.5
    M0: float = 1.0
    b: float = 0.0
    name = "frac_kirchhoff"
    linear = False
    real_only = True

    def __post_init__(self):
        _check_sigma(self.sigma)
        if self.M0 < 0 or self.b < 0 or self.M0 + self.b <= 0:
            raise ParameterError("need M0, b >= 0 and M0 + b > 0")

    @property
    def theorem_gamma(self):
        return 1.0 if self.M0 > 0 else 3.0

    def coefficient(self, u: GridFunction) -> float:
        return self.M0 + self.b * gagliardo_seminorm(u, self.sigma) ** 2

    def apply(self, u):
        self.check_input(u)
        return u.with_values(self.coefficient(u) * (frac_laplacian_matrix(u.grid, self.sigma) @ u.values))

    def matrix(self, grid, u=None):
        if u is None:
            if self.b != 0:
                raise ParameterError("fractional Kirchhoff linearisation needs the frozen state u")
            return self.M0 * frac_laplacian_matrix(grid, self.sigma)
        return self.coefficient(u) * frac_laplacian_matrix(grid, self.sigma)


@dataclass(frozen=True)
class Magnetic(OperatorSpec):
    """``-(grad - iA)^2`` on the grid.

    ``form="peierls"`` (default) attaches the link phase ``exp(-i h A_{j+1/2})``
    to each edge: gauge covariant, Hermitian, and it satisfies the diamagnetic
    inequality node by node.  ``form="expanded"`` uses centered differences
    of ``-Delta u + |A|^2 u + i A u' + i (A u)'``; both agree to O(h^2) on
    smooth data.
    """

    field: MagneticField
    form: str = "peierls"
    name = "magnetic"

    def __post_init__(self):
        if self.form not in ("peierls", "expanded"):
            raise ParameterError(f"unknown magnetic discretisation {self.form!r}")

    def matrix(self, grid, u=None):
        if self.field.grid != grid:
            raise ShapeError("operator field and function live on different grids")
        n, h = grid.n_interior, grid.h
        mat = np.zeros((n, n), dtype=complex)
        idx = np.arange(n)
        if self.form == "peierls":
            link = np.exp(-1j * h * self.field.edges)  # edge j+1/2, j = 0..n
            mat[idx, idx] = 2.0 / h**2
            mat[idx[:-1], idx[:-1] + 1] = -link[1:n] / h**2
            mat[idx[1:], idx[1:] - 1] = -np.conj(link[1:n]) / h**2
            return mat
        A = self.field.nodes  # nodes 0..n+1
        Ai = A[1:-1]
        mat[idx, idx] = 2.0 / h**2 + Ai**2
        # + i A_j (u_{j+1} - u_{j-1}) / 2h + i (A_{j+1} u_{j+1} - A_{j-1} u_{j-1}) / 2h
        up = -1.0 / h**2 + 1j * (Ai[:-1] + A[2:-1]) / (2.0 * h)
        dn = -1.0 / h**2 - 1j * (Ai[1:] + A[1:-2]) / (2.0 * h)
        mat[idx[:-1], idx[:-1] + 1] = up
        mat[idx[1:], idx[1:] - 1] = dn
        return mat

    def apply(self, u):
        _require_grid(self.field.grid, u)
        return u.with_values(self.matrix(u.grid) @ u.values)


@dataclass(frozen=True)
class FracMagnetic(OperatorSpec):
    """``int (u(x) - exp(i (x-y) A((x+y)/2)) u(y)) / |x-y|^(1+2 sigma) dy``."""

    sigma: float
    field: MagneticField
    name = "frac_magnetic"

    def __post_init__(self):
        _check_sigma(self.sigma)

    def matrix(self, grid, u=None):
        if self.field.grid != grid:
            raise ShapeError("operator field and function live on different grids")
        n, h = grid.n_interior, grid.h
        w, mass = _lattice_kernel(grid, self.sigma)
        i = np.arange(n)
        mid = self.field.half_values[2 + np.add.outer(i, i)]  # A((x_i + x_k)/2)
        sep = h * np.subtract.outer(i, i)  # x_i - x_k
        return mass * np.eye(n) - w * np.exp(1j * sep * mid)

    def apply(self, u):
        _require_grid(self.field.grid, u)
        return u.with_values(self.matrix(u.grid) @ u.values)


@dataclass(frozen=True)
class SchrodingerControl(OperatorSpec):
    """``-i (Delta + V) u``: conservative, used as a negative control."""

    V: float = 0.0
    name = "schrodinger"

    @property
    def theorem_gamma(self):
        return None

    def matrix(self, grid, u=None):
        return -1j * (-laplacian_matrix(grid) + self.V * np.eye(grid.n_interior))


def apply(op: OperatorSpec, u: GridFunction) -> GridFunction:
    """``N[u]`` on the grid of ``u``."""
    op.check_input(u)
    return op.apply(u)


def operator_matrix(op: OperatorSpec, grid: Grid, u: GridFunction | None = None) -> np.ndarray:
    if u is not None:
        op.check_input(u)
    return op.matrix(grid, u)


def spectral_bound(op: OperatorSpec, u: GridFunction) -> float:
    """Gershgorin bound on the spectral radius of the operator frozen at ``u``."""
    mat = op.matrix(u.grid, u)
    return float(np.max(np.sum(np.abs(mat), axis=1)))


def gagliardo_seminorm(u: GridFunction, sigma: float) -> float:
    """Discrete ``(int int |u(x)-u(y)|^2 / |x-y|^(1+2 sigma))^(1/2)`` over the whole line.

    Pairs of interior nodes are summed directly; pairs with one exterior node
    contribute ``2 h sum_i |u_i|^2 * (exterior lattice mass of node i)``, the
    mass coming in closed form from the zeta function.  The square equals
    ``2 h Re sum conj(u) L_sigma u`` exactly.
    """
    _check_sigma(sigma)
    g = u.grid
    w, _ = _lattice_kernel(g, sigma)
    vals = u.values
    diff2 = np.abs(np.subtract.outer(vals, vals)) ** 2
    interior = g.h * np.sum(w * diff2)
    exterior = 2.0 * g.h * np.sum(np.abs(vals) ** 2 * _exterior_mass(g, sigma))
    return float(np.sqrt(max(interior + exterior, 0.0)))


def dissipation(op: OperatorSpec, u: GridFunction, s: float) -> float:
    """``int |u|^(s-2) Re(conj(u) N[u]) dx``."""
    return weighted_pairing(u, apply(op, u), s)


# ------------------------------------------------------------------ structural constants


@dataclass
class StructuralReport:
    gamma: float
    C_est: float
    n_samples: int
    min_dissipation: float
    ratios: np.ndarray = field(repr=False)
    passed: bool = True
    counterexample: int | None = None


def estimate_structural_constant(
    op: OperatorSpec, gamma: float, s: float, samples: Sequence[GridFunction]
) -> StructuralReport:
    """Largest ``||u||_s^(s-1+gamma) / dissipation`` over the samples.

    A sample with nonpositive dissipation fails the report; its index is
    returned as the counterexample.
    """
    if not samples:
        raise ParameterError("need at least one sample")
    ratios = np.empty(len(samples))
    dissipations = np.empty(len(samples))
    for i, u in enumerate(samples):
        norm = lebesgue_norm(u, s)
        if norm == 0.0:
            raise ParameterError(f"sample {i} is identically zero")
        d = dissipation(op, u, s)
        dissipations[i] = d
        ratios[i] = norm ** (s - 1.0 + gamma) / d if d > 0 else np.inf
    bad = np.flatnonzero(dissipations <= 0)
    return StructuralReport(
        gamma=gamma,
        C_est=float(ratios.max()),
        n_samples=len(samples),
        min_dissipation=float(dissipations.min()),
        ratios=ratios,
        passed=bad.size == 0,
        counterexample=int(bad[0]) if bad.size else None,
    )


def random_smooth_samples(
    grid: Grid,
    count: int,
    rng: np.random.Generator,
    *,
    modes: int = 6,
    complex_phase: bool = False,
    amplitude_range: tuple[float, float] = (0.5, 2.0),
) -> list[GridFunction]:
    """Positive smooth profiles dominated by the first sine mode.

    ``u = amp * (sin(pi y) + sum_{k>=2} c_k sin(k pi y))``, ``y = (x-a)/(b-a)``,
    with ``|c_k| <= 1/(4 k^3)`` so that ``u > 0`` inside.  ``complex_phase``
    multiplies by ``exp(i theta(x))`` with a random smooth phase.
    """
    y = (grid.x - grid.a) / grid.length
    lo, hi = np.log(amplitude_range[0]), np.log(amplitude_range[1])
    out = []
    for _ in range(count):
        k = np.arange(2, modes + 1)
        coef = rng.uniform(-1.0, 1.0, size=k.size) / (4.0 * k**3)
        prof = np.sin(np.pi * y) + np.sin(np.pi * np.outer(y, k)) @ coef
        vals = np.exp(rng.uniform(lo, hi)) * prof
        if complex_phase:
            q = np.arange(1, 4)
            theta = np.cos(np.pi * np.outer(y, q)) @ rng.normal(0.0, 2.0, size=q.size)
            vals = vals * np.exp(1j * theta)
        out.append(GridFunction(grid, vals))
    return out


# ------------------------------------------------------------------ elementary inequalities


def check_monotone_pairing(a, b, s, *, slack: float = 0.0):
    """``(a - b)(|a|^(s-2) a - |b|^(s-2) b) >= 0``; vectorised over arrays.

    ``slack`` is relative to ``|a - b| (|a|^(s-1) + |b|^(s-1))``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 1):
        raise ParameterError("s must be >= 1")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pa, pb = signed_power(a, s), signed_power(b, s)
    prod = (a - b) * (pa - pb)
    return prod >= -slack * np.abs(a - b) * (np.abs(pa) + np.abs(pb))


def check_magnetic_quadratic(a, b, alpha_v, beta_v, t_v, *, rtol: float = 1e-12):
    """``(a^2+b^2)(|a t - beta|^2 + |b t + alpha|^2) >= |a alpha + b beta|^2``.

    ``a``, ``b`` are scalars (or arrays of shape ``batch``); the vectors have
    the vector dimension last.  Holds up to ``rtol * (1 + RHS)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    al = np.asarray(alpha_v, dtype=float)
    be = np.asarray(beta_v, dtype=float)
    t = np.asarray(t_v, dtype=float)
    if not (al.shape == be.shape == t.shape):
        raise ShapeError("alpha, beta and t must have the same shape")
    A = a[..., None]
    B = b[..., None]
    lhs = (a**2 + b**2) * (np.sum((A * t - be) ** 2, axis=-1) + np.sum((B * t + al) ** 2, axis=-1))
    rhs = np.sum((A * al + B * be) ** 2, axis=-1)
    return lhs >= rhs - rtol * (1.0 + rhs)


def _one_minus_pow(lam, r):
    """``1 - |lam|^r`` without cancellation near ``|lam| = 1``."""
    mag = np.abs(lam)
    with np.errstate(divide="ignore"):
        return -np.expm1(r * np.log1p(mag - 1.0))


def power_ratio(lam, s: float, p: float):
    """``g(lam) = (1 - |lam|^((s+2)/(2p)))^(2p) / ((1-lam)^3 (1 - |lam|^(s-2) lam))``."""
    lam = np.asarray(lam, dtype=float)
    r = (s + 2.0) / (2.0 * p)
    num = _one_minus_pow(lam, r) ** (2.0 * p)
    # 1 - |lam|^(s-2) lam: for lam >= 0 this is 1 - lam^(s-1)
    tail = np.where(lam >= 0, _one_minus_pow(lam, s - 1.0), 1.0 + np.abs(lam) ** (s - 1.0))
    return num / ((1.0 - lam) ** 3 * tail)


def _check_power_ratio_args(s: float, p: float):
    if p < 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    if not s > 1:
        raise ParameterError(f"g is unbounded for s <= 1 (denominator vanishes), got s={s}")


def check_power_ratio_bound(s: float, p: float, lambda_grid) -> float:
    """Maximum of :func:`power_ratio` over ``lambda_grid`` inside ``(-1, 1)``."""
    _check_power_ratio_args(s, p)
    lam = np.asarray(lambda_grid, dtype=float)
    if np.any(np.abs(lam) >= 1):
        raise ParameterError("lambda grid must lie strictly inside (-1, 1)")
    return float(np.max(power_ratio(lam, s, p)))


def power_ratio_sup(s: float, p: float) -> float:
    """``sup_{(-1,1)} g``: dense scan, bounded refinement, and the limits at +-1.

    ``g(-1) = 0``; as ``lam -> 1`` the limit is ``((s+2)/4)^4 / (s-1)`` for
    ``p = 2`` and ``0`` for ``p > 2``.
    """
    _check_power_ratio_args(s, p)
    grid = np.concatenate([
        np.linspace(-1.0, 1.0, 20001)[1:-1],
        1.0 - np.logspace(-12, -4, 200),
        -1.0 + np.logspace(-12, -4, 200),
    ])
    vals = power_ratio(grid, s, p)
    best = int(np.argmax(vals))
    lam0 = grid[best]
    width = 2e-4
    res = optimize.minimize_scalar(
        lambda x: -float(power_ratio(x, s, p)),
        bounds=(max(lam0 - width, -1.0 + 1e-15), min(lam0 + width, 1.0 - 1e-15)),
        method="bounded",
        options={"xatol": 1e-14},
    )
    limit_right = ((s + 2.0) / 4.0) ** 4 / (s - 1.0) if p == 2 else 0.0
    return float(max(vals[best], -res.fun, limit_right))


def diamagnetic_gap(u: GridFunction, field_: MagneticField, sigma: float | None = None, s: float = 2.0):
    """Both sides of the integrated diamagnetic inequality.

    Classical (``sigma is None``): ``int |u|^(s-2) Re(conj(u) N_A u)`` against
    ``int grad|u|^(s-1) . grad|u|``.  Fractional: ``int |u|^(s-2) Re(conj(u) N_A u)``
    against ``int |u|^(s-1) L_sigma |u|``.  Returns ``(lhs, rhs, scale)``
    where ``scale`` bounds the magnitude of the summed terms.
    """
    g = u.grid
    op = Magnetic(field_) if sigma is None else FracMagnetic(sigma, field_)
    Nu = op.apply(u)
    lhs = weighted_pairing(u, Nu, s)
    mag = np.abs(u.values)
    if sigma is None:
        pw = signed_power(mag, s)  # |u|^(s-1)
        rhs = g.h * float(np.sum(edge_gradient(GridFunction(g, pw)).real * edge_gradient(GridFunction(g, mag)).real))
    else:
        rhs = g.h * float(np.sum(signed_power(mag, s) * (frac_laplacian_matrix(g, sigma) @ mag)))
    scale = g.h * float(np.sum(np.abs(np.conj(signed_power(u.values, s)) * Nu.values))) + abs(rhs)
    return lhs, rhs, scale


def check_diamagnetic(
    u: GridFunction,
    field_: MagneticField,
    sigma: float | None = None,
    s: float = 2.0,
    *,
    tol: float = 1e-8,
) -> bool:
    """Diamagnetic inequality ``lhs >= rhs - tol * scale`` (see :func:`diamagnetic_gap`)."""
    lhs, rhs, scale = diamagnetic_gap(u, field_, sigma, s)
    return bool(lhs >= rhs - tol * max(scale, 1e-300))


def diamagnetic_gaps_batch(grid: Grid, U, A_half, sigma: float | None = None, s=2.0, *, chunk: int = 4096):
    """Vectorised :func:`diamagnetic_gap` for many functions and fields at once.

    ``U`` has shape ``(batch, n)`` (complex), ``A_half`` shape ``(batch, 2n+3)``;
    ``s`` is a scalar or one exponent per sample.  Returns ``(lhs, rhs, scale)``
    arrays of length ``batch``.
    """
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    A_half = np.atleast_2d(np.asarray(A_half, dtype=float))
    n, h = grid.n_interior, grid.h
    if U.shape[1] != n or A_half.shape != (U.shape[0], 2 * n + 3):
        raise ShapeError("U must be (batch, n) and A_half (batch, 2n+3)")
    s_col = np.broadcast_to(np.asarray(s, dtype=float), (U.shape[0],))[:, None]
    lhs = np.empty(U.shape[0])
    rhs = np.empty(U.shape[0])
    scale = np.empty(U.shape[0])
    if sigma is not None:
        w, mass = _lattice_kernel(grid, sigma)
        L = mass * np.eye(n) - w
        i = np.arange(n)
        sep = h * np.subtract.outer(i, i)
        mid_idx = 2 + np.add.outer(i, i)
    for lo in range(0, U.shape[0], chunk):
        u = U[lo : lo + chunk]
        A = A_half[lo : lo + chunk]
        sc = s_col[lo : lo + chunk]
        mag = np.abs(u)
        weight = np.conj(signed_power(u, sc))
        pw = signed_power(mag, sc)
        if sigma is None:
            pad = np.zeros((u.shape[0], n + 2), dtype=complex)
            pad[:, 1:-1] = u
            link = np.exp(-1j * h * A[:, 1::2])  # edges 0..n
            Nu = (2.0 * u - link[:, 1:] * pad[:, 2:] - np.conj(link[:, :-1]) * pad[:, :-2]) / h**2
            dpw = np.diff(np.pad(pw, ((0, 0), (1, 1))), axis=1) / h
            dmag = np.diff(np.pad(mag, ((0, 0), (1, 1))), axis=1) / h
            r = h * np.sum(dpw * dmag, axis=1)
        else:
            phase = np.exp(1j * sep[None] * A[:, mid_idx])
            Nu = mass * u - np.einsum("ik,bik,bk->bi", w, phase, u)
            r = h * np.sum(pw * (mag @ L.T), axis=1)
        terms = np.real(weight * Nu)
        lhs[lo : lo + chunk] = h * terms.sum(axis=1)
        rhs[lo : lo + chunk] = r
        scale[lo : lo + chunk] = h * np.sum(np.abs(weight * Nu), axis=1) + np.abs(r)
    return lhs, rhs, scale


def check_admissible_s(op: OperatorSpec, s: float, dimension: int = 1) -> None:
    """Validate the Lebesgue exponent against the degenerate Kirchhoff ranges.

    Only the dimension bookkeeping matters: ``s <= 2n/(n-4)`` for the classical
    and ``s <= 2n/(n-4 sigma)`` for the fractional degenerate case.  In 1-D
    every ``s >= 1`` is admissible.
    """
    if s < 1:
        raise ParameterError(f"s must be >= 1, got {s}")
    if isinstance(op, Kirchhoff) and op.m0 == 0 and dimension > 4:
        bound = 2.0 * dimension / (dimension - 4)
        if s > bound:
            raise ParameterError(f"degenerate Kirchhoff needs s <= {bound:g} in dimension {dimension}")
    if isinstance(op, FracKirchhoff) and op.M0 == 0 and dimension > 4 * op.sigma:
        bound = 2.0 * dimension / (dimension - 4.0 * op.sigma)
        if s > bound:
            raise ParameterError(
                f"degenerate fractional Kirchhoff needs s <= {bound:g} in dimension {dimension}"
            )
