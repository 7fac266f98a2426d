"""Uniform 1-D grids with an exterior-zero extension.

A :class:`GridFunction` stores values at the interior nodes only; every node
outside ``(a, b)`` is implicitly zero.  All quadratures are the rectangle rule
``h * sum``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError, ShapeError, UndefinedRatioError

__all__ = [
    "Grid",
    "GridFunction",
    "lebesgue_norm",
    "weighted_pairing",
    "discrete_gradient",
    "edge_gradient",
    "dirichlet_energy",
    "poincare_ratio",
    "signed_power",
]


@dataclass(frozen=True)
class Grid:
    """Interior nodes ``x_j = a + j*h``, ``j = 1..n_interior``, of ``(a, b)``."""

    a: float
    b: float
    n_interior: int

    def __post_init__(self):
        if not np.isfinite(self.a) or not np.isfinite(self.b) or not self.a < self.b:
            raise ParameterError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n_interior) != self.n_interior or self.n_interior < 1:
            raise ParameterError(f"n_interior must be a positive integer, got {self.n_interior}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_interior + 1)

    @property
    def x(self) -> np.ndarray:
        return self.a + self.h * np.arange(1, self.n_interior + 1)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def half_nodes(self) -> np.ndarray:
        """All nodes and midpoints ``a + m*h/2`` for ``m = 0..2n+2``."""
        return self.a + 0.5 * self.h * np.arange(2 * self.n_interior + 3)

    def function(self, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample ``f`` at the interior nodes."""
        return GridFunction(self, f(self.x))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n_interior))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex values on the interior nodes of ``grid``; zero outside."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True).reshape(-1)
        if v.shape != (self.grid.n_interior,):
            raise ShapeError(
                f"expected {self.grid.n_interior} values, got {np.shape(self.values)}"
            )
        if not np.all(np.isfinite(v)):
            raise ParameterError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0.0))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def _check(self, other: "GridFunction"):
        if other.grid != self.grid:
            raise ShapeError("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values - other.values)
        return NotImplemented

    def __mul__(self, c):
        if np.isscalar(c):
            return GridFunction(self.grid, self.values * c)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __len__(self):
        return self.grid.n_interior


def signed_power(z, p):
    """``|z|**(p-1) * z`` with the value at ``z = 0`` defined as ``0``.

    Works for real and complex arrays; for real ``z`` this is
    ``sign(z) * |z|**(p-1)``, i.e. the map ``|z|^{s-2} z`` with ``p = s``.
    """
    z = np.asarray(z)
    mag = np.abs(z)
    safe = np.where(mag > 0, mag, 1.0)
    # unit phase times |z|^(p-1) stays finite for subnormal |z| when p < 2;
    # parts divided separately since complex division overflows there
    phase = z.real / safe if not np.iscomplexobj(z) else z.real / safe + 1j * (z.imag / safe)
    return np.where(mag > 0, phase * safe ** (p - 1.0), 0.0 * z)


def _check_s(s: float):
    if not s >= 1:
        raise ParameterError(f"exponent s must be >= 1, got {s}")


def lebesgue_norm(u: GridFunction, s: float) -> float:
    """Rectangle-rule L^s norm ``(h * sum |u_j|^s)^(1/s)``."""
    _check_s(s)
    mag = np.abs(u.values)
    top = mag.max(initial=0.0)
    if top == 0.0:
        return 0.0
    # scaled to avoid overflow for large s
    return float(top * (u.grid.h * np.sum((mag / top) ** s)) ** (1.0 / s))


def weighted_pairing(u: GridFunction, v: GridFunction, s: float) -> float:
    """``h * sum |u_j|^(s-2) Re(conj(u_j) v_j)``; the weight is 0 where u_j = 0."""
    _check_s(s)
    u._check(v)
    return float(u.grid.h * np.sum(np.real(np.conj(signed_power(u.values, s)) * v.values)))


def discrete_gradient(u: GridFunction) -> GridFunction:
    """Centered differences at the interior nodes, exterior values taken as zero."""
    padded = np.concatenate(([0.0], u.values, [0.0]))
    return GridFunction(u.grid, (padded[2:] - padded[:-2]) / (2.0 * u.grid.h))


def edge_gradient(u: GridFunction) -> np.ndarray:
    """Forward differences on the ``n_interior + 1`` cell edges (half-nodes).

    This is the gradient whose squared norm pairs exactly with the 3-point
    Laplacian: ``h * sum conj(u) (-Lap u) = h * sum |edge_gradient(u)|^2``.
    """
    padded = np.concatenate(([0.0], u.values, [0.0]))
    return np.diff(padded) / u.grid.h


def dirichlet_energy(u: GridFunction) -> float:
    """Discrete ``||grad u||^2_{L^2}`` on the edges."""
    return float(u.grid.h * np.sum(np.abs(edge_gradient(u)) ** 2))


def poincare_ratio(u: GridFunction) -> float:
    """``||u||_{L^2} / ||grad u||_{L^2}`` with the edge gradient.

    On ``(0, 1)`` this is bounded by ``1 / ((2/h) sin(pi h / 2))``, slightly
    above ``1/pi``, with equality for the sampled ``sin(pi x)``.
    """
    energy = dirichlet_energy(u)
    if energy == 0.0:
        raise UndefinedRatioError("Poincare ratio undefined for u == 0")
    return lebesgue_norm(u, 2.0) / np.sqrt(energy)
