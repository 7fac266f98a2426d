"""Time marching of ``(lambda1 D^alpha + lambda2 d/dt) u + N[u] = 0`` on a grid.

The Caputo part uses the L1 scheme with the full solution history, so a run
of ``M`` steps costs ``Theta(M^2 n)``.  Three schemes are available:

``ExplicitL1``
    ``N`` evaluated at the previous step; the step size is checked against a
    Gershgorin bound of the operator at ``u0``.
``SemiImplicitL1``
    linear operators taken implicitly, nonlinear coefficients frozen at the
    previous step (one linear solve per step).
``CrankNicolson``
    implicit midpoint rule, reserved for the norm-preserving Schrodinger
    control with a classical time derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import special

from .errors import ParameterError, SolverError
from .frac_time import MixedDerivativeSpec, l1_coefficient, l1_weights
from .grid import GridFunction, lebesgue_norm
from .operators import OperatorSpec, SchrodingerControl, spectral_bound

__all__ = [
    "SCHEMES",
    "ProblemSpec",
    "EvolutionState",
    "TimeHistory",
    "Stepper",
    "alternating_symbol",
    "explicit_step_limit",
    "initial_state",
    "step",
    "run",
]

SCHEMES = ("ExplicitL1", "SemiImplicitL1", "CrankNicolson")
CFL_SAFETY = 0.9
MAX_SNAPSHOTS = 50
MONOTONE_SLACK = 1e-10
POSITIVITY_SLACK = 1e-8


def alternating_symbol(alpha: float) -> float:
    """Abel sum ``sum_k (-1)^k b_k`` of the L1 weights, ``2 eta(alpha - 1)``.

    It is the L1 symbol on the most oscillatory sequence and sets the explicit
    stability limit of the fractional part; it runs from 1/2 (alpha -> 0) to 1.
    """
    return float(2.0 * (1.0 - 2.0 ** (2.0 - alpha)) * special.zeta(alpha - 1.0))


def explicit_step_limit(mixed: MixedDerivativeSpec, dt: float) -> float:
    """Largest operator spectral radius the explicit scheme accepts at step ``dt``.

    ``0.9 * (lambda1 c S_alpha + lambda2 / dt)``, with ``c`` the L1 coefficient and
    ``S_alpha`` from :func:`alternating_symbol`; for ``lambda1 = 0`` this is
    ``dt * rho <= 0.9``.
    """
    frac = mixed.lambda1 * l1_coefficient(dt, mixed.alpha) * alternating_symbol(mixed.alpha)
    return CFL_SAFETY * (frac + mixed.lambda2 / dt)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    mixed: MixedDerivativeSpec
    op: OperatorSpec
    u0: GridFunction
    dt: float
    T: float
    scheme: str = "SemiImplicitL1"
    s_list: tuple = (2.0,)

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.T) and self.T >= 0):
            raise ParameterError(f"T must be >= 0, got {self.T}")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        s_list = tuple(float(s) for s in np.atleast_1d(self.s_list))
        if not s_list or any(not s >= 1 for s in s_list):
            raise ParameterError("every tracked s must be >= 1")
        object.__setattr__(self, "s_list", s_list)
        if self.scheme == "CrankNicolson":
            if not isinstance(self.op, SchrodingerControl):
                raise ParameterError("CrankNicolson is reserved for the Schrodinger control")
            if self.mixed.lambda1 != 0:
                raise ParameterError("CrankNicolson needs a classical time derivative (lambda1 = 0)")
        self.op.check_input(self.u0)
        field_ = getattr(self.op, "field", None)
        if field_ is not None and field_.grid != self.u0.grid:
            raise ParameterError("magnetic field and u0 live on different grids")
        if self.scheme == "ExplicitL1":
            rho = spectral_bound(self.op, self.u0)
            limit = explicit_step_limit(self.mixed, self.dt)
            if rho > limit:
                raise ParameterError(
                    f"explicit step too large: spectral bound {rho:.4g} exceeds {limit:.4g}; reduce dt"
                )

    @property
    def n_steps(self) -> int:
        """Number of steps; the final time is ``n_steps * dt``, the multiple of dt nearest T."""
        return int(round(self.T / self.dt))


@dataclass
class EvolutionState:
    """Current step ``m``, solution ``u`` and all past increments.

    ``increments[j]`` holds ``u_{j+1} - u_j``; the buffer is owned by the
    state and grown on demand.
    """

    m: int
    u: np.ndarray
    increments: np.ndarray = field(repr=False)

    def record(self, du: np.ndarray):
        if self.m >= self.increments.shape[0]:
            grown = np.zeros((max(16, 2 * self.increments.shape[0]), self.u.size), dtype=complex)
            grown[: self.m] = self.increments[: self.m]
            self.increments = grown
        self.increments[self.m] = du
        self.u = self.u + du
        self.m += 1


def initial_state(problem: ProblemSpec, capacity: int | None = None) -> EvolutionState:
    n = problem.u0.grid.n_interior
    cap = problem.n_steps if capacity is None else capacity
    buf = np.zeros((max(cap, 1) if problem.mixed.lambda1 > 0 else 1, n), dtype=complex)
    return EvolutionState(0, problem.u0.values.copy(), buf)


class Stepper:
    """Precomputes what one run needs: L1 weights and, for linear operators,
    the factorised system matrix."""

    def __init__(self, problem: ProblemSpec):
        self.problem = problem
        mixed = problem.mixed
        grid = problem.u0.grid
        self.grid = grid
        self.c = l1_coefficient(problem.dt, mixed.alpha) if mixed.lambda1 > 0 else 0.0
        self.a = mixed.lambda1 * self.c + mixed.lambda2 / problem.dt
        self.b = l1_weights(max(problem.n_steps, 1) + 1, mixed.alpha) if mixed.lambda1 > 0 else None
        self._lu = None
        self._cn = None
        n = grid.n_interior
        if problem.scheme == "CrankNicolson":
            A = problem.op.matrix(grid)
            half = 0.5 * problem.dt * A
            self._cn = (scipy.linalg.lu_factor(np.eye(n) + half), np.eye(n) - half)
        elif problem.scheme == "SemiImplicitL1" and problem.op.linear:
            self._lu = scipy.linalg.lu_factor(self.a * np.eye(n) + problem.op.matrix(grid))

    def memory(self, state: EvolutionState) -> np.ndarray:
        """``sum_{k=1}^{m-1} b_k (u_{m-k} - u_{m-k-1})`` for the step to ``m = state.m + 1``."""
        m = state.m + 1
        if self.b is None or m < 2:
            return np.zeros(state.u.size, dtype=complex)
        return self.b[m - 1 : 0 : -1] @ state.increments[: m - 1]

    def advance(self, state: EvolutionState) -> EvolutionState:
        p = self.problem
        step_no = state.m + 1
        u_prev = state.u
        if p.scheme == "CrankNicolson":
            lu, rhs_mat = self._cn
            u_new = scipy.linalg.lu_solve(lu, rhs_mat @ u_prev)
            du = u_new - u_prev
        else:
            hist = self.memory(state)
            frozen = GridFunction(self.grid, u_prev)
            if p.scheme == "ExplicitL1":
                Nu = p.op.apply(frozen).values
                du = -(p.mixed.lambda1 * self.c * hist + Nu) / self.a
            else:
                # (a + A) u_m = a u_{m-1} - lambda1 c hist
                rhs = self.a * u_prev - p.mixed.lambda1 * self.c * hist
                try:
                    if self._lu is not None:
                        u_new = scipy.linalg.lu_solve(self._lu, rhs)
                    else:
                        A = p.op.matrix(self.grid, frozen)
                        u_new = scipy.linalg.solve(self.a * np.eye(u_prev.size) + A, rhs)
                except (np.linalg.LinAlgError, ValueError) as exc:
                    raise SolverError(f"linear solve failed: {exc}", step=step_no) from exc
                du = u_new - u_prev
        if not np.all(np.isfinite(du)):
            raise SolverError("non-finite solution", step=step_no)
        # real operators must not pick up round-off imaginary parts
        state.record(du.real.astype(complex) if p.op.real_only else du)
        return state


def step(state: EvolutionState, problem: ProblemSpec) -> EvolutionState:
    """Advance ``state`` by one step (builds a fresh :class:`Stepper`)."""
    return Stepper(problem).advance(state)


@dataclass
class TimeHistory:
    t: np.ndarray
    norms: dict
    snapshots: list = field(default_factory=list, repr=False)
    snapshot_times: list = field(default_factory=list, repr=False)
    monotonicity_violations: list = field(default_factory=list)
    min_value: float | None = None
    positivity_violated: bool = False

    def norm(self, s: float) -> np.ndarray:
        return self.norms[float(s)]

    @property
    def final(self) -> GridFunction | None:
        return self.snapshots[-1] if self.snapshots else None


def run(problem: ProblemSpec) -> TimeHistory:
    """March to ``T``; norms every step, at most 50 snapshots (always the last)."""
    M = problem.n_steps
    grid = problem.u0.grid
    t = problem.dt * np.arange(M + 1)
    norms = {s: np.empty(M + 1) for s in problem.s_list}
    for s in problem.s_list:
        norms[s][0] = lebesgue_norm(problem.u0, s)
    stride = max(1, math.ceil(M / MAX_SNAPSHOTS))
    snaps, snap_t = [], []
    track_sign = problem.op.real_only and np.all(problem.u0.real >= 0)
    u_top = float(np.max(np.abs(problem.u0.values), initial=0.0))
    min_value = float(np.min(problem.u0.real)) if track_sign else None
    violations = []

    state = initial_state(problem)
    stepper = Stepper(problem)
    check_monotone = not isinstance(problem.op, SchrodingerControl)
    for m in range(1, M + 1):
        stepper.advance(state)
        u = GridFunction(grid, state.u)
        for s in problem.s_list:
            val = lebesgue_norm(u, s)
            norms[s][m] = val
            if check_monotone and val > norms[s][m - 1] + MONOTONE_SLACK:
                violations.append((m, s, val - norms[s][m - 1]))
        if track_sign:
            min_value = min(min_value, float(np.min(state.u.real)))
        if m % stride == 0 and m < M:
            snaps.append(u)
            snap_t.append(t[m])
    snaps.append(GridFunction(grid, state.u))
    snap_t.append(t[M])
    return TimeHistory(
        t=t,
        norms=norms,
        snapshots=snaps[-MAX_SNAPSHOTS:],
        snapshot_times=snap_t[-MAX_SNAPSHOTS:],
        monotonicity_violations=violations,
        min_value=min_value,
        positivity_violated=bool(track_sign and min_value < -POSITIVITY_SLACK * u_top),
    )
