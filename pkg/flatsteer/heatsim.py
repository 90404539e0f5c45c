"""Crank-Nicolson replay of the heat equation with time-dependent boundary data.

The solver is independent of the synthesis code: it only sees boundary data as functions of time. Each
end carries ``alpha psi + beta psi_x = h(t)`` with the x-derivative taken in the direction of increasing
x. Neumann and Robin ends are closed with a ghost node and the centred difference, which keeps the system
tridiagonal and the scheme second order; Dirichlet ends are imposed at the new time level. Boundary data
enter the Crank-Nicolson average at the half step.

Example:
    from flatsteer.heatsim import Boundary, solve_heat

    field = solve_heat(Boundary.dirichlet(), Boundary.neumann(h), init=np.zeros_like, T=0.5, nx=200, nt=2000)
    field.terminal
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import factorized

from flatsteer.errors import InvalidBoundaryError

__all__ = [
    "Boundary",
    "ConvergenceReport",
    "HeatField",
    "ManufacturedProblem",
    "TerminalError",
    "convergence_study",
    "polynomial_problem",
    "sine_problem",
    "solve_heat",
    "terminal_error",
]

logger = logging.getLogger(__name__)


def _zero(t: Any) -> Any:
    return np.zeros(np.shape(t))


@dataclass(frozen=True, eq=False)
class Boundary:
    """``alpha psi + beta psi_x = data(t)`` at one end of the rod; ``data=None`` means zero."""

    alpha: float
    beta: float
    data: Callable[[Any], Any] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise InvalidBoundaryError("boundary pair (alpha, beta) must not be (0, 0)")

    @property
    def kind(self) -> str:
        if self.beta == 0:
            return "dirichlet"
        return "neumann" if self.alpha == 0 else "robin"

    @classmethod
    def dirichlet(cls, data: Callable[[Any], Any] | None = None) -> Boundary:
        return cls(1.0, 0.0, data)

    @classmethod
    def neumann(cls, data: Callable[[Any], Any] | None = None) -> Boundary:
        return cls(0.0, 1.0, data)

    @classmethod
    def robin(cls, alpha: float, beta: float, data: Callable[[Any], Any] | None = None) -> Boundary:
        return cls(alpha, beta, data)

    @classmethod
    def from_control(cls, control: Any) -> Boundary:
        """Boundary carrying the real part of a control signal."""
        return cls(control.alpha, control.beta, lambda t: np.real(control(t)))

    def sample(self, times: np.ndarray, chunk: int = 256) -> np.ndarray:
        """Real boundary data at ``times``, evaluated in chunks to bound memory."""
        data = self.data or _zero
        out = np.empty(times.size)
        for start in range(0, times.size, chunk):
            part = times[start : start + chunk]
            out[start : start + chunk] = np.real(np.broadcast_to(data(part), part.shape))
        return out


@dataclass(frozen=True, eq=False)
class HeatField:
    """Samples ``values[n, j] = psi(x_j, t_n)`` on a uniform space-time grid."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    scheme: str = "crank-nicolson"

    def __post_init__(self):
        if self.values.shape != (self.t.size, self.x.size):
            raise ValueError(f"values of shape {self.values.shape} do not match the grid")

    @property
    def nx(self) -> int:
        return self.x.size - 1

    @property
    def nt(self) -> int:
        return self.t.size - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]

    def mean(self, row: int = -1) -> float:
        """Trapezoidal mean of one time row."""
        u = self.values[row]
        return float((u.sum() - 0.5 * (u[0] + u[-1])) / self.nx)


def _sample_init(init: Any, x: np.ndarray) -> np.ndarray:
    if callable(init):
        return np.broadcast_to(np.asarray(init(x), dtype=float), x.shape).copy()
    values = np.asarray(init, dtype=float)
    if values.shape != x.shape:
        raise ValueError(f"initial data has {values.size} values for {x.size} nodes")
    return values.copy()


def _operator(left: Boundary, right: Boundary, nx: int, dx: float) -> sparse.csc_matrix:
    """Second-difference matrix with the ghost nodes of Neumann and Robin ends eliminated."""
    main = np.full(nx + 1, -2.0)
    upper = np.ones(nx)
    lower = np.ones(nx)
    if left.kind != "dirichlet":
        main[0] = -2.0 + 2.0 * dx * left.alpha / left.beta
        upper[0] = 2.0
    if right.kind != "dirichlet":
        main[-1] = -2.0 - 2.0 * dx * right.alpha / right.beta
        lower[-1] = 2.0
    if left.kind == "dirichlet":
        main[0] = upper[0] = 0.0
    if right.kind == "dirichlet":
        main[-1] = lower[-1] = 0.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csc") / dx**2


def solve_heat(
    left: Boundary,
    right: Boundary,
    init: Any,
    T: float,
    nx: int,
    nt: int,
    domain: tuple[float, float] = (0.0, 1.0),
    store_every: int = 1,
) -> HeatField:
    """Advance ``psi_t = psi_xx`` from ``init`` to time ``T``.

    Args:
        left: Boundary condition at ``domain[0]``.
        right: Boundary condition at ``domain[1]``.
        init: Initial values on the ``nx + 1`` nodes, or a function of ``x``.
        T: Final time.
        nx: Number of spatial cells, at least 16.
        nt: Number of time steps, at least 16.
        domain: Interval of the rod.
        store_every: Keep every n-th time row in the returned field; the final row is always kept.

    Raises:
        InvalidBoundaryError: If a Robin end makes the ghost-node closure singular.
    """
    if nx < 16 or nt < 16:
        raise ValueError(f"grids need at least 16 cells and steps, got nx={nx}, nt={nt}")
    a, b = domain
    x = np.linspace(a, b, nx + 1)
    t = np.linspace(0.0, T, nt + 1)
    dx, dt = (b - a) / nx, T / nt

    L = _operator(left, right, nx, dx)
    identity = sparse.identity(nx + 1, format="csc")
    A = (identity - 0.5 * dt * L).tolil()
    B = (identity + 0.5 * dt * L).tocsr()
    for j, end in ((0, left), (nx, right)):
        if end.kind == "dirichlet":
            A[j, :] = 0.0
            A[j, j] = 1.0
    try:
        solve = factorized(A.tocsc())
    except RuntimeError as exc:
        raise InvalidBoundaryError(f"boundary closure is singular: {exc}") from exc

    rows = np.unique(np.append(np.arange(0, nt + 1, store_every), nt))
    values = np.empty((rows.size, nx + 1))
    current = _sample_init(init, x)
    # Dirichlet data at the new level, flux data at the half step
    data = {}
    for end, j in ((left, 0), (right, nx)):
        if end.kind == "dirichlet":
            levels = end.sample(t) / end.alpha
            current[j] = levels[0]
            data[j] = levels[1:]
        else:
            sign = -1.0 if j == 0 else 1.0
            data[j] = sign * dt * (2.0 / dx) * end.sample(t[:-1] + 0.5 * dt) / end.beta
    values[0] = current
    stored = 1
    for n in range(nt):
        rhs = B @ current
        for j, end in ((0, left), (nx, right)):
            if end.kind == "dirichlet":
                rhs[j] = data[j][n]
            else:
                rhs[j] += data[j][n]
        current = solve(rhs)
        if stored < rows.size and rows[stored] == n + 1:
            values[stored] = current
            stored += 1
    if not np.all(np.isfinite(current)):
        raise FloatingPointError("Crank-Nicolson replay produced non-finite values")
    logger.debug("heat replay: nx=%d nt=%d, terminal sup %g", nx, nt, np.max(np.abs(values[-1])))
    return HeatField(x=x, t=t[rows], values=values)


@dataclass(frozen=True)
class TerminalError:
    linf: float
    l2: float
    rel_linf: float


def terminal_error(field: HeatField, target: Any) -> TerminalError:
    """Norms of ``psi(., T) - target`` on the final row; ``target`` is a function of ``x`` or grid values."""
    reference = np.real(np.asarray(target(field.x) if callable(target) else target, dtype=complex))
    err = field.terminal - reference
    linf = float(np.max(np.abs(err)))
    dx = (field.x[-1] - field.x[0]) / field.nx
    weights = np.full(field.x.size, dx)
    weights[[0, -1]] *= 0.5
    l2 = float(math.sqrt(np.sum(weights * err**2)))
    scale = float(np.max(np.abs(reference)))
    return TerminalError(linf=linf, l2=l2, rel_linf=linf / scale if scale > 0 else linf)


@dataclass(frozen=True, eq=False)
class ManufacturedProblem:
    """Heat problem with a known exact solution."""

    name: str
    left: Boundary
    right: Boundary
    exact: Callable[[np.ndarray, float], np.ndarray] = field(repr=False)
    T: float = 0.1
    domain: tuple[float, float] = (0.0, 1.0)

    def solve(self, nx: int, nt: int) -> HeatField:
        return solve_heat(
            self.left, self.right, lambda x: self.exact(x, 0.0), self.T, nx, nt, domain=self.domain
        )

    def error(self, nx: int, nt: int) -> float:
        field = self.solve(nx, nt)
        return float(np.max(np.abs(field.terminal - self.exact(field.x, self.T))))


def sine_problem(T: float = 0.1) -> ManufacturedProblem:
    """``exp(-pi**2 t) sin(pi x)`` with homogeneous Dirichlet ends on ``[0, 1]``."""

    def exact(x, t):
        return math.exp(-math.pi**2 * t) * np.sin(math.pi * x)

    return ManufacturedProblem("sine", Boundary.dirichlet(), Boundary.dirichlet(), exact, T)


def polynomial_problem(T: float = 0.1) -> ManufacturedProblem:
    """``x**2 + 2t`` with ``psi_x(0) = 0`` and ``psi_x(1) = 2``; reproduced exactly by the scheme."""

    def exact(x, t):
        return np.asarray(x) ** 2 + 2.0 * t

    return ManufacturedProblem("polynomial", Boundary.neumann(), Boundary.neumann(lambda t: 2.0), exact, T)


@dataclass(frozen=True)
class ConvergenceReport:
    """Observed orders ``log2(e_k / e_(k+1))`` along doubling ladders in space and in time."""

    ladder: tuple[int, ...]
    space_errors: np.ndarray
    time_errors: np.ndarray
    space_orders: np.ndarray
    time_orders: np.ndarray
    exact: bool


def _orders(errors: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(errors[:-1] / errors[1:])


def convergence_study(
    problem: ManufacturedProblem,
    ladder: Sequence[int] = (16, 32, 64),
    fine_steps: int = 2048,
    fine_cells: int = 8192,
    exact_tol: float = 1e-11,
) -> ConvergenceReport:
    """Estimate spatial and temporal orders on a doubling ladder.

    The spatial ladder runs with ``fine_steps`` time steps and the temporal ladder with ``fine_cells``
    cells, so the other discretization error stays negligible. A problem whose errors all sit at rounding
    level is flagged ``exact`` and its orders are meaningless.
    """
    space = np.array([problem.error(n, fine_steps) for n in ladder])
    time = np.array([problem.error(fine_cells, n) for n in ladder])
    exact = bool(np.all(space <= exact_tol) and np.all(time <= exact_tol))
    report = ConvergenceReport(
        ladder=tuple(ladder),
        space_errors=space,
        time_errors=time,
        space_orders=_orders(space),
        time_orders=_orders(time),
        exact=exact,
    )
    logger.debug("%s ladder: space orders %s, time orders %s", problem.name, report.space_orders, report.time_orders)
    return report
