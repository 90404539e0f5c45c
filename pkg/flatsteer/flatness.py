"""State and boundary controls assembled from flat outputs.

An even flat output ``y`` parametrizes ``theta(x, t) = sum_i x**(2i) / (2i)! y^(i)(t)`` and the Neumann
control ``h = theta_x(1, .) = sum_{i >= 1} y^(i) / (2i - 1)!``; an odd flat output ``z`` parametrizes
``phi(x, t) = sum_i x**(2i+1) / (2i+1)! z^(i)(t)`` and the Dirichlet control ``k = phi(1, .)``. Series
are truncated at an order ``N`` and evaluated by Horner's rule in ``x**2`` on the scaled derivatives
``y^(i) / (2i)!``, so no factorial is ever formed explicitly.

Example:
    from flatsteer.flatness import assemble_even, neumann_control

    theta = assemble_even(y, N=20)
    theta(np.linspace(0, 1, 11), np.linspace(0, y.T, 5))  # rows are times
    h = neumann_control(y, N=20)
    h(0.3)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from flatsteer.borel_interp import FlatOutput
from flatsteer.config import TRUNCATION_CAP
from flatsteer.errors import DivergentSeriesError, InvalidBoundaryError

__all__ = [
    "ControlSignal",
    "SeriesField",
    "assemble_even",
    "assemble_odd",
    "dirichlet_control",
    "neumann_control",
    "robin_two_sided",
    "truncation_order",
]

logger = logging.getLogger(__name__)

_PARITIES = ("even", "odd", "mixed")


def truncation_order(M: float, ratio: float, tol: float, cap: int | None = None) -> int:
    """Smallest ``N`` with ``M sum_{i > N} ratio**(2i) / (2i + 1) <= tol``, by direct summation.

    Raises:
        DivergentSeriesError: If ``ratio >= 1`` or the order would exceed the cap.
    """
    cap = TRUNCATION_CAP if cap is None else cap
    if not 0 <= ratio < 1:
        raise DivergentSeriesError(f"certificate ratio {ratio:g} does not give a convergent series")
    if M == 0 or ratio == 0:
        return 0
    # terms beyond this index are below double precision relative to the first one
    last = cap + int(40.0 / max(-math.log10(ratio * ratio), 1e-3)) + 2
    i = np.arange(1, last + 1)
    terms = M * np.exp(2 * i * math.log(ratio)) / (2 * i + 1)
    tails = np.cumsum(terms[::-1])[::-1]
    # tails[k] = sum over i > k, i.e. the tail left after truncating at N = k
    for N in range(cap + 1):
        if tails[N] <= tol:
            return N
    raise DivergentSeriesError(f"truncation order exceeds the cap {cap} for ratio {ratio:g}")


def _horner(coeffs: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """``sum_i coeffs[i] x2**i`` with ``coeffs`` of shape ``(N + 1, nt)``; result ``(nt, nx)``."""
    out = np.zeros((coeffs.shape[1], x2.size), dtype=coeffs.dtype)
    for row in coeffs[::-1]:
        out = out * x2[None, :] + row[:, None]
    return out


@dataclass(frozen=True, eq=False)
class SeriesField:
    """Truncated power-series solution of the heat equation on ``[0, 1] x [0, T]``.

    Mixed fields live on ``[-1, 1] x [0, T]`` and are the sum of an even and an odd part kept in
    ``parts``. Evaluation returns arrays whose rows are times and whose columns are positions.
    """

    parity: str
    outputs: tuple[FlatOutput, ...]
    N: int
    tail_bound: float
    parts: tuple[SeriesField, ...] = ()

    def __post_init__(self):
        if self.parity not in _PARITIES:
            raise ValueError(f"unknown parity {self.parity!r}")

    @property
    def T(self) -> float:
        return self.outputs[0].T

    @property
    def domain(self) -> tuple[float, float]:
        return (-1.0, 1.0) if self.parity == "mixed" else (0.0, 1.0)

    def coefficients(self, t: Any) -> np.ndarray:
        """``y^(i)(t) / (2i)!`` (or ``z^(i)(t) / (2i+1)!``) for ``i <= N`` as rows.

        Evaluated in double precision at every order: the control sums divide order ``i`` by ``(2i - 1)!``.
        """
        return self.outputs[0].scaled(np.atleast_1d(np.asarray(t, dtype=float)), self.N, extended=False)

    def __call__(self, x: Any, t: Any) -> np.ndarray:
        if self.parity == "mixed":
            return sum(part(x, t) for part in self.parts)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        values = _horner(self.coefficients(t), xs**2)
        return values * xs[None, :] if self.parity == "odd" else values

    def x_derivative(self, x: Any, t: Any) -> np.ndarray:
        """Exact ``d/dx`` of the truncated series."""
        if self.parity == "mixed":
            return sum(part.x_derivative(x, t) for part in self.parts)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        coeffs = self.coefficients(t)
        i = np.arange(coeffs.shape[0])[:, None]
        if self.parity == "odd":
            return _horner((2 * i + 1) * coeffs, xs**2)
        if coeffs.shape[0] == 1:
            return np.zeros((coeffs.shape[1], xs.size), dtype=coeffs.dtype)
        return _horner((2 * i[1:]) * coeffs[1:], xs**2) * xs[None, :]

    def residual(self, x: Any, t: Any) -> np.ndarray:
        """``(d/dt - d^2/dx^2)`` of the truncated series, the single dropped term.

        Even fields leave ``x**(2N) / (2N)! y^(N+1)``; odd fields leave ``x**(2N+1) / (2N+1)! z^(N+1)``.
        """
        if self.parity == "mixed":
            return sum(part.residual(x, t) for part in self.parts)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        top = self.outputs[0].derivatives(ts, self.N + 1, extended=False)[self.N + 1]
        power = 2 * self.N + (1 if self.parity == "odd" else 0)
        return top[:, None] * (xs**power * math.exp(-math.lgamma(power + 1)))[None, :]


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Boundary control ``alpha psi(x_b, t) + beta psi_x(x_b, t) = h(t)`` at the endpoint ``x_b``."""

    kind: str
    x: float
    alpha: float
    beta: float
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    N: int
    T: float
    sources: tuple[str, ...] = ()
    samples: int = 401

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.samples)

    def __call__(self, t: Any) -> Any:
        values = self.evaluator(np.atleast_1d(np.asarray(t, dtype=float)))
        return values[0] if np.ndim(t) == 0 else values

    @cached_property
    def values(self) -> np.ndarray:
        return self(self.grid)

    @property
    def imag_max(self) -> float:
        return float(np.max(np.abs(np.imag(self.values))))

    def real(self) -> ControlSignal:
        """Copy with the evaluator restricted to real parts."""
        evaluator = self.evaluator

        def real_part(t):
            return np.real(evaluator(t))

        return ControlSignal(
            self.kind, self.x, self.alpha, self.beta, real_part, self.N, self.T, self.sources, self.samples
        )


def _field(y: FlatOutput, N: int | None, tol: float, parity: str) -> SeriesField:
    if y.parity != parity:
        raise ValueError(f"{parity} assembly needs an {parity} flat output, got {y.parity}")
    ratio = y.R_prime / y.R
    M = y.M_prime
    if M == 0:
        # identically zero output
        N = 0 if N is None else N
        return SeriesField(parity=parity, outputs=(y,), N=N, tail_bound=0.0)
    if ratio >= 1:
        raise DivergentSeriesError(f"certificate ratio R'/R = {ratio:g} is not below 1")
    if N is None:
        N = truncation_order(M, ratio, tol)
    tail = M * ratio ** (2 * (N + 1)) / (1 - ratio**2)
    logger.debug("%s field: N=%d M'=%g ratio=%g tail=%g", parity, N, M, ratio, tail)
    return SeriesField(parity=parity, outputs=(y,), N=N, tail_bound=tail)


def _source(y: FlatOutput) -> str:
    return f"{y.method}:{y.parity}"


def assemble_even(y: FlatOutput, N: int | None = None, tol: float = 1e-8) -> SeriesField:
    """``theta(x, t) = sum_{i <= N} x**(2i) / (2i)! y^(i)(t)``.

    ``N`` defaults to :func:`truncation_order` on the certificate of ``y``.

    Raises:
        DivergentSeriesError: If the certificate ratio ``R'/R`` is not below 1.
    """
    return _field(y, N, tol, "even")


def assemble_odd(z: FlatOutput, N: int | None = None, tol: float = 1e-8) -> SeriesField:
    """``phi(x, t) = sum_{i <= N} x**(2i+1) / (2i+1)! z^(i)(t)``."""
    return _field(z, N, tol, "odd")


def neumann_control(y: FlatOutput, N: int | None = None, tol: float = 1e-8) -> ControlSignal:
    """``h(t) = sum_{1 <= i <= N} y^(i)(t) / (2i - 1)!``, the flux trace ``theta_x(1, t)``."""
    theta = assemble_even(y, N, tol)

    def evaluator(t):
        return theta.x_derivative(1.0, t)[:, 0]

    return ControlSignal("neumann", 1.0, 0.0, 1.0, evaluator, theta.N, y.T, (_source(y),))


def dirichlet_control(z: FlatOutput, N: int | None = None, tol: float = 1e-8) -> ControlSignal:
    """``k(t) = sum_{i <= N} z^(i)(t) / (2i + 1)!``, the value trace ``phi(1, t)``."""
    phi = assemble_odd(z, N, tol)

    def evaluator(t):
        return phi(1.0, t)[:, 0]

    return ControlSignal("dirichlet", 1.0, 1.0, 0.0, evaluator, phi.N, z.T, (_source(z),))


def _robin_kind(alpha: float, beta: float) -> str:
    if alpha == 0 and beta == 0:
        raise InvalidBoundaryError("boundary pair (alpha, beta) must not be (0, 0)")
    if beta == 0:
        return "dirichlet"
    if alpha == 0:
        return "neumann"
    return "robin"


def robin_two_sided(
    psi_even: FlatOutput,
    psi_odd: FlatOutput,
    bc0: tuple[float, float],
    bc1: tuple[float, float],
    N: int | None = None,
    tol: float = 1e-8,
) -> tuple[ControlSignal, ControlSignal]:
    """Controls at ``x = -1`` and ``x = 1`` steering ``psi = theta + phi`` on ``[-1, 1]``.

    ``h0 = alpha0 psi(-1, .) + beta0 psi_x(-1, .)`` and ``h1 = alpha1 psi(1, .) + beta1 psi_x(1, .)``, both
    taken from exact traces of the truncated series.

    Raises:
        InvalidBoundaryError: If either boundary pair is ``(0, 0)``.
    """
    kinds = (_robin_kind(*bc0), _robin_kind(*bc1))
    theta = assemble_even(psi_even, N, tol)
    phi = assemble_odd(psi_odd, N, tol)
    psi = SeriesField(
        parity="mixed",
        outputs=(psi_even, psi_odd),
        N=max(theta.N, phi.N),
        tail_bound=theta.tail_bound + phi.tail_bound,
        parts=(theta, phi),
    )
    sources = (_source(psi_even), _source(psi_odd))

    def trace(x_b: float, alpha: float, beta: float) -> Callable[[np.ndarray], np.ndarray]:
        def evaluator(t):
            return alpha * psi(x_b, t)[:, 0] + beta * psi.x_derivative(x_b, t)[:, 0]

        return evaluator

    h0 = ControlSignal(kinds[0], -1.0, bc0[0], bc0[1], trace(-1.0, *bc0), psi.N, psi_even.T, sources)
    h1 = ControlSignal(kinds[1], 1.0, bc1[0], bc1[1], trace(1.0, *bc1), psi.N, psi_even.T, sources)
    return h0, h1
