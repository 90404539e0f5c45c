"""Borel interpolation through the Laplace transform, without loss.

For a kernel ``g`` analytic near the closed negative half-line, ``f(t) = d_0 + t int_0^inf e^-s g(ts) ds``
has ``f^(n)(t) = int_0^inf e^-s g^(n-1)(ts) s^n ds`` for ``t <= 0`` and matches ``d_n = n! g^(n-1)(0)`` at
the origin with the same radius as the targets. The improper integral is mapped to ``(0, 1)`` with
``s = u / (1 - u)`` and summed by composite Gauss-Legendre panels, doubled until the relative change
drops below ``QUAD_TOL``.

The module also carries the finite-cut variant ``G(x) = int_0^R phi(t) e^(-t/x) dt``, whose loss is
at least 2, together with a probe that exhibits that loss at ``x_n = R / 2n``.

Example:
    from flatsteer.laplace import steer_laplace_even, zeta_kernel

    y = steer_laplace_even(zeta_kernel(0.8), T=1.0, sigma=1.8, N_max=12)
    y.derivatives(1.0)[:4]  # (n!)^2 / 0.8^(2n)

Configuration (environment):
    FLATSTEER_QUAD_TOL = 1e-12  # Relative change at which panel doubling stops (default: 1e-12)
    FLATSTEER_Y3_STRICT = false  # Raise instead of warn on sampled kernel-bound violations (default: false)
    FLATSTEER_Y3_SAMPLES = 200  # Sample points on [-50, 0] for the kernel-bound check (default: 200)
    FLATSTEER_PRECISION = 256  # Base mantissa bits for the finite-cut tables (default: 256)
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Any

import mpmath
import numpy as np
from numpy.polynomial import legendre
from scipy.special import gammaln

from flatsteer.borel_interp import FlatOutput, shifted_product
from flatsteer.config import LOSS_SLOPE_TOL, QUAD_TOL, Y3_SAMPLES, Y3_STRICT
from flatsteer.errors import ConditionY3Error, ConditionY3Warning, InvalidCutError, InvalidOrderError
from flatsteer.gevrey_core import gevrey_step
from flatsteer.precision import extended_precision
from flatsteer.series import TaylorSeries

__all__ = [
    "LaplaceInterpolant",
    "LaplaceKernel",
    "ProbeReport",
    "check_condition_y3",
    "exponential_kernel",
    "finite_laplace_G",
    "laplace_interpolate",
    "loss_lower_bound_probe",
    "pole_kernel",
    "stationary_phase_envelope",
    "steer_laplace_even",
    "steer_laplace_odd",
    "zero_kernel",
    "zeta_kernel",
]

logger = logging.getLogger(__name__)

_GAUSS_NODES, _GAUSS_WEIGHTS = legendre.leggauss(32)
_MIN_PANELS = 8
_MAX_PANELS = 2048


@dataclass(frozen=True, eq=False)
class LaplaceKernel:
    """Kernel ``g`` with its derivative oracle on the closed negative half-line.

    ``R`` is the radius for which the produced targets satisfy ``|d_n| <= M (2n)! / R**(2n)``;
    ``closed_form(t, n)``, when present, returns ``f^(n)(t)`` for ``n >= 1`` as a reference.
    """

    name: str
    derivative: Callable[[np.ndarray, int], np.ndarray] = field(repr=False)
    R: float
    d0: float = 1.0
    closed_form: Callable[[float, int], Any] | None = field(default=None, repr=False)

    def targets(self, N: int, d0: float | None = None) -> np.ndarray:
        """``d_0`` followed by ``d_n = n! g^(n-1)(0)`` for ``n = 1..N``."""
        first = np.asarray(self.derivative(np.zeros(1), 0))
        d = np.zeros(N + 1, dtype=np.result_type(first, float))
        d[0] = self.d0 if d0 is None else d0
        for n in range(1, N + 1):
            d[n] = math.factorial(n) * np.asarray(self.derivative(np.zeros(1), n - 1))[0]
        return d


def zeta_kernel(zeta: float) -> LaplaceKernel:
    """``g(z) = zeta**-2 (1 - z / zeta**2)**-2``, giving ``d_n = (n!)**2 / zeta**(2n)``."""
    z2 = zeta * zeta

    def derivative(z, m):
        return math.factorial(m + 1) * z2 ** (-m - 1) * (1.0 - np.asarray(z) / z2) ** (-(m + 2))

    def closed_form(t, n):
        with extended_precision():
            scale = mpmath.factorial(n) ** 2 * mpmath.mpf(z2) ** (-n)
            if t == 0:
                return scale
            beta = -mpmath.mpf(t) / z2
            return scale * beta ** (-(n + 1)) * mpmath.hyperu(n + 1, 1, 1 / beta)

    return LaplaceKernel(name=f"zeta({zeta:g})", derivative=derivative, R=2.0 * zeta, closed_form=closed_form)


def exponential_kernel() -> LaplaceKernel:
    """``g = exp``, giving ``d_n = n!`` and ``f = 1 / (1 - t)``."""

    def derivative(z, m):
        return np.exp(np.asarray(z, dtype=float))

    def closed_form(t, n):
        return math.factorial(n) / (1.0 - t) ** (n + 1)

    # any radius certifies n!; 8 is the reporting radius
    return LaplaceKernel(name="exp", derivative=derivative, R=8.0, closed_form=closed_form)


def pole_kernel(z0: complex, k: int) -> LaplaceKernel:
    """``g(z) = (z - z0)**-k`` with ``Re z0 > 0``."""
    if not np.real(z0) > 0:
        raise InvalidCutError("the pole must lie in the right half-plane")

    def derivative(z, m):
        rising = math.exp(math.lgamma(k + m) - math.lgamma(k))
        return (-1) ** m * rising * (np.asarray(z) - z0) ** (-k - m)

    return LaplaceKernel(name=f"pole({z0}, {k})", derivative=derivative, R=2.0 * math.sqrt(abs(z0)), d0=0.0)


def zero_kernel(R: float = 8.0) -> LaplaceKernel:
    def derivative(z, m):
        return np.zeros(np.shape(z))

    return LaplaceKernel(name="zero", derivative=derivative, R=R, d0=0.0)


def check_condition_y3(
    kernel: LaplaceKernel,
    n_max: int = 10,
    lower: float = -50.0,
    samples: int | None = None,
    C: float = 1.0,
) -> float:
    """Largest sampled ``|g^(n)(z)| / (C |g^(n)(0)|)`` over ``z`` in ``[lower, 0]`` and ``n <= n_max``.

    A value above 1 warns with :class:`ConditionY3Warning`, or raises :class:`ConditionY3Error` when
    ``FLATSTEER_Y3_STRICT`` is set.
    """
    z = np.linspace(lower, 0.0, samples or Y3_SAMPLES)
    worst = 0.0
    for n in range(n_max + 1):
        values = np.abs(kernel.derivative(z, n))
        at_origin = C * abs(np.asarray(kernel.derivative(np.zeros(1), n))[0])
        if at_origin == 0:
            ratio = math.inf if np.any(values > 0) else 0.0
        else:
            ratio = float(values.max() / at_origin)
        worst = max(worst, ratio)
    if worst > 1.0 + 1e-12:
        message = f"kernel {kernel.name} exceeds its value at 0 on [{lower:g}, 0]: ratio {worst:.6g}"
        if Y3_STRICT:
            raise ConditionY3Error(message)
        logger.warning(message)
        warnings.warn(message, ConditionY3Warning, stacklevel=2)
    return worst


def _panel_rule(panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + half * _GAUSS_NODES).ravel(), (half * _GAUSS_WEIGHTS).ravel()


@dataclass(frozen=True, eq=False)
class LaplaceInterpolant:
    """``f`` on ``t <= 0`` with ``f^(n)(0) = d_n`` and the same radius as the targets."""

    kernel: LaplaceKernel
    d0: float
    horizon: float = 1.0

    def _moments(self, t: np.ndarray, order: int, panels: int) -> np.ndarray:
        u, w = _panel_rule(panels)
        s = u / (1.0 - u)
        log_s = np.log(s)
        base = w / (1.0 - u) ** 2
        ts = t[..., None] * s
        rows = []
        for n in range(order + 1):
            weight = base * np.exp(n * log_s - s)
            values = self.kernel.derivative(ts, max(n - 1, 0))
            rows.append(np.sum(weight * values, axis=-1))
        out = np.array(rows)
        out[0] = t * out[0]
        return out

    @cached_property
    def _panels(self) -> dict[int, int]:
        return {}

    def panels_for(self, order: int) -> int:
        """Panel count at which the moments up to ``order`` stop changing on a probe grid."""
        if order in self._panels:
            return self._panels[order]
        probe = np.linspace(-self.horizon, 0.0, 9)
        panels = _MIN_PANELS
        previous = self._moments(probe, order, panels)
        while panels < _MAX_PANELS:
            panels *= 2
            current = self._moments(probe, order, panels)
            scale = np.max(np.abs(current), axis=1, keepdims=True)
            scale[scale == 0] = 1.0
            if np.all(np.abs(current - previous) <= QUAD_TOL * scale):
                break
            previous = current
        else:
            logger.warning("Laplace quadrature stopped at %d panels before reaching tolerance", panels)
        self._panels[order] = panels
        return panels

    def derivatives(self, t: Any, order: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t > 1e-12):
            raise ValueError("the Laplace interpolant is only defined for t <= 0")
        out = self._moments(np.minimum(t, 0.0), order, self.panels_for(order))
        out[0] = out[0] + self.d0
        return out

    def taylor(self, t: Any, order: int) -> TaylorSeries:
        return TaylorSeries.from_derivatives(self.derivatives(t, order))

    def targets(self, N: int) -> np.ndarray:
        return self.kernel.targets(N, self.d0)


def laplace_interpolate(
    g: LaplaceKernel,
    d0: float,
    T1: float,
    T2: float,
    N_max: int = 20,
    sigma: float = 1.5,
    parity: str = "even",
    check: bool = True,
) -> FlatOutput:
    """Flat output on ``[T1, T2]`` matching ``d_n`` at ``T2`` and flat at ``T1``.

    Time in the returned output is measured from ``T1``. The vanishing at ``T1`` comes from a Gevrey step of
    order ``sigma``; the kernel bound by its value at 0 is checked by sampling when ``check`` is set.
    """
    if not T1 < T2:
        raise InvalidOrderError(f"interval [{T1:g}, {T2:g}] is empty")
    if check:
        check_condition_y3(g)
    T = T2 - T1
    f = LaplaceInterpolant(kernel=g, d0=d0, horizon=T)
    step = gevrey_step(sigma, T)
    return FlatOutput(
        T=T,
        taylor=partial(shifted_product, f, step, T),
        targets=f.targets(N_max),
        N_max=N_max,
        method="laplace",
        parity=parity,
        R=g.R,
        R_prime=1.0,
    )


def steer_laplace_even(
    kernel: LaplaceKernel, T: float, sigma: float = 1.5, N_max: int = 20, d0: float | None = None
) -> FlatOutput:
    """Even flat output ``y`` with ``y^(i)(T) = d_i`` from a Laplace kernel."""
    return laplace_interpolate(kernel, kernel.d0 if d0 is None else d0, 0.0, T, N_max, sigma, parity="even")


def steer_laplace_odd(
    kernel: LaplaceKernel, T: float, sigma: float = 1.5, N_max: int = 20, d0: float | None = None
) -> FlatOutput:
    """Odd flat output ``z`` with ``z^(i)(T) = d_i`` from a Laplace kernel."""
    return laplace_interpolate(kernel, kernel.d0 if d0 is None else d0, 0.0, T, N_max, sigma, parity="odd")


def _lah(m: int, k: int) -> int:
    return math.comb(m - 1, k - 1) * math.factorial(m) // math.factorial(k)


def _sparse(a: Mapping[int, complex] | Sequence[complex]) -> list[tuple[int, complex]]:
    items = a.items() if isinstance(a, Mapping) else enumerate(a)
    out = [(int(n), v) for n, v in items if v != 0]
    if any(n < 1 for n, _ in out):
        raise InvalidCutError("coefficients start at n = 1")
    return out


def finite_laplace_G(
    a: Mapping[int, complex] | Sequence[complex],
    R: float,
    R0: float,
    n_max: int,
    x: Any,
) -> np.ndarray:
    """Table ``G^(m)(x)`` for ``m = 0..n_max`` with ``G(x) = int_0^R phi(t) e^(-t/x) dt``.

    ``phi(z) = sum_n a_n z**(n-1) / (n-1)!``. Derivatives come from
    ``G^(m)(x) = sum_k (-1)**(m+k) L(m, k) x**(-m-k) int_0^R phi(t) t**k e^(-t/x) dt`` with Lah numbers
    ``L(m, k)``, and the moments are lower incomplete gamma functions, all in extended precision.
    """
    if not 0 < R < R0:
        raise InvalidCutError(f"cut R={R:g} must lie in (0, R0={R0:g})")
    coeffs = _sparse(a)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    is_complex = any(isinstance(v, complex) for _, v in coeffs)
    out = np.zeros((n_max + 1, xs.size), dtype=complex if is_complex else float)
    if not coeffs:
        return out
    convert = complex if is_complex else float
    growth = max(abs(v) * R0**n / math.factorial(n) for n, v in coeffs)
    logger.debug("finite Laplace table: %d coefficients, growth constant %g", len(coeffs), growth)

    with extended_precision(extra=12 * n_max) as mp:
        scaled = [(n, mp.mpmathify(v) / mp.factorial(n - 1)) for n, v in coeffs]
        for j, xv in enumerate(xs):
            X = mp.mpf(xv)
            b = mp.mpf(R) / X
            moments = [
                mp.fsum(c * X ** (n + k) * mp.gammainc(n + k, 0, b) for n, c in scaled) for k in range(n_max + 1)
            ]
            out[0, j] = convert(moments[0])
            for m in range(1, n_max + 1):
                total = mp.fsum((-1) ** (m + k) * _lah(m, k) * X ** (-m - k) * moments[k] for k in range(1, m + 1))
                out[m, j] = convert(total)
    return out


def stationary_phase_envelope(n: Any, r: int, Q0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic size of ``d^n/du^n [F(u) e^(-1/u)]`` at ``u = 1/(2n)`` for ``F(u) = u**r Q(u)``.

    Returns ``log(2 sqrt(pi/n) |Q0| / (2**(r/2) n**r) (1/2)**n (2n)!)`` and the oscillating factor
    ``cos(n (1 - pi/2) + (1 + r) pi / 4)``.
    """
    n = np.asarray(n, dtype=float)
    log_amp = (
        math.log(2.0 * abs(Q0))
        + 0.5 * np.log(math.pi / n)
        - 0.5 * r * math.log(2.0)
        - r * np.log(n)
        - n * math.log(2.0)
        + gammaln(2 * n + 1)
    )
    phase = np.cos(n * (1.0 - math.pi / 2) + (1 + r) * math.pi / 4)
    return log_amp, phase


@dataclass(frozen=True)
class ProbeReport:
    """Normalized derivatives ``rho_n = |G^(n)(x_n)| (R_hat/2)**n / (n!)**2`` at ``x_n = R / 2n``."""

    n: np.ndarray
    x: np.ndarray
    rho: np.ndarray
    envelope: np.ndarray
    phase: np.ndarray
    growing: bool


def _exp_inv_derivative(u: Any, m: int, mp: Any) -> Any:
    """``d^m/du^m e^(-1/u)``."""
    if m == 0:
        return mp.exp(-1 / u)
    return mp.exp(-1 / u) * mp.fsum((-1) ** (m + k) * _lah(m, k) * u ** (-m - k) for k in range(1, m + 1))


def _probe_value(order: int, p: int, R: float, C: float, mp: Any) -> Any:
    """``G^(n)(R / 2n)`` for the single coefficient ``a_p = C p! / R**p``."""
    u = mp.mpf(1) / (2 * order)
    a_p = C * mp.factorial(p) / mp.mpf(R) ** p
    # F(u) = P(R u) = -C p! sum_{j<p} u**(p-j) / j!
    poly = [mp.mpf(0)] * (p + 1)
    for j in range(p):
        poly[p - j] = -C * mp.factorial(p) / mp.factorial(j)
    g_n = mp.mpf(0)
    for i in range(min(p, order) + 1):
        f_deriv = mp.fsum(poly[k] * mp.factorial(k) / mp.factorial(k - i) * u ** (k - i) for k in range(i, p + 1))
        g_n += mp.binomial(order, i) * f_deriv * _exp_inv_derivative(u, order - i, mp)
    value = g_n / mp.mpf(R) ** order
    if order <= p:
        value += a_p * mp.factorial(p) / mp.factorial(p - order) * (mp.mpf(R) * u) ** (p - order)
    return value


def loss_lower_bound_probe(p: int, R: float, R_hat: float, n_max: int, C: float = 1.0) -> ProbeReport:
    """Evaluate ``rho_n`` for ``a_p = C p! / R**p`` (the only nonzero coefficient) and ``n = 1..n_max``.

    Here ``G(x) = a_p x**p + P(x) e^(-R/x)`` with ``P(x) = -a_p sum_{j<p} R**j x**(p-j) / j!``, so the
    derivatives are exact polynomial-times-exponential sums. ``growing`` is set when the running maximum
    of ``rho_n`` keeps increasing over the upper half of the orders.
    """
    if p < 2:
        raise InvalidOrderError(f"probe order must be at least 2, got {p}")
    if R_hat < R:
        raise InvalidCutError(f"trial radius {R_hat:g} must not be below the cut {R:g}")
    n = np.arange(1, n_max + 1)
    rho = np.zeros(n_max)
    for i in range(n_max):
        order = i + 1
        with extended_precision(extra=4 * order + 64) as mp:
            value = _probe_value(order, p, R, C, mp)
            if value != 0:
                log_rho = mp.log(abs(value)) + order * mp.log(mp.mpf(R_hat) / 2) - 2 * mp.loggamma(order + 1)
                rho[i] = float(mp.exp(log_rho))
    log_amp, phase = stationary_phase_envelope(n, r=1, Q0=-C * p)
    envelope = np.exp(log_amp - n * math.log(R) + n * math.log(R_hat / 2) - 2 * gammaln(n + 1))
    running = np.maximum.accumulate(rho)
    upper = (n >= n_max // 2) & (running > 0)
    slope = np.polyfit(n[upper], np.log(running[upper]), 1)[0] if upper.sum() >= 2 else 0.0
    logger.debug("loss probe p=%d R=%g R_hat=%g: upper-half slope %g", p, R, R_hat, slope)
    growing = bool(slope > LOSS_SLOPE_TOL)
    return ProbeReport(n=n, x=R / (2 * n), rho=rho, envelope=envelope, phase=phase, growing=growing)
