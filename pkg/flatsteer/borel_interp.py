"""Borel interpolation with Gevrey-2 growth, and flat outputs for the heat equation.

Given targets ``d_q`` with ``|d_q| <= C H**q M_q``, the block construction returns ``f = sum_p d_p zeta_p``
with ``zeta_p = phi_p x**p / p!`` and ``phi_p`` a sharpened cutoff built on a block weight sequence, so
``zeta_p^(j)(0) = delta_jp`` and ``|f^(q)| <= C' H~**q M_q`` for any ``H~ > e**(1/e) H``. The steering
functions turn such an interpolant into the flat output ``y(t) = f(t - T) g(t)`` on ``[0, T]``, where ``g``
is a Gevrey step.

Example:
    from flatsteer.borel_interp import CoeffSequence, steer_output_even

    c = CoeffSequence(d=[1.0, 0.0, 0.0], M=1.0, R=1.5)
    y = steer_output_even(c, T=1.0, R_prime=1.3, sigma=1.5, N_max=8)
    y.derivatives([0.0, 0.5, 1.0])

Configuration (environment):
    FLATSTEER_DELTA_MARGIN = 0.9  # Fraction of the largest admissible sharpening parameter (default: 0.9)
    FLATSTEER_ENDPOINT_TOL = 1e-9  # Absolute tolerance for vanishing derivatives at t = 0 (default: 1e-9)
    FLATSTEER_INTERP_TOL = 1e-9  # Relative tolerance for matched derivatives at t = T (default: 1e-9)
    FLATSTEER_LOSS_SLOPE_TOL = 0.02  # Largest tail slope of log ratios still counted as bounded (default: 0.02)
    FLATSTEER_SUP_REFINE_MAX = 4097  # Cap on refined points per block window of the sup grid (default: 4097)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Any

import numpy as np
from scipy.special import gammaln

from flatsteer.config import DELTA_MARGIN, ENDPOINT_TOL, EXTENDED_ORDER, INTERP_TOL, LOSS_SLOPE_TOL, SUP_REFINE_MAX
from flatsteer.errors import (
    InfeasibleParametersError,
    InsufficientRadiusError,
    InvalidLossError,
    LossTooSmallError,
    PrefixExhaustedError,
)
from flatsteer.gevrey_core import CutoffFunction, GevreyStep, WeightSequence, gevrey_step, make_cutoff
from flatsteer.precision import extended_precision
from flatsteer.series import TaylorSeries

__all__ = [
    "R0",
    "BorelInterpolant",
    "CoeffSequence",
    "FlatOutput",
    "LossReport",
    "OddReduction",
    "measure_loss",
    "petzsche_interpolate",
    "steer_output_even",
    "steer_output_odd",
]

logger = logging.getLogger(__name__)

R0 = math.exp(1.0 / (2.0 * math.e))
"""Smallest radius for which analytic targets are steered by the block construction."""

_CONVENTIONS = ("double", "odd", "taylor")


def _log_scale(order: Any, convention: str) -> tuple[np.ndarray, np.ndarray]:
    """``log`` of ``(2q)!``, ``(2q+1)!`` or ``q!`` and the matching radius exponent."""
    q = np.asarray(order, dtype=float)
    if convention == "double":
        return gammaln(2 * q + 1), 2 * q
    if convention == "odd":
        return gammaln(2 * q + 2), 2 * q + 1
    return gammaln(q + 1), q


@dataclass(frozen=True, eq=False)
class CoeffSequence:
    """Targets ``d_q`` with a growth bound ``|d_q| <= M s_q / R**e_q``.

    The ``convention`` picks the scale: ``"double"`` uses ``(2q)! / R**(2q)`` (even Taylor data of an
    analytic target), ``"odd"`` uses ``(2q+1)! / R**(2q+1)`` and ``"taylor"`` uses ``q! / R**q``.
    """

    d: np.ndarray
    M: float
    R: float
    convention: str = "double"

    def __post_init__(self):
        d = np.atleast_1d(np.array(self.d))
        if not np.iscomplexobj(d):
            d = d.astype(float)
        if self.convention not in _CONVENTIONS:
            raise ValueError(f"unknown coefficient convention {self.convention!r}")
        if not (self.M > 0 and self.R > 0):
            raise InsufficientRadiusError("coefficient bound needs M > 0 and R > 0")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        excess = np.abs(d) / self.bound(np.arange(d.size))
        if np.any(excess > 1 + 1e-9):
            q = int(np.argmax(excess))
            raise InsufficientRadiusError(f"coefficient {q} exceeds its declared bound by a factor {excess[q]:.3g}")

    def __len__(self) -> int:
        return self.d.size

    def log_bound(self, q: Any) -> np.ndarray:
        log_fact, power = _log_scale(q, self.convention)
        return math.log(self.M) + log_fact - power * math.log(self.R)

    def bound(self, q: Any) -> np.ndarray:
        return np.exp(np.minimum(self.log_bound(q), 700.0))

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(length, dtype=self.d.dtype)
        n = min(length, self.d.size)
        out[:n] = self.d[:n]
        return out

    @classmethod
    def zeros(cls, length: int, R: float = 2.0, convention: str = "double") -> CoeffSequence:
        return cls(np.zeros(length), M=1.0, R=R, convention=convention)


@dataclass(frozen=True, eq=False)
class BorelInterpolant:
    """``f = sum_{p <= N_max} d_p phi_p(x) x**p / p!`` with the parameters chosen for it."""

    d: np.ndarray
    weights: WeightSequence
    H: float
    H_tilde: float
    A: float
    delta: float
    h: float
    N_max: int
    K: int
    blocks: tuple[tuple[int, complex | float, CutoffFunction], ...]
    coefficient_constant: float
    tail_bound: float

    def taylor(self, x: Any, order: int) -> TaylorSeries:
        xs = np.asarray(x, dtype=float)
        c = np.zeros((order + 1, *xs.shape), dtype=np.result_type(self.d, float))
        for p, d_p, cutoff in self.blocks:
            c += d_p * (cutoff.taylor(xs, order) * TaylorSeries.scaled_monomial(xs, p, order)).c
        return TaylorSeries(c)

    def derivatives(self, x: Any, order: int | None = None) -> np.ndarray:
        return self.taylor(x, self.N_max if order is None else order).derivatives()

    def __call__(self, x: Any) -> Any:
        value = self.taylor(x, 0).c[0]
        return value.item() if np.ndim(x) == 0 else value

    def bound_ratios(self, x: Any, order: int | None = None) -> np.ndarray:
        """``sup_x |f^(q)(x)| / (H~**q M_q)`` for each order ``q``."""
        derivs = np.abs(self.derivatives(np.atleast_1d(x), order))
        q = np.arange(derivs.shape[0])
        log_scale = q * math.log(self.H_tilde) + self.weights.log_moduli[q]
        return derivs.max(axis=1) * np.exp(-log_scale)

    def windows(self) -> tuple[tuple[float, float, float], ...]:
        """``(lo, hi, spacing)`` per block: the part ``[-radius, 0]`` of the support and half its lattice.

        Every derivative of ``f`` on ``x <= 0`` lives in these windows; they are far narrower than the
        horizon when ``delta`` is small.
        """
        return tuple((-cutoff.radius, 0.0, 0.5 * cutoff.base.lattice) for _, _, cutoff in self.blocks)

    def reexpand(self, order: int | None = None, bits: int | None = None) -> np.ndarray:
        """``f^(q)(0)`` for ``q <= order`` by polynomial re-expansion of exact values near the origin.

        Within the narrowest box width of a block, ``1 - phi(x)`` is the volume ``|x|**K / (K! prod w)``
        of a simplex, so ``f`` is a polynomial there. Its values at equispaced points of ``[-eps, 0]`` are
        computed in mpmath from the realized widths alone and the polynomial is recovered by solving the
        Vandermonde system; none of the spline evaluators is involved.
        """
        order = self.N_max if order is None else order
        with extended_precision(bits) as mp:
            if not self.blocks:
                return np.zeros(order + 1)
            eps = mp.mpf(min(float(cutoff.base.widths.min()) for _, _, cutoff in self.blocks))
            degree = max(p + cutoff.base.K for p, _, cutoff in self.blocks)
            nodes = [-eps * j / degree for j in range(degree + 1)]
            simplex = []
            for p, d_p, cutoff in self.blocks:
                volume = mp.factorial(cutoff.base.K) * mp.fprod(mp.mpf(float(w)) for w in cutoff.base.widths)
                simplex.append((p, mp.mpmathify(d_p), cutoff.base.K, volume))

            def value(x):
                return mp.fsum(d * x**p / mp.factorial(p) * (1 - (-x) ** k / vol) for p, d, k, vol in simplex)

            # unknowns are the coefficients of (x / eps)**j, which keeps the system well scaled
            vander = mp.matrix([[(x / eps) ** j for j in range(degree + 1)] for x in nodes])
            coeffs = mp.lu_solve(vander, mp.matrix([value(x) for x in nodes]))
            derivs = [coeffs[q] * mp.factorial(q) / eps**q for q in range(min(order, degree) + 1)]
            out = np.zeros(order + 1, dtype=complex if np.iscomplexobj(self.d) else float)
            out[: len(derivs)] = [complex(v) if out.dtype == complex else float(v) for v in derivs]
        return out


def _sharpening_parameter(A: float, H: float, H_tilde: float) -> float:
    """Largest ``delta`` with ``(1 + delta)(delta A e + 1) e**(1/e) H <= H~``, times the margin."""
    q = H_tilde / (math.exp(1.0 / math.e) * H)
    ae = A * math.e
    disc = (ae + 1.0) ** 2 - 4.0 * ae * (1.0 - q)
    if disc < 0:
        raise InfeasibleParametersError("no sharpening parameter satisfies the growth condition")
    delta_max = (-(ae + 1.0) + math.sqrt(disc)) / (2.0 * ae)
    if not delta_max > 0:
        raise InfeasibleParametersError(f"admissible sharpening parameters are empty (delta*={delta_max:g})")
    return DELTA_MARGIN * delta_max


def _block_weights(weights: WeightSequence, p: int, h: float) -> WeightSequence:
    """Rescaled weights ``a_k / h`` with the first ``p`` entries flattened to ``a_p / h``."""
    if p >= len(weights):
        raise PrefixExhaustedError(f"block {p} needs more than the {len(weights)} stored weights")
    a = np.array(weights.a) / h
    if p > 0:
        a[: p + 1] = a[p]
    return WeightSequence(a, tail_sum=weights.tail_sum / h)


def petzsche_interpolate(
    d: CoeffSequence,
    weights: WeightSequence,
    H: float,
    H_tilde: float,
    N_max: int,
    K: int | None = None,
) -> BorelInterpolant:
    """Smooth ``f`` on the real line with ``f^(q)(0) = d_q`` for ``q <= N_max``.

    Args:
        d: Targets with ``|d_q| <= C H**q M_q`` for the moduli of ``weights``.
        weights: Sequence ``1 = a_0 >= a_1 >= ...`` satisfying the ``A``-condition.
        H: Growth rate of the targets.
        H_tilde: Growth rate of the interpolant; must exceed ``e**(1/e) H``.
        N_max: Highest matched order; blocks beyond it are dropped and covered by ``tail_bound``.
        K: Depth of every block cutoff, ``N_max + 3`` by default.

    Raises:
        LossTooSmallError: If ``H_tilde <= e**(1/e) H``.
        InfeasibleParametersError: If no sharpening parameter is admissible.
    """
    if H_tilde <= math.exp(1.0 / math.e) * H:
        raise LossTooSmallError(f"H~={H_tilde:g} must exceed e^(1/e) H = {math.exp(1 / math.e) * H:g}")
    K = K or N_max + 3
    A = weights.A
    delta = _sharpening_parameter(A, H, H_tilde)
    h = (1.0 + delta) * A * math.exp(1.0 + 1.0 / math.e) * H
    growth = (1.0 + delta) * (delta * A * math.e + 1.0) * math.exp(1.0 / math.e) * H
    if growth >= H_tilde:
        raise InfeasibleParametersError(f"growth rate {growth:g} does not stay below H~={H_tilde:g}")

    targets = d.padded(N_max + 1)
    q = np.arange(N_max + 1)
    log_scale = q * math.log(H) + weights.log_moduli[q]
    coefficient_constant = float(np.max(np.abs(targets) * np.exp(-log_scale), initial=0.0))

    blocks = []
    for p in np.flatnonzero(targets):
        cutoff = make_cutoff(_block_weights(weights, int(p), h), delta, K)
        blocks.append((int(p), targets[p].item(), cutoff))
    block_constant = max((cutoff.C for _, _, cutoff in blocks), default=0.0)
    tail_bound = coefficient_constant * block_constant * (1.0 + delta) ** (-N_max) / delta
    logger.debug(
        "block interpolant: A=%g delta=%g h=%g blocks=%d tail=%g", A, delta, h, len(blocks), tail_bound
    )
    return BorelInterpolant(
        d=targets,
        weights=weights,
        H=H,
        H_tilde=H_tilde,
        A=A,
        delta=delta,
        h=h,
        N_max=N_max,
        K=K,
        blocks=tuple(blocks),
        coefficient_constant=coefficient_constant,
        tail_bound=tail_bound,
    )


@dataclass(frozen=True)
class OddReduction:
    """Radius bookkeeping of odd steering.

    The odd data are re-certified as ``|c_{2i+1}| <= M~ (2i)! / R~**(2i)`` and steered as even data with loss
    radius ``R~'``; the even certificate ``M'_even`` then gives the odd one ``M' = M'_even R / R'``.
    """

    M_tilde: float
    R_tilde: float
    R_tilde_prime: float
    even_M_prime: float
    R: float
    R_prime: float

    @property
    def M_prime(self) -> float:
        return self.even_M_prime * self.R / self.R_prime


@dataclass(frozen=True, eq=False)
class FlatOutput:
    """Flat output ``y`` on ``[0, T]`` with its Taylor oracle and endpoint targets.

    The certificate is ``sup_t |y^(i)| <= M' (R'/R)**e_i s_i`` with ``s_i = (2i)!`` and ``e_i = 2i`` for even
    parity, ``(2i+1)!`` and ``2i + 1`` for odd parity; ``M'`` is measured on an evaluation grid made of
    ``samples`` even points plus a refined pass over every ``(lo, hi, spacing)`` entry of ``windows``.

    ``taylor(t, order, extended)`` returns the expansion of ``y`` at ``t``; ``extended=None`` lets it pick
    mpmath above ``FLATSTEER_EXTENDED_ORDER``.
    """

    T: float
    taylor: Callable[..., TaylorSeries] = field(repr=False)
    targets: np.ndarray
    N_max: int
    method: str
    parity: str = "even"
    R: float = 1.0
    R_prime: float = 1.0
    samples: int = 401
    windows: tuple[tuple[float, float, float], ...] = ()
    reduction: OddReduction | None = None

    @classmethod
    def zero(cls, T: float, N_max: int, parity: str = "even", method: str = "petzsche") -> FlatOutput:
        def taylor(t, order, extended=None):
            return TaylorSeries(np.zeros((order + 1, *np.shape(t))))

        return cls(T=T, taylor=taylor, targets=np.zeros(N_max + 1), N_max=N_max, method=method, parity=parity)

    @cached_property
    def grid(self) -> np.ndarray:
        parts = [np.linspace(0.0, self.T, self.samples)]
        for lo, hi, spacing in self.windows:
            lo, hi = max(lo, 0.0), min(hi, self.T)
            if hi <= lo:
                continue
            count = min(math.ceil((hi - lo) / spacing) + 1, SUP_REFINE_MAX)
            parts.append(np.linspace(lo, hi, count))
        return np.unique(np.concatenate(parts))

    @property
    def convention(self) -> str:
        return "odd" if self.parity == "odd" else "double"

    def derivatives(self, t: Any, order: int | None = None, extended: bool | None = None) -> np.ndarray:
        """``y^(i)(t)`` for ``i = 0..order`` as rows."""
        t = np.asarray(t, dtype=float)
        return self.taylor(t, self.N_max if order is None else order, extended=extended).derivatives()

    def __call__(self, t: Any) -> Any:
        value = self.taylor(np.asarray(t, dtype=float), 0, extended=False).c[0]
        return value.item() if np.ndim(t) == 0 else value

    def scaled(self, t: Any, order: int | None = None, extended: bool | None = None) -> np.ndarray:
        """``y^(i)(t) / (2i)!`` (``(2i+1)!`` for odd parity)."""
        derivs = self.derivatives(t, order, extended)
        log_fact, _ = _log_scale(np.arange(derivs.shape[0]), self.convention)
        return derivs * np.exp(-log_fact).reshape((-1,) + (1,) * (derivs.ndim - 1))

    @cached_property
    def sup_table(self) -> np.ndarray:
        """``sup_t |y^(i)(t)|`` over the evaluation grid for ``i <= N_max``."""
        return np.nanmax(np.abs(self.derivatives(self.grid)), axis=1)

    def certificate_ratios(self, rho: float | None = None, R: float | None = None) -> np.ndarray:
        """``sup_t |y^(i)| / (s_i (rho / R)**e_i)``; ``rho`` defaults to the loss radius."""
        rho = self.R_prime if rho is None else rho
        R = self.R if R is None else R
        sups = self.sup_table
        log_fact, power = _log_scale(np.arange(sups.size), self.convention)
        with np.errstate(divide="ignore"):
            return np.exp(np.log(sups) - log_fact - power * math.log(rho / R))

    @cached_property
    def M_prime(self) -> float:
        """Largest certificate ratio; odd reductions report ``M'_even R / R'``, which dominates it."""
        if self.reduction is not None:
            return self.reduction.M_prime
        return float(np.max(self.certificate_ratios(), initial=0.0))

    def endpoint_errors(self) -> tuple[float, float]:
        """Largest ``|y^(i)(0)|`` and largest ``|y^(i)(T) - d_i| / (|d_i| + 1)`` over ``i <= N_max``."""
        ends = self.derivatives(np.array([0.0, self.T]))
        start = float(np.max(np.abs(ends[:, 0])))
        target = np.zeros(self.N_max + 1, dtype=np.result_type(self.targets, float))
        n = min(self.targets.size, self.N_max + 1)
        target[:n] = self.targets[:n]
        end = float(np.max(np.abs(ends[:, 1] - target) / (np.abs(target) + 1.0)))
        return start, end

    def check_endpoints(self) -> bool:
        start, end = self.endpoint_errors()
        return start <= ENDPOINT_TOL and end <= INTERP_TOL + ENDPOINT_TOL


def shifted_product(
    f: Any, g: GevreyStep, T: float, t: np.ndarray, order: int, extended: bool | None = None
) -> TaylorSeries:
    """Taylor expansion of ``f(t - T) g(t)``.

    Above ``FLATSTEER_EXTENDED_ORDER`` (or with ``extended=True``) the step recurrences and the Cauchy
    product run in mpmath; the result is rounded back to doubles.
    """
    extended = order > EXTENDED_ORDER if extended is None else extended
    if not extended:
        return f.taylor(t - T, order) * g.taylor(t, order, extended=False)
    with extended_precision():
        product = f.taylor(t - T, order).to_mp() * g.taylor(t, order, extended=True).to_mp()
        return product.to_float()


def _check_radii(R: float, R_prime: float) -> None:
    if R <= R0:
        raise InsufficientRadiusError(f"target radius {R:g} must exceed R0={R0:.6f}")
    if not R0 < R_prime < R:
        raise InvalidLossError(f"loss radius {R_prime:g} must lie in ({R0:.6f}, {R:g})")


def steer_output_even(
    c_even: CoeffSequence,
    T: float,
    R_prime: float,
    sigma: float,
    N_max: int = 20,
    weights: WeightSequence | None = None,
) -> FlatOutput:
    """Flat output with ``y^(i)(0) = 0`` and ``y^(i)(T) = c_{2i}`` for ``i <= N_max``.

    Args:
        c_even: Even Taylor data ``c_{2i}`` certified in the ``"double"`` convention with radius ``R > R0``.
        T: Control horizon.
        R_prime: Loss radius in ``(R0, R)``.
        sigma: Order of the Gevrey step, in ``(1, 2)``.
        N_max: Highest matched derivative order.
        weights: Weights with moduli ``(2p)!``; built on demand.
    """
    R = c_even.R
    _check_radii(R, R_prime)
    if c_even.convention != "double":
        raise InsufficientRadiusError("even steering needs coefficients certified with (2q)!/R^(2q)")
    H = R**-2
    H_tilde = math.exp(1.0 / math.e) * H * R_prime / R0
    weights = weights or WeightSequence.squared_factorial()
    f = petzsche_interpolate(c_even, weights, H, H_tilde, N_max)
    g = gevrey_step(sigma, T)
    return FlatOutput(
        T=T,
        taylor=partial(shifted_product, f, g, T),
        targets=c_even.padded(N_max + 1),
        N_max=N_max,
        method="petzsche",
        parity="even",
        R=R,
        R_prime=R_prime,
        windows=tuple((T + lo, T + hi, spacing) for lo, hi, spacing in f.windows()),
    )


def steer_output_odd(
    c_odd: CoeffSequence,
    T: float,
    R_prime: float,
    sigma: float,
    N_max: int = 20,
    weights: WeightSequence | None = None,
) -> FlatOutput:
    """Flat output with ``z^(i)(0) = 0`` and ``z^(i)(T) = c_{2i+1}`` for ``i <= N_max``.

    The odd data are re-certified as ``|c_{2i+1}| <= M~ (2i)! / R~**(2i)`` on intermediate radii
    ``R0 < R~' < R' < R~ < R`` with ``R~'/R~ < R'/R``, then steered as even data. The radii and constants
    are kept on the result as an :class:`OddReduction`.
    """
    R = c_odd.R
    _check_radii(R, R_prime)
    if c_odd.convention != "odd":
        raise InsufficientRadiusError("odd steering needs coefficients certified with (2q+1)!/R^(2q+1)")
    r_tilde = 0.5 * (max(R_prime, R0 * R / R_prime) + R)
    r_tilde_prime = 0.5 * (R0 + R_prime * r_tilde / R)
    i = np.arange(100_000)
    m_tilde = c_odd.M / R * float(np.max((2 * i + 1) * (r_tilde / R) ** (2 * i)))
    logger.debug("odd re-radius: R~=%g R~'=%g M~=%g", r_tilde, r_tilde_prime, m_tilde)
    reduced = CoeffSequence(c_odd.d, M=m_tilde * (1 + 1e-12), R=r_tilde, convention="double")
    even = steer_output_even(reduced, T, r_tilde_prime, sigma, N_max=N_max, weights=weights)
    reduction = OddReduction(
        M_tilde=reduced.M,
        R_tilde=r_tilde,
        R_tilde_prime=r_tilde_prime,
        even_M_prime=even.M_prime,
        R=R,
        R_prime=R_prime,
    )
    logger.debug("odd certificate: M'_even=%g M'=%g", reduction.even_M_prime, reduction.M_prime)
    return FlatOutput(
        T=T,
        taylor=even.taylor,
        targets=c_odd.padded(N_max + 1),
        N_max=N_max,
        method="petzsche",
        parity="odd",
        R=R,
        R_prime=R_prime,
        windows=even.windows,
        reduction=reduction,
    )


@dataclass(frozen=True)
class LossReport:
    """Ratios ``sup_t |y^(i)| / ((2i)! (rho/R)**(2i))`` at the smallest loss with bounded ratios."""

    minimal_rho: float
    ratios: np.ndarray
    bounded: bool
    R: float
    R0: float = R0


def _tail_slope(log_ratios: np.ndarray) -> float:
    n = log_ratios.size
    idx = np.arange(n // 2, n)
    tail = log_ratios[idx]
    keep = np.isfinite(tail)
    if keep.sum() < 2:
        return -math.inf
    slope, _ = np.polyfit(idx[keep], tail[keep], 1)
    return float(slope)


def measure_loss(fo: FlatOutput, d: CoeffSequence, rho_max: float | None = None, steps: int = 60) -> LossReport:
    """Bisect for the smallest ``rho >= 1`` whose ratio sequence stops growing.

    A ratio sequence counts as bounded when the slope of ``log r_i`` over the upper half of the orders
    is at most ``LOSS_SLOPE_TOL``.
    """
    R = d.R
    rho_max = rho_max or R

    def bounded(rho: float) -> bool:
        with np.errstate(divide="ignore"):
            return _tail_slope(np.log(fo.certificate_ratios(rho, R))) <= LOSS_SLOPE_TOL

    if bounded(1.0):
        return LossReport(minimal_rho=1.0, ratios=fo.certificate_ratios(1.0, R), bounded=True, R=R)
    if not bounded(rho_max):
        logger.warning("ratios still grow at the largest trial loss %g", rho_max)
        return LossReport(minimal_rho=rho_max, ratios=fo.certificate_ratios(rho_max, R), bounded=False, R=R)
    lo, hi = 1.0, rho_max
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if bounded(mid):
            hi = mid
        else:
            lo = mid
    return LossReport(minimal_rho=hi, ratios=fo.certificate_ratios(hi, R), bounded=True, R=R)

