"""Compactly supported smooth functions with certified derivative bounds.

Bumps are iterated convolutions of normalized boxes ``H_a = 1_[0,a] / a``. Box widths are snapped to a
common dyadic lattice ``eta``, which turns the convolution into an exact uniform B-spline expansion:
the box coefficients are convolved as integer-length discrete kernels, and the k-th derivative applies k
normalized difference operators ``(delta_0 - delta_a) / a`` to the kernel of the remaining boxes. No
derivative is taken by differentiating a spline, so every derivative keeps its relative accuracy.

Example:
    from flatsteer.gevrey_core import WeightSequence, make_bump, make_cutoff

    weights = WeightSequence.geometric(first=0.5, ratio=0.5, length=16)
    u = make_bump(weights, K=8)
    u.derivative(0.3, k=3)
    phi = make_cutoff(WeightSequence.squared_factorial(), delta=0.5, K=10)

Configuration (environment):
    FLATSTEER_LATTICE_RESOLUTION = 8  # Lattice cells per narrowest box (default: 8)
    FLATSTEER_LATTICE_MAX = 1048576  # Cap on total lattice cells before coarsening (default: 2**20)
    FLATSTEER_WEIGHT_PREFIX = 65536  # Stored prefix length of built-in weight sequences (default: 65536)
    FLATSTEER_QUAD_TOL = 1e-12  # Absolute quadrature tolerance for step integrals (default: 1e-12)
    FLATSTEER_EXTENDED_ORDER = 20  # Step derivative tables above this order run in mpmath (default: 20)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from scipy import integrate
from scipy.interpolate import BSpline
from scipy.special import gammaln

from flatsteer.config import EXTENDED_ORDER, LATTICE_MAX, LATTICE_RESOLUTION, QUAD_TOL, WEIGHT_PREFIX
from flatsteer.errors import (
    InfeasibleParametersError,
    InsufficientDataError,
    InvalidDepthError,
    InvalidOrderError,
    InvalidWeightsError,
    OrderMismatchError,
    PrefixExhaustedError,
)
from flatsteer.precision import extended_precision
from flatsteer.series import TaylorSeries, to_mp

__all__ = [
    "BumpFunction",
    "CutoffFunction",
    "GevreyCertificate",
    "GevreyStep",
    "WeightSequence",
    "fit_certificate",
    "fit_log_certificate",
    "gevrey_step",
    "leibniz_constant",
    "make_bump",
    "make_cutoff",
    "product_certificate",
    "sharpen_bump",
]

logger = logging.getLogger(__name__)

_QUAD_OPTS = {"epsabs": QUAD_TOL, "epsrel": QUAD_TOL}


def _scalar_or_array(x: Any, out: np.ndarray) -> Any:
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """Nonincreasing positive weights ``a_0 >= a_1 >= ... > 0`` with a finite sum.

    Only a prefix is stored; ``tail_sum`` carries the exact sum of the entries beyond it when known.

    Args:
        a: Stored prefix of the sequence.
        tail_sum: Sum of all entries past the stored prefix.
    """

    a: np.ndarray
    tail_sum: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise InvalidWeightsError("weights must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise InvalidWeightsError("weights must be finite and strictly positive")
        if np.any(np.diff(a) > 1e-12 * a[:-1]):
            raise InvalidWeightsError("weights must be nonincreasing")
        if not (math.isfinite(self.tail_sum) and self.tail_sum >= 0):
            raise InvalidWeightsError("tail sum must be finite and nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    def __len__(self) -> int:
        return self.a.size

    @classmethod
    def geometric(cls, first: float = 0.5, ratio: float = 0.5, length: int = 64) -> WeightSequence:
        """``a_k = first * ratio**k``; the default gives ``a_k = 2**-(k+1)`` summing to 1."""
        if not 0 < ratio < 1:
            raise InvalidWeightsError("ratio must lie in (0, 1)")
        a = first * ratio ** np.arange(length)
        return cls(a, tail_sum=first * ratio**length / (1 - ratio))

    @classmethod
    def squared_factorial(cls, length: int | None = None) -> WeightSequence:
        """``a_0 = 1`` and ``a_p = 1 / (2p (2p - 1))``, so the moduli are ``M_p = (2p)!``."""
        length = length or WEIGHT_PREFIX
        p = np.arange(1, length, dtype=float)
        a = np.concatenate([[1.0], 1.0 / (2 * p * (2 * p - 1))])
        return cls(a, tail_sum=max(math.log(2.0) - float(a[1:].sum()), 0.0))

    @property
    def total(self) -> float:
        """``sum_{k>=0} a_k``."""
        return float(self.a.sum()) + self.tail_sum

    @property
    def sum_a(self) -> float:
        """``sum_{k>=1} a_k``."""
        return float(self.a[1:].sum()) + self.tail_sum

    @cached_property
    def suffix(self) -> np.ndarray:
        """``suffix[p] = sum_{k>p} a_k`` including the unstored tail."""
        return np.cumsum(self.a[::-1])[::-1] - self.a + self.tail_sum

    @cached_property
    def A(self) -> float:
        """Smallest ``A`` with ``p a_p + sum_{k>p} a_k <= A p a_p`` on the stored prefix."""
        if self.a.size < 2:
            return 1.0
        p = np.arange(1, self.a.size)
        pa = p * self.a[1:]
        return float(max(1.0, np.max((pa + self.suffix[1:]) / pa)))

    @cached_property
    def log_moduli(self) -> np.ndarray:
        """``log M_q`` with ``M_q = (a_0 ... a_q)**-1``."""
        return np.cumsum(-np.log(self.a))

    def moduli(self, q: int) -> float:
        return math.exp(self.log_moduli[q])

    def shifted(self) -> WeightSequence:
        """The sequence ``(a_1, a_2, ...)`` re-indexed from zero."""
        if self.a.size < 2:
            raise PrefixExhaustedError("cannot shift a single-entry weight sequence")
        return WeightSequence(self.a[1:], self.tail_sum)

    def scaled(self, factor: float) -> WeightSequence:
        return WeightSequence(self.a * factor, self.tail_sum * factor)


def _snap_to_lattice(widths: np.ndarray) -> tuple[float, np.ndarray]:
    """Pick a dyadic lattice and integer cell counts for the box widths."""
    eta = 2.0 ** math.floor(math.log2(float(widths.min()) / LATTICE_RESOLUTION))
    counts = np.maximum(np.floor(widths / eta + 1e-9), 1).astype(np.int64)
    while counts.sum() > LATTICE_MAX:
        eta *= 2.0
        counts = np.maximum(np.floor(widths / eta + 1e-9), 1).astype(np.int64)
        logger.warning("bump lattice coarsened to eta=%g to stay under %d cells", eta, LATTICE_MAX)
    return eta, counts


@dataclass(frozen=True, eq=False)
class BumpFunction:
    """``u = H_{w_0} * ... * H_{w_{K-1}}`` on the realized widths ``w``, with its derivative oracle.

    The bound ``|u^(k)| <= M delta**k / (a_0 ... a_k)`` holds against the reference ``weights`` with
    ``M = bound_constant``; ``M`` is re-derived from the realized widths, ``proof_constant`` is the value
    predicted by the sharpening construction.
    """

    weights: WeightSequence
    K: int
    widths: np.ndarray
    lattice: float
    counts: np.ndarray
    delta: float = 2.0
    log_bound_constant: float = 0.0
    log_proof_constant: float = 0.0
    k0: int | None = None
    kappa: float | None = None

    @property
    def support(self) -> tuple[float, float]:
        return 0.0, float(self.counts.sum() * self.lattice)

    @property
    def bound_constant(self) -> float:
        return math.exp(min(self.log_bound_constant, 700.0))

    @property
    def proof_constant(self) -> float:
        return math.exp(min(self.log_proof_constant, 700.0))

    @cached_property
    def _splines(self) -> tuple[BSpline, ...]:
        eta = self.lattice
        tails: list[np.ndarray] = [np.ones(1)] * (self.K + 1)
        for j in range(self.K - 1, -1, -1):
            n = int(self.counts[j])
            tails[j] = np.convolve(tails[j + 1], np.full(n, 1.0 / n))
        splines = []
        for k in range(self.K):
            e = tails[k]
            for j in range(k):
                n = int(self.counts[j])
                e = (np.concatenate([e, np.zeros(n)]) - np.concatenate([np.zeros(n), e])) / (n * eta)
            d = self.K - k - 1
            coef = np.concatenate([np.zeros(d), e, np.zeros(d)]) / eta
            knots = eta * np.arange(-d, e.size + 2 * d + 1)
            splines.append(BSpline(knots, coef, d, extrapolate=False))
        return tuple(splines)

    @cached_property
    def _primitive(self) -> BSpline:
        return self._splines[0].antiderivative()

    def derivative(self, x: Any, k: int = 0) -> Any:
        """Evaluate ``u^(k)`` at ``x``; orders ``k >= K`` vanish almost everywhere."""
        xs = np.asarray(x, dtype=float)
        out = np.zeros(xs.shape)
        lo, hi = self.support
        mask = (xs >= lo) & (xs <= hi)
        if k < self.K and mask.any():
            out[mask] = self._splines[k](xs[mask])
        return _scalar_or_array(x, out)

    def __call__(self, x: Any) -> Any:
        return self.derivative(x, 0)

    def cumulative(self, s: Any) -> Any:
        """``int_0^s u``, exactly 0 below the support and exactly 1 above it."""
        ss = np.asarray(s, dtype=float)
        lo, hi = self.support
        out = np.where(ss >= hi, 1.0, 0.0)
        inside = (ss > lo) & (ss < hi)
        if inside.any():
            out[inside] = self._primitive(ss[inside])
        return _scalar_or_array(s, out)

    def mass(self) -> float:
        return float(self._splines[0].integrate(*self.support))

    def construction_bound(self, k: int) -> float:
        """``2**k / (w_0 ... w_k)`` for the realized widths."""
        return math.exp(k * math.log(2.0) - float(np.log(self.widths[: k + 1]).sum()))

    def derivative_bound(self, k: int) -> float:
        """``M delta**k / (a_0 ... a_k)`` against the reference weights."""
        log_b = self.log_bound_constant + k * math.log(self.delta) + float(self.weights.log_moduli[k])
        return math.exp(min(log_b, 700.0))

    def taylor(self, x: Any, order: int) -> TaylorSeries:
        xs = np.asarray(x, dtype=float)
        c = np.zeros((order + 1, *xs.shape))
        for n in range(min(order, self.K - 1) + 1):
            c[n] = self.derivative(xs, n) / math.factorial(n)
        return TaylorSeries(c)


def _build_bump(
    weights: WeightSequence,
    nominal: np.ndarray,
    delta: float,
    log_proof: float,
    k0: int | None = None,
    kappa: float | None = None,
) -> BumpFunction:
    eta, counts = _snap_to_lattice(nominal)
    widths = counts * eta
    k = np.arange(nominal.size)
    log_ratio = np.cumsum(np.log(weights.a[: nominal.size]) - np.log(widths)) + k * math.log(2.0 / delta)
    return BumpFunction(
        weights=weights,
        K=int(nominal.size),
        widths=widths,
        lattice=eta,
        counts=counts,
        delta=delta,
        log_bound_constant=float(log_ratio.max()),
        log_proof_constant=log_proof,
        k0=k0,
        kappa=kappa,
    )


def _check_depth(weights: WeightSequence, K: int) -> None:
    if K < 2:
        raise InvalidDepthError(f"bump depth must be at least 2, got {K}")
    if K > len(weights):
        raise PrefixExhaustedError(f"depth {K} exceeds the {len(weights)} stored weights")


def make_bump(weights: WeightSequence, K: int) -> BumpFunction:
    """Build ``u = H_{a_0} * ... * H_{a_{K-1}}`` supported in ``[0, a_0 + ... + a_{K-1}]``.

    Args:
        weights: Box widths.
        K: Number of convolved boxes; derivatives up to order ``K - 2`` are continuous.

    Returns:
        The bump with ``|u^(k)| <= 2**k / (a_0 ... a_k)`` for ``k <= K - 2``.
    """
    _check_depth(weights, K)
    return _build_bump(weights, np.array(weights.a[:K]), 2.0, 0.0)


def sharpen_bump(weights: WeightSequence, delta: float, K: int) -> BumpFunction:
    """Trade a constant for the factor ``delta**k`` in the bump derivative bound.

    The first index ``k0`` with ``kappa = a / ((k0 + 1) a_k0 + sum_{k>k0} a_k) > 2 / delta`` fixes the
    flattened widths ``kappa a_k0`` (for ``k <= k0``) and ``kappa a_k`` beyond, which keeps the support
    inside ``[0, a]``. For ``delta >= 2`` no flattening is needed and the plain bump is returned.
    """
    if not delta > 0:
        raise InfeasibleParametersError(f"sharpening parameter must be positive, got {delta}")
    _check_depth(weights, K)
    if delta >= 2.0:
        return _build_bump(weights, np.array(weights.a[:K]), delta, 0.0)

    a = weights.a
    idx = np.arange(a.size)
    kappa_all = weights.total / ((idx + 1) * a + weights.suffix)
    candidates = np.flatnonzero(kappa_all > 2.0 / delta)
    if candidates.size == 0:
        raise PrefixExhaustedError(f"no flattening index within {a.size} stored weights for delta={delta}")
    k0 = int(candidates[0])
    kappa = float(kappa_all[k0])

    nominal = kappa * np.array(a[:K])
    nominal[: min(k0 + 1, K)] = kappa * a[k0]

    log_a = np.log(a[: k0 + 1])
    log_m1 = -math.log(kappa) + float(log_a[:k0].sum()) - k0 * math.log(a[k0])
    k = np.arange(k0 + 1)
    log_m2 = np.max(k * math.log(2.0 / delta) + np.cumsum(log_a) - (k + 1) * math.log(kappa * a[k0]))
    logger.debug("sharpened bump: delta=%g k0=%d kappa=%g", delta, k0, kappa)
    return _build_bump(weights, nominal, delta, max(log_m1, float(log_m2)), k0=k0, kappa=kappa)


@dataclass(frozen=True, eq=False)
class CutoffFunction:
    """``phi(x) = int_{-inf}^{a - |x|} v`` for a sharpened bump ``v`` built on ``(a_1, a_2, ...)``.

    ``phi`` equals 1 at the origin with all derivatives vanishing there, and is supported in ``[-a, a]``.
    """

    base: BumpFunction
    weights: WeightSequence
    delta: float
    log_constant: float

    @property
    def radius(self) -> float:
        return self.base.support[1]

    @property
    def support(self) -> tuple[float, float]:
        return -self.radius, self.radius

    @property
    def C(self) -> float:
        return math.exp(min(self.log_constant, 700.0))

    def derivative(self, x: Any, k: int = 0) -> Any:
        xs = np.asarray(x, dtype=float)
        s = self.radius - np.abs(xs)
        if k == 0:
            out = np.asarray(self.base.cumulative(s), dtype=float)
        else:
            out = (-np.sign(xs)) ** k * np.asarray(self.base.derivative(s, k - 1), dtype=float)
        return _scalar_or_array(x, out)

    def __call__(self, x: Any) -> Any:
        return self.derivative(x, 0)

    def derivative_bound(self, k: int) -> float:
        """``C delta**k / (a_1 ... a_k)``."""
        log_b = self.log_constant + k * math.log(self.delta) - float(np.log(self.weights.a[1 : k + 1]).sum())
        return math.exp(min(log_b, 700.0))

    def taylor(self, x: Any, order: int) -> TaylorSeries:
        xs = np.asarray(x, dtype=float)
        c = np.zeros((order + 1, *xs.shape))
        for n in range(min(order, self.base.K) + 1):
            c[n] = self.derivative(xs, n) / math.factorial(n)
        return TaylorSeries(c)


def make_cutoff(weights: WeightSequence, delta: float, K: int) -> CutoffFunction:
    """Cutoff with ``phi^(p)(0) = delta_p^0`` and ``|phi^(k)| <= C delta**k / (a_1 ... a_k)``.

    Args:
        weights: Sequence ``(a_0, a_1, ...)``; ``a_0`` is not used.
        delta: Sharpening parameter of the underlying bump.
        K: Depth of the underlying bump.
    """
    v = sharpen_bump(weights.shifted(), delta, K)
    # |phi^(k)| = |v^(k-1)| <= M delta**(k-1) / (a_1 ... a_k)
    log_c = max(0.0, v.log_bound_constant - math.log(delta))
    return CutoffFunction(base=v, weights=weights, delta=delta, log_constant=log_c)


@dataclass(frozen=True)
class GevreyCertificate:
    """Claim ``|f^(n)(t)| <= C (n!)**s / R**n`` on the declared interval."""

    s: float
    C: float
    R: float
    residual: float = 0.0
    trivial: bool = False

    def log_bound(self, n: Any) -> Any:
        n = np.asarray(n, dtype=float)
        return math.log(self.C) + self.s * gammaln(n + 1) - n * math.log(self.R)

    def bound(self, n: Any) -> Any:
        return np.exp(np.minimum(self.log_bound(n), 700.0))

    def holds_for(self, sups: Sequence[float], rtol: float = 1e-9) -> bool:
        sups = np.asarray(sups, dtype=float)
        return bool(np.all(sups <= self.bound(np.arange(sups.size)) * (1 + rtol)))


def fit_certificate(samples: Sequence[float], window: float = 0.0) -> GevreyCertificate:
    """Least-squares fit of ``log sup_n`` against ``log C + s log n! - n log R``.

    The samples are suprema over the interval, so a function whose derivatives all stay bounded
    (``e**t`` on ``[0, 1]``) gets order ``s = 0``, and a Gevrey-``sigma`` function gets ``s = sigma``:
    analytic functions sit at ``s <= 1`` rather than at exactly 1. ``(2n)! / rho**(2n)`` fits with ``s = 2``
    and ``R = rho**2 / 4``, since ``(2n)! ~ 4**n n!**2 / sqrt(pi n)``.

    The amplitude is then raised so the certificate covers every sample.

    Args:
        samples: ``sup_t |f^(n)(t)|`` for ``n = 0..N`` with ``N >= 5``.
        window: When positive, ``s`` and ``R`` come from the orders ``n >= window * N`` only, with an extra
            ``beta log(n + 1)`` prefactor term; the amplitude still covers the whole table.
    """
    sups = np.abs(np.asarray(samples, dtype=float))
    with np.errstate(divide="ignore"):
        return fit_log_certificate(np.log(sups), window)


def fit_log_certificate(log_samples: Sequence[float], window: float = 0.0) -> GevreyCertificate:
    """:func:`fit_certificate` on ``log sup_n``; ``-inf`` marks a vanishing derivative."""
    logs = np.asarray(log_samples, dtype=float)
    if logs.size < 6:
        raise InsufficientDataError("certificate fit needs derivative samples up to order 5 at least")
    n = np.arange(logs.size, dtype=float)
    keep = np.isfinite(logs)
    if keep.sum() < 3:
        top = float(np.exp(min(logs.max(), 700.0)))
        return GevreyCertificate(s=0.0, C=max(top, 1.0), R=1.0, trivial=True)

    y = logs[keep]
    fit = keep & (n >= window * (logs.size - 1))
    if window > 0 and fit.sum() >= 5:
        columns = [np.ones(fit.sum()), gammaln(n[fit] + 1), -n[fit], np.log(n[fit] + 1)]
        (_, s, log_r, _), *_ = np.linalg.lstsq(np.column_stack(columns), logs[fit], rcond=None)
        log_c = None
    else:
        design = np.column_stack([np.ones(keep.sum()), gammaln(n[keep] + 1), -n[keep]])
        (log_c, s, log_r), *_ = np.linalg.lstsq(design, y, rcond=None)
        if s < 0:
            (log_c, log_r), *_ = np.linalg.lstsq(design[:, [0, 2]], y, rcond=None)
            s = 0.0
    s = max(float(s), 0.0)
    model = s * gammaln(n[keep] + 1) - n[keep] * log_r
    if log_c is None:
        log_c = float(np.mean(y - model))
    resid = y - model - log_c
    return GevreyCertificate(
        s=float(s),
        C=float(np.exp(resid.max() + log_c)),
        R=float(np.exp(log_r)),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def leibniz_constant(s: float, sigma: float, R: float, rho: float, window: int = 400) -> float:
    """Smallest ``C~`` with ``j!**(s-1) (n-j)!**(sigma-1) <= C~ (rho / 2R)**(n-j) n!**(s-1)``.

    The supremum is taken over ``0 <= j <= n <= window``; the ratio decays beyond it when ``sigma < s``.
    """
    n = np.arange(window + 1, dtype=float)[:, None]
    j = np.arange(window + 1, dtype=float)[None, :]
    m = n - j
    with np.errstate(invalid="ignore"):
        log_ratio = (
            (s - 1) * (gammaln(j + 1) - gammaln(n + 1))
            + (sigma - 1) * gammaln(np.maximum(m, 0) + 1)
            - m * math.log(rho / (2 * R))
        )
    log_ratio = np.where(m >= 0, log_ratio, -np.inf)
    return float(np.exp(log_ratio.max()))


def product_certificate(cf: GevreyCertificate, cg: GevreyCertificate) -> GevreyCertificate:
    """Certificate for ``f g`` from those of ``f`` (order ``s``) and ``g`` (order ``sigma < s``).

    The product keeps order ``s`` and the radius of ``f``; the amplitude is ``2 C C' C~``.
    """
    if cg.s >= cf.s:
        raise OrderMismatchError(f"factor order {cg.s} must be below {cf.s}")
    if cg.s <= 1:
        raise InvalidOrderError(f"factor order must exceed 1, got {cg.s}")
    c_tilde = leibniz_constant(cf.s, cg.s, cf.R, cg.R)
    return GevreyCertificate(s=cf.s, C=2 * cf.C * cg.C * c_tilde, R=cf.R)


@dataclass(frozen=True, eq=False)
class GevreyStep:
    """Smooth step with ``g = 0`` before 0, ``g = 1`` after ``T`` and all derivatives flat at both ends.

    ``g(t) = int_0^{t/T} E / int_0^1 E`` with ``E(s) = exp(-(s (1 - s))**-gamma)`` and
    ``gamma = 1 / (sigma - 1)``.
    """

    sigma: float
    T: float

    @property
    def gamma(self) -> float:
        return 1.0 / (self.sigma - 1.0)

    def _kernel(self, s: Any) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        inside = (s > 0) & (s < 1)
        with np.errstate(over="ignore", divide="ignore"):
            # scaled so the peak at s = 1/2 equals 1
            out[inside] = np.exp(4.0**self.gamma - (s[inside] * (1 - s[inside])) ** -self.gamma)
        return out

    @cached_property
    def norm(self) -> float:
        value, _ = integrate.quad(lambda s: float(self._kernel(s)), 0.0, 1.0, limit=200, **_QUAD_OPTS)
        return value

    def __call__(self, t: Any) -> Any:
        s = np.clip(np.asarray(t, dtype=float) / self.T, 0.0, 1.0)
        out = np.where(s >= 1.0, 1.0, 0.0)
        lower = (s > 0) & (s <= 0.5)
        upper = (s > 0.5) & (s < 1)
        if lower.any():
            sl = s[lower]
            part, _ = integrate.quad_vec(lambda u: sl * self._kernel(sl * u), 0.0, 1.0, **_QUAD_OPTS)
            out[lower] = part / self.norm
        if upper.any():
            su = 1.0 - s[upper]
            part, _ = integrate.quad_vec(lambda u: su * self._kernel(1.0 - su * u), 0.0, 1.0, **_QUAD_OPTS)
            out[upper] = 1.0 - part / self.norm
        return _scalar_or_array(t, out)

    def _kernel_series(self, s: np.ndarray, order: int, extended: bool) -> np.ndarray:
        """Coefficients of ``E(s + e)`` in ``e`` up to ``e**(order - 1)``."""
        if extended:
            s = to_mp(s)
        u = np.zeros((order, s.size), dtype=object if extended else float)
        u[0] = s * (1 - s)
        if order > 1:
            u[1] = 1 - 2 * s
        if order > 2:
            u[2] = -1.0
        return (4.0**self.gamma - TaylorSeries(u) ** -self.gamma).exp().c

    def taylor(self, t: Any, order: int, extended: bool | None = None) -> TaylorSeries:
        """Taylor coefficients ``g^(n)(t) / n!`` for ``n <= order``.

        Orders above ``FLATSTEER_EXTENDED_ORDER`` run the power and exponential recurrences in mpmath
        unless ``extended`` says otherwise; the coefficients are returned as doubles either way.
        """
        t = np.asarray(t, dtype=float)
        extended = order > EXTENDED_ORDER if extended is None else extended
        c = np.zeros((order + 1, *t.shape))
        c[0] = self(t)
        if order == 0:
            return TaylorSeries(c)
        s = t / self.T
        inside = (s > 0) & (s < 1)
        if inside.any():
            m = np.arange(order)[:, None]
            # g(t + e) - g(t) = int_0^e E((t + x) / T) dx / (T norm)
            scale = self.T ** (m + 1) * self.norm * (m + 1)
            if extended:
                with extended_precision():
                    c[1:, inside] = (self._kernel_series(s[inside], order, True) / scale).astype(float)
            else:
                c[1:, inside] = self._kernel_series(s[inside], order, False) / scale
        return TaylorSeries(c)

    def derivatives(self, t: Any, order: int, extended: bool | None = None) -> np.ndarray:
        return self.taylor(t, order, extended).derivatives()

    def certificate(self, order: int = 40, samples: int = 401, window: float = 0.25) -> GevreyCertificate:
        """Certificate fitted to the derivative suprema over ``samples`` points of ``[0, T]``.

        The order is read off the upper orders (see :func:`fit_certificate`); low orders are still covered.
        """
        grid = np.linspace(0.0, self.T, samples)
        sups = np.nanmax(np.abs(self.derivatives(grid, order)), axis=1)
        return fit_certificate(sups, window)


def gevrey_step(sigma: float, T: float) -> GevreyStep:
    """Gevrey-``sigma`` step on ``[0, T]`` for ``1 < sigma < 2``."""
    if not 1.0 < sigma < 2.0:
        raise InvalidOrderError(f"step order must lie in (1, 2), got {sigma}")
    if not T > 0:
        raise InvalidOrderError(f"horizon must be positive, got {T}")
    return GevreyStep(sigma=sigma, T=T)
