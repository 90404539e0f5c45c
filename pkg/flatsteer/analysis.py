"""Entire-order estimates and the finite-cut loss study.

Example:
    from flatsteer.analysis import entire_order_estimate

    report = entire_order_estimate([1 / math.factorial(n) for n in range(40)])
    report.order  # close to 1
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import mpmath
import numpy as np
from scipy.special import gammaln

from flatsteer.borel_interp import R0, CoeffSequence, measure_loss
from flatsteer.errors import InsufficientDataError
from flatsteer.gevrey_core import fit_log_certificate
from flatsteer.laplace import finite_laplace_G, loss_lower_bound_probe, steer_laplace_even, zeta_kernel

__all__ = [
    "LossStudyConfig",
    "LossStudyReport",
    "OrderReport",
    "entire_order_estimate",
    "entire_order_from_gevrey",
    "gevrey_order_from_entire",
    "run_loss_study",
]

logger = logging.getLogger(__name__)

_MIN_NONZERO = 10


@dataclass(frozen=True)
class OrderReport:
    """Estimated entire order next to the Gevrey order of the derivatives at the expansion point.

    ``residual`` is ``|order (1 - gevrey) - 1|``; it is reported for inspection and only meaningful when
    ``order >= 1`` and ``gevrey < 1``.
    """

    order: float
    gevrey: float
    predicted: float
    residual: float
    polynomial: bool = False
    degree: int | None = None


def gevrey_order_from_entire(rho: float) -> float:
    """Gevrey order ``1 - 1/rho`` of an entire function of order ``rho >= 1``."""
    if rho < 1:
        raise ValueError(f"entire order {rho:g} is below 1")
    return 1.0 - 1.0 / rho


def entire_order_from_gevrey(g: float) -> float:
    """Entire order ``1 / (1 - g)`` for a Gevrey order ``g < 1``."""
    if g >= 1:
        return math.inf
    return 1.0 / (1.0 - g)


def _log_moduli(coeffs: Any) -> np.ndarray:
    """``log |c_n|`` for Taylor coefficients, ``-inf`` where a coefficient vanishes."""
    if isinstance(coeffs, CoeffSequence):
        # stored data are derivatives; divide by n!
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(coeffs.d))
        return logs - gammaln(np.arange(logs.size) + 1)
    out = np.full(len(coeffs), -math.inf)
    for n, c in enumerate(coeffs):
        c = mpmath.mpmathify(c)
        if c != 0:
            out[n] = float(mpmath.log(abs(c)))
    return out


def entire_order_estimate(coeffs: CoeffSequence | Sequence[Any], window: float = 1 / 3) -> OrderReport:
    """Order ``rho`` of ``f = sum c_n z**n`` from its stored Taylor coefficients.

    ``log(1/|c_n|)`` is fitted on ``n log n``, ``n``, ``log n`` and ``1`` over the nonzero coefficients
    with ``n`` beyond ``window`` times the last index, and ``rho`` is the reciprocal of the leading
    coefficient. Inputs may be plain numbers, mpmath numbers (for coefficients below the double range) or
    a :class:`CoeffSequence` of derivatives. Coefficient lists ending in a long run of zeros are taken as
    polynomials and reported with order 0.

    Raises:
        InsufficientDataError: If fewer than ten coefficients are nonzero.
    """
    logs = _log_moduli(coeffs)
    nonzero = np.flatnonzero(np.isfinite(logs))
    if nonzero.size and logs.size - 1 - nonzero[-1] >= max(5, logs.size // 4):
        degree = int(nonzero[-1])
        logger.debug("coefficients vanish beyond degree %d; treating input as a polynomial", degree)
        return OrderReport(order=0.0, gevrey=0.0, predicted=1.0, residual=1.0, polynomial=True, degree=degree)
    if nonzero.size < _MIN_NONZERO:
        raise InsufficientDataError(f"order estimate needs {_MIN_NONZERO} nonzero coefficients, got {nonzero.size}")

    last = nonzero[-1]
    n = nonzero[(nonzero >= max(2, int(window * last)))].astype(float)
    if n.size < 4:
        n = nonzero[nonzero >= 2].astype(float)
    target = -logs[n.astype(int)]
    design = np.column_stack([n * np.log(n), n, np.log(n), np.ones_like(n)])
    (lead, *_), *_ = np.linalg.lstsq(design, target, rcond=None)
    order = 1.0 / lead if lead > 0 else math.inf

    cert = fit_log_certificate(logs + gammaln(np.arange(logs.size) + 1))
    predicted = entire_order_from_gevrey(cert.s)
    residual = abs(order * (1.0 - cert.s) - 1.0) if math.isfinite(order) else math.inf
    logger.debug("entire order %g, Gevrey order %g, predicted %g", order, cert.s, predicted)
    return OrderReport(order=float(order), gevrey=cert.s, predicted=predicted, residual=float(residual))


@dataclass(frozen=True)
class LossStudyConfig:
    """Parameters of the loss study; every grid is fixed, so repeated runs agree exactly.

    ``coefficients[n]`` is ``a_n`` of ``phi(z) = sum a_n z**(n-1) / (n-1)!``; ``None`` selects
    ``a_n = n! / R0**n`` for ``2 <= n <= coefficient_count`` and an empty sequence skips every table.
    """

    R: float = 1.0
    R0: float = 2.0
    coefficients: tuple[float, ...] | None = None
    coefficient_count: int = 30
    orders: tuple[int, int] = (5, 25)
    x_points: int = 12
    probe_order: int = 3
    probe_n_max: int = 150
    R_hat_factors: tuple[float, ...] = (1.0, 1.1)
    zeta: float = 0.8
    T: float = 1.0
    sigma: float = 1.5
    N_max: int = 20

    def resolved_coefficients(self) -> list[float]:
        if self.coefficients is not None:
            return list(self.coefficients)
        return [0.0, 0.0] + [math.factorial(n) / self.R0**n for n in range(2, self.coefficient_count + 1)]


@dataclass(frozen=True)
class LossStudyReport:
    """Rows of the bounded-ratio, growth and loss tables with a summary of each."""

    config: LossStudyConfig
    bounded: list[dict[str, Any]] = field(default_factory=list)
    growth: list[dict[str, Any]] = field(default_factory=list)
    loss: list[dict[str, Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    status: str = "ok"

    def tables(self) -> dict[str, list[dict[str, Any]]]:
        return {"bounded": self.bounded, "growth": self.growth, "loss": self.loss}

    def as_dict(self) -> dict[str, Any]:
        return {"status": self.status, "config": asdict(self.config), "summary": self.summary}


def _bounded_table(config: LossStudyConfig, coeffs: list[float]) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    lo, hi = config.orders
    R = config.R
    x = np.geomspace(R / (2 * hi), 4 * R, config.x_points)
    table = finite_laplace_G(coeffs, R, config.R0, hi, x)
    rows = []
    for n in range(lo, hi + 1):
        j = int(np.argmax(np.abs(table[n])))
        sup = float(abs(table[n, j]))
        ratio = math.exp(math.log(sup) - 2 * math.lgamma(n + 1) - n * math.log(2 / R)) if sup > 0 else 0.0
        rows.append({"n": n, "x": float(x[j]), "sup": sup, "ratio": ratio})
    ratios = np.array([row["ratio"] for row in rows])
    positive = ratios[ratios > 0]
    spread = float(positive.max() / positive.min()) if positive.size else 0.0
    return rows, {"max_ratio": float(ratios.max(initial=0.0)), "spread": spread}


def _growth_column(config: LossStudyConfig, factor: float) -> tuple[list[dict[str, Any]], bool]:
    R_hat = factor * config.R
    probe = loss_lower_bound_probe(config.probe_order, config.R, R_hat, config.probe_n_max)
    rows = [
        {"R_hat": R_hat, "n": int(n), "x": float(x), "rho": float(r), "envelope": float(e), "phase": float(c)}
        for n, x, r, e, c in zip(probe.n, probe.x, probe.rho, probe.envelope, probe.phase, strict=True)
    ]
    return rows, probe.growing


def _loss_table(config: LossStudyConfig) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    kernel = zeta_kernel(config.zeta)
    fo = steer_laplace_even(kernel, config.T, config.sigma, config.N_max)
    targets = kernel.targets(config.N_max)
    q = np.arange(targets.size)
    # smallest M certifying the targets with (2q)! / R**(2q)
    log_excess = np.log(np.abs(targets)) - gammaln(2 * q + 1) + 2 * q * math.log(kernel.R)
    d = CoeffSequence(targets, M=float(np.exp(log_excess.max())) * (1 + 1e-9), R=kernel.R)
    report = measure_loss(fo, d)
    rows = [{"i": int(i), "ratio": float(r)} for i, r in enumerate(report.ratios)]
    summary = {"minimal_rho": report.minimal_rho, "bounded": report.bounded, "R": report.R, "R0": R0}
    return rows, summary


def run_loss_study(config: LossStudyConfig | None = None, jobs: int = 1) -> LossStudyReport:
    """Bounded-ratio table for a finite cut, growth table of the monomial probe and the loss table.

    Probe columns for the trial radii in ``R_hat_factors`` run in ``jobs`` worker processes.
    """
    config = config or LossStudyConfig()
    coeffs = config.resolved_coefficients()
    if not any(coeffs):
        logger.info("loss study: no coefficients, returning empty tables")
        return LossStudyReport(config=config, summary={"empty": True})

    bounded, bounded_summary = _bounded_table(config, coeffs)
    factors = list(config.R_hat_factors)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            columns = list(pool.map(_growth_column, [config] * len(factors), factors))
    else:
        columns = [_growth_column(config, factor) for factor in factors]
    growth = [row for rows, _ in columns for row in rows]
    growing = {f"{factor * config.R:g}": flag for factor, (_, flag) in zip(factors, columns, strict=True)}
    loss, loss_summary = _loss_table(config)

    summary = {"bounded": bounded_summary, "growing": growing, "loss": loss_summary}
    logger.info("loss study: spread %g, growing %s", bounded_summary["spread"], growing)
    return LossStudyReport(config=config, bounded=bounded, growth=growth, loss=loss, summary=summary)
