import math

import mpmath
import pytest

from flatsteer.analysis import (
    LossStudyConfig,
    entire_order_estimate,
    entire_order_from_gevrey,
    gevrey_order_from_entire,
    run_loss_study,
)
from flatsteer.borel_interp import CoeffSequence
from flatsteer.errors import InsufficientDataError


def factorial_power(rho: float, count: int = 61) -> list:
    """``c_n = (n!)**(-1/rho)``, the coefficients of an entire function of order ``rho``."""
    return [mpmath.factorial(n) ** (-1 / mpmath.mpf(rho)) for n in range(count)]


class TestOrderRelations:
    def test_round_trip(self):
        assert gevrey_order_from_entire(2.0) == 0.5
        assert entire_order_from_gevrey(0.5) == 2.0
        assert entire_order_from_gevrey(0.0) == 1.0

    def test_limits(self):
        assert entire_order_from_gevrey(1.0) == math.inf
        with pytest.raises(ValueError):
            gevrey_order_from_entire(0.5)


class TestEntireOrderEstimate:
    """Order estimates from Taylor coefficients.

    This test class covers:
    - Orders below, at and above 1
    - Agreement with the Gevrey order of the derivatives
    - Polynomials and short inputs
    """

    @pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
    def test_recovers_order(self, rho):
        report = entire_order_estimate(factorial_power(rho))
        assert report.order == pytest.approx(rho, rel=0.02)
        assert not report.polynomial

    @pytest.mark.parametrize("rho", [1.0, 2.0])
    def test_gevrey_relation(self, rho):
        report = entire_order_estimate(factorial_power(rho))
        assert report.gevrey == pytest.approx(1 - 1 / rho, abs=0.05)
        assert report.predicted == pytest.approx(rho, rel=0.1)
        assert report.residual <= 0.1

    def test_plain_floats(self):
        report = entire_order_estimate([1 / math.factorial(n) for n in range(40)])
        assert report.order == pytest.approx(1.0, rel=0.02)

    def test_derivative_data(self):
        """Derivatives of ``exp`` are all 1, so the Taylor coefficients are ``1 / n!``."""
        c = CoeffSequence([1.0] * 40, M=1.0, R=1.0, convention="taylor")
        assert entire_order_estimate(c).order == pytest.approx(1.0, rel=0.02)

    def test_polynomial(self):
        report = entire_order_estimate([1.0, 2.0, 3.0] + [0.0] * 20)
        assert report.polynomial
        assert report.degree == 2
        assert report.order == 0.0

    def test_too_few_coefficients(self):
        with pytest.raises(InsufficientDataError):
            entire_order_estimate([1.0] * 8)


class TestLossStudy:
    """Finite-cut loss study tables."""

    small = LossStudyConfig(
        coefficient_count=6, orders=(2, 6), x_points=4, probe_n_max=20, R_hat_factors=(1.0, 1.1), N_max=6
    )

    def test_empty_coefficients(self, caplog):
        report = run_loss_study(LossStudyConfig(coefficients=()))
        assert report.tables() == {"bounded": [], "growth": [], "loss": []}
        assert report.summary == {"empty": True}
        assert "no coefficients" in caplog.text

    def test_all_zero_coefficients(self):
        assert run_loss_study(LossStudyConfig(coefficients=(0.0, 0.0, 0.0))).summary == {"empty": True}

    def test_default_coefficients(self):
        coeffs = LossStudyConfig(coefficient_count=4).resolved_coefficients()
        assert coeffs == [0.0, 0.0, 2 / 4, 6 / 8, 24 / 16]

    def test_small_study(self):
        report = run_loss_study(self.small)
        assert [row["n"] for row in report.bounded] == [2, 3, 4, 5, 6]
        assert all(row["sup"] > 0 for row in report.bounded)
        assert len(report.growth) == 40
        assert {row["R_hat"] for row in report.growth} == {1.0, 1.1}
        assert [row["i"] for row in report.loss] == list(range(7))
        assert report.summary["loss"]["minimal_rho"] >= 1.0
        assert set(report.summary["growing"]) == {"1", "1.1"}
        assert report.as_dict()["status"] == "ok"

    def test_repeatable(self):
        first = run_loss_study(self.small)
        second = run_loss_study(self.small)
        assert first.bounded == second.bounded
        assert first.growth == second.growth

    @pytest.mark.slow
    def test_worker_processes_agree(self):
        assert run_loss_study(self.small, jobs=2).growth == run_loss_study(self.small).growth
