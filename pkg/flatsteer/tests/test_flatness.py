import math

import numpy as np
import pytest

from flatsteer.borel_interp import FlatOutput
from flatsteer.errors import DivergentSeriesError, InvalidBoundaryError
from flatsteer.flatness import (
    assemble_even,
    assemble_odd,
    dirichlet_control,
    neumann_control,
    robin_two_sided,
    truncation_order,
)
from flatsteer.series import TaylorSeries, factorials


def exponential_output(parity: str = "even", R_prime: float = 0.5) -> FlatOutput:
    """``y(t) = e**t``; its even field is ``cosh(x) e**t`` and its odd field ``sinh(x) e**t``."""

    def taylor(t, order, extended=None):
        t = np.asarray(t, dtype=float)
        scale = factorials(order).reshape((-1,) + (1,) * t.ndim)
        return TaylorSeries(np.exp(t)[None, ...] / scale)

    return FlatOutput(
        T=1.0,
        taylor=taylor,
        targets=np.full(21, math.e),
        N_max=20,
        method="synthetic",
        parity=parity,
        R=1.0,
        R_prime=R_prime,
    )


class TestTruncationOrder:
    def test_known_order(self):
        assert truncation_order(1.0, 0.5, 1e-8) == 11

    def test_trivial_cases(self):
        assert truncation_order(0.0, 0.9, 1e-12) == 0
        assert truncation_order(5.0, 0.0, 1e-12) == 0

    def test_cap(self):
        with pytest.raises(DivergentSeriesError):
            truncation_order(1.0, 0.99, 1e-12, cap=10)

    @pytest.mark.parametrize("ratio", [1.0, 1.5])
    def test_divergent_ratio(self, ratio):
        with pytest.raises(DivergentSeriesError):
            truncation_order(1.0, ratio, 1e-8)

    def test_tail_decreases_with_tolerance(self):
        assert truncation_order(1.0, 0.7, 1e-4) < truncation_order(1.0, 0.7, 1e-10)


class TestSeriesField:
    """Truncated series solutions and their traces.

    This test class covers:
    - Even and odd fields against closed-form heat solutions
    - Exact x-derivatives and the dropped-term residual
    - The identically zero output
    """

    x = np.linspace(0.0, 1.0, 11)
    t = np.array([0.0, 0.4, 1.0])

    def test_even_field(self):
        theta = assemble_even(exponential_output(), N=15)
        expected = np.exp(self.t)[:, None] * np.cosh(self.x)[None, :]
        np.testing.assert_allclose(theta(self.x, self.t), expected, rtol=1e-12)
        slope = np.exp(self.t)[:, None] * np.sinh(self.x)[None, :]
        np.testing.assert_allclose(theta.x_derivative(self.x, self.t), slope, rtol=1e-12, atol=1e-15)

    def test_odd_field(self):
        phi = assemble_odd(exponential_output("odd"), N=15)
        expected = np.exp(self.t)[:, None] * np.sinh(self.x)[None, :]
        np.testing.assert_allclose(phi(self.x, self.t), expected, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(
            phi.x_derivative(self.x, self.t), np.exp(self.t)[:, None] * np.cosh(self.x)[None, :], rtol=1e-12
        )

    def test_residual_is_the_dropped_term(self):
        theta = assemble_even(exponential_output(), N=3)
        residual = theta.residual(self.x, self.t)
        expected = np.exp(self.t)[:, None] * (self.x**6 / math.factorial(6))[None, :]
        np.testing.assert_allclose(residual, expected, rtol=1e-12)

    def test_automatic_order(self):
        y = exponential_output()
        theta = assemble_even(y, tol=1e-10)
        assert y.M_prime == pytest.approx(2 * math.e)
        assert theta.N == truncation_order(y.M_prime, 0.5, 1e-10)
        assert theta.tail_bound == pytest.approx(y.M_prime * 0.25 ** (theta.N + 1) / 0.75)

    def test_ratio_at_one_diverges(self):
        with pytest.raises(DivergentSeriesError):
            assemble_even(exponential_output(R_prime=1.0))

    def test_parity_mismatch(self):
        with pytest.raises(ValueError):
            assemble_even(exponential_output("odd"))
        with pytest.raises(ValueError):
            assemble_odd(exponential_output("even"))

    def test_zero_output(self):
        y = FlatOutput.zero(T=1.0, N_max=5)
        theta = assemble_even(y)
        assert theta.N == 0
        assert theta.tail_bound == 0.0
        h = neumann_control(y)
        assert not np.any(h.values)
        assert h.imag_max == 0.0


class TestControls:
    """Boundary traces of the assembled series."""

    def test_neumann_trace(self):
        h = neumann_control(exponential_output(), N=15)
        assert h.kind == "neumann"
        assert (h.alpha, h.beta, h.x) == (0.0, 1.0, 1.0)
        t = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(h(t), math.sinh(1.0) * np.exp(t), rtol=1e-12)
        assert h(0.5) == pytest.approx(math.sinh(1.0) * math.exp(0.5), rel=1e-12)

    def test_neumann_is_the_odd_factorial_sum(self):
        """``h = sum_{1 <= i <= N} y^(i) / (2i - 1)!``."""
        h = neumann_control(exponential_output(), N=4)
        expected = sum(1 / math.factorial(2 * i - 1) for i in range(1, 5)) * math.exp(0.3)
        assert h(0.3) == pytest.approx(expected, rel=1e-13)

    def test_dirichlet_trace(self):
        k = dirichlet_control(exponential_output("odd"), N=15)
        assert k.kind == "dirichlet"
        assert k(1.0) == pytest.approx(math.sinh(1.0) * math.e, rel=1e-12)
        assert k.sources == ("synthetic:odd",)

    def test_robin_two_sided(self):
        """``psi = cosh(x) e**t + sinh(x) e**t = e**(x + t)``."""
        h0, h1 = robin_two_sided(
            exponential_output("even"), exponential_output("odd"), bc0=(1.0, 0.0), bc1=(1.0, 1.0), N=15
        )
        t = np.array([0.0, 0.5, 1.0])
        assert (h0.kind, h1.kind) == ("dirichlet", "robin")
        np.testing.assert_allclose(h0(t), np.exp(t - 1.0), rtol=1e-12)
        np.testing.assert_allclose(h1(t), 2.0 * np.exp(t + 1.0), rtol=1e-12)
        assert h0.x == -1.0
        assert h1.x == 1.0

    def test_robin_neumann_ends(self):
        h0, h1 = robin_two_sided(
            exponential_output("even"), exponential_output("odd"), bc0=(0.0, 1.0), bc1=(0.0, 2.0), N=15
        )
        assert h0.kind == h1.kind == "neumann"
        assert h0(0.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert h1(0.0) == pytest.approx(2.0 * math.e, rel=1e-12)

    @pytest.mark.parametrize("bc0, bc1", [((0.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (0.0, 0.0))])
    def test_degenerate_boundary(self, bc0, bc1):
        with pytest.raises(InvalidBoundaryError):
            robin_two_sided(exponential_output("even"), exponential_output("odd"), bc0, bc1, N=5)

    def test_real_part(self):
        h = neumann_control(exponential_output(), N=10).real()
        assert h.kind == "neumann"
        assert np.isrealobj(h.values)
