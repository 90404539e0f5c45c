"""Tests for bumps, cutoffs, the Gevrey step and Gevrey certificates."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import comb

from flatsteer.errors import (
    InfeasibleParametersError,
    InsufficientDataError,
    InvalidDepthError,
    InvalidOrderError,
    InvalidWeightsError,
    OrderMismatchError,
    PrefixExhaustedError,
)
from flatsteer.gevrey_core import (
    GevreyCertificate,
    WeightSequence,
    fit_certificate,
    gevrey_step,
    leibniz_constant,
    make_bump,
    make_cutoff,
    product_certificate,
    sharpen_bump,
)
from flatsteer.precision import extended_precision


class TestWeightSequence:
    """Validation and derived quantities of weight sequences."""

    def test_rejects_increasing(self):
        with pytest.raises(InvalidWeightsError):
            WeightSequence([0.25, 0.5])

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidWeightsError):
            WeightSequence([0.5, 0.0])
        with pytest.raises(InvalidWeightsError):
            WeightSequence([])

    def test_halving_constants(self, halving_weights):
        """``(p + 1) / p`` peaks at ``p = 1``."""
        assert halving_weights.total == pytest.approx(1.0, abs=1e-15)
        assert halving_weights.sum_a == pytest.approx(0.5, abs=1e-15)
        assert halving_weights.A == pytest.approx(2.0)

    def test_squared_factorial_moduli(self):
        weights = WeightSequence.squared_factorial(length=64)
        for q in range(8):
            assert weights.moduli(q) == pytest.approx(math.factorial(2 * q), rel=1e-12)
        assert weights.total == pytest.approx(1.0 + math.log(2.0), rel=1e-12)
        assert 2 * math.log(2.0) - 1e-12 <= weights.A < 2.0

    def test_shifted_drops_first_entry(self, halving_weights):
        shifted = halving_weights.shifted()
        assert shifted.a[0] == 0.25
        assert shifted.total == pytest.approx(0.5)


class TestBump:
    """Box convolutions on the dyadic lattice."""

    def test_hat(self):
        """Two half-width boxes give the unit-mass hat of height 2."""
        u = make_bump(WeightSequence([0.5, 0.5]), K=2)
        assert u.lattice == 1 / 16
        assert u.support == (0.0, 1.0)
        assert u(0.5) == pytest.approx(2.0, abs=1e-12)
        assert u(0.25) == pytest.approx(1.0, abs=1e-12)
        assert u(1.5) == 0.0
        assert u.mass() == pytest.approx(1.0, abs=1e-12)

    def test_mass_support_and_sign(self, halving_weights):
        u = make_bump(halving_weights, K=6)
        lo, hi = u.support
        assert lo == 0.0
        assert hi <= halving_weights.a[:6].sum() + 1e-15
        x = np.linspace(-0.1, 1.1, 2001)
        values = u(x)
        assert np.all(values >= -1e-12)
        assert np.all(values[x > hi] == 0.0)
        assert u.mass() == pytest.approx(1.0, abs=1e-10)
        quad_mass, _ = integrate.quad(u, lo, hi, limit=400, epsabs=1e-12)
        assert quad_mass == pytest.approx(1.0, abs=1e-8)

    def test_flat_at_support_ends(self, halving_weights):
        u = make_bump(halving_weights, K=6)
        for k in range(5):
            assert abs(u.derivative(0.0, k)) <= 1e-12
            assert abs(u.derivative(u.support[1], k)) <= 1e-9 * u.construction_bound(k)

    def test_derivative_bounds(self, halving_weights):
        """``|u^(k)| <= 2**k / (w_0 ... w_k)`` on a fine grid."""
        u = make_bump(halving_weights, K=6)
        x = np.linspace(0.0, u.support[1], 4001)
        for k in range(5):
            sup = np.max(np.abs(u.derivative(x, k)))
            assert sup <= u.construction_bound(k) * (1 + 1e-9)
            assert sup <= u.derivative_bound(k) * (1 + 1e-9)

    def test_cumulative_matches_density(self, halving_weights):
        u = make_bump(halving_weights, K=6)
        h = 1e-5
        for x in (0.2, 0.45, 0.7):
            slope = (u.cumulative(x + h) - u.cumulative(x - h)) / (2 * h)
            assert slope == pytest.approx(u(x), abs=1e-6)
        assert u.cumulative(-1.0) == 0.0
        assert u.cumulative(5.0) == 1.0

    def test_invalid_depth(self, halving_weights):
        with pytest.raises(InvalidDepthError):
            make_bump(halving_weights, K=1)
        with pytest.raises(PrefixExhaustedError):
            make_bump(WeightSequence.geometric(length=4), K=6)


class TestSharpenBump:
    """Flattened widths trading a constant for ``delta**k``."""

    def test_flattening_index(self, halving_weights):
        v = sharpen_bump(halving_weights, delta=0.5, K=8)
        assert v.k0 == 4
        assert v.kappa == pytest.approx(16 / 3)
        assert v.lattice == 1 / 512
        assert list(v.counts) == [85] * 5 + [42, 21, 10]
        assert v.support[1] <= 1.0
        assert math.isfinite(v.proof_constant)

    def test_sharpened_bounds(self, halving_weights):
        v = sharpen_bump(halving_weights, delta=0.5, K=8)
        x = np.linspace(0.0, v.support[1], 4001)
        for k in range(7):
            sup = np.max(np.abs(v.derivative(x, k)))
            assert sup <= v.derivative_bound(k) * (1 + 1e-9)

    def test_large_delta_is_plain_bump(self, halving_weights):
        v = sharpen_bump(halving_weights, delta=3.0, K=5)
        np.testing.assert_allclose(v.widths, halving_weights.a[:5])
        assert v.k0 is None

    def test_prefix_exhausted(self):
        with pytest.raises(PrefixExhaustedError):
            sharpen_bump(WeightSequence.geometric(length=8), delta=0.01, K=4)

    def test_nonpositive_delta(self, halving_weights):
        with pytest.raises(InfeasibleParametersError):
            sharpen_bump(halving_weights, delta=0.0, K=4)


class TestCutoff:
    """Cutoffs equal to 1 at the origin with vanishing derivatives there."""

    @pytest.fixture
    def cutoff(self, factorial_weights):
        return make_cutoff(factorial_weights, delta=0.5, K=10)

    def test_origin_values(self, cutoff):
        assert cutoff(0.0) == 1.0
        for k in range(1, 11):
            assert cutoff.derivative(0.0, k) == 0.0

    def test_support_and_symmetry(self, cutoff):
        a = cutoff.radius
        assert a <= math.log(2.0) + 1e-12
        x = np.linspace(-1.5 * a, 1.5 * a, 1201)
        values = cutoff(x)
        np.testing.assert_allclose(values, values[::-1], atol=1e-14)
        assert np.all(values[np.abs(x) >= a] == 0.0)
        assert np.all((values >= -1e-12) & (values <= 1 + 1e-12))

    def test_derivative_bounds(self, cutoff):
        x = np.linspace(-cutoff.radius, cutoff.radius, 4001)
        for k in range(1, 10):
            sup = np.max(np.abs(cutoff.derivative(x, k)))
            assert sup <= cutoff.derivative_bound(k) * (1 + 1e-9)
        assert cutoff.C >= 1.0


class TestGevreyStep:
    """The Gevrey step on ``[0, T]``."""

    def test_endpoints(self, step):
        assert step(0.0) == 0.0
        assert step(1.0) == 1.0
        assert step(-0.5) == 0.0
        assert step(3.0) == 1.0
        np.testing.assert_array_equal(step.derivatives(np.array([0.0, 1.0]), 4)[1:], 0.0)

    def test_symmetry_and_monotonicity(self, step):
        t = np.linspace(0.0, 1.0, 101)
        g = step(t)
        np.testing.assert_allclose(g + g[::-1], 1.0, atol=1e-9)
        assert np.all(np.diff(g) >= -1e-12)

    def test_derivatives_match_differences(self, step):
        h = 1e-4
        t = np.array([0.2, 0.35, 0.5, 0.8])
        derivs = step.derivatives(t, 3)
        np.testing.assert_allclose((step(t + h) - step(t - h)) / (2 * h), derivs[1], atol=1e-5)
        upper = step.derivatives(t + h, 2)[1]
        lower = step.derivatives(t - h, 2)[1]
        np.testing.assert_allclose((upper - lower) / (2 * h), derivs[2], rtol=1e-5, atol=1e-5)

    def test_horizon_scaling(self):
        """Stretching the horizon scales the n-th derivative by ``T**-n``."""
        short, long = gevrey_step(1.5, 1.0), gevrey_step(1.5, 2.0)
        d_short = short.derivatives(np.array([0.3]), 4)[:, 0]
        d_long = long.derivatives(np.array([0.6]), 4)[:, 0]
        np.testing.assert_allclose(d_long, d_short / 2.0 ** np.arange(5), rtol=1e-8)

    def test_certificate_covers_samples(self, step):
        cert = step.certificate(order=10, samples=201)
        sups = np.nanmax(np.abs(step.derivatives(np.linspace(0, 1, 201), 10)), axis=1)
        assert cert.holds_for(sups)
        assert cert.R > 0

    @pytest.mark.slow
    def test_certificate_recovers_step_order(self, step):
        cert = step.certificate()
        assert cert.s == pytest.approx(1.5, abs=0.1)

    def test_extended_taylor_matches_mpmath(self, step):
        """Order 30 coefficients against mpmath's expansion of the kernel ``exp(4**2 - (s(1 - s))**-2)``."""
        order = 30
        c = step.taylor(np.array([0.3]), order, extended=True).c[1:, 0]
        m = np.arange(order)
        kernel = c * step.norm * (m + 1)
        with extended_precision(256) as mp:
            expected = mp.taylor(lambda s: mp.exp(16 - (s * (1 - s)) ** -2), mp.mpf(0.3), order - 1)
            expected = np.array([float(v) for v in expected])
        np.testing.assert_allclose(kernel, expected, rtol=1e-9)

    def test_extended_and_double_agree_at_low_order(self, step):
        t = np.array([0.2, 0.5, 0.9])
        np.testing.assert_allclose(
            step.taylor(t, 8, extended=True).c, step.taylor(t, 8, extended=False).c, rtol=1e-10, atol=1e-300
        )

    @pytest.mark.parametrize("sigma", [1.0, 2.0, 0.5])
    def test_invalid_order(self, sigma):
        with pytest.raises(InvalidOrderError):
            gevrey_step(sigma, 1.0)


class TestCertificates:
    """Fitted and composed Gevrey certificates."""

    def test_fit_factorial_table(self):
        n = np.arange(21)
        cert = fit_certificate([math.factorial(k) for k in n])
        assert cert.s == pytest.approx(1.0, abs=1e-8)
        assert cert.R == pytest.approx(1.0, abs=1e-6)
        assert cert.C == pytest.approx(1.0, abs=1e-6)

    def test_fit_analytic_table(self):
        """Bounded derivatives of ``e**t`` on ``[0, 1]`` have order zero."""
        cert = fit_certificate(np.full(16, math.e))
        assert cert.s == pytest.approx(0.0, abs=1e-8)
        assert cert.C == pytest.approx(math.e, rel=1e-8)

    def test_fit_double_factorial_table(self):
        rho = 1.5
        sups = [math.factorial(2 * k) / rho ** (2 * k) for k in range(25)]
        cert = fit_certificate(sups)
        assert abs(cert.s - 2.0) < 0.25
        assert cert.holds_for(sups)

    def test_windowed_fit_double_factorial_table(self):
        """``(2n)! / rho**(2n)`` has order 2 and radius ``rho**2 / 4``."""
        rho = 1.5
        sups = [math.factorial(2 * k) / rho ** (2 * k) for k in range(25)]
        cert = fit_certificate(sups, window=0.25)
        assert cert.s == pytest.approx(2.0, rel=0.1)
        assert cert.R == pytest.approx(rho**2 / 4, rel=0.1)
        assert cert.holds_for(sups)

    def test_window_too_short_falls_back(self):
        sups = [math.factorial(k) for k in range(8)]
        assert fit_certificate(sups, window=0.9) == fit_certificate(sups)

    def test_fit_degenerate(self):
        assert fit_certificate(np.zeros(8)).trivial
        with pytest.raises(InsufficientDataError):
            fit_certificate([1.0, 1.0, 1.0])

    def test_product_certificate(self):
        """``f = 1/(1 - t)`` times ``g = e**t`` on ``[0, 1/2]``."""
        cf = GevreyCertificate(s=2.0, C=4.0, R=1.0)
        cg = GevreyCertificate(s=1.5, C=math.exp(0.5), R=1.0)
        f_sups = [math.factorial(k) * 2.0 ** (k + 1) for k in range(16)]
        assert cf.holds_for(f_sups)
        product = product_certificate(cf, cg)
        assert product.s == 2.0
        assert product.R == 1.0
        for k in range(16):
            terms = (comb(k, j, exact=True) * math.factorial(j) * 2.0 ** (j + 1) for j in range(k + 1))
            exact = math.exp(0.5) * sum(terms)
            assert exact <= product.bound(k)

    def test_product_order_checks(self):
        cf = GevreyCertificate(s=1.5, C=1.0, R=1.0)
        with pytest.raises(OrderMismatchError):
            product_certificate(cf, GevreyCertificate(s=1.5, C=1.0, R=1.0))
        with pytest.raises(InvalidOrderError):
            product_certificate(cf, GevreyCertificate(s=1.0, C=1.0, R=1.0))

    def test_leibniz_constant_at_least_one(self):
        assert leibniz_constant(2.0, 1.5, 1.0, 1.0) >= 1.0
