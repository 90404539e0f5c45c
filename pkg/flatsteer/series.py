"""Truncated Taylor series evaluated at many points at once.

A :class:`TaylorSeries` holds the coefficients ``c[n] = f^(n)(x) / n!`` of a function at every point of an
evaluation grid, so ``c`` has shape ``(order + 1, *grid_shape)``. Arithmetic on series propagates the
expansion exactly (truncated Cauchy products, Miller recurrences for powers and exponentials), which is
how derivative tables of products such as ``f(t - T) * g(t)`` are assembled without symbolic algebra.

Coefficients may also be mpmath numbers in an object array (see :meth:`TaylorSeries.to_mp`); every
operation then runs at the mpmath working precision of the caller.

Example:
    s = TaylorSeries.variable(np.linspace(0.1, 0.9, 5), order=6)
    e = (-(s * (1 - s)) ** -2.0).exp()
    e.derivatives()  # array of shape (7, 5) holding E^(n)(x)
"""

from __future__ import annotations

import math
from typing import Any

import mpmath
import numpy as np
from scipy.special import gammaln

__all__ = ["TaylorSeries", "factorials", "to_mp"]

_mp_exp = np.frompyfunc(mpmath.exp, 1, 1)


def factorials(order: int) -> np.ndarray:
    """Return ``[0!, 1!, ..., order!]`` as floats."""
    return np.exp(gammaln(np.arange(order + 1) + 1.0))


def to_mp(values: Any) -> np.ndarray:
    """Object array of mpmath numbers holding ``values`` exactly."""
    arr = np.asarray(values)
    convert = mpmath.mpc if np.iscomplexobj(arr) else mpmath.mpf
    return np.asarray(np.frompyfunc(convert, 1, 1)(arr), dtype=object)


def _is_mp(c: np.ndarray) -> bool:
    return c.dtype == object


class TaylorSeries:
    """Truncated Taylor expansion ``sum_n c[n] * eps**n`` at each point of a grid.

    Args:
        c: Coefficient array whose first axis is the expansion order.
    """

    __array_priority__ = 100.0

    def __init__(self, c: Any):
        c = np.asarray(c)
        if c.ndim == 0 or c.shape[0] == 0:
            raise ValueError("coefficient array needs a leading order axis")
        self.c = c

    @property
    def order(self) -> int:
        """Highest power kept in the expansion."""
        return self.c.shape[0] - 1

    @classmethod
    def constant(cls, value: Any, order: int) -> TaylorSeries:
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1, *value.shape), dtype=value.dtype)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, x: Any, order: int) -> TaylorSeries:
        """Expansion of the identity map around each point of ``x``."""
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1, *x.shape))
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs: Any) -> TaylorSeries:
        derivs = np.asarray(derivs)
        scale = factorials(derivs.shape[0] - 1).reshape((-1,) + (1,) * (derivs.ndim - 1))
        return cls(derivs / scale)

    @classmethod
    def scaled_monomial(cls, x: Any, p: int, order: int) -> TaylorSeries:
        """Expansion of ``x**p / p!`` around each point of ``x``.

        The coefficient of ``eps**j`` is ``x**(p - j) / (j! (p - j)!)`` for ``j <= p`` and zero beyond.
        """
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1, *x.shape))
        for j in range(min(p, order) + 1):
            c[j] = x ** (p - j) / (math.factorial(j) * math.factorial(p - j))
        return cls(c)

    def derivatives(self) -> np.ndarray:
        """Return ``f^(n)`` for ``n = 0..order``."""
        if _is_mp(self.c):
            scale = np.array([math.factorial(n) for n in range(self.order + 1)], dtype=object)
        else:
            scale = factorials(self.order)
        return self.c * scale.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def to_mp(self) -> TaylorSeries:
        """The same expansion with mpmath coefficients."""
        return self if _is_mp(self.c) else TaylorSeries(to_mp(self.c))

    def to_float(self) -> TaylorSeries:
        """Round mpmath coefficients back to doubles (complex if any coefficient is)."""
        if not _is_mp(self.c):
            return self
        complex_ = any(isinstance(v, mpmath.mpc) for v in self.c.flat)
        return TaylorSeries(self.c.astype(complex if complex_ else float))

    def truncate(self, order: int) -> TaylorSeries:
        return TaylorSeries(self.c[: order + 1])

    def deriv(self) -> TaylorSeries:
        """Expansion of ``f'`` (one order shorter)."""
        if self.order == 0:
            return TaylorSeries(np.zeros_like(self.c))
        n = np.arange(1, self.order + 1).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return TaylorSeries(self.c[1:] * n)

    def __call__(self, eps: Any) -> np.ndarray:
        """Evaluate the truncated series at offset ``eps`` by Horner's rule."""
        out = np.zeros_like(self.c[0]) + 0 * np.asarray(eps)
        for coeff in self.c[::-1]:
            out = out * eps + coeff
        return out

    def __add__(self, x: Any) -> TaylorSeries:
        if isinstance(x, TaylorSeries):
            order = min(self.order, x.order)
            return TaylorSeries(self.c[: order + 1] + x.c[: order + 1])
        ans = self.c.copy() if np.ndim(x) == 0 else self.c + 0 * np.asarray(x)
        ans[0] = ans[0] + x
        return TaylorSeries(ans)

    __radd__ = __add__

    def __neg__(self) -> TaylorSeries:
        return TaylorSeries(-self.c)

    def __sub__(self, x: Any) -> TaylorSeries:
        return self + (-x)

    def __rsub__(self, x: Any) -> TaylorSeries:
        return (-self) + x

    def __mul__(self, x: Any) -> TaylorSeries:
        if isinstance(x, TaylorSeries):
            order = min(self.order, x.order)
            a, b = self.c[: order + 1], x.c[: order + 1]
            out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
            for n in range(order + 1):
                out[n] = np.sum(a[: n + 1] * b[n::-1], axis=0)
            return TaylorSeries(out)
        return TaylorSeries(self.c * np.asarray(x))

    __rmul__ = __mul__

    def __truediv__(self, x: Any) -> TaylorSeries:
        if isinstance(x, TaylorSeries):
            return self * x**-1.0
        return TaylorSeries(self.c / np.asarray(x))

    def __pow__(self, alpha: float) -> TaylorSeries:
        """Real power by the Miller recurrence ``u0 n w_n = sum_k (alpha k - n + k) u_k w_(n-k)``.

        Requires a nonzero constant term; points where it vanishes produce non-finite coefficients.
        """
        u = self.c
        w = np.zeros(u.shape, dtype=np.result_type(u, float))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w[0] = u[0] ** alpha
            for n in range(1, self.order + 1):
                k = np.arange(1, n + 1).reshape((-1,) + (1,) * (u.ndim - 1))
                w[n] = np.sum((alpha * k - n + k) * u[1 : n + 1] * w[n - 1 :: -1][: n], axis=0) / (n * u[0])
        return TaylorSeries(w)

    def exp(self) -> TaylorSeries:
        """Exponential by ``n e_n = sum_k k w_k e_(n-k)``."""
        w = self.c
        e = np.zeros(w.shape, dtype=np.result_type(w, float))
        with np.errstate(over="ignore", invalid="ignore"):
            e[0] = _mp_exp(w[0]) if _is_mp(w) else np.exp(w[0])
            for n in range(1, self.order + 1):
                k = np.arange(1, n + 1).reshape((-1,) + (1,) * (w.ndim - 1))
                e[n] = np.sum(k * w[1 : n + 1] * e[n - 1 :: -1][: n], axis=0) / n
        # underflowed exponentials carry no information; keep them exactly zero
        if e.ndim > 1:
            e[:, e[0] == 0] = 0.0
        return TaylorSeries(e)

    def __repr__(self) -> str:
        return f"TaylorSeries(order={self.order}, shape={self.c.shape[1:]})"
