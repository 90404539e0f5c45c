"""Extended-precision scopes for mpmath computations.

Finite-cut Laplace quantities, re-expansion oracles and factorial-scale certificates are evaluated with mpmath at
the configured working precision. These helpers scope that precision so it never leaks into callers.

Example:
    from flatsteer.precision import extended_precision

    with extended_precision():
        value = mpmath.factorial(60) / mpmath.mpf(3) ** 60

Configuration (environment):
    FLATSTEER_PRECISION = 256  # Mantissa bits used when no explicit precision is given (default: 256)
"""

import contextlib
import functools
import logging
import types
from collections.abc import Callable, Iterator
from typing import Any

import mpmath

from flatsteer.config import PRECISION_BITS

__all__ = ["ExtendedPrecision", "extended_precision", "set_default_bits"]

logger = logging.getLogger(__name__)


@contextlib.contextmanager
def extended_precision(bits: int | None = None, extra: int = 0) -> Iterator[Any]:
    """Run the enclosed block with mpmath working at ``bits + extra`` mantissa bits.

    Args:
        bits: Mantissa bits; defaults to ``FLATSTEER_PRECISION``.
        extra: Guard bits added on top, for quantities whose cancellation grows with an order.

    Yields:
        The mpmath context, for convenience.
    """
    prec = (bits or PRECISION_BITS) + extra
    logger.debug("entering extended precision at %d bits", prec)
    with mpmath.workprec(prec):
        yield mpmath.mp


class ExtendedPrecision:
    """Class-based version of :func:`extended_precision`.

    Can be used as a context manager or decorator.

    Examples:
        >>> @ExtendedPrecision(128)
        >>> def tail():
        >>>     return mpmath.nsum(lambda n: 1 / mpmath.factorial(n), [0, mpmath.inf])
    """

    def __init__(self, bits: int | None = None):
        self.bits = bits
        self._saved: list[int] = []

    def __enter__(self):
        # one saved precision per active entry, so nested and reentrant use restore in order
        self._saved.append(mpmath.mp.prec)
        mpmath.mp.prec = self.bits or PRECISION_BITS
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: types.TracebackType | None,
    ) -> bool:
        if self._saved:
            mpmath.mp.prec = self._saved.pop()
        return False

    def __call__(self, func: Callable[..., Any]) -> Callable[..., Any]:
        """Allow ExtendedPrecision to be used as a decorator."""

        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            with self:
                return func(*args, **kwargs)

        return wrapper


def set_default_bits(bits: int) -> None:
    """Replace the process-wide default precision, as the CLI ``--precision`` flag does."""
    global PRECISION_BITS
    if bits < 53:
        raise ValueError(f"precision of {bits} bits is below double precision")
    PRECISION_BITS = bits
    logger.debug("default precision set to %d bits", bits)
