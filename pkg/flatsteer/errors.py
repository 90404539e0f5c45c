"""Error hierarchy for flatsteer.

Every failure raised on purpose by the package derives from :class:`FlatsteerError` and carries a short
``code`` string. The CLI uses the codes in its diagnostic reports and maps :class:`ConfigError` to exit
status 2 and every other :class:`FlatsteerError` to exit status 3.
"""

__all__ = [
    "ConditionY3Error",
    "ConditionY3Warning",
    "ConfigError",
    "ContourSuspectError",
    "DivergentSeriesError",
    "FlatsteerError",
    "InfeasibleParametersError",
    "InsufficientDataError",
    "InsufficientRadiusError",
    "InvalidBoundaryError",
    "InvalidCutError",
    "InvalidDepthError",
    "InvalidLossError",
    "InvalidOrderError",
    "InvalidWeightsError",
    "LossTooSmallError",
    "OrderMismatchError",
    "PrefixExhaustedError",
]


class FlatsteerError(Exception):
    """Base class for all flatsteer failures."""

    code = "flatsteer-error"


class InvalidDepthError(FlatsteerError, ValueError):
    code = "invalid-depth"


class InvalidWeightsError(FlatsteerError, ValueError):
    code = "invalid-weights"


class PrefixExhaustedError(FlatsteerError):
    code = "prefix-exhausted"


class InvalidOrderError(FlatsteerError, ValueError):
    code = "invalid-order"


class OrderMismatchError(FlatsteerError, ValueError):
    code = "order-mismatch"


class LossTooSmallError(FlatsteerError, ValueError):
    code = "loss-too-small"


class InfeasibleParametersError(FlatsteerError):
    code = "infeasible-parameters"


class InsufficientRadiusError(FlatsteerError, ValueError):
    code = "insufficient-radius"


class InvalidLossError(FlatsteerError, ValueError):
    code = "invalid-loss"


class ConditionY3Error(FlatsteerError):
    code = "condition-Y3-violated"


class ConditionY3Warning(UserWarning):
    """Sampled kernel derivatives exceed the bound by their value at the origin."""


class InvalidCutError(FlatsteerError, ValueError):
    code = "invalid-cut"


class DivergentSeriesError(FlatsteerError):
    code = "divergent-series"


class InvalidBoundaryError(FlatsteerError, ValueError):
    code = "invalid-bc"


class ContourSuspectError(FlatsteerError):
    code = "contour-suspect"


class InsufficientDataError(FlatsteerError, ValueError):
    code = "insufficient-data"


class ConfigError(FlatsteerError, ValueError):
    code = "config-invalid"
