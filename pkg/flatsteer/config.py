# Configuration from FLATSTEER_* environment variables with defaults
import os
from typing import Any


def _get_setting(name: str, default: Any) -> Any:
    """Get a setting value from the environment with a typed default fallback."""
    raw = os.environ.get(name)
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.strip().lower() in {"1", "true", "yes", "on"}
    try:
        return type(default)(raw)
    except ValueError:
        return default


PRECISION_BITS = _get_setting("FLATSTEER_PRECISION", 256)
EXTENDED_ORDER = _get_setting("FLATSTEER_EXTENDED_ORDER", 20)
SUP_REFINE_MAX = _get_setting("FLATSTEER_SUP_REFINE_MAX", 4097)
QUAD_TOL = _get_setting("FLATSTEER_QUAD_TOL", 1e-12)
ENDPOINT_TOL = _get_setting("FLATSTEER_ENDPOINT_TOL", 1e-9)
INTERP_TOL = _get_setting("FLATSTEER_INTERP_TOL", 1e-9)
LATTICE_RESOLUTION = _get_setting("FLATSTEER_LATTICE_RESOLUTION", 8)
LATTICE_MAX = _get_setting("FLATSTEER_LATTICE_MAX", 1 << 20)
WEIGHT_PREFIX = _get_setting("FLATSTEER_WEIGHT_PREFIX", 1 << 16)
CONTOUR_NODES = _get_setting("FLATSTEER_CONTOUR_NODES", 256)
CONTOUR_MAX_NODES = _get_setting("FLATSTEER_CONTOUR_MAX_NODES", 8192)
CONTOUR_TOL = _get_setting("FLATSTEER_CONTOUR_TOL", 1e-12)
TRUNCATION_CAP = _get_setting("FLATSTEER_TRUNCATION_CAP", 200)
Y3_STRICT = _get_setting("FLATSTEER_Y3_STRICT", False)
Y3_SAMPLES = _get_setting("FLATSTEER_Y3_SAMPLES", 200)
DELTA_MARGIN = _get_setting("FLATSTEER_DELTA_MARGIN", 0.9)
LOSS_SLOPE_TOL = _get_setting("FLATSTEER_LOSS_SLOPE_TOL", 0.02)
REACH_MARGIN = _get_setting("FLATSTEER_REACH_MARGIN", 1e-9)
LOG_LEVEL = _get_setting("FLATSTEER_LOG_LEVEL", "WARNING")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "flatsteer": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": True,
        },
    },
}
