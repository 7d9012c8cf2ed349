"""Geometry kernel backend selection.

The compiled Cython module is used when available; setting the
environment variable ``SHEAFFUSE_PURE_KERNELS=1`` (or a failed build)
falls back to the pure-Python twin.  ``BACKEND`` records the choice.
"""

import os

from . import _pure

if os.environ.get("SHEAFFUSE_PURE_KERNELS"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

EARTH_RADIUS_KM = _pure.EARTH_RADIUS_KM

wrap_deg = _impl.wrap_deg
circle_dist_deg = _impl.circle_dist_deg
haversine_km = _impl.haversine_km
equirect_bearing_deg = _impl.equirect_bearing_deg
dead_reckon_deg = _impl.dead_reckon_deg

__all__ = [
    "BACKEND",
    "EARTH_RADIUS_KM",
    "wrap_deg",
    "circle_dist_deg",
    "haversine_km",
    "equirect_bearing_deg",
    "dead_reckon_deg",
]
