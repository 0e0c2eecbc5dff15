"""Pick the compiled kernels when available, else the numpy fallback.

Set ``CNOIDAL_TRAFFIC_PURE=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("CNOIDAL_TRAFFIC_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

ring_rhs = _impl.ring_rhs
dopri5_ring = _impl.dopri5_ring

__all__ = ["BACKEND", "ring_rhs", "dopri5_ring"]
