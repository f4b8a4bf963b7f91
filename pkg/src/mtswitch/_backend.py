"""Select the compiled trial loops when available.

Set ``MTSWITCH_PURE=1`` to force the pure-Python implementation.
"""
import os

from . import _pure

try:
    if os.environ.get("MTSWITCH_PURE"):
        raise ImportError("pure backend requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _pure
    BACKEND = "pure"

experts_trace = _impl.experts_trace
mw_trace = _impl.mw_trace
