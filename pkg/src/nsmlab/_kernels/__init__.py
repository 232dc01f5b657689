"""Hot loops with a compiled core and a numpy fallback.

The compiled extension is used when it was built at install time; set
``NSMLAB_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
active implementation.
"""
import os

from . import _pykernels as slow

try:
    if os.environ.get("NSMLAB_PURE_PYTHON"):
        raise ImportError("fallback forced by environment")
    from . import _ckernels as fast
except ImportError:
    fast = None

_impl = fast if fast is not None else slow
BACKEND = "cython" if fast is not None else "python"

xorshift_uniform = _impl.xorshift_uniform
maximal_scan = _impl.maximal_scan
cross3 = _impl.cross3
etd_combine = _impl.etd_combine

__all__ = ["BACKEND", "fast", "slow", "xorshift_uniform", "maximal_scan",
           "cross3", "etd_combine"]
