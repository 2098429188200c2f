"""Select compiled kernels when available, else the pure-Python fallback.

Set ``GROWTHNET_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("GROWTHNET_PURE_PYTHON"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _fallback

BACKEND = kernels.BACKEND
log_convolve = kernels.log_convolve
gillespie_loop = kernels.gillespie_loop
