"""Pointwise physical-space kernels, compiled when available.

The Cython extension ``detwave._ckernels`` is imported if it was built;
otherwise the numpy implementations in ``detwave._fallback`` are used.
Setting ``DETWAVE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("DETWAVE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

cross3 = _impl.cross3
chi_profile = _impl.chi_profile
vec_norm_sum = _impl.vec_norm_sum
vec_norm_max = _impl.vec_norm_max

__all__ = ["BACKEND", "cross3", "chi_profile", "vec_norm_sum", "vec_norm_max"]
