"""Pure-numpy versions of the pointwise kernels in ``_ckernels.pyx``."""

import numpy as np


def cross3(a, b):
    """Pointwise cross product of two ``(3, M)`` sample arrays."""
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def _g(x):
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def chi_profile(t):
    """Smooth radial cutoff: 1 on [0, 3/4], 0 on [1, inf), smooth step between."""
    t = np.asarray(t, dtype=np.float64)
    x = (t - 0.75) / 0.25
    out = np.ones_like(t)
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    g0 = _g(xm)
    g1 = _g(1.0 - xm)
    out[mid] = 1.0 - g0 / (g0 + g1)
    out[x >= 1.0] = 0.0
    return out


def vec_norm_sum(v, p):
    """Sum over samples of ``|v(x)|**p`` where ``|.|`` is the Euclidean norm over axis 0."""
    mag = np.sqrt(np.sum(v * v, axis=0))
    if p == 2.0:
        return float(np.sum(mag * mag))
    return float(np.sum(mag**p))


def vec_norm_max(v):
    """Maximum over samples of the Euclidean norm over axis 0."""
    return float(np.sqrt(np.max(np.sum(v * v, axis=0))))
