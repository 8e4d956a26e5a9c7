"""Unit conventions and conversions.

All numerics inside the package run on angular rates in rad/ns (time in ns).
Every user-facing parameter object carries cyclic values (frequency/2pi) in GHz
or MHz, matching how device parameters are quoted; conversion happens exactly
once, at the boundary between parameter objects and the numerical kernels.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

#: rad/ns per cyclic GHz
GHZ = TWO_PI
#: rad/ns per cyclic MHz
MHZ = TWO_PI * 1e-3
#: ns per microsecond
US = 1e3


def ang_from_mhz(f):
    """Cyclic MHz -> angular rad/ns."""
    return np.asarray(f, dtype=float) * MHZ


def mhz_from_ang(w):
    """Angular rad/ns -> cyclic MHz."""
    return np.asarray(w, dtype=float) / MHZ


def ang_from_ghz(f):
    """Cyclic GHz -> angular rad/ns."""
    return np.asarray(f, dtype=float) * GHZ


def ghz_from_ang(w):
    """Angular rad/ns -> cyclic GHz."""
    return np.asarray(w, dtype=float) / GHZ


def rate_from_us(t_us):
    """Lifetime in microseconds -> decay rate in 1/ns."""
    return 1.0 / (float(t_us) * US)
