"""Elementary kernels entering the analytic mass-density form factors.

All three functions have removable singularities at x = 0 and are evaluated
by a Taylor-series branch at small argument so that accuracy stays at the
1e-15 level across the branch switch.  They accept scalars or numpy arrays
and always return float64 results of the same shape.
"""

from __future__ import annotations

from math import factorial

import numpy as np
from scipy.special import j1 as _bessel_j1

# sin(x)/x = 1 - x^2/6 + x^4/120 - ...; below 1e-4 two correction terms
# leave a truncation error ~ x^6/5040 < 3e-28.
_SINC_SWITCH = 1.0e-4

# 2 J1(x)/x = 1 - x^2/8 + x^4/192 - ...; same switch point, truncation
# error ~ x^6/9216 < 2e-28.
_J1_SWITCH = 1.0e-4

# 3 (sin x - x cos x)/x^3 = sum_m c_m x^(2m), c_m = 3 (-1)^m (2m+2)/(2m+3)!.
# The direct form loses ~ 3*eps/x^2 relative accuracy to cancellation, so
# the series branch must extend to x = 1 (14 terms converge to < 1e-30
# there); switching at 1e-4 would leave ~1e-8 errors just above the switch.
_SPHERE_SWITCH = 1.0
_SPHERE_COEF = np.array(
    [3.0 * (-1) ** m * (2 * m + 2) / factorial(2 * m + 3) for m in range(14)]
)


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalized convention)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SWITCH
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    out = np.where(small, series, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def sphere_form_kernel(x):
    """3 (sin x - x cos x)/x^3, the uniform-sphere form-factor kernel.

    Equals 1 at x = 0, first zero at the first positive root of tan x = x
    (x = 4.4934094579...).
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SPHERE_SWITCH
    safe = np.where(small, 1.0, x)
    series = np.polynomial.polynomial.polyval(x * x, _SPHERE_COEF)
    direct = 3.0 * (np.sin(safe) - safe * np.cos(safe)) / safe**3
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def two_j1_over_x(x):
    """2 J1(x)/x, the disc (circular cross-section) form-factor kernel.

    J1 is the cylindrical Bessel function of the first kind; the large-x
    branch delegates to scipy's Cephes rational/asymptotic approximation
    (|error| ~ 2.6e-16 over [0, 30]).  Equals 1 at x = 0, first zero at
    the first zero of J1 (x = 3.8317059702...).
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _J1_SWITCH
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = 1.0 - x2 / 8.0 + x2 * x2 / 192.0
    out = np.where(small, series, 2.0 * _bessel_j1(safe) / safe)
    return out if out.ndim else float(out)
