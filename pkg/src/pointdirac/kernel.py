"""Bessel functions and the retarded matrix kernel of the massive propagator.

Inside the light cone |x| <= c*t the massive free evolution carries a
matrix-valued memory kernel

    K(x,t) = -(m c / 2 hbar) [ i s3 J0(r s) + (c t 1 + x s1) r j1ox(r s) ]

with s = sqrt((c t)^2 - x^2), r = m*c/hbar and j1ox(w) = J1(w)/w.  J1(r s)/s
is written as r * j1ox(r s) so the kernel stays finite (and exact) on the
light cone where s = 0.  For m = 0 the kernel vanishes identically.
"""

import numpy as np
from scipy import special

from .core import NATURAL_UNITS, STANDARD_REP

# J1(x)/x = 1/2 - x^2/16 + x^4/384 - x^6/18432 + ..., used below the switch
# point where the direct quotient would hit 0/0.
_J1X_SWITCH = 0.05


def bessel_j0(x):
    """Bessel function J0, elementwise."""
    return special.j0(x)


def bessel_j1_over_x(x):
    """J1(x)/x with the removable singularity filled: value 1/2 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = x < _J1X_SWITCH
    xs = np.where(small, 0.0, x)
    x2 = x * x
    series = 0.5 - x2 / 16.0 + x2 * x2 / 384.0 - x2 * x2 * x2 / 18432.0
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.where(small, 0.0, special.j1(xs) / np.where(small, 1.0, xs))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def _lightcone_s(x, t, c):
    """sqrt((c t)^2 - x^2), validated and clamped against roundoff."""
    ct = c * np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    u = (ct - x) * (ct + x)
    scale = np.maximum(ct * ct, 1.0)
    if np.any(ct < 0.0) or np.any(u < -1e-12 * scale):
        raise ValueError("kernel argument outside the light cone |x| <= c*t")
    return np.sqrt(np.maximum(u, 0.0))


def retarded_kernel(x, t, constants=NATURAL_UNITS, rep=STANDARD_REP):
    """Kernel matrix K(x, t); broadcasts over x and t, appending a (2,2) axis."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(x.shape, t.shape)
    if constants.m == 0.0:
        return np.zeros(shape + (2, 2), dtype=complex)
    r = constants.mass_rate
    s = _lightcone_s(x, t, constants.c)
    j0 = bessel_j0(r * s)
    j1x = bessel_j1_over_x(r * s)
    ct = np.broadcast_to(constants.c * t, shape)
    xb = np.broadcast_to(x, shape)
    out = (
        1.0j * np.multiply.outer(j0, rep.s3)
        + np.multiply.outer(r * j1x * ct, np.eye(2, dtype=complex))
        + np.multiply.outer(r * j1x * xb, rep.s1)
    )
    return -0.5 * constants.m * constants.c / constants.hbar * out


def apply_retarded_kernel(x, t, psi, constants=NATURAL_UNITS, rep=STANDARD_REP):
    """K(x, t) @ psi without materializing the matrices.

    x and t broadcast against the leading axes of psi (shape (..., 2)).
    This is the hot path of every quadrature over the kernel.
    """
    psi = np.asarray(psi, dtype=complex)
    if constants.m == 0.0:
        return np.zeros_like(psi)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    r = constants.mass_rate
    s = _lightcone_s(x, t, constants.c)
    j0 = bessel_j0(r * s)[..., None]
    j1x = bessel_j1_over_x(r * s)[..., None]
    ct = (constants.c * t)[..., None] if t.ndim else constants.c * t
    xb = x[..., None] if x.ndim else x
    term = 1.0j * j0 * (psi @ rep.s3.T) + r * j1x * (ct * psi + xb * (psi @ rep.s1.T))
    return -0.5 * constants.m * constants.c / constants.hbar * term
