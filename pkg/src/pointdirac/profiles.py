"""Initial data: two-component profiles on the line split at the point y.

A profile stores one callable per half-line plus the one-sided boundary
traces, because the representation formula needs point evaluation at shifted
arguments and the data may jump at y.  Callables are vectorized:
(n,) float -> (n, 2) complex.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .core import as_spinor


@dataclass(frozen=True)
class InitialProfile:
    y: float
    left: Callable[[np.ndarray], np.ndarray]  # valid on x <= y
    right: Callable[[np.ndarray], np.ndarray]  # valid on x >= y
    trace_left: np.ndarray
    trace_right: np.ndarray
    support_radius: float = np.inf  # |psi| negligible outside |x - y| <= radius

    def __post_init__(self):
        object.__setattr__(self, "trace_left", as_spinor(self.trace_left))
        object.__setattr__(self, "trace_right", as_spinor(self.trace_right))

    @property
    def mean_trace(self):
        return 0.5 * (self.trace_left + self.trace_right)

    @property
    def jump(self):
        return self.trace_right - self.trace_left

    def branch(self, side):
        return self.left if side < 0 else self.right

    def evaluate(self, x, side_at_y=-1):
        """Evaluate pointwise; entries exactly at y take the side_at_y branch.

        side_at_y may be a scalar or a per-point array of -1/0/+1; 0 at y
        yields the mean of the one-sided values.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        side = np.broadcast_to(np.asarray(side_at_y), x.shape)
        out = np.empty(x.shape + (2,), dtype=complex)
        lmask = (x < self.y) | ((x == self.y) & (side < 0))
        rmask = (x > self.y) | ((x == self.y) & (side > 0))
        mmask = ~(lmask | rmask)
        if np.any(lmask):
            out[lmask] = self.left(x[lmask])
        if np.any(rmask):
            out[rmask] = self.right(x[rmask])
        if np.any(mmask):
            out[mmask] = self.mean_trace
        return out


def piecewise_profile(left, right, y=0.0, support_radius=np.inf):
    """Profile from explicit half-line callables (traces taken at y)."""
    tl = np.asarray(left(np.array([y])), dtype=complex)[0]
    tr = np.asarray(right(np.array([y])), dtype=complex)[0]
    return InitialProfile(
        y=y, left=left, right=right, trace_left=tl, trace_right=tr,
        support_radius=support_radius,
    )


def continuous_profile(fn, y=0.0, support_radius=np.inf):
    """Profile from a single continuous callable."""
    return piecewise_profile(fn, fn, y=y, support_radius=support_radius)


def gaussian_profile(weights, x0=0.0, width=1.0, y=0.0):
    """psi(x) = weights * exp(-((x - x0)/width)^2)."""
    w = as_spinor(weights)

    def fn(x):
        return np.multiply.outer(np.exp(-(((x - x0) / width) ** 2)), w)

    radius = abs(x0 - y) + 7.0 * abs(width)
    return continuous_profile(fn, y=y, support_radius=radius)


def sech_profile(weights, x0=0.0, width=1.0, y=0.0):
    """psi(x) = weights / cosh((x - x0)/width)."""
    w = as_spinor(weights)

    def fn(x):
        return np.multiply.outer(1.0 / np.cosh((x - x0) / width), w)

    radius = abs(x0 - y) + 45.0 * abs(width)
    return continuous_profile(fn, y=y, support_radius=radius)


def bump_profile(weights, x0=0.0, width=1.0, y=0.0):
    """Compactly supported C-infinity bump, peak value `weights` at x0:
    psi(x) = weights * exp(1 - 1/(1 - u^2)) for u = (x - x0)/width, |u| < 1.
    """
    w = as_spinor(weights)

    def fn(x):
        u = (x - x0) / width
        inside = np.abs(u) < 1.0
        us = np.where(inside, u, 0.0)
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.where(inside, np.exp(1.0 - 1.0 / (1.0 - us * us)), 0.0)
        return np.multiply.outer(vals, w)

    radius = abs(x0 - y) + abs(width)
    return continuous_profile(fn, y=y, support_radius=radius)


def profile_from_samples(x, psi, y=0.0):
    """Cubic-spline profile through samples (x sorted, psi complex (n, 2)).

    Samples are split at y into the two half-line branches; a duplicated
    abscissa exactly at y provides the two one-sided traces.  Outside the
    sampled range the profile is zero.
    """
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    if x.ndim != 1 or psi.shape != (x.size, 2):
        raise ValueError("need x of shape (n,) and psi of shape (n, 2)")
    if np.any(np.diff(x) < 0.0):
        raise ValueError("sample abscissae must be sorted")

    def make_branch(xs, vs):
        if xs.size == 0:
            return (lambda q: np.zeros((np.size(q), 2), dtype=complex)), np.zeros(2, complex)
        if xs.size < 4:
            raise ValueError("need at least 4 samples per half-line")
        spline = CubicSpline(xs, vs, axis=0)
        lo, hi = xs[0], xs[-1]

        def fn(q):
            q = np.asarray(q, dtype=float)
            inside = (q >= lo) & (q <= hi)
            out = np.zeros(q.shape + (2,), dtype=complex)
            if np.any(inside):
                out[inside] = spline(q[inside])
            return out

        return fn, None

    at_y = np.isclose(x, y, rtol=0.0, atol=1e-14 * max(1.0, abs(y)))
    lsel = (x < y) | (at_y & (np.cumsum(at_y) == 1))  # first y-sample goes left
    rsel = ~lsel
    left, _ = make_branch(x[lsel], psi[lsel])
    right, _ = make_branch(x[rsel], psi[rsel])
    tl = left(np.array([y]))[0]
    tr = right(np.array([y]))[0]
    radius = max(abs(x[0] - y), abs(x[-1] - y)) if x.size else 0.0
    return InitialProfile(
        y=y, left=left, right=right, trace_left=tl, trace_right=tr,
        support_radius=radius,
    )
