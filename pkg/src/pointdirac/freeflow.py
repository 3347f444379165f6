"""Closed-form free Dirac evolution from the initial profile.

The flow splits into a transport part moving the two characteristic
combinations at speed c and, for m > 0, a memory integral of the retarded
kernel over the backward light cone:

    Psi_f(x,t) = 1/2 [ (1+s1) Psi0(x-ct) + (1-s1) Psi0(x+ct) ]
                 + int_{x-ct}^{x+ct} K(x-xi, t) Psi0(xi) dxi.

The integral is done with composite Simpson panels split at the datum's jump
point y (the kernel itself is analytic in xi, including on the light cone),
with the panel count doubled until the result is stable.
"""

from dataclasses import dataclass

import numpy as np

from .core import ID2, NATURAL_UNITS, STANDARD_REP
from .kernel import apply_retarded_kernel


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the light-cone Simpson quadrature."""

    abs_tol: float = 1e-9
    start_panels: int = 256  # per subinterval; doubled until stable
    max_panels: int = 1 << 15
    chunk_rows: int = 96


DEFAULT_QUAD = QuadratureSpec()


def _simpson_weights(n_panels):
    w = np.ones(n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _kernel_rows(profile, lo, hi, x, t, branch, constants, rep, spec):
    """Batched integrals of K(x_i - xi, t_i) Psi(xi) over [lo_i, hi_i].

    Each row lies entirely on one side of y; `branch` picks the profile
    callable.  Returns an (R, 2) complex array.
    """
    r_count = lo.size
    out = np.zeros((r_count, 2), dtype=complex)
    length = hi - lo
    live = length > 0.0
    if not np.any(live):
        return out
    for start in range(0, r_count, spec.chunk_rows):
        sel = slice(start, start + spec.chunk_rows)
        idx = np.nonzero(live[sel])[0] + start
        if idx.size == 0:
            continue
        a, b, xx, tt = lo[idx], hi[idx], x[idx], t[idx]
        fn_per_row = [profile.branch(s) for s in branch[idx]]
        prev = None
        n = spec.start_panels
        while True:
            h = (b - a) / n
            nodes = a[:, None] + h[:, None] * np.arange(n + 1)
            psi = np.empty(nodes.shape + (2,), dtype=complex)
            for k, fn in enumerate(fn_per_row):
                psi[k] = fn(nodes[k])
            vals = apply_retarded_kernel(
                xx[:, None] - nodes, tt[:, None], psi, constants, rep
            )
            cur = np.einsum("rp,rpc->rc", _simpson_weights(n)[None, :] * h[:, None], vals)
            if prev is not None and np.max(np.abs(cur - prev)) < spec.abs_tol:
                break
            if n >= spec.max_panels:
                break
            prev = cur
            n *= 2
        out[idx] = cur
    return out


def _split_rows(lo, hi, x, t, y, support):
    """Split [lo, hi] at y, trim to the datum support, tag the branch."""
    rows = {"lo": [], "hi": [], "x": [], "t": [], "branch": [], "owner": []}

    def push(a, b, side, i):
        a2 = np.maximum(a, y - support) if side < 0 else np.maximum(a, y)
        b2 = np.minimum(b, y) if side < 0 else np.minimum(b, y + support)
        keep = b2 > a2
        rows["lo"].append(a2[keep])
        rows["hi"].append(b2[keep])
        rows["x"].append(x[keep])
        rows["t"].append(t[keep])
        rows["branch"].append(np.full(keep.sum(), side, dtype=np.int8))
        rows["owner"].append(i[keep])

    idx = np.arange(lo.size)
    push(lo, hi, -1, idx)
    push(lo, hi, +1, idx)
    return {k: np.concatenate(v) if v else np.array([]) for k, v in rows.items()}


def free_field(profile, x, t, constants=NATURAL_UNITS, rep=STANDARD_REP,
               side=0, quad=DEFAULT_QUAD):
    """Free evolution sampled at the points x (array) at time t >= 0.

    `side` (scalar or per-point, -1/0/+1) fixes the one-sided limit taken when
    a transport argument x -+ ct lands exactly on the datum's jump point.
    """
    if t < 0.0:
        raise ValueError("free evolution is provided for t >= 0 only")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    side = np.broadcast_to(np.asarray(side), x.shape)
    y = constants.y
    ct = constants.c * t

    def snap(args):
        # transport arguments within roundoff of the jump point take the
        # requested one-sided limit; exact equality alone is too brittle
        tol = 1e-12 * max(1.0, abs(y) + ct + float(np.max(np.abs(x))))
        return np.where(np.abs(args - y) <= tol, y, args)

    pplus = 0.5 * (ID2 + rep.s1)
    pminus = 0.5 * (ID2 - rep.s1)
    psi_m = profile.evaluate(snap(x - ct), side_at_y=side)
    psi_p = profile.evaluate(snap(x + ct), side_at_y=side)
    out = psi_m @ pplus.T + psi_p @ pminus.T
    if constants.m > 0.0 and t > 0.0:
        rows = _split_rows(
            x - ct, x + ct, x, np.full(x.shape, float(t)), y, profile.support_radius
        )
        if rows["lo"].size:
            vals = _kernel_rows(
                profile, rows["lo"], rows["hi"], rows["x"], rows["t"],
                rows["branch"], constants, rep, quad,
            )
            np.add.at(out, rows["owner"].astype(int), vals)
    return out


def free_evolve(profile, x, t, constants=NATURAL_UNITS, rep=STANDARD_REP,
                side=0, quad=DEFAULT_QUAD):
    """Pointwise free evolution; returns a (2,) spinor."""
    return free_field(profile, np.array([float(x)]), t, constants, rep, side, quad)[0]


def free_trace_at_y(profile, t_grid, constants=NATURAL_UNITS, rep=STANDARD_REP,
                    quad=DEFAULT_QUAD):
    """Trace of the free flow at the interaction point over a time grid.

    At t = 0 the limit value 1/2 [ (1+s1) Psi0(y-) + (1-s1) Psi0(y+) ] is
    used (the transport characteristics approach y from opposite sides).
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size == 0:
        raise ValueError("empty time grid")
    if np.any(t_grid < 0.0):
        raise ValueError("free evolution is provided for t >= 0 only")
    y = constants.y
    pplus = 0.5 * (ID2 + rep.s1)
    pminus = 0.5 * (ID2 - rep.s1)
    out = np.empty((t_grid.size, 2), dtype=complex)
    zero = t_grid == 0.0
    if np.any(zero):
        out[zero] = pplus @ profile.trace_left + pminus @ profile.trace_right
    live = ~zero
    if np.any(live):
        tt = t_grid[live]
        psi_m = profile.left(y - constants.c * tt)
        psi_p = profile.right(y + constants.c * tt)
        out[live] = psi_m @ pplus.T + psi_p @ pminus.T
        if constants.m > 0.0:
            xs = np.full(tt.shape, float(y))
            rows = _split_rows(
                y - constants.c * tt, y + constants.c * tt, xs, tt, y,
                profile.support_radius,
            )
            if rows["lo"].size:
                vals = _kernel_rows(
                    profile, rows["lo"], rows["hi"], rows["x"], rows["t"],
                    rows["branch"], constants, rep, quad,
                )
                live_idx = np.nonzero(live)[0]
                np.add.at(out, live_idx[rows["owner"].astype(int)], vals)
    return out
