"""Field reconstruction from the charge trajectory, and admissible data.

Away from the interaction point the solution is the free flow plus a
retarded correction switched on inside the light cone |x - y| <= c t: an
instantaneous term carrying the point source at the retarded time and a
memory integral of the matrix kernel against the source history.  At x = y
the formula is genuinely two-valued; the one-sided limits are produced by a
dedicated trace evaluation.
"""

from dataclasses import dataclass

import numpy as np

from .core import ID2, as_spinor
from .charge import damped_newton_r4, _to_c2, _to_r4, NonConvergence
from .freeflow import DEFAULT_QUAD, free_field, free_trace_at_y
from .kernel import apply_retarded_kernel
from .profiles import InitialProfile

_BUMP_WIDTH = 1.0


def singular_carrier_matrices(constants, rep):
    """One-sided constant matrices of the singular part: G xi(x) equals
    decay(|x-y|) * (CL @ xi) for x < y and decay * (CR @ xi) for x > y."""
    s = 0.5 / (constants.hbar * constants.c)
    cl = -s * (-1j * rep.s1 + rep.s3)
    cr = -s * (+1j * rep.s1 + rep.s3)
    return cl, cr


@dataclass(frozen=True)
class DomainDatum:
    """An admissible initial state: regular part plus singular carrier.

    The singular weight xi0 = hbar A(q0) q0 fixes the jump so the state
    satisfies the nonlinear boundary condition i c s1 [Psi]_y = A(q0) q0.
    For m > 0 the carrier is the exponential Green profile of the point
    source; for m = 0 (where that profile is not square integrable) a compact
    smooth bump of unit width carries the same jump and the same mean.
    """

    model: object
    regular: InitialProfile
    xi0: np.ndarray
    q0: np.ndarray
    profile: InitialProfile
    carrier: str

    @property
    def constants(self):
        return self.model.constants

    @property
    def mean_trace(self):
        return self.q0

    @property
    def trace_left(self):
        return self.profile.trace_left

    @property
    def trace_right(self):
        return self.profile.trace_right


def make_domain_datum(model, phi, newton_tol=1e-13, max_iter=100):
    """Close a smooth profile phi into an admissible datum.

    Solves the compatibility system  q = phi(y) - s3 xi/(2 hbar c),
    xi = hbar A(q) q  by damped Newton, then attaches the singular carrier.
    """
    constants = model.constants
    rep = model.representation
    y = constants.y
    if np.linalg.norm(phi.jump) > 1e-10 * (1.0 + np.linalg.norm(phi.mean_trace)):
        raise ValueError("the regular part must be continuous at y")
    phi_y = phi.mean_trace
    hbar, c = constants.hbar, constants.c
    s3 = rep.s3

    def q_of_xi(xi):
        return phi_y - (s3 @ xi) / (2.0 * hbar * c)

    def residual(v):
        xi = _to_c2(v)
        return _to_r4(xi - hbar * model.source(q_of_xi(xi)))

    xi_guess = hbar * model.source(phi_y)
    tol = newton_tol * (1.0 + np.linalg.norm(xi_guess) + np.linalg.norm(phi_y))
    try:
        v, _, _ = damped_newton_r4(residual, _to_r4(xi_guess), tol, max_iter)
    except NonConvergence as err:
        raise NonConvergence(
            "datum construction failed: the compatibility system for the "
            f"singular weight did not converge ({err})",
            residual=err.residual,
        ) from err
    xi0 = _to_c2(v)
    q0 = q_of_xi(xi0)

    cl, cr = singular_carrier_matrices(constants, rep)
    vl, vr = cl @ xi0, cr @ xi0
    if constants.m > 0.0:
        rate = constants.mass_rate
        carrier = "green"
        carrier_radius = 45.0 / rate

        def decay(d):
            return np.exp(-rate * d)

    else:
        carrier = "bump"
        carrier_radius = _BUMP_WIDTH

        def decay(d):
            u = d / _BUMP_WIDTH
            inside = u < 1.0
            us = np.where(inside, u, 0.0)
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - us * us)), 0.0)

    phi_left, phi_right = phi.left, phi.right

    def left(x):
        return phi_left(x) + np.multiply.outer(decay(y - np.asarray(x, float)), vl)

    def right(x):
        return phi_right(x) + np.multiply.outer(decay(np.asarray(x, float) - y), vr)

    full = InitialProfile(
        y=y, left=left, right=right,
        trace_left=phi_y + vl, trace_right=phi_y + vr,
        support_radius=max(phi.support_radius, carrier_radius),
    )
    bc = 1j * c * (rep.s1 @ full.jump) - model.source(q0)
    if np.linalg.norm(bc) > 1e-10 * (1.0 + np.linalg.norm(q0)):
        raise NonConvergence(
            "constructed datum violates the boundary condition "
            f"(residual {np.linalg.norm(bc):.3e})", residual=np.linalg.norm(bc),
        )
    return DomainDatum(
        model=model, regular=phi, xi0=xi0, q0=q0, profile=full, carrier=carrier,
    )


def memory_integral(traj, dx, tau, t, chunk=128):
    """int_0^tau K(dx, t - s) (A(q) q)(s) ds, batched over rows (dx_i, tau_i).

    Trapezoid on the trajectory nodes below tau plus a partial last panel
    closed with the interpolated source, consistent with the march quadrature.
    """
    constants = traj.constants
    rep = traj.model.representation
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.zeros((dx.size, 2), dtype=complex)
    if constants.m == 0.0:
        # kernel vanishes; the memory term is identically zero
        return out
    src = traj.source_values
    t_nodes = traj.t
    dt = traj.dt
    n_nodes = t_nodes.size
    live = tau > 0.0
    floor_abs = np.abs(dx) / constants.c
    for start in range(0, dx.size, chunk):
        sel = np.nonzero(live[start:start + chunk])[0] + start
        if sel.size == 0:
            continue
        d, ta = dx[sel], tau[sel]
        k = np.minimum((ta / dt + 1e-12).astype(int), n_nodes - 1)
        w = np.where(np.arange(n_nodes)[None, :] <= k[:, None], dt, 0.0)
        w[:, 0] = np.where(k >= 1, 0.5 * dt, 0.0)
        w[np.arange(sel.size), k] = np.where(k >= 1, 0.5 * dt, 0.0)
        # clamp masked kernel arguments onto the light cone so they stay legal
        t_eval = np.maximum(t - t_nodes[None, :], floor_abs[sel][:, None])
        vals = apply_retarded_kernel(
            d[:, None], t_eval, src[None, :, :], constants, rep
        )
        acc = np.einsum("rp,rpc->rc", w, vals)
        # partial panel [t_k, tau]
        plen = ta - t_nodes[k]
        src_end = traj.source_at(ta)
        f_k = vals[np.arange(sel.size), k]
        f_end = apply_retarded_kernel(d, np.full(d.shape, 0.0) + floor_abs[sel],
                                      src_end, constants, rep)
        out[sel] = acc + 0.5 * plen[:, None] * (f_k + f_end)
    return out


def boundary_values(traj, datum, t, quad=DEFAULT_QUAD):
    """One-sided limits Psi(y-, t), Psi(y+, t) from the trace identity."""
    constants = traj.constants
    rep = traj.model.representation
    k = traj.node_index(t)
    if k is not None:
        psi_f = traj.forcing[k]
    else:
        psi_f = free_trace_at_y(datum.profile, [t], constants, rep, quad)[0]
    src_t = traj.source_at(t)[0]
    conv = memory_integral(traj, 0.0, t, t)[0]
    half_ic = 0.5j / constants.c
    minus = psi_f - half_ic * ((ID2 - rep.s1) @ src_t) - 1j * conv
    plus = psi_f - half_ic * ((ID2 + rep.s1) @ src_t) - 1j * conv
    return minus, plus


def trace_jump_mean(traj, datum, t, quad=DEFAULT_QUAD):
    """(jump, mean) of the reconstructed field at the interaction point."""
    minus, plus = boundary_values(traj, datum, t, quad)
    return plus - minus, 0.5 * (plus + minus)


def reconstruct_field(traj, datum, x, t, side=0, quad=DEFAULT_QUAD):
    """Reconstruct Psi(x, t) on an array of points.

    `side` (scalar or per-point, -1/0/+1) selects the one-sided limit at the
    two-valued locations: the interaction point y and the light-cone points
    y -+ ct (where the heaviside switch of the retarded terms turns on).
    side 0 at y yields the mean of the one-sided values.
    """
    constants = traj.constants
    rep = traj.model.representation
    if t < -1e-15 or t > traj.t_final * (1.0 + 1e-12) + 1e-15:
        raise ValueError("time outside the trajectory range")
    t = min(max(t, 0.0), traj.t_final)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    side = np.broadcast_to(np.asarray(side), x.shape).astype(int)
    y, c = constants.y, constants.c
    ct = c * t
    tol = 1e-12 * max(1.0, abs(y) + ct)

    out = free_field(datum.profile, x, t, constants, rep, side=side, quad=quad)

    at_y = np.abs(x - y) <= tol
    if np.any(at_y):
        minus, plus = boundary_values(traj, datum, t, quad)
        one_sided = {-1: minus, 0: 0.5 * (minus + plus), 1: plus}
        for s in (-1, 0, 1):
            m = at_y & (side == s)
            if np.any(m):
                out[m] = one_sided[s]

    rest = ~at_y
    if np.any(rest) and t > 0.0:
        xr = x[rest]
        sgn = np.where(xr > y, 1.0, -1.0)
        tau = t - np.abs(xr - y) / c
        on_cone = np.abs(tau) <= 1e-12 * max(t, 1.0)
        inside = (tau > 0.0) & ~on_cone
        inside |= on_cone & (side[rest] == -sgn.astype(int))
        if np.any(inside):
            tau_in = np.maximum(tau[inside], 0.0)
            src_tau = traj.source_at(tau_in)
            s_in = sgn[inside][:, None]
            jump_term = -0.5j / c * (src_tau + s_in * (src_tau @ rep.s1.T))
            conv = memory_integral(traj, xr[inside] - y, tau_in, t)
            sub = out[rest]
            sub[inside] = sub[inside] + jump_term - 1j * conv
            out[rest] = sub
    return out


def reconstruct(traj, datum, x, t, side=0, quad=DEFAULT_QUAD):
    """Pointwise reconstruction; returns a (2,) spinor."""
    return reconstruct_field(traj, datum, np.array([float(x)]), t,
                             side=side, quad=quad)[0]


@dataclass(frozen=True)
class SpinorField:
    """Spatial samples of the field at one time; side = -1/+1 tags one-sided
    values at the two-valued points (y and y -+ ct), 0 elsewhere."""

    t: float
    x: np.ndarray
    psi: np.ndarray
    side: np.ndarray


def snapshot(traj, datum, x_grid, t, quad=DEFAULT_QUAD):
    """Sample the field on a sorted grid; nodes falling exactly on y or the
    light cone are emitted twice, once per one-sided limit."""
    constants = traj.constants
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(np.diff(x_grid) < 0.0):
        raise ValueError("snapshot grid must be sorted")
    y, ct = constants.y, constants.c * t
    tol = 1e-12 * max(1.0, abs(y) + ct)
    special = (np.abs(x_grid - y) <= tol)
    if t > 0.0:
        special |= (np.abs(np.abs(x_grid - y) - ct) <= tol)
    xs, sides = [], []
    for xi, sp in zip(x_grid, special):
        if sp:
            xs.extend([xi, xi])
            sides.extend([-1, 1])
        else:
            xs.append(xi)
            sides.append(0)
    xs = np.array(xs)
    sides = np.array(sides, dtype=int)
    psi = reconstruct_field(traj, datum, xs, t, side=sides, quad=quad)
    return SpinorField(t=float(t), x=xs, psi=psi, side=sides)
