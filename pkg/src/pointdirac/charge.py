"""Marching the nonlinear Volterra equation for the charge q(t).

The whole dynamics reduces to the space-independent unknown
q(t) = mean value of the spinor at the interaction point, satisfying

    q(t) = Psi_f(y,t) - (i/2c) A(q(t)) q(t) - i int_0^t K(0,t-s) A(q(s)) q(s) ds.

The left side folds into the map F(z) = z + (i/2c) A(z) z, which is globally
invertible under the admissibility assumption.  On a uniform grid the memory
integral is discretized by the composite trapezoid rule; the implicit last
node is merged into the per-step inversion so the scheme stays second order
without inner iteration loops.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .core import ID2, as_spinor
from .freeflow import DEFAULT_QUAD, free_trace_at_y
from .kernel import retarded_kernel


class NonConvergence(RuntimeError):
    """Newton failed to reach tolerance (admissibility violation or bad guess)."""

    def __init__(self, message, residual=None, iterations=None, time_index=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.time_index = time_index


class SingularJacobian(RuntimeError):
    """Newton matrix numerically singular (condition number above limit)."""

    def __init__(self, message, condition=None, time_index=None):
        super().__init__(message)
        self.condition = condition
        self.time_index = time_index


def _to_r4(z):
    return np.array([z[0].real, z[0].imag, z[1].real, z[1].imag])


def _to_c2(v):
    return np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])


def damped_newton_r4(res_fn, v0, tol_abs, max_iter=50, damping_floor=2.0**-20,
                     fd_step=1e-7, cond_limit=1e14):
    """Damped Newton on R^4 with a central finite-difference Jacobian.

    Step lengths are halved until the residual norm decreases; hitting the
    damping floor without progress raises NonConvergence.  After the
    tolerance is first met one undamped polish step is taken (it drives
    affine problems to machine precision), kept only if it helps.
    """
    v = np.asarray(v0, dtype=float).copy()
    r = res_fn(v)
    rn = np.linalg.norm(r)
    polish = False
    for it in range(max_iter + 1):
        if rn <= tol_abs and (polish or rn == 0.0):
            return v, rn, it
        polish = rn <= tol_abs
        jac = np.empty((4, 4))
        for j in range(4):
            h = fd_step * (1.0 + abs(v[j]))
            vp, vm = v.copy(), v.copy()
            vp[j] += h
            vm[j] -= h
            jac[:, j] = (res_fn(vp) - res_fn(vm)) / (2.0 * h)
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularJacobian(
                f"Newton matrix condition number {cond:.3e} exceeds {cond_limit:.0e}",
                condition=cond,
            )
        step = np.linalg.solve(jac, -r)
        if polish:
            v_new = v + step
            r_new = res_fn(v_new)
            rn_new = np.linalg.norm(r_new)
            if rn_new < rn:
                v, r, rn = v_new, r_new, rn_new
            return v, rn, it + 1
        lam = 1.0
        while True:
            v_new = v + lam * step
            r_new = res_fn(v_new)
            rn_new = np.linalg.norm(r_new)
            if rn_new <= (1.0 - 1e-4 * lam) * rn:
                break
            lam *= 0.5
            if lam < damping_floor:
                if rn_new >= rn:
                    raise NonConvergence(
                        f"no progress at damping floor (residual {rn:.3e})",
                        residual=rn, iterations=it,
                    )
                break
        v, r, rn = v_new, r_new, rn_new
    if rn <= tol_abs:
        return v, rn, max_iter
    raise NonConvergence(
        f"Newton did not converge in {max_iter} iterations (residual {rn:.3e})",
        residual=rn, iterations=max_iter,
    )


def charge_map(model, z):
    """F(z) = z + (i/2c) A(z) z, the implicit map of the charge equation."""
    z = as_spinor(z)
    return z + 0.5j / model.constants.c * model.source(z)


@dataclass
class ChargeMapInverter:
    """Inverts z + [(i/2c) 1 + extra] A(z) z = w.

    Models with scalar-reduction data get the fast path: a one-dimensional
    solve for x = phi(z) followed by one 2x2 linear solve.  Everything else
    (and every call with a nonzero `extra`, as in the implicit march step)
    goes through damped Newton with the supplied predictor.
    """

    model: object
    newton_tol: float = 1e-12
    max_iter: int = 50
    damping_floor: float = 2.0**-20
    fd_step: float = 1e-7
    cond_limit: float = 1e14

    def invert(self, w, guess=None, extra=None):
        w = as_spinor(w)
        c = self.model.constants.c
        sr = self.model.scalar_reduction
        tol = self.newton_tol * (1.0 + np.linalg.norm(w))
        if extra is None and sr is not None:
            x_star = sr.invert_scalar_map(sr.phi(w))
            z = np.linalg.solve(ID2 + 0.5j / c * sr.coupling(x_star), w)
            if np.linalg.norm(charge_map(self.model, z) - w) <= tol:
                return z
            guess = z  # fall through and polish (defensive; not expected)
        b_mat = 0.5j / c * ID2 if extra is None else 0.5j / c * ID2 + extra

        def residual(v):
            z = _to_c2(v)
            return _to_r4(z + b_mat @ self.model.source(z) - w)

        v0 = _to_r4(w if guess is None else as_spinor(guess))
        v, _, _ = damped_newton_r4(
            residual, v0, tol, self.max_iter, self.damping_floor,
            self.fd_step, self.cond_limit,
        )
        return _to_c2(v)


def invert_charge_map(model, w, guess=None, **opts):
    """One-off inversion of the charge map (see ChargeMapInverter)."""
    return ChargeMapInverter(model, **opts).invert(w, guess=guess)


def _hermite_slopes(values, dt):
    return np.gradient(values, dt, axis=0, edge_order=2)


def _hermite_eval(t_grid, dt, values, slopes, tau):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    t_end = t_grid[-1]
    tol = 1e-9 * max(t_end, 1.0)
    if np.any(tau < -tol) or np.any(tau > t_end + tol):
        raise ValueError("query time outside the trajectory range")
    tau = np.clip(tau, 0.0, t_end)
    k = np.minimum((tau / dt).astype(int), t_grid.size - 2)
    s = ((tau - t_grid[k]) / dt)[:, None]
    s2, s3 = s * s, s * s * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return (h00 * values[k] + dt * h10 * slopes[k]
            + h01 * values[k + 1] + dt * h11 * slopes[k + 1])


@dataclass
class ChargeTrajectory:
    """Discretized solution of the charge equation on a uniform grid.

    xi holds the point source hbar * (A(q) q) per node; rhs is the forcing
    minus the (complete) discrete memory integral, so q_n = F^-1(rhs_n) and
    |q_n| <= |rhs_n| by self-adjointness of A.
    """

    model: object
    t: np.ndarray
    dt: float
    q: np.ndarray
    xi: np.ndarray
    forcing: np.ndarray
    rhs: np.ndarray
    residuals: np.ndarray

    @property
    def constants(self):
        return self.model.constants

    @property
    def t_final(self):
        return float(self.t[-1])

    @property
    def source_values(self):
        """(A(q) q)(t_n) = xi_n / hbar."""
        return self.xi / self.model.constants.hbar

    @cached_property
    def _q_slopes(self):
        return _hermite_slopes(self.q, self.dt)

    @cached_property
    def _src_slopes(self):
        return _hermite_slopes(self.source_values, self.dt)

    def charge_at(self, tau):
        """Cubic-Hermite interpolation of q at arbitrary times in [0, T]."""
        return _hermite_eval(self.t, self.dt, self.q, self._q_slopes, tau)

    def source_at(self, tau):
        """Cubic-Hermite interpolation of (A(q) q) at arbitrary times."""
        return _hermite_eval(self.t, self.dt, self.source_values,
                             self._src_slopes, tau)

    def node_index(self, tau, tol=1e-9):
        k = int(round(tau / self.dt))
        if 0 <= k < self.t.size and abs(self.t[k] - tau) <= tol * max(1.0, self.t_final):
            return k
        return None


def time_grid(T, dt):
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a positive integer multiple of dt")
    return np.arange(n + 1) * dt


def march_charge(model, datum, T, dt, inverter=None, forcing=None,
                 quad=DEFAULT_QUAD, step_solver=None):
    """March the charge equation to time T with step dt.

    `datum` is a DomainDatum or a bare InitialProfile; the march starts from
    its mean trace.  `forcing` may supply precomputed values of the free trace
    on the grid (shape (N+1, 2)).  Solver failures carry the failing time
    index.  The scheme is the composite trapezoid in the memory integral with
    the implicit last node folded into the per-step inversion (second order).
    """
    constants = model.constants
    rep = model.representation
    profile = getattr(datum, "profile", datum)
    t = time_grid(T, dt)
    n_nodes = t.size
    if forcing is None:
        forcing = free_trace_at_y(profile, t, constants, rep, quad)
    else:
        forcing = np.asarray(forcing, dtype=complex)
        if forcing.shape != (n_nodes, 2):
            raise ValueError("forcing shape does not match the time grid")
    if inverter is None:
        inverter = ChargeMapInverter(model)
    if step_solver is None:
        step_solver = inverter.invert

    k0 = retarded_kernel(0.0, t, constants, rep)  # (N+1, 2, 2)
    extra = None if constants.m == 0.0 else 0.5j * dt * k0[0]

    q = np.empty((n_nodes, 2), dtype=complex)
    src = np.empty((n_nodes, 2), dtype=complex)
    rhs = np.empty((n_nodes, 2), dtype=complex)
    q[0] = datum.mean_trace
    src[0] = model.source(q[0])
    rhs[0] = forcing[0]
    for n in range(1, n_nodes):
        conv = 0.5 * dt * (k0[n] @ src[0])
        if n > 1:
            conv = conv + dt * np.einsum("kij,kj->i", k0[n - 1:0:-1], src[1:n])
        try:
            q[n] = step_solver(forcing[n] - 1j * conv, q[n - 1], extra)
        except (NonConvergence, SingularJacobian) as err:
            err.time_index = n
            raise
        src[n] = model.source(q[n])
        rhs[n] = forcing[n] - 1j * (conv + 0.5 * dt * (k0[0] @ src[n]))

    half_ic = 0.5j / constants.c
    residuals = np.linalg.norm(q + half_ic * src - rhs, axis=1)
    return ChargeTrajectory(
        model=model, t=t, dt=dt, q=q, xi=constants.hbar * src,
        forcing=forcing, rhs=rhs, residuals=residuals,
    )
