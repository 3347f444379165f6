"""Conservation monitors, admissibility checks and frame transforms.

Mass is the windowed L^2 norm of the reconstructed field with Simpson panels
split at the interaction point and at the light cone (where derivatives of
the field kink), plus a tail estimate from the datum's decay.  Energy uses
the decomposed functional

    E = <Phi, H Phi> - 2 hbar <q, (A + A s3 A / 4c) q> + hbar W(q),

with Phi = Psi - G xi the regular part; Psi itself is not H^1 across y, Phi
is, and the split grids keep every derivative stencil on one side of each
kink anyway.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ID2, is_unitary
from .charge import charge_map, _to_c2, _to_r4
from .field import reconstruct_field, singular_carrier_matrices
from .freeflow import DEFAULT_QUAD
from .models import Family, NonlinearModel, ScalarReduction
from .profiles import InitialProfile


class ModelLacksW(ValueError):
    """Energy diagnostics need the potential W; this model has none."""


class SymmetryViolation(ValueError):
    """The field A(z)z is not a gradient field; energy is not conserved."""


class NonUnitary(ValueError):
    """The supplied frame matrix is not unitary."""


def default_window(profile, constants, t_max):
    """Window half-width: propagation distance plus datum support plus tail room."""
    supp = profile.support_radius
    if not np.isfinite(supp):
        supp = 10.0
    decay = 10.0 / constants.mass_rate if constants.m > 0.0 else 10.0
    return max(20.0, constants.c * t_max + supp + decay)


# ---------------------------------------------------------------------------
# energy admissibility: A(z)z must be the (Wirtinger) gradient of a real W


def gradient_structure_deviation(model, radius=4.0, n_samples=32, seed=7321,
                                 fd_step=1e-6):
    """Max relative asymmetry of the Jacobian of the real field z -> A(z)z.

    The energy theorem needs A(q)q to derive from a real potential; on R^4
    that is exactly symmetry of this Jacobian (sampled, central differences).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        v = rng.uniform(-1.0, 1.0, 4) * radius

        def g(vv):
            return _to_r4(model.source(_to_c2(vv)))

        jac = np.empty((4, 4))
        for j in range(4):
            h = fd_step * (1.0 + abs(v[j]))
            vp, vm = v.copy(), v.copy()
            vp[j] += h
            vm[j] -= h
            jac[:, j] = (g(vp) - g(vm)) / (2.0 * h)
        scale = max(1.0, np.max(np.abs(jac)))
        worst = max(worst, np.max(np.abs(jac - jac.T)) / scale)
    return worst


def check_energy_admissible(model, tol=1e-5, **kw):
    if model.evaluate_W is None:
        raise ModelLacksW(
            f"model {model.family.value} carries no potential W; "
            "energy diagnostics are disabled"
        )
    dev = gradient_structure_deviation(model, **kw)
    if dev > tol:
        raise SymmetryViolation(
            f"A(z)z is not a gradient field (Jacobian asymmetry {dev:.3e})"
        )


# ---------------------------------------------------------------------------
# windowed quadrature grids split at y and the light cone


def _segments(lo, hi, breakpoints):
    pts = [lo] + sorted(p for p in breakpoints if lo < p < hi) + [hi]
    uniq = [pts[0]]
    for p in pts[1:]:
        if p - uniq[-1] > 1e-12 * max(1.0, abs(hi - lo)):
            uniq.append(p)
    return list(zip(uniq[:-1], uniq[1:]))


def _segment_grid(segments, breakpoints, n_total):
    """Per-segment Simpson nodes/weights; endpoints at breakpoints are tagged
    with the one-sided limit pointing into the segment."""
    total = sum(b - a for a, b in segments)
    xs, ws, sides = [], [], []
    bset = list(breakpoints)

    def is_break(p):
        return any(abs(p - b) <= 1e-12 * max(1.0, abs(p)) for b in bset)

    for a, b in segments:
        n = max(16, int(round(n_total * (b - a) / total / 2.0)) * 2)
        h = (b - a) / n
        x = np.linspace(a, b, n + 1)  # endpoints land exactly on breakpoints
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
        side = np.zeros(n + 1, dtype=int)
        if is_break(a):
            side[0] = +1
        if is_break(b):
            side[-1] = -1
        xs.append(x)
        ws.append(w)
        sides.append(side)
    return xs, ws, sides


def tail_mass(profile, radius, reach=80.0, n=4096):
    """L^2 mass of the datum outside |x - y| > radius (quadrature estimate)."""
    if radius >= profile.support_radius:
        return 0.0
    reach = max(reach, profile.support_radius - radius)
    h = reach / n
    out = 0.0
    for sgn, branch in ((-1, profile.left), (+1, profile.right)):
        x = profile.y + sgn * (radius + h * np.arange(n + 1))
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        vals = np.sum(np.abs(branch(x)) ** 2, axis=1)
        out += float(np.dot(w, vals)) * h / 3.0
    return out


def _field_on_window(traj, datum, t, window, n_points, quad):
    """Segment grids split at y and the light cone, with field samples."""
    constants = traj.constants
    y, ct = constants.y, constants.c * t
    L = window if window is not None else default_window(
        datum.profile, constants, traj.t_final)
    breakpoints = [y] + ([y - ct, y + ct] if t > 0.0 else [])
    segs = _segments(y - L, y + L, breakpoints)
    xs, ws, sides = _segment_grid(segs, breakpoints, n_points)
    psis = [reconstruct_field(traj, datum, x, t, side=side, quad=quad)
            for x, side in zip(xs, sides)]
    return L, xs, ws, psis


def _mass_from_samples(ws, psis):
    return sum(float(np.dot(w, np.sum(np.abs(p) ** 2, axis=1)))
               for w, p in zip(ws, psis))


def mass(traj, datum, t, window=None, n_points=16385, quad=DEFAULT_QUAD):
    """Windowed squared L^2 norm of the field at time t, tail bound added."""
    L, _, ws, psis = _field_on_window(traj, datum, t, window, n_points, quad)
    return _mass_from_samples(ws, psis) \
        + tail_mass(datum.profile, L - traj.constants.c * t)


def _fd4(values, h):
    """Fourth-order first derivative on a uniform grid (one-sided at edges)."""
    v = values
    n = v.shape[0]
    if n < 5:
        raise ValueError("need at least 5 nodes for the 4th-order stencil")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h)
    d[-1] = (25.0 * v[-1] - 48.0 * v[-2] + 36.0 * v[-3] - 16.0 * v[-4] + 3.0 * v[-5]) / (12.0 * h)
    d[-2] = (3.0 * v[-1] + 10.0 * v[-2] - 18.0 * v[-3] + 6.0 * v[-4] - v[-5]) / (12.0 * h)
    return d


def _energy_from_samples(traj, t, xs, ws, psis):
    model = traj.model
    constants = traj.constants
    rep = model.representation
    hbar, c = constants.hbar, constants.c
    y = constants.y

    q_t = traj.charge_at(t)[0]
    xi_t = hbar * traj.source_at(t)[0]
    cl, cr = singular_carrier_matrices(constants, rep)
    rate = constants.mass_rate

    field_part = 0.0
    for x, w, psi in zip(xs, ws, psis):
        mat = cl if x[-1] <= y + 1e-12 * max(1.0, abs(y)) else cr
        gxi = np.multiply.outer(np.exp(-rate * np.abs(x - y)), mat @ xi_t)
        phi = psi - gxi
        dphi = _fd4(phi, x[1] - x[0])
        hphi = -1j * hbar * c * (dphi @ rep.s1.T) \
            + constants.m * c**2 * (phi @ rep.s3.T)
        field_part += float(np.real(np.dot(w, np.sum(np.conj(phi) * hphi, axis=1))))

    a_q = model.evaluate_A(q_t)
    quad_term = np.vdot(q_t, a_q @ q_t) + np.vdot(q_t, a_q @ rep.s3 @ a_q @ q_t) / (4.0 * c)
    return field_part - 2.0 * hbar * float(np.real(quad_term)) \
        + hbar * float(model.evaluate_W(q_t))


def energy(traj, datum, t, window=None, n_points=16385, quad=DEFAULT_QUAD,
           admissibility_tol=1e-5):
    """Energy functional at time t (decomposed form; needs W and m > 0)."""
    if traj.constants.m <= 0.0:
        raise ValueError("the energy decomposition requires m > 0")
    check_energy_admissible(traj.model, tol=admissibility_tol)
    _, xs, ws, psis = _field_on_window(traj, datum, t, window, n_points, quad)
    return _energy_from_samples(traj, t, xs, ws, psis)


@dataclass(frozen=True)
class ConservationReport:
    times: np.ndarray
    mass: np.ndarray
    energy: Optional[np.ndarray]
    mass_drift: float
    energy_drift: Optional[float]
    tail_bound: float


def _relative_drift(values):
    ref = abs(values[0])
    return float(np.max(np.abs(values - values[0])) / max(ref, 1e-300))


def conservation_series(traj, datum, times=None, include_energy=None,
                        window=None, n_points=16385, quad=DEFAULT_QUAD):
    """Mass (and energy, when available) sampled along the trajectory."""
    constants = traj.constants
    if times is None:
        k = np.unique(np.round(np.linspace(0, traj.t.size - 1, 11)).astype(int))
        times = traj.t[k]
    times = np.asarray(times, dtype=float)
    if include_energy is None:
        include_energy = (traj.model.evaluate_W is not None
                          and constants.m > 0.0)
        if include_energy:
            try:
                check_energy_admissible(traj.model)
            except (ModelLacksW, SymmetryViolation):
                include_energy = False
    elif include_energy:
        if constants.m <= 0.0:
            raise ValueError("the energy decomposition requires m > 0")
        check_energy_admissible(traj.model)
    masses = np.empty(times.size)
    energies = np.empty(times.size) if include_energy else None
    for i, t in enumerate(times):
        L, xs, ws, psis = _field_on_window(traj, datum, t, window, n_points, quad)
        masses[i] = _mass_from_samples(ws, psis) \
            + tail_mass(datum.profile, L - constants.c * t)
        if include_energy:
            energies[i] = _energy_from_samples(traj, t, xs, ws, psis)
    L = window if window is not None else default_window(
        datum.profile, constants, traj.t_final)
    return ConservationReport(
        times=times,
        mass=masses,
        energy=energies,
        mass_drift=_relative_drift(masses),
        energy_drift=None if energies is None else _relative_drift(energies),
        tail_bound=tail_mass(datum.profile, L - constants.c * traj.t_final),
    )


# ---------------------------------------------------------------------------
# global invertibility of the charge map


@dataclass(frozen=True)
class InvertibilityReport:
    verdict: str  # "pass" | "fail" | "inconclusive"
    method: str  # "scalar" | "monte-carlo"
    note: Optional[str] = None
    witness: Optional[dict] = None
    min_criterion: Optional[float] = None  # min of h3 (scalar) or min |det|
    growth_ok: Optional[bool] = None

    @property
    def passed(self):
        return self.verdict == "pass"


def _scalar_invertibility(model, radius, grid_points):
    sr = model.scalar_reduction
    c2 = 4.0 * model.constants.c**2
    xt = radius * radius
    xs = np.concatenate([[0.0], np.geomspace(1e-8, xt, grid_points)])
    if sr.phi_signed:
        xs = np.concatenate([-xs[::-1], xs])

    if sr.ax_derivative is not None:
        dax = np.asarray(sr.ax_derivative(xs), dtype=float)
    else:
        h = 1e-6 * (1.0 + np.abs(xs))
        dax = (np.asarray(sr.a_of_x(xs + h)) * (xs + h)
               - np.asarray(sr.a_of_x(xs - h)) * (xs - h)) / (2.0 * h)
    g = 1.0 + dax / c2

    witness = None
    verdict = "pass"
    if np.any(np.abs(g) <= 1e-12):
        i = int(np.argmin(np.abs(g)))
        witness = {"x": float(xs[i]), "h3_value": float(g[i])}
        verdict = "fail"
    elif np.any(g > 0.0) and np.any(g < 0.0):
        i = int(np.argmin(g))
        witness = {"x": float(xs[i]), "h3_value": float(g[i])}
        verdict = "fail"

    tail_lo = abs(float(sr.scalar_map(xt / 16.0)))
    tail_hi = abs(float(sr.scalar_map(xt)))
    growth_ok = tail_hi >= max(tail_lo, 1e-3 * xt)
    if verdict == "pass" and not growth_ok:
        verdict = "inconclusive"
    return InvertibilityReport(
        verdict=verdict, method="scalar", note=sr.note, witness=witness,
        min_criterion=float(np.min(g)), growth_ok=growth_ok,
    )


def _mc_invertibility(model, radius, n_samples, seed):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n_samples, 4))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= radius * rng.uniform(0.0, 1.0, (n_samples, 1)) ** 0.25

    def det_at(v):
        jac = np.empty((4, 4))
        for j in range(4):
            h = 1e-6 * (1.0 + abs(v[j]))
            vp, vm = v.copy(), v.copy()
            vp[j] += h
            vm[j] -= h
            jac[:, j] = (_to_r4(charge_map(model, _to_c2(vp)))
                         - _to_r4(charge_map(model, _to_c2(vm)))) / (2.0 * h)
        return float(np.linalg.det(jac))

    dets = np.array([det_at(v) for v in pts])
    i_min = int(np.argmin(np.abs(dets)))
    min_abs = float(np.abs(dets[i_min]))
    loc = _to_c2(pts[i_min])
    if np.any(dets > 0.0) and np.any(dets < 0.0):
        i_neg = int(np.argmin(dets))
        return InvertibilityReport(
            verdict="fail", method="monte-carlo",
            witness={"z": [complex(loc[0]), complex(loc[1])],
                     "det": dets[i_min],
                     "det_opposite_sign": float(dets[i_neg])},
            min_criterion=min_abs,
        )
    if min_abs < 1e-6 * max(1.0, float(np.median(np.abs(dets)))):
        return InvertibilityReport(
            verdict="inconclusive", method="monte-carlo",
            witness={"z": [complex(loc[0]), complex(loc[1])], "det": dets[i_min]},
            min_criterion=min_abs,
        )
    return InvertibilityReport(verdict="pass", method="monte-carlo",
                               min_criterion=min_abs)


def check_invertibility(model, radius=10.0, n_samples=2000, seed=20240601,
                        grid_points=400):
    """Verify global invertibility of z + (i/2c) A(z) z.

    Models with scalar-reduction data are checked through the one-dimensional
    criteria (nonvanishing of 1 + (a(x) x)'/(4 c^2), growth of the scalar map);
    anything else falls back to Monte-Carlo sampling of the R^4 Jacobian
    determinant.  The verdict may be "inconclusive" for sampled checks.
    """
    if model.scalar_reduction is not None:
        return _scalar_invertibility(model, radius, grid_points)
    return _mc_invertibility(model, radius, n_samples, seed)


# ---------------------------------------------------------------------------
# unitary changes of the Dirac-matrix frame


def transform_profile(profile, u):
    """Apply the frame change psi -> u* psi pointwise to a profile."""
    u = np.asarray(u, dtype=complex)
    uc = u.conj()  # rows transform with u^dagger: psi_rows @ conj(u)
    left, right = profile.left, profile.right
    return InitialProfile(
        y=profile.y,
        left=lambda x: left(x) @ uc,
        right=lambda x: right(x) @ uc,
        trace_left=u.conj().T @ profile.trace_left,
        trace_right=u.conj().T @ profile.trace_right,
        support_radius=profile.support_radius,
    )


def transform_representation(model, u):
    """Conjugate a model into the frame psi -> u* psi.

    The coupling becomes A~(z) = u* A(u z) u, the potential W~(z) = W(u z),
    and the conjugated Dirac matrices travel with the model so marching and
    reconstruction run natively in the new frame.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise NonUnitary("the frame matrix must be 2x2 unitary (tol 1e-12)")
    base_a = model.evaluate_A
    base_w = model.evaluate_W
    new_a = lambda z: u.conj().T @ base_a(u @ z) @ u
    new_w = None if base_w is None else (lambda z: base_w(u @ z))
    sr = model.scalar_reduction
    new_sr = None
    if sr is not None:
        base_coupling = sr.coupling
        new_sr = ScalarReduction(
            m_form=u.conj().T @ sr.m_form @ u,
            coupling=lambda x: u.conj().T @ base_coupling(x) @ u,
            a_of_x=sr.a_of_x,
            scalar_map=sr.scalar_map,
            scalar_map_inverse=sr.scalar_map_inverse,
            ax_derivative=sr.ax_derivative,
            phi_signed=sr.phi_signed,
            note=sr.note,
        )
    return NonlinearModel(
        evaluate_A=new_a,
        constants=model.constants,
        evaluate_W=new_w,
        family=model.family,
        params=model.params,
        scalar_reduction=new_sr,
        representation=model.representation.conjugated(u),
    )
