"""Admissible data, field reconstruction, traces and snapshots."""

import numpy as np
import pytest

import pointdirac as pd
from pointdirac.core import ID2, SIGMA1, SIGMA3
from pointdirac.field import singular_carrier_matrices

from conftest import GENERIC_WEIGHTS, builtin_datum, make_builtin


def test_datum_zero_coupling_keeps_profile():
    model = pd.free_model()
    phi = pd.gaussian_profile(GENERIC_WEIGHTS)
    datum = pd.make_domain_datum(model, phi)
    assert np.all(datum.xi0 == 0.0)
    x = np.linspace(-3, 3, 41)
    assert np.max(np.abs(datum.profile.evaluate(x) - phi.evaluate(x))) < 1e-15


def test_datum_constant_linear_closed_form():
    a = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, -0.4]])
    model = pd.LinearModel(a).as_nonlinear()
    phi = pd.gaussian_profile(GENERIC_WEIGHTS)
    datum = pd.make_domain_datum(model, phi)
    # (1 + A s3 / 2c) xi = hbar A phi(y)
    lhs = (ID2 + a @ SIGMA3 / 2.0) @ datum.xi0
    rhs = a @ phi.mean_trace
    assert np.linalg.norm(lhs - rhs) < 1e-12


def test_datum_gn_compatibility_residual(gn_model, gn_datum):
    cst = gn_model.constants
    q = gn_datum.q0
    xi = gn_datum.xi0
    # q = phi(y) - s3 xi / (2 hbar c)
    res1 = q - (gn_datum.regular.mean_trace - SIGMA3 @ xi / (2 * cst.hbar * cst.c))
    res2 = xi - cst.hbar * gn_model.source(q)
    assert np.linalg.norm(res1) < 1e-12
    assert np.linalg.norm(res2) < 1e-12


def test_datum_boundary_condition_and_carrier_mean(gn_model, gn_datum):
    cst = gn_model.constants
    bc = 1j * cst.c * SIGMA1 @ gn_datum.profile.jump - gn_model.source(gn_datum.q0)
    assert np.linalg.norm(bc) <= 1e-10 * (1.0 + np.linalg.norm(gn_datum.q0))
    # mean of the singular part equals -s3 xi / (2 hbar c)
    cl, cr = singular_carrier_matrices(cst, gn_model.representation)
    mean_sing = 0.5 * (cl + cr) @ gn_datum.xi0
    expected = -SIGMA3 @ gn_datum.xi0 / (2 * cst.hbar * cst.c)
    assert np.linalg.norm(mean_sing - expected) < 1e-15


def test_datum_requires_continuous_regular_part():
    model = pd.free_model()
    left = lambda x: np.multiply.outer(np.ones_like(x), np.array([1.0 + 0j, 0j]))
    right = lambda x: np.multiply.outer(np.ones_like(x), np.array([0j, 1.0 + 0j]))
    phi = pd.piecewise_profile(left, right, y=0.0)
    with pytest.raises(ValueError):
        pd.make_domain_datum(model, phi)


def test_datum_massless_uses_compact_carrier():
    model = make_builtin("constant_linear", [0.8], pd.MASSLESS_UNITS)
    datum = builtin_datum(model)
    assert datum.carrier == "bump"
    cst = model.constants
    bc = 1j * cst.c * SIGMA1 @ datum.profile.jump - model.source(datum.q0)
    assert np.linalg.norm(bc) <= 1e-10
    # the carrier must not leak outside its unit width
    x = np.array([1.5, 2.0, -1.5])
    reg = datum.regular.evaluate(x)
    full = datum.profile.evaluate(x)
    assert np.max(np.abs(full - reg)) < 1e-15


def test_reconstruct_zero_coupling_is_free_flow():
    model = pd.free_model()
    datum = builtin_datum(model)
    traj = pd.march_charge(model, datum, T=0.5, dt=5e-3)
    x = np.linspace(-2.0, 2.0, 31)
    got = pd.reconstruct_field(traj, datum, x, 0.4)
    free = pd.free_field(datum.profile, x, 0.4, model.constants)
    assert np.max(np.abs(got - free)) < 1e-14


def test_reconstruct_causality_bitwise(gn_traj, gn_datum):
    cst = gn_traj.constants
    t = 0.5
    x = np.array([cst.y + cst.c * t + 0.25, cst.y - cst.c * t - 1.7])
    rec = pd.reconstruct_field(gn_traj, gn_datum, x, t)
    free = pd.free_field(gn_datum.profile, x, t, cst)
    assert np.array_equal(rec, free)


def test_reconstruct_time_zero_is_datum(gn_traj, gn_datum):
    x = np.linspace(-2.5, 2.5, 41)
    x = x[np.abs(x) > 1e-9]
    got = pd.reconstruct_field(gn_traj, gn_datum, x, 0.0)
    assert np.max(np.abs(got - gn_datum.profile.evaluate(x))) < 1e-13


def test_trace_jump_formula(gn_traj, gn_datum):
    # [Psi]_y = -(i/c) s1 (A(q) q)(t)
    cst = gn_traj.constants
    for t in (0.0, 0.2, 0.5):
        jump, mean = pd.trace_jump_mean(gn_traj, gn_datum, t)
        src = gn_traj.source_at(t)[0]
        assert np.linalg.norm(jump - (-1j / cst.c) * (SIGMA1 @ src)) < 1e-13
        k = gn_traj.node_index(t)
        assert np.linalg.norm(mean - gn_traj.q[k]) < 5e-12


def test_mean_equals_charge_everywhere(gn_traj, gn_datum):
    for t in gn_traj.t[:: len(gn_traj.t) // 7]:
        _, mean = pd.trace_jump_mean(gn_traj, gn_datum, float(t))
        k = gn_traj.node_index(float(t))
        assert np.linalg.norm(mean - gn_traj.q[k]) < 5e-12


def test_reconstruct_mean_at_interaction_point(gn_traj, gn_datum):
    t = 0.3
    val = pd.reconstruct(gn_traj, gn_datum, gn_traj.constants.y, t, side=0)
    _, mean = pd.trace_jump_mean(gn_traj, gn_datum, t)
    assert np.linalg.norm(val - mean) < 1e-14


def test_snapshot_tags_and_values(gn_traj, gn_datum):
    cst = gn_traj.constants
    t = 0.25
    grid = np.array([-1.0, -cst.c * t, -0.1, 0.0, 0.1, cst.c * t, 1.0])
    fld = pd.snapshot(gn_traj, gn_datum, grid, t)
    # y and the two cone points are doubled
    assert fld.x.size == grid.size + 3
    assert np.sum(fld.side != 0) == 6


def test_snapshot_boundary_rows(gn_traj, gn_datum):
    from pointdirac.field import boundary_values

    cst = gn_traj.constants
    t = 0.25
    grid = np.array([-0.5, 0.0, 0.5])
    fld = pd.snapshot(gn_traj, gn_datum, grid, t)
    at_y = np.where(np.abs(fld.x) < 1e-14)[0]
    assert list(fld.side[at_y]) == [-1, 1]
    psi_m, psi_p = boundary_values(gn_traj, gn_datum, t)
    assert np.linalg.norm(fld.psi[at_y[0]] - psi_m) < 1e-14
    assert np.linalg.norm(fld.psi[at_y[1]] - psi_p) < 1e-14


def test_snapshot_time_zero_massless_transport():
    cm = pd.MASSLESS_UNITS
    model = pd.free_model(cm)
    prof = pd.gaussian_profile([1.0, 0.0])
    datum = pd.make_domain_datum(model, prof)
    traj = pd.march_charge(model, datum, T=0.5, dt=0.05)
    x = np.linspace(-3, 3, 61)
    fld = pd.snapshot(traj, datum, x, 0.5)
    f = lambda u: np.exp(-(u**2))
    expected = 0.5 * np.stack(
        [f(fld.x - 0.5) + f(fld.x + 0.5), f(fld.x - 0.5) - f(fld.x + 0.5)], axis=1)
    assert np.max(np.abs(fld.psi - expected)) < 1e-12


def test_lightcone_continuity_slope(gn_traj, gn_datum):
    cst = gn_traj.constants
    t = 0.4
    eps_list = np.array([1e-2, 1e-3, 1e-4])
    mism = []
    for eps in eps_list:
        a = pd.reconstruct(gn_traj, gn_datum, cst.y + cst.c * t - eps, t)
        b = pd.reconstruct(gn_traj, gn_datum, cst.y + cst.c * t + eps, t)
        mism.append(np.linalg.norm(a - b))
    slope = np.polyfit(np.log(eps_list), np.log(mism), 1)[0]
    assert slope >= 0.9


def test_reconstruct_out_of_range_time(gn_traj, gn_datum):
    with pytest.raises(ValueError):
        pd.reconstruct(gn_traj, gn_datum, 0.3, gn_traj.t_final + 0.5)
