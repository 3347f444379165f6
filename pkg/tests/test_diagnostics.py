"""Conservation monitors, admissibility checks, and frame transforms."""

import numpy as np
import pytest

import pointdirac as pd
from pointdirac.diagnostics import (
    check_energy_admissible,
    gradient_structure_deviation,
    tail_mass,
)

from conftest import (
    BUILTIN_FIXTURES,
    GENERIC_WEIGHTS,
    builtin_datum,
    make_builtin,
    spinor_samples,
    violator_model,
)

PAPER_U = np.array([[1.0, -1.0], [1.0, 1.0]]) / np.sqrt(2.0)


def datum_norm_sq(profile, L=30.0, n=2 ** 14):
    """Direct Simpson norm of the datum, split at the jump point."""
    total = 0.0
    for a, b, branch in ((-L, 0.0, profile.left), (0.0, L, profile.right)):
        x = np.linspace(a, b, n + 1)
        w = np.ones(n + 1)
        w[1:-1:2], w[2:-1:2] = 4.0, 2.0
        w *= (x[1] - x[0]) / 3.0
        total += float(np.dot(w, np.sum(np.abs(branch(x)) ** 2, axis=1)))
    return total


def test_mass_at_time_zero_matches_datum_norm(gn_traj, gn_datum):
    m0 = pd.mass(gn_traj, gn_datum, 0.0)
    ref = datum_norm_sq(gn_datum.profile)
    assert abs(m0 - ref) <= 1e-8 * ref


def test_free_flow_mass_constant():
    model = pd.free_model()
    datum = builtin_datum(model)
    traj = pd.march_charge(model, datum, T=0.5, dt=5e-3)
    m0 = pd.mass(traj, datum, 0.0)
    m1 = pd.mass(traj, datum, 0.5)
    assert abs(m1 - m0) <= 1e-6 * m0


def test_mass_drift_small_on_gn(gn_traj, gn_datum):
    cons = pd.conservation_series(gn_traj, gn_datum,
                                  times=[0.0, 0.25, 0.5])
    assert cons.mass_drift <= 1e-6
    assert cons.energy is not None
    assert cons.energy_drift <= 1e-5
    assert cons.tail_bound < 1e-12


def test_energy_time_zero_grid_refinement(gn_traj, gn_datum):
    e_a = pd.energy(gn_traj, gn_datum, 0.0, n_points=8193)
    e_b = pd.energy(gn_traj, gn_datum, 0.0, n_points=16385)
    assert abs(e_a - e_b) <= 1e-6 * abs(e_b)


def test_energy_requires_potential(gn_traj, gn_datum):
    bare = pd.NonlinearModel(
        evaluate_A=lambda z: 4.0 * (abs(z[0]) ** 2 - abs(z[1]) ** 2) * pd.SIGMA3,
    )
    traj = pd.march_charge(bare, gn_datum, T=0.05, dt=0.01,
                           forcing=gn_traj.forcing[:6])
    with pytest.raises(pd.ModelLacksW):
        pd.energy(traj, gn_datum, 0.05)


def test_energy_rejects_non_gradient_coupling():
    # Hermitian but not derived from a potential: A(z) = Re(z1) * sigma1
    model = pd.NonlinearModel(
        evaluate_A=lambda z: float(np.real(z[0])) * pd.SIGMA1,
        evaluate_W=lambda z: 0.0,
    )
    assert gradient_structure_deviation(model) > 1e-3
    with pytest.raises(pd.SymmetryViolation):
        check_energy_admissible(model)


@pytest.mark.parametrize("family,params", BUILTIN_FIXTURES)
def test_builtin_couplings_are_gradient_fields(family, params):
    model = make_builtin(family, params)
    assert gradient_structure_deviation(model) <= 1e-5


def test_tail_mass_decays():
    prof = pd.gaussian_profile([1.0, 0.0])
    assert tail_mass(prof, 1.0) > tail_mass(prof, 3.0) > 0.0
    assert tail_mass(prof, 8.0) == 0.0  # beyond the support radius


# ---------------------------------------------------------------------------
# invertibility checking


@pytest.mark.parametrize("family,params", BUILTIN_FIXTURES)
def test_builtin_models_pass_invertibility(family, params):
    report = pd.check_invertibility(make_builtin(family, params))
    assert report.verdict == "pass"


def test_gs_small_sigma_passes_with_note():
    model = make_builtin("gesztesy_seba_plus", [1.0, 0.2])
    report = pd.check_invertibility(model)
    assert report.verdict == "pass"
    assert report.note is not None and "C^1" in report.note


def test_zero_coupling_passes():
    report = pd.check_invertibility(pd.free_model())
    assert report.verdict == "pass"
    assert report.min_criterion == 1.0


def test_constant_custom_coupling_passes_monte_carlo():
    # A = -2c * 1 gives F(z) = (1 - i) z: the Jacobian determinant is 4
    model = pd.NonlinearModel(evaluate_A=lambda z: -2.0 * pd.ID2)
    report = pd.check_invertibility(model, n_samples=200)
    assert report.method == "monte-carlo"
    assert report.verdict == "pass"


def test_violator_fails_scalar_path_with_witness():
    report = pd.check_invertibility(violator_model(with_reduction=True))
    assert report.verdict == "fail"
    assert report.witness is not None
    x = report.witness["x"]
    assert report.witness["h3_value"] < 0.0
    # the slope of a(x) x dips below -4 c^2 around x = 2/3
    assert 0.05 < x < 5.0


def test_violator_detected_by_monte_carlo():
    report = pd.check_invertibility(violator_model(with_reduction=False),
                                    radius=3.0, n_samples=500)
    assert report.verdict != "pass"
    assert report.witness is not None


# ---------------------------------------------------------------------------
# frame transforms


def test_transform_requires_unitary(gn_model):
    with pytest.raises(pd.NonUnitary):
        pd.transform_representation(gn_model, np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_transform_identity_is_identity(gn_model):
    same = pd.transform_representation(gn_model, np.eye(2))
    for z in spinor_samples(20, radius=3.0, seed=20):
        assert np.allclose(same.evaluate_A(z), gn_model.evaluate_A(z), atol=1e-14)
        assert abs(same.evaluate_W(z) - gn_model.evaluate_W(z)) < 1e-12


def test_transform_conjugates_charge_map(gn_model):
    # F~(z) = u* F(u z)
    u = PAPER_U
    tilde = pd.transform_representation(gn_model, u)
    for z in spinor_samples(40, radius=3.0, seed=21):
        lhs = pd.charge_map(tilde, z)
        rhs = u.conj().T @ pd.charge_map(gn_model, u @ z)
        assert np.linalg.norm(lhs - rhs) < 1e-12 * (1 + np.linalg.norm(rhs))


def test_transform_dirac_matrices_recorded(gn_model):
    tilde = pd.transform_representation(gn_model, PAPER_U)
    rep = tilde.representation
    assert np.allclose(rep.s1, PAPER_U.conj().T @ pd.SIGMA1 @ PAPER_U)
    assert np.allclose(rep.s3, PAPER_U.conj().T @ pd.SIGMA3 @ PAPER_U)
    # this frame turns the transport matrix into sigma3 and the mass into -sigma1
    assert np.allclose(rep.s1, pd.SIGMA3, atol=1e-15)
    assert np.allclose(rep.s3, -pd.SIGMA1, atol=1e-15)


def test_transformed_soler_potential_closed_form():
    # conjugating the quartic sigma3 coupling turns the potential into
    # 2 (conj(z1) z2 + z1 conj(z2))^2
    gn = make_builtin("gross_neveu", [])
    tilde = pd.transform_representation(gn, PAPER_U)
    for z in spinor_samples(60, radius=3.0, seed=22):
        expected = 2.0 * (np.conj(z[0]) * z[1] + z[0] * np.conj(z[1])).real ** 2
        assert abs(tilde.evaluate_W(z) - expected) <= 1e-10 * (1.0 + expected)


def test_transformed_potential_still_generates_source():
    # the defining relation of the potential survives conjugation
    bragg = make_builtin("bragg_resonance", [0.7])
    tilde = pd.transform_representation(bragg, PAPER_U)
    h = 1e-5
    for z in spinor_samples(15, radius=2.0, seed=23):
        grad = np.zeros(2, dtype=complex)
        for k in range(2):
            for scale in (1.0, 1.0j):
                dz = np.zeros(2, complex)
                dz[k] = h * scale
                diff = (tilde.evaluate_W(z + dz) - tilde.evaluate_W(z - dz)) / (2 * h)
                grad[k] += 0.5 * scale * diff
        src = tilde.source(z)
        assert np.linalg.norm(grad - src) <= 1e-6 * (1.0 + np.linalg.norm(src))


def test_covariance_of_charge_trajectories():
    # marching in the conjugated frame with the conjugated datum gives
    # q~(t) = u* q(t); the two runs share no floating-point path
    gn = make_builtin("gross_neveu", [])
    phi = pd.gaussian_profile([1.0, 0.0])
    datum = pd.make_domain_datum(gn, phi)
    T, dt = 0.2, 2e-3
    traj = pd.march_charge(gn, datum, T, dt)

    u = PAPER_U
    gn_t = pd.transform_representation(gn, u)
    phi_t = pd.transform_profile(phi, u)
    datum_t = pd.make_domain_datum(gn_t, phi_t)
    traj_t = pd.march_charge(gn_t, datum_t, T, dt)

    expected = traj.q @ np.conj(u)
    dev = np.max(np.linalg.norm(traj_t.q - expected, axis=1))
    assert dev <= 1e-9


def test_transformed_gn_is_sigma1_family():
    # u* (4 phi_sigma3(u z) sigma3) u = 4 phi_sigma1(z) sigma1 for the
    # rotation mapping sigma3 -> -sigma1
    gn = make_builtin("gross_neveu", [])
    tilde = pd.transform_representation(gn, PAPER_U)
    s1_model = make_builtin("sigma1_form", [4.0, 1])
    for z in spinor_samples(40, radius=3.0, seed=24):
        assert np.allclose(tilde.evaluate_A(z), s1_model.evaluate_A(z), atol=1e-11)
