"""Free evolution: transport exactness, the t=0 limits, the spectral oracle."""

import numpy as np
import pytest

import pointdirac as pd
from pointdirac.core import ID2, SIGMA1

from conftest import GENERIC_WEIGHTS


def fft_free_propagator(profile, t, constants, box=40.0, n_modes=2**14):
    """Independent oracle: diagonalize the free generator mode by mode.

    The symbol of the generator at wavenumber k is hbar c k s1 + m c^2 s3,
    with eigenvalues +-E(k); the evolution is cos(E t / hbar) - i sin(.)/E
    times the symbol.  Valid for smooth data well inside the periodic box.
    """
    hbar, c, m = constants.hbar, constants.c, constants.m
    x = (np.arange(n_modes) - n_modes // 2) * (box / n_modes)
    k = 2.0 * np.pi * np.fft.fftfreq(n_modes, d=box / n_modes)
    psi0 = profile.evaluate(x).T  # (2, n)
    ph = np.fft.fft(psi0, axis=1)
    e = np.sqrt((hbar * c * k) ** 2 + (m * c**2) ** 2)
    cos_t = np.cos(e * t / hbar)
    sinc_t = np.where(e > 0, np.sin(e * t / hbar) / np.where(e > 0, e, 1.0), t / hbar)
    h12 = hbar * c * k
    h11 = m * c**2
    out = np.empty_like(ph)
    out[0] = (cos_t - 1j * sinc_t * h11) * ph[0] + (-1j * sinc_t * h12) * ph[1]
    out[1] = (-1j * sinc_t * h12) * ph[0] + (cos_t + 1j * sinc_t * h11) * ph[1]
    psi_t = np.fft.ifft(out, axis=1).T
    return x, psi_t


def test_massless_flow_is_pure_transport():
    cm = pd.MASSLESS_UNITS
    prof = pd.gaussian_profile([1.0, 0.0])
    x = np.linspace(-6.0, 6.0, 1000)
    for t in (0.3, 1.0):
        got = pd.free_field(prof, x, t, cm)
        f = lambda u: np.exp(-(u**2))
        expected = 0.5 * np.stack([f(x - t) + f(x + t), f(x - t) - f(x + t)], axis=1)
        assert np.max(np.abs(got - expected)) < 1e-12


def test_time_zero_is_identity():
    prof = pd.gaussian_profile(GENERIC_WEIGHTS, x0=0.3)
    x = np.linspace(-4.0, 4.0, 57)
    got = pd.free_field(prof, x, 0.0, pd.NATURAL_UNITS)
    assert np.max(np.abs(got - prof.evaluate(x))) < 1e-15


def test_negative_time_rejected():
    prof = pd.gaussian_profile([1.0, 0.0])
    with pytest.raises(ValueError):
        pd.free_evolve(prof, 0.0, -0.5)
    with pytest.raises(ValueError):
        pd.free_trace_at_y(prof, [0.0, -1.0])
    with pytest.raises(ValueError):
        pd.free_trace_at_y(prof, [])


def test_trace_limit_at_zero_continuous_datum():
    prof = pd.gaussian_profile(GENERIC_WEIGHTS)
    out = pd.free_trace_at_y(prof, [0.0])
    assert np.allclose(out[0], prof.evaluate(np.array([0.0]))[0], atol=1e-15)


def test_trace_limit_at_zero_with_jump():
    left = lambda x: np.multiply.outer(np.ones_like(x), np.array([1.0 + 0j, 0.5j]))
    right = lambda x: np.multiply.outer(np.ones_like(x), np.array([0.2 + 0j, -0.1 + 0j]))
    prof = pd.piecewise_profile(left, right, y=0.0, support_radius=50.0)
    out = pd.free_trace_at_y(prof, [0.0])[0]
    pp, pm = 0.5 * (ID2 + SIGMA1), 0.5 * (ID2 - SIGMA1)
    expected = pp @ prof.trace_left + pm @ prof.trace_right
    assert np.allclose(out, expected, atol=1e-15)


def test_massless_trace_transport():
    cm = pd.MASSLESS_UNITS
    prof = pd.gaussian_profile([1.0, 0.0])
    ts = np.linspace(0.0, 2.0, 9)
    out = pd.free_trace_at_y(prof, ts, cm)
    f = lambda u: np.exp(-(u**2))
    expected = 0.5 * np.stack([f(-ts) + f(ts), f(-ts) - f(ts)], axis=1)
    assert np.max(np.abs(out - expected)) < 1e-15


def test_agreement_with_fft_oracle():
    cn = pd.NATURAL_UNITS
    prof = pd.gaussian_profile([1.0, 0.0])
    for t in (0.5, 2.0):
        xg, psi_ref = fft_free_propagator(prof, t, cn)
        sel = slice(n0 := len(xg) // 2 - 1200, n0 + 2400, 40)
        got = pd.free_field(prof, xg[sel], t, cn)
        assert np.max(np.abs(got - psi_ref[sel])) < 1e-8


def test_fft_oracle_two_component_mixed_mass():
    cst = pd.PhysicalConstants(hbar=1.0, c=1.0, m=1.7)
    prof = pd.gaussian_profile([0.6, 0.3 - 0.4j], x0=0.4, width=0.8)
    t = 1.2
    xg, psi_ref = fft_free_propagator(prof, t, cst)
    sel = slice(len(xg) // 2 - 900, len(xg) // 2 + 900, 60)
    got = pd.free_field(prof, xg[sel], t, cst)
    assert np.max(np.abs(got - psi_ref[sel])) < 1e-8


def test_norm_preservation():
    cn = pd.NATURAL_UNITS
    prof = pd.bump_profile(GENERIC_WEIGHTS, width=2.0)
    t = 1.0
    L, n = 8.0, 4096  # supp + ct with margin; smooth integrand
    x = np.linspace(-L, L, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (x[1] - x[0]) / 3.0
    norm0 = float(np.dot(w, np.sum(np.abs(prof.evaluate(x)) ** 2, axis=1)))
    psi_t = pd.free_field(prof, x, t, cn)
    norm_t = float(np.dot(w, np.sum(np.abs(psi_t) ** 2, axis=1)))
    assert abs(norm_t - norm0) <= 1e-6 * norm0


def test_lightcone_jump_of_free_flow():
    # a jump at y transports: [psi_f]_{y +- ct} = 1/2 (1 +- s1) [psi0]_y
    cn = pd.NATURAL_UNITS
    gauss = np.exp
    left = lambda x: np.multiply.outer(np.exp(-(x**2)), np.array([1.0 + 0j, 0.0j]))
    right = lambda x: np.multiply.outer(np.exp(-(x**2)), np.array([0.4 + 0j, 0.3j]))
    prof = pd.piecewise_profile(left, right, y=0.0, support_radius=10.0)
    t = 0.7
    jump0 = prof.jump
    for sgn in (+1.0, -1.0):
        xc = sgn * cn.c * t
        expected = 0.5 * (ID2 + sgn * SIGMA1) @ (jump0 * np.exp(0.0))
        errs = []
        for eps in (1e-3, 1e-5):
            hi = pd.free_evolve(prof, xc + eps, t, cn)
            lo = pd.free_evolve(prof, xc - eps, t, cn)
            errs.append(np.linalg.norm((hi - lo) - expected * np.exp(-0.0)))
        # mismatch against the closed form shrinks linearly with eps
        assert errs[0] < 0.05
        assert errs[1] < 2e-3 * 1.5


def test_exact_lightcone_sides():
    # evaluation exactly on x = y + ct honors the requested one-sided limit
    left = lambda x: np.multiply.outer(np.ones_like(x), np.array([1.0 + 0j, 0.0j]))
    right = lambda x: np.multiply.outer(np.ones_like(x), np.array([0.0j, 0.0j]))
    prof = pd.piecewise_profile(left, right, y=0.0, support_radius=30.0)
    cm = pd.MASSLESS_UNITS
    t = 0.5
    inner = pd.free_field(prof, np.array([0.5]), t, cm, side=np.array([-1]))[0]
    outer = pd.free_field(prof, np.array([0.5]), t, cm, side=np.array([+1]))[0]
    # transport argument x - ct = y: left branch for the inner limit
    assert np.allclose(inner, 0.5 * (ID2 + SIGMA1) @ np.array([1.0, 0.0]))
    assert np.allclose(outer, 0.0)
