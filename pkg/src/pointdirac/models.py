"""State-dependent coupling matrices z -> A(z) and the built-in model zoo.

A model is the Hermitian matrix field entering the point coupling
i c s1 [Psi]_y = A(q) q, together with (when available) a real potential W
whose Wirtinger gradient reproduces A(z)z, and the scalar-reduction data that
collapses the inversion of z + (i/2c) A(z) z to a one-dimensional equation.

Built-in families are all of the aligned form A(z) = alpha(phi(z)) * M with
phi(z) = <z, M z> and alpha a power law; then A M A = alpha^2 M, so
a = alpha^2 and W integrates in closed form.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .core import (
    ID2,
    NATURAL_UNITS,
    SIGMA1,
    SIGMA2,
    SIGMA3,
    STANDARD_REP,
    PhysicalConstants,
    Representation,
    as_spinor,
    is_hermitian,
)

M_PLUS = 0.5 * (ID2 + SIGMA3)
M_MINUS = 0.5 * (ID2 - SIGMA3)
M_PLUS.setflags(write=False)
M_MINUS.setflags(write=False)

_VALIDATION_SEED = 1876453
_VALIDATION_POINTS = 1000
_VALIDATION_RADIUS = 10.0


class Family(str, enum.Enum):
    CONSTANT_LINEAR = "constant_linear"
    GESZTESY_SEBA_PLUS = "gesztesy_seba_plus"
    GESZTESY_SEBA_MINUS = "gesztesy_seba_minus"
    IDENTITY_FORM = "identity_form"
    SIGMA1_FORM = "sigma1_form"
    SIGMA2_FORM = "sigma2_form"
    SOLER_FORM = "soler_form"
    BRAGG_RESONANCE = "bragg_resonance"
    GROSS_NEVEU = "gross_neveu"
    CUSTOM = "custom"


def quadratic_form(m, z):
    """<z, M z>, real for Hermitian M."""
    z = np.asarray(z, dtype=complex)
    return float(np.real(np.vdot(z, m @ z)))


@dataclass(frozen=True)
class ScalarReduction:
    """Data of the reduction A(z) = A0(phi(z)) with A0(x) M A0(x) = a(x) M.

    scalar_map is f_a(x) = (1 + a(x)/(4 c^2)) x; inverting the charge map then
    amounts to solving f_a(x) = phi(w) followed by one 2x2 linear solve.
    """

    m_form: np.ndarray
    coupling: Callable[[float], np.ndarray]  # x -> A0(x)
    a_of_x: Callable[[float], float]
    scalar_map: Callable[[float], float]
    scalar_map_inverse: Optional[Callable[[float], float]] = None
    ax_derivative: Optional[Callable[[float], float]] = None  # d/dx (a(x) x)
    phi_signed: bool = False  # can phi(z) be negative on C^2?
    note: Optional[str] = None

    def phi(self, z):
        return quadratic_form(self.m_form, z)

    def invert_scalar_map(self, v):
        """Solve f_a(x) = v for x (safeguarded; unique under the h3 condition)."""
        if self.scalar_map_inverse is not None:
            return float(self.scalar_map_inverse(v))
        if v == 0.0:
            return 0.0
        g = lambda x: self.scalar_map(x) - v
        lo, hi = (0.0, v) if v > 0.0 else (v, 0.0)
        glo, ghi = g(lo), g(hi)
        k = 0
        while glo * ghi > 0.0:
            lo, hi = (lo, 2.0 * hi) if v > 0.0 else (2.0 * lo, hi)
            glo, ghi = g(lo), g(hi)
            k += 1
            if k > 200:
                raise ArithmeticError("could not bracket the scalar map inverse")
        return float(brentq(g, lo, hi, xtol=5e-324, rtol=1e-15, maxiter=200))


@dataclass(frozen=True)
class NonlinearModel:
    """The matrix field z -> A(z) plus optional potential and reduction data.

    Hermiticity of A is validated at construction on a fixed seeded sample of
    1000 points with |z| <= 10.  Instances are immutable.
    """

    evaluate_A: Callable[[np.ndarray], np.ndarray]
    constants: PhysicalConstants = NATURAL_UNITS
    evaluate_W: Optional[Callable[[np.ndarray], float]] = None
    family: Family = Family.CUSTOM
    params: tuple = ()
    scalar_reduction: Optional[ScalarReduction] = None
    representation: Representation = STANDARD_REP
    validate: bool = True

    def __post_init__(self):
        if self.validate:
            rng = np.random.default_rng(_VALIDATION_SEED)
            pts = rng.standard_normal((_VALIDATION_POINTS, 4))
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
            pts *= _VALIDATION_RADIUS * rng.uniform(0.0, 1.0, (_VALIDATION_POINTS, 1)) ** 0.25
            for p in pts:
                z = np.array([p[0] + 1j * p[1], p[2] + 1j * p[3]])
                if not is_hermitian(self.evaluate_A(z)):
                    raise ValueError(
                        f"A(z) is not Hermitian at z={z} (family {self.family.value})"
                    )

    @property
    def is_constant(self):
        return self.family is Family.CONSTANT_LINEAR

    def coupling_at(self, z):
        return self.evaluate_A(as_spinor(z))

    def source(self, z):
        """A(z) z, the point source fed back into the field."""
        z = as_spinor(z)
        return self.evaluate_A(z) @ z


def apply_model(model, z):
    """Evaluate A(z) z."""
    return model.source(z)


def _power_family(family, m_form, kappa, exponent, constants, rep):
    """A(z) = kappa*phi^exponent * M on phi = <z,Mz>; W = kappa*phi^(e+1)/(e+1)."""
    m_form = np.asarray(m_form, dtype=complex)
    phi_signed = bool(np.min(np.linalg.eigvalsh(m_form)) < -1e-14)
    e = float(exponent)
    if phi_signed and e != int(e):
        raise ValueError(
            f"{family.value}: exponent must be a nonnegative integer because "
            "phi(z) takes both signs"
        )
    if e < 0:
        raise ValueError(f"{family.value}: exponent must be nonnegative")
    kappa = float(kappa)
    c2 = 4.0 * constants.c**2

    def alpha(x):
        return kappa * np.power(x, e)

    def a_of_x(x):
        return kappa**2 * np.power(x, 2.0 * e)

    def evaluate_A(z, _m=m_form):
        return alpha(quadratic_form(_m, z)) * _m

    def evaluate_W(z, _m=m_form):
        return kappa * np.power(quadratic_form(_m, z), e + 1.0) / (e + 1.0)

    sr = ScalarReduction(
        m_form=m_form,
        coupling=lambda x: alpha(x) * m_form,
        a_of_x=a_of_x,
        scalar_map=lambda x: x * (1.0 + a_of_x(x) / c2),
        ax_derivative=lambda x: kappa**2 * (2.0 * e + 1.0) * np.power(x, 2.0 * e),
        phi_signed=phi_signed,
        note=(
            "coupling alpha(x) = kappa*x^(2*sigma) is not C^1 at x=0 for "
            "sigma in (0, 1/2); a(x)*x stays C^1 so global invertibility holds"
            if family in (Family.GESZTESY_SEBA_PLUS, Family.GESZTESY_SEBA_MINUS)
            and 0.0 < e < 1.0
            else None
        ),
    )
    u = rep.u
    if not rep.is_standard:
        # carry the whole structure into the requested frame
        base_A, base_W, base_sr = evaluate_A, evaluate_W, sr
        evaluate_A = lambda z: u.conj().T @ base_A(u @ z) @ u
        evaluate_W = lambda z: base_W(u @ z)
        sr = ScalarReduction(
            m_form=u.conj().T @ m_form @ u,
            coupling=lambda x: u.conj().T @ base_sr.coupling(x) @ u,
            a_of_x=base_sr.a_of_x,
            scalar_map=base_sr.scalar_map,
            ax_derivative=base_sr.ax_derivative,
            phi_signed=base_sr.phi_signed,
            note=base_sr.note,
        )
    return evaluate_A, evaluate_W, sr


def _constant_model(params, constants, rep):
    params = [float(p) for p in params]
    if len(params) == 1:
        a_mat = params[0] * ID2
    elif len(params) == 2:
        a_mat = np.diag([params[0], params[1]]).astype(complex)
    elif len(params) == 4:
        g = params[2] + 1j * params[3]
        a_mat = np.array([[params[0], g], [np.conj(g), params[1]]])
    else:
        raise ValueError(
            "constant_linear takes [alpha], [alpha1, alpha2] or "
            "[alpha1, alpha2, re_gamma, im_gamma]"
        )
    if not rep.is_standard:
        a_mat = rep.u.conj().T @ a_mat @ rep.u
    a_mat.setflags(write=False)
    sr = None
    if len(params) == 1:
        al = params[0]
        c2 = 4.0 * constants.c**2
        sr = ScalarReduction(
            m_form=ID2,
            coupling=lambda x: a_mat,
            a_of_x=lambda x: al**2 + 0.0 * x,
            scalar_map=lambda x: (1.0 + al**2 / c2) * x,
            scalar_map_inverse=lambda v: v / (1.0 + al**2 / c2),
            ax_derivative=lambda x: al**2 + 0.0 * x,
        )
    return (
        lambda z: a_mat,
        lambda z: float(np.real(np.vdot(z, a_mat @ z))),
        sr,
    )


_FAMILY_PARAM_COUNTS = {
    Family.CONSTANT_LINEAR: (1, 2, 4),
    Family.GESZTESY_SEBA_PLUS: (2,),
    Family.GESZTESY_SEBA_MINUS: (2,),
    Family.IDENTITY_FORM: (2,),
    Family.SIGMA1_FORM: (2,),
    Family.SIGMA2_FORM: (2,),
    Family.SOLER_FORM: (2,),
    Family.BRAGG_RESONANCE: (1,),
    Family.GROSS_NEVEU: (0,),
}


def builtin_model(family, params=(), constants=NATURAL_UNITS, rep=STANDARD_REP):
    """Construct a built-in model.

    Power-law parameters: Gesztesy-Seba families take [kappa, sigma] meaning
    alpha(x) = kappa * x^(2 sigma); identity/sigma1/sigma2/soler take
    [kappa, p] with integer p >= 0 meaning alpha(x) = kappa * x^p; Bragg takes
    [beta] (A = 3 beta |z|^2); Gross-Neveu takes no parameters
    (A = 4 (|z1|^2 - |z2|^2) sigma3).
    """
    if not isinstance(family, Family):
        try:
            family = Family(str(family).strip().lower())
        except ValueError:
            raise ValueError(f"unknown model family {family!r}") from None
    if family is Family.CUSTOM:
        raise ValueError("custom models are built directly via NonlinearModel")
    counts = _FAMILY_PARAM_COUNTS[family]
    if len(params) not in counts:
        raise ValueError(
            f"{family.value} expects {' or '.join(map(str, counts))} parameter(s), "
            f"got {len(params)}"
        )
    if family is Family.CONSTANT_LINEAR:
        a_fn, w_fn, sr = _constant_model(params, constants, rep)
    elif family is Family.GESZTESY_SEBA_PLUS:
        a_fn, w_fn, sr = _power_family(
            family, M_PLUS, params[0], 2.0 * params[1], constants, rep
        )
    elif family is Family.GESZTESY_SEBA_MINUS:
        a_fn, w_fn, sr = _power_family(
            family, M_MINUS, params[0], 2.0 * params[1], constants, rep
        )
    elif family is Family.IDENTITY_FORM:
        a_fn, w_fn, sr = _power_family(family, ID2, params[0], params[1], constants, rep)
    elif family is Family.SIGMA1_FORM:
        a_fn, w_fn, sr = _power_family(family, SIGMA1, params[0], params[1], constants, rep)
    elif family is Family.SIGMA2_FORM:
        a_fn, w_fn, sr = _power_family(family, SIGMA2, params[0], params[1], constants, rep)
    elif family is Family.SOLER_FORM:
        a_fn, w_fn, sr = _power_family(family, SIGMA3, params[0], params[1], constants, rep)
    elif family is Family.BRAGG_RESONANCE:
        a_fn, w_fn, sr = _power_family(family, ID2, 3.0 * params[0], 1.0, constants, rep)
    elif family is Family.GROSS_NEVEU:
        a_fn, w_fn, sr = _power_family(family, SIGMA3, 4.0, 1.0, constants, rep)
    return NonlinearModel(
        evaluate_A=a_fn,
        constants=constants,
        evaluate_W=w_fn,
        family=family,
        params=tuple(float(p) for p in params),
        scalar_reduction=sr,
        representation=rep,
    )


def free_model(constants=NATURAL_UNITS, rep=STANDARD_REP):
    """The A = 0 model (free Dirac dynamics)."""
    return builtin_model(Family.CONSTANT_LINEAR, [0.0], constants, rep)
