"""Constant-coupling (linear) point interaction as an independent solve path.

For a z-independent Hermitian A the implicit map of the charge march is
affine with the constant matrix 1 + [(i/2c) 1 + extra] A, always invertible
(the eigenvalues of 1 + (i/2c)A are 1 + i lambda/(2c) with lambda real), so
every step is a single prefactored 2x2 solve.  This path cross-checks the
general Newton machinery on a case covered by a closed theorem.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import ID2, NATURAL_UNITS, STANDARD_REP, PhysicalConstants, Representation, is_hermitian
from .charge import march_charge
from .freeflow import DEFAULT_QUAD
from .models import Family, NonlinearModel


@dataclass(frozen=True)
class LinearModel:
    """A constant Hermitian coupling matrix."""

    a_matrix: np.ndarray
    constants: PhysicalConstants = NATURAL_UNITS
    representation: Representation = STANDARD_REP

    def __post_init__(self):
        a = np.asarray(self.a_matrix, dtype=complex)
        if a.shape != (2, 2) or not is_hermitian(a):
            raise ValueError("the coupling matrix must be 2x2 Hermitian")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)

    def as_nonlinear(self):
        a = self.a_matrix

        def w_fn(z):
            return float(np.real(np.vdot(z, a @ z)))

        return NonlinearModel(
            evaluate_A=lambda z: a,
            constants=self.constants,
            evaluate_W=w_fn,
            family=Family.CONSTANT_LINEAR,
            params=(a[0, 0].real, a[1, 1].real, a[0, 1].real, a[0, 1].imag),
            representation=self.representation,
            validate=False,
        )


def solve_linear_charge(model, datum, T, dt, forcing=None, quad=DEFAULT_QUAD):
    """March the charge equation for a constant coupling, no Newton involved."""
    if isinstance(model, LinearModel):
        nl = model.as_nonlinear()
    else:
        nl = model
        if not nl.is_constant:
            raise ValueError("solve_linear_charge needs a constant coupling")
    a = nl.evaluate_A(np.zeros(2, dtype=complex))
    c = nl.constants.c
    cache = {}

    def step(rhs, guess, extra):
        key = "none" if extra is None else "extra"
        if key not in cache:
            b = 0.5j / c * ID2 if extra is None else 0.5j / c * ID2 + extra
            cache[key] = np.linalg.inv(ID2 + b @ a)
        return cache[key] @ rhs

    return march_charge(nl, datum, T, dt, forcing=forcing, quad=quad,
                        step_solver=step)
