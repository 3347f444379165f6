"""Shared algebra for the point-interaction Dirac solver.

The state space is C^2-valued spinors on the line.  Spinor point values are
plain complex numpy arrays of shape (2,), 2x2 coupling matrices are complex
arrays of shape (2, 2).  Everything here is immutable after construction and
safe to share between threads.
"""

from dataclasses import dataclass, field

import numpy as np

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

for _m in (SIGMA1, SIGMA2, SIGMA3, ID2):
    _m.setflags(write=False)

HERMITIAN_TOL = 1e-12


def as_spinor(z):
    """Coerce to a complex (2,) array."""
    out = np.asarray(z, dtype=complex)
    if out.shape != (2,):
        raise ValueError(f"expected a 2-component spinor, got shape {out.shape}")
    return out


def is_hermitian(a, tol=HERMITIAN_TOL):
    """True iff max entrywise deviation of `a` from its adjoint is <= tol."""
    a = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def is_unitary(u, tol=HERMITIAN_TOL):
    u = np.asarray(u, dtype=complex)
    return bool(np.max(np.abs(u.conj().T @ u - ID2)) <= tol)


@dataclass(frozen=True)
class PhysicalConstants:
    """Problem constants: hbar, speed c, mass m >= 0 and interaction point y.

    Defaults are natural units with the interaction at the origin.
    """

    hbar: float = 1.0
    c: float = 1.0
    m: float = 1.0
    y: float = 0.0

    def __post_init__(self):
        if not (self.hbar > 0.0):
            raise ValueError("hbar must be positive")
        if not (self.c > 0.0):
            raise ValueError("c must be positive")
        if self.m < 0.0:
            raise ValueError("mass must be nonnegative")

    @property
    def mass_rate(self):
        """m*c/hbar, the inverse decay length of the massive kernel."""
        return self.m * self.c / self.hbar


NATURAL_UNITS = PhysicalConstants()
MASSLESS_UNITS = PhysicalConstants(m=0.0)


@dataclass(frozen=True)
class Representation:
    """A unitary frame for the Dirac algebra.

    The solver is written for the standard frame (sigma1 in the derivative
    term, sigma3 in the mass term).  Conjugating by a unitary u replaces every
    occurrence of sigma_k by u* sigma_k u; carrying the conjugated matrices
    around lets the marching and reconstruction run natively in the new frame.
    """

    u: np.ndarray = field(default_factory=lambda: ID2.copy())

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError("representation matrix must be 2x2")
        if not is_unitary(u):
            raise ValueError("representation matrix must be unitary")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        for name, sigma in (("s1", SIGMA1), ("s2", SIGMA2), ("s3", SIGMA3)):
            m = u.conj().T @ sigma @ u
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def is_standard(self):
        return bool(np.max(np.abs(self.u - ID2)) == 0.0)

    def conjugated(self, u):
        """Compose with a further unitary change of frame."""
        return Representation(np.asarray(self.u) @ np.asarray(u, dtype=complex))


STANDARD_REP = Representation()
