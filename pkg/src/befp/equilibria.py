"""Closed-form stationary and special solutions in two dimensions."""

from dataclasses import dataclass
import math

import numpy as np

TWO_PI = 2.0 * math.pi


def mass_from_beta(beta):
    """Mass ``2 pi log(beta / (beta - 1))`` of the Bose-Einstein equilibrium."""
    _check_beta(beta)
    return -TWO_PI * math.log1p(-1.0 / beta)


def beta_from_mass(m):
    """Inverse of :func:`mass_from_beta`: ``beta = 1 / (1 - exp(-m / 2 pi))``."""
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    return -1.0 / math.expm1(-m / TWO_PI)


def _check_beta(beta):
    if not beta > 1:
        raise ValueError(f"beta must exceed 1 (the beta = 1 state has infinite mass in 2D), got {beta}")


@dataclass(frozen=True)
class EquilibriumParams:
    beta: float
    mass_m: float
    mass_M: float

    def __post_init__(self):
        _check_beta(self.beta)
        if not math.isclose(self.mass_m, mass_from_beta(self.beta), rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("mass_m inconsistent with beta")
        if not math.isclose(self.mass_M, TWO_PI / (self.beta - 1.0), rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("mass_M inconsistent with beta")

    @classmethod
    def from_beta(cls, beta):
        _check_beta(beta)
        return cls(beta, mass_from_beta(beta), TWO_PI / (beta - 1.0))

    @classmethod
    def from_mass(cls, m):
        return cls.from_beta(beta_from_mass(m))

    @classmethod
    def from_fp_mass(cls, M):
        if not M > 0:
            raise ValueError(f"FP mass must be positive, got {M}")
        return cls.from_beta(TWO_PI / M + 1.0)


def bose_einstein(beta, r):
    """Equilibrium ``1 / (beta exp(r^2/2) - 1)``, written to stay accurate
    for ``beta`` close to 1."""
    _check_beta(beta)
    r = np.asarray(r, dtype=float)
    return 1.0 / ((beta - 1.0) + beta * np.expm1(0.5 * r * r))


def bose_einstein_dr(beta, r):
    """Radial derivative of :func:`bose_einstein`."""
    r = np.asarray(r, dtype=float)
    f = bose_einstein(beta, r)
    return -f * f * beta * r * np.exp(0.5 * r * r)


def fp_maxwellian(M, r):
    """``M`` times the unit-mass Maxwellian ``exp(-r^2/2) / 2 pi``."""
    if M < 0:
        raise ValueError("mass must be non-negative")
    r = np.asarray(r, dtype=float)
    return M * np.exp(-0.5 * r * r) / TWO_PI


def theta(t):
    """Variance factor ``1 - exp(-2t)``."""
    return -np.expm1(-2.0 * np.asarray(t, dtype=float))


def befp_fundamental(t, r):
    """BEFP solution issued from the Dirac mass ``2 pi log(1 + 1/2pi) delta_0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the fundamental solution is singular at t <= 0")
    th = theta(t)
    r = np.asarray(r, dtype=float)
    x = 0.5 * r * r / th
    return 1.0 / (th * (TWO_PI + (TWO_PI + 1.0) * np.expm1(x)))


FUNDAMENTAL_MASS = TWO_PI * math.log1p(1.0 / TWO_PI)


def befp_infinite_mass(t, r, A):
    """Non-integrable solution ``2 / (2 exp(-2t) / A + r^2)``.

    Only meant for residual checks; it has no finite mass.
    """
    if not A > 0:
        raise ValueError("A must be positive")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return 2.0 / (2.0 * np.exp(-2.0 * t) / A + r * r)
