"""Entropy, dissipation, weighted norms and decay-rate fits.

Every functional accepts either a BEFP-side :class:`RadialProfile` or a
2D field (anything with ``grid.h``, ``grid.mesh()`` and ``values``).
"""

from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np

from . import quadrature
from .equilibria import bose_einstein, mass_from_beta
from .transform import BEFP, RadialProfile

TWO_PI = 2.0 * math.pi
POSITIVE_FLOOR = 1e-300


def _is_radial(f):
    return isinstance(f, RadialProfile)


def _samples(f):
    """(density, |v|^2, cell weights) for a quadrature over the plane."""
    if _is_radial(f):
        r = f.grid.nodes
        return f.density(), r * r, TWO_PI * f.grid.node_weights * r
    xx, yy = f.grid.mesh()
    w = np.full(f.values.shape, f.grid.h**2)
    return np.asarray(f.values, dtype=float), xx * xx + yy * yy, w


def mass(f):
    return f.mass()


def boson_entropy_density(f):
    """``f log f - (1 + f) log(1 + f)`` with ``0 log 0 = 0``.

    For ``f > 1`` the equivalent form ``-f log1p(1/f) - log1p(f)`` avoids
    the cancellation between two large logarithms.
    """
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    small = (f > 0) & (f <= 1)
    fs = f[small]
    out[small] = fs * np.log(fs) - (1.0 + fs) * np.log1p(fs)
    big = f > 1
    fb = f[big]
    out[big] = -fb * np.log1p(1.0 / fb) - np.log1p(fb)
    return out


def entropy(f):
    """``H(f) = int |v|^2 f / 2 + f log f - (1 + f) log(1 + f) dv``.

    An origin atom contributes nothing: the integrand grows only like
    ``-log f`` per unit volume, so a concentrating mass carries zero entropy
    in the limit.
    """
    d, v2, w = _samples(f)
    if not np.all(np.isfinite(d)):
        raise ValueError("entropy needs a finite density with finite second moment")
    return float(np.sum(w * (0.5 * v2 * d + boson_entropy_density(d))))


def dissipation(f):
    """``D(f) = int f (1 + f) |v + grad log(f / (1 + f))|^2 dv``.

    Radial gradients use five-point fourth-order stencils, 2D gradients
    second-order centered differences.  Points where ``f <= 1e-300``
    contribute nothing.
    """
    d, v2, w = _samples(f)
    pos = d > POSITIVE_FLOOR
    h = np.where(pos, np.log(np.where(pos, d, 1.0)) - np.log1p(d), 0.0)
    if _is_radial(f):
        r = f.grid.nodes
        residual2 = (r + quadrature.derivative(h, r)) ** 2
    else:
        xx, yy = f.grid.mesh()
        hx, hy = np.gradient(h, f.grid.h, edge_order=2)
        residual2 = (xx + hx) ** 2 + (yy + hy) ** 2
    return float(np.sum(w * np.where(pos, d * (1.0 + d) * residual2, 0.0)))


def equilibrium_like(f, beta):
    """``f_inf^beta`` sampled on the same mesh as ``f``."""
    if _is_radial(f):
        return RadialProfile.from_density(f.grid, lambda r: bose_einstein(beta, r), kind=BEFP)
    xx, yy = f.grid.mesh()
    return type(f)(f.grid, bose_einstein(beta, np.sqrt(xx * xx + yy * yy)), time=f.time)


def l1_distance(f, g):
    """``||f - g||_1`` on a shared mesh; atoms count with their mass."""
    if _is_radial(f):
        from .transform import l1_distance as radial_l1
        return radial_l1(f, g)
    return float(f.grid.h**2 * np.abs(f.values - g.values).sum())


def lp_ell_norm(f, p, ell):
    """``||(1 + |v|^ell) f||_p``; ``p = inf`` takes the max over nodes."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    d, v2, w = _samples(f)
    weighted = (1.0 + v2 ** (0.5 * ell)) * np.abs(d)
    atom = f.atom if _is_radial(f) else 0.0
    if math.isinf(p):
        return math.inf if atom else float(weighted.max())
    if atom and p > 1:
        return math.inf
    val = float(np.sum(w * weighted**p)) ** (1.0 / p)
    # (1 + |0|^ell) weight on the atom
    return val + TWO_PI * atom * (1.0 + 0.0**ell)


@dataclass
class EntropyReport:
    H: float
    D: float
    ck_lhs: float
    ck_rhs: float
    ck_constant: float
    mass: float

    def holds(self, tol=1e-12):
        return self.ck_lhs >= self.ck_rhs - tol

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def ck_constant(f_eq):
    """``1/4 (int f_eq (1 + f_eq) dv)^-2`` for a sampled equilibrium."""
    d, _, w = _samples(f_eq)
    return 0.25 / float(np.sum(w * d * (1.0 + d))) ** 2


def ck_bound(f, beta, mass_tol=1e-6, with_dissipation=True):
    """Both sides of ``H(f) - H(f_inf^beta) >= C ||f - f_inf^beta||_1^2``.

    The masses of ``f`` and of ``f_inf^beta`` sampled on the same mesh must
    agree to ``mass_tol``; that sampled equilibrium is the one compared.
    """
    eq = equilibrium_like(f, beta)
    m_f, m_eq = f.mass(), eq.mass()
    if abs(m_f - m_eq) > mass_tol * max(1.0, m_eq):
        raise ValueError(
            f"mass mismatch: f has {m_f:.12g}, equilibrium beta={beta:g} has {m_eq:.12g} "
            f"(closed form {mass_from_beta(beta):.12g})"
        )
    h = entropy(f)
    c = ck_constant(eq)
    return EntropyReport(
        H=h,
        D=dissipation(f) if with_dissipation else math.nan,
        ck_lhs=h - entropy(eq),
        ck_rhs=c * l1_distance(f, eq) ** 2,
        ck_constant=c,
        mass=m_f,
    )


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r2: float
    n_points: int
    excluded: list = field(default_factory=list)


def fit_decay_rate(history):
    """Least-squares line through ``(t, log distance)``.

    Points with zero distance are dropped and listed in ``excluded``.
    """
    t = np.array([h[0] for h in history], dtype=float)
    d = np.array([h[1] for h in history], dtype=float)
    keep = d > 0
    excluded = [float(x) for x in t[~keep]]
    t, d = t[keep], d[keep]
    if t.size < 4:
        raise ValueError(f"need at least 4 positive distances, got {t.size}")
    y = np.log(d)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
    return DecayFit(float(slope), float(intercept), r2, int(t.size), excluded)


def _d1(func, x, h):
    return (func(x - 2 * h) - 8 * func(x - h) + 8 * func(x + h) - func(x + 2 * h)) / (12 * h)


def _d2(func, x, h):
    return (-func(x - 2 * h) + 16 * func(x - h) - 30 * func(x) + 16 * func(x + h) - func(x + 2 * h)) / (12 * h * h)


def pde_residual(func, t, r, dt=1e-3, dr=1e-3):
    """Pointwise residual of a radial density ``func(t, r)`` in
    ``f_t = f_rr + f_r / r + 2 f (1 + f) + r f_r (1 + 2 f)``.

    Fourth-order central differences in both variables; needs ``r > 2 dr``
    and ``t > 2 dt`` wherever ``func`` is singular at 0.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    f = func(t, r)
    ft = _d1(lambda s: func(s, r), t, dt)
    fr = _d1(lambda x: func(t, x), r, dr)
    frr = _d2(lambda x: func(t, x), r, dr)
    return ft - (frr + fr / r + 2.0 * f * (1.0 + f) + r * fr * (1.0 + 2.0 * f))
