"""Exact solution operator of the linear Fokker-Planck equation
``g_t = Lap g + div(v g)`` in the plane, built on its Gaussian kernel."""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.special import i0e

from .transform import FP, RadialProfile

SMALL_T = 1e-4
_ROW_CHUNK = 512


@dataclass(frozen=True)
class FpKernelParams:
    t: float
    a: float
    nu: float
    theta: float

    @classmethod
    def at(cls, t):
        if not t > 0:
            raise ValueError(f"kernel time must be positive, got {t}")
        return cls(t=t, a=math.exp(-2.0 * t), nu=math.expm1(2.0 * t), theta=-math.expm1(-2.0 * t))


def fp_kernel(t, v, w):
    """Transition density ``F(t, v, w)`` from ``w`` to ``v`` (2D points,
    trailing axis of length 2)."""
    k = FpKernelParams.at(t)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    d = v - math.exp(-t) * w
    return np.exp(-0.5 * np.sum(d * d, axis=-1) / k.theta) / (2.0 * math.pi * k.theta)


def fp_kernel_literal(t, v, w):
    """The kernel in its unsimplified form ``a^-1 M_nu(a^-1/2 v - w)``."""
    k = FpKernelParams.at(t)
    xi = np.asarray(v, dtype=float) / math.sqrt(k.a) - np.asarray(w, dtype=float)
    gauss = np.exp(-0.5 * np.sum(xi * xi, axis=-1) / k.nu) / (2.0 * math.pi * k.nu)
    return gauss / k.a


def _gauss_1d(t, x, centers):
    k = FpKernelParams.at(t)
    d = x[:, None] - math.exp(-t) * centers[None, :]
    return np.exp(-0.5 * d * d / k.theta) / math.sqrt(2.0 * math.pi * k.theta)


def fp_solution_at(masses, t, x, y):
    """Evaluate the FP solution started from point masses.

    ``masses`` is a sequence of ``((wx, wy), mass)`` pairs; ``x`` and ``y``
    are broadcastable coordinate arrays.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    for (wx, wy), m in masses:
        out = out + m * fp_kernel(t, np.stack(np.broadcast_arrays(x, y), axis=-1), np.array([wx, wy]))
    return out


def fp_propagate_2d(g0, t, grid=None):
    """Apply the FP solution operator for time ``t``.

    ``g0`` is either a ``Field2D`` (cell values treated as midpoint samples)
    or a list of ``((wx, wy), mass)`` point masses, in which case ``grid``
    fixes the output mesh.
    """
    from .numeric2d import Field2D  # numeric2d imports diagnostics, keep this lazy

    if not t > 0:
        raise ValueError(f"propagation time must be positive, got {t}")
    if isinstance(g0, Field2D):
        grid = g0.grid
        if np.any(g0.values < 0):
            raise ValueError("initial field must be non-negative")
        c = grid.centers
        kx = _gauss_1d(t, c, c)
        # separable kernel: G_x @ g0 @ G_y^T, times the cell area
        values = kx @ g0.values @ kx.T * grid.h**2
    else:
        if grid is None:
            raise ValueError("point-mass input needs an output grid")
        xx, yy = grid.mesh()
        values = fp_solution_at(g0, t, xx, yy)
    return Field2D(grid, values, time=(g0.time if isinstance(g0, Field2D) else 0.0) + t)


def fp_radial_kernel(t, r, s):
    """Angular average of the 2D kernel:
    ``theta^-1 exp(-(r^2 + e^-2t s^2) / 2 theta) I0(r s e^-t / theta)``.

    Assembled as ``exp(-(r - e^-t s)^2 / 2 theta) * i0e(z) / theta`` so the
    Bessel growth never overflows.
    """
    k = FpKernelParams.at(t)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    es = math.exp(-t) * s
    z = r * es / k.theta
    return np.exp(-0.5 * (r - es) ** 2 / k.theta) * i0e(z) / k.theta


def fp_propagate_radial(psi0, t):
    """Radial FP evolution ``psi(t, r) = r int_0^R K(t, r, s) psi0(s) ds``.

    An origin atom ``a`` spreads into ``r a K(t, r, 0)``; the output carries
    no atom.  Below ``t = 1e-4`` the input is returned unchanged.
    """
    if psi0.kind != FP:
        raise ValueError("fp_propagate_radial expects an FP-side profile")
    if not t > 0:
        raise ValueError(f"propagation time must be positive, got {t}")
    if t < SMALL_T:
        warnings.warn(f"t = {t:g} below {SMALL_T:g}: kernel is numerically a delta, returning input",
                      RuntimeWarning, stacklevel=2)
        return psi0
    grid = psi0.grid
    r = grid.nodes
    src = grid.node_weights * psi0.values
    live = np.nonzero(src)[0]
    g = np.zeros_like(r)
    if live.size:
        s = r[live]
        for lo in range(0, r.size, _ROW_CHUNK):
            rows = slice(lo, lo + _ROW_CHUNK)
            g[rows] = fp_radial_kernel(t, r[rows, None], s[None, :]) @ src[live]
    if psi0.atom:
        g += psi0.atom * fp_radial_kernel(t, r, 0.0)
    return RadialProfile(grid, r * g, atom=0.0, kind=FP)


def fp_radial_density(psi0, t, r_eval):
    """FP density ``g(t, r)`` at arbitrary radii, same quadrature as above."""
    grid = psi0.grid
    src = grid.node_weights * psi0.values
    r_eval = np.asarray(r_eval, dtype=float)
    g = fp_radial_kernel(t, r_eval[..., None], grid.nodes) @ src
    if psi0.atom:
        g = g + psi0.atom * fp_radial_kernel(t, r_eval, 0.0)
    return g


def _lp_ell_radial(profile, p, ell):
    r = profile.grid.nodes
    d = (1.0 + r**ell) * profile.density()
    if math.isinf(p):
        return float(d.max())
    return float((2.0 * math.pi * profile.grid.node_weights @ (r * d**p)) ** (1.0 / p))


def check_lp_bounds(g0, trajectory, p, ell):
    """Empirical constants in the L^p_ell smoothing bounds for FP flows.

    For each snapshot time ``t`` reports
    ``same = ||g(t)|| / (exp(2(p-1)t/p) ||g0||_{L^p_ell})`` and
    ``from_l1 = ||g(t)|| / ((e^2t/(e^2t - 1))^((p-1)/p) ||g0||_{L^1_ell})``.
    Both should stay below a fixed constant.  The atom of ``g0`` counts in
    the L^1 norm and makes its L^p norm infinite for p > 1.
    """
    if hasattr(trajectory, "snapshots"):
        times, snaps = trajectory.times, trajectory.snapshots
    else:
        times, snaps = trajectory
    q = 1.0 if math.isinf(p) else (p - 1.0) / p
    norm0_l1 = _lp_ell_radial(g0, 1.0, ell) + 2.0 * math.pi * g0.atom * (1.0 + 0.0**ell)
    norm0_p = math.inf if (g0.atom and p > 1) else _lp_ell_radial(g0, p, ell)
    if p == 1:
        norm0_p = norm0_l1
    rows = []
    for t, g in zip(times, snaps):
        n = _lp_ell_radial(g, p, ell)
        grow = math.exp(2.0 * q * t)
        smooth = (1.0 / -math.expm1(-2.0 * t)) ** q
        rows.append({
            "t": float(t),
            "norm": n,
            "same": n / (grow * norm0_p) if math.isfinite(norm0_p) else 0.0,
            "from_l1": n / (smooth * norm0_l1),
        })
    return {"p": p, "ell": ell, "rows": rows,
            "max_same": max(r["same"] for r in rows),
            "max_from_l1": max(r["from_l1"] for r in rows)}
