"""Exact radial BEFP solutions through the linear FP flow.

``f(t) = L(F_t[L^-1(f0)])``: the initial datum is propagated on the FP
side with the exact kernel, so there is no time stepping.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import diagnostics
from .equilibria import (FUNDAMENTAL_MASS, beta_from_mass, befp_fundamental,
                         bose_einstein)
from .fp_exact import fp_propagate_radial
from .quadrature import cumulative
from .transform import (BEFP, FP, RadialGrid, RadialProfile, l1_distance,
                        lambda_forward, lambda_inverse)

IC_KINDS = ("equilibrium", "fundamental", "gaussian", "dirac", "tabulated")


@dataclass(frozen=True)
class RadialInitialCondition:
    """Named initial datum, turned into a profile on demand.

    ``equilibrium``: ``beta``.  ``fundamental``: ``t0``.  ``gaussian``:
    ``center``, ``width``, ``mass`` (a ring ``exp(-(r-center)^2 / 2 width^2)``
    scaled to the given mass on the grid).  ``dirac``: ``mass``.
    ``tabulated``: ``profile``.
    """

    kind: str
    beta: float = 2.0
    t0: float = 1.0
    center: float = 0.0
    width: float = 1.0
    mass: float = FUNDAMENTAL_MASS
    profile: RadialProfile = None

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {IC_KINDS}")

    def on(self, grid):
        r = grid.nodes
        if self.kind == "equilibrium":
            return RadialProfile.from_density(grid, lambda x: bose_einstein(self.beta, x), kind=BEFP)
        if self.kind == "fundamental":
            return RadialProfile.from_density(grid, lambda x: befp_fundamental(self.t0, x), kind=BEFP)
        if self.kind == "dirac":
            if not (self.mass >= 0 and math.isfinite(self.mass)):
                raise ValueError("dirac mass must be finite and non-negative")
            return RadialProfile(grid, np.zeros_like(r), atom=self.mass / (2.0 * math.pi), kind=BEFP)
        if self.kind == "gaussian":
            if self.width <= 0:
                raise ValueError("gaussian width must be positive")
            shape = RadialProfile.from_density(
                grid, lambda x: np.exp(-0.5 * ((x - self.center) / self.width) ** 2), kind=BEFP)
            return shape.replace(values=shape.values * (self.mass / shape.mass()))
        p = self.profile
        if p is None or p.kind != BEFP:
            raise ValueError("tabulated initial condition needs a BEFP-side profile")
        if not p.grid.same_as(grid):
            raise ValueError("tabulated profile lives on a different grid")
        return p


@dataclass
class Trajectory:
    times: list
    snapshots: list
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.times) != len(self.snapshots):
            raise ValueError("one snapshot per time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def to_csv(self, path, diagnostics_path=None):
        """Write ``t,r,value`` rows (``value`` is ``r * density``).

        A non-zero origin atom is written as an extra ``t,atom,<value>`` row.
        """
        with open(path, "w") as fh:
            fh.write("t,r,value\n")
            for t, snap in zip(self.times, self.snapshots):
                for r, v in zip(snap.grid.nodes.tolist(), snap.values.tolist()):
                    fh.write(f"{t!r},{r!r},{v!r}\n")
                if snap.atom:
                    fh.write(f"{t!r},atom,{snap.atom!r}\n")
        if diagnostics_path is not None:
            write_diagnostics_csv(self.diagnostics, diagnostics_path)


DIAGNOSTIC_FIELDS = ("t", "mass", "entropy", "l1_to_eq", "sup")


def write_diagnostics_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(",".join(DIAGNOSTIC_FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(row[k])) for k in DIAGNOSTIC_FIELDS) + "\n")


def _snapshot_diagnostics(t, snap, eq):
    return {
        "t": float(t),
        "mass": snap.mass(),
        "entropy": diagnostics.entropy(snap),
        "l1_to_eq": l1_distance(snap, eq) if eq is not None else 0.0,
        "sup": math.inf if snap.atom else float(snap.density().max()),
    }


def solve_radial_exact(f0, times, grid=None, with_diagnostics=True):
    """Exact BEFP trajectory at the requested ``times``.

    ``f0`` is a :class:`RadialInitialCondition` or a BEFP-side profile.
    ``t = 0`` returns ``f0`` itself.  The equilibrium used for
    ``l1_to_eq`` has the measured mass of ``f0`` on the grid.
    """
    if isinstance(f0, RadialInitialCondition):
        p0 = f0.on(grid if grid is not None else RadialGrid.uniform())
    else:
        p0 = f0
    if p0.kind != BEFP:
        raise ValueError("initial datum must be a BEFP-side profile")
    m = p0.mass()
    if not math.isfinite(m):
        raise ValueError("initial datum has non-finite mass")
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise ValueError("times must be non-negative")
    g0 = lambda_inverse(p0)
    snaps = [p0 if t == 0 else lambda_forward(fp_propagate_radial(g0, t)) for t in times]
    diag = []
    if with_diagnostics:
        eq = (RadialProfile.from_density(p0.grid, lambda r: bose_einstein(beta_from_mass(m), r), kind=BEFP)
              if m > 0 else None)
        diag = [_snapshot_diagnostics(t, s, eq) for t, s in zip(times, snaps)]
    return Trajectory(times, snaps, diag)


def direct_quotient(g_snapshot):
    """``f = g / (1 + int_0^r psi ds)`` evaluated on densities.

    Same map as :func:`lambda_forward`, computed from ``g = psi / r`` rather
    than from the profile, as a cross-check.
    """
    if g_snapshot.kind != FP:
        raise ValueError("direct_quotient expects an FP-side profile")
    r = g_snapshot.grid.nodes
    g = np.zeros_like(r)
    g[1:] = g_snapshot.values[1:] / r[1:]
    big_psi = cumulative(r * g, r, initial=g_snapshot.atom, weights=g_snapshot.grid.weights)
    f = g / (1.0 + big_psi)
    return RadialProfile(g_snapshot.grid, r * f, atom=math.log1p(g_snapshot.atom), kind=BEFP)


class SandwichViolation(AssertionError):
    def __init__(self, inequality, node, r, lhs, rhs):
        self.inequality, self.node, self.r, self.lhs, self.rhs = inequality, node, r, lhs, rhs
        super().__init__(f"{inequality} fails at node {node} (r={r:.6g}): {lhs:.16g} > {rhs:.16g}")


@dataclass
class SandwichReport:
    margins: dict

    @property
    def worst(self):
        return min(self.margins.values())


def sandwich_check(f, g, M, m, slack=1e-12):
    """Check ``2pi/(2pi+M) g <= f <= g <= f exp(m/2pi)`` at every node.

    ``margins`` holds, per inequality, the smallest ``rhs - lhs``.
    Raises :class:`SandwichViolation` on the first failing node.
    """
    if f.kind != BEFP or g.kind != FP:
        raise ValueError("sandwich_check takes a BEFP profile f and an FP profile g")
    phi, psi = f.values, g.values
    checks = {
        "lower: 2pi/(2pi+M) g <= f": (2.0 * math.pi / (2.0 * math.pi + M) * psi, phi),
        "f <= g": (phi, psi),
        "upper: g <= f exp(m/2pi)": (psi, phi * math.exp(m / (2.0 * math.pi))),
    }
    margins = {}
    for name, (lhs, rhs) in checks.items():
        gap = rhs - lhs
        bad = np.nonzero(gap < -slack * np.maximum(1.0, np.abs(rhs)))[0]
        if bad.size:
            i = int(bad[0])
            raise SandwichViolation(name, i, float(f.grid.nodes[i]), float(lhs[i]), float(rhs[i]))
        margins[name] = float(gap.min())
    return SandwichReport(margins)


def decay_history(traj, beta):
    """``(t, ||f(t) - f_inf^beta||_1)`` for every snapshot."""
    out = []
    eq = None
    for t, snap in zip(traj.times, traj.snapshots):
        if eq is None or not eq.grid.same_as(snap.grid):
            eq = RadialProfile.from_density(snap.grid, lambda r: bose_einstein(beta, r), kind=BEFP)
        out.append((t, l1_distance(snap, eq)))
    return out
