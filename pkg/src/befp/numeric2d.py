"""Finite-volume solver for ``f_t = Lap f + div(v f (1 + f))`` on a square.

Exponentially fitted (Scharfetter-Gummel) edge fluxes with the edge drift
``v (1 + fbar)``, ``fbar`` the mean of the two neighbouring cells, zero flux
through the outer boundary and explicit Euler in time.
"""

from dataclasses import dataclass
import math
import struct

import numpy as np

from . import diagnostics
from .equilibria import beta_from_mass, bose_einstein
from .radial_solver import Trajectory, write_diagnostics_csv

MAGIC = b"BEFPF2D\x00"
_HEADER = struct.Struct("<8sqdd")  # magic, n, L, time: 32 bytes
NEGATIVE_ABORT = -1e-12


class NumericalAbort(RuntimeError):
    """A cell went negative; the step size or the scheme is broken."""


class StepTooLarge(ValueError):
    def __init__(self, dt, bound):
        self.dt, self.bound = dt, bound
        super().__init__(f"dt = {dt:.6g} exceeds the stability bound {bound:.6g}")


@dataclass(frozen=True)
class Grid2D:
    """``n x n`` cells of width ``h = 2L/n`` covering ``[-L, L]^2``."""

    L: float = 8.0
    n: int = 128

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("half-width L must be positive")
        if self.n < 2 or self.n % 2:
            raise ValueError("cells per side must be a positive even number")

    @property
    def h(self):
        return 2.0 * self.L / self.n

    @property
    def centers(self):
        return -self.L + self.h * (np.arange(self.n) + 0.5)

    @property
    def edges(self):
        return -self.L + self.h * np.arange(self.n + 1)

    def mesh(self):
        c = self.centers
        return np.meshgrid(c, c, indexing="ij")

    def radii(self):
        xx, yy = self.mesh()
        return np.hypot(xx, yy)


@dataclass(frozen=True, eq=False)
class Field2D:
    """Cell values ``values[i, j]`` at ``(x_i, y_j)``."""

    grid: Grid2D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field shape {v.shape} does not match a {self.grid.n}x{self.grid.n} grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid, func, time=0.0):
        xx, yy = grid.mesh()
        return cls(grid, func(xx, yy), time=time)

    def mass(self):
        return float(self.grid.h**2 * self.values.sum())

    def to_csv(self, path):
        c = self.grid.centers.tolist()
        v = self.values.tolist()
        with open(path, "w") as fh:
            fh.write("i,j,x,y,value\n")
            for i in range(self.grid.n):
                for j in range(self.grid.n):
                    fh.write(f"{i},{j},{c[i]!r},{c[j]!r},{v[i][j]!r}\n")

    @classmethod
    def from_csv(cls, path, L):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        n = int(data[:, 0].max()) + 1
        values = np.zeros((n, n))
        values[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 4]
        return cls(Grid2D(L, n), values)

    def to_binary(self, path):
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, self.grid.n, self.grid.L, self.time))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path):
        with open(path, "rb") as fh:
            magic, n, L, time = _HEADER.unpack(fh.read(_HEADER.size))
            if magic != MAGIC:
                raise ValueError(f"{path}: not a field dump (magic {magic!r})")
            values = np.frombuffer(fh.read(), dtype="<f8")
        if values.size != n * n:
            raise ValueError(f"{path}: expected {n * n} values, found {values.size}")
        return cls(Grid2D(L, int(n)), values.reshape(n, n), time=time)


def bernoulli(x):
    """``x / (exp(x) - 1)`` with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - 0.5 * x + x * x / 12.0, safe / np.expm1(safe))


def _edge_flux(f_lo, f_hi, coord, h, drift_scale):
    u = drift_scale * coord * (1.0 + 0.5 * (f_lo + f_hi))
    return (bernoulli(u * h) * f_lo - bernoulli(-u * h) * f_hi) / h


def assemble_flux(field, drift_scale=1.0):
    """Edge fluxes ``(Fx, Fy)`` of shapes ``(n+1, n)`` and ``(n, n+1)``.

    ``Fx[i, j]`` crosses the edge at ``x = -L + i h`` in the ``+x``
    direction.  Boundary entries are zero.  ``drift_scale = 0`` gives the
    plain five-point diffusion fluxes.
    """
    g, f = field.grid, field.values
    e = g.edges[1:-1]
    fx = np.zeros((g.n + 1, g.n))
    fy = np.zeros((g.n, g.n + 1))
    fx[1:-1, :] = _edge_flux(f[:-1, :], f[1:, :], e[:, None], g.h, drift_scale)
    fy[:, 1:-1] = _edge_flux(f[:, :-1], f[:, 1:], e[None, :], g.h, drift_scale)
    return fx, fy


def stable_dt(field):
    """``h^2 / (4 + 2 h max|v| (1 + max f))`` with ``max|v| = L``."""
    g = field.grid
    return g.h**2 / (4.0 + 2.0 * g.h * g.L * (1.0 + float(field.values.max())))


def step(field, dt):
    """One explicit Euler step; rejects ``dt`` above :func:`stable_dt`."""
    bound = stable_dt(field)
    if dt > bound * (1.0 + 1e-12):
        raise StepTooLarge(dt, bound)
    fx, fy = assemble_flux(field)
    div = (fx[1:, :] - fx[:-1, :] + fy[:, 1:] - fy[:, :-1]) / field.grid.h
    return Field2D(field.grid, field.values - dt * div, time=field.time + dt)


class FieldTrajectory(Trajectory):
    """Trajectory of 2D fields, with per-step bookkeeping."""

    max_step_mass_drift = 0.0
    min_value = math.inf
    n_steps = 0

    def to_csv(self, path, diagnostics_path=None):
        c = self.snapshots[0].grid.centers.tolist()
        with open(path, "w") as fh:
            fh.write("t,i,j,x,y,value\n")
            for t, snap in zip(self.times, self.snapshots):
                v = snap.values.tolist()
                for i in range(len(v)):
                    for j in range(len(v)):
                        fh.write(f"{t!r},{i},{j},{c[i]!r},{c[j]!r},{v[i][j]!r}\n")
        if diagnostics_path is not None:
            write_diagnostics_csv(self.diagnostics, diagnostics_path)


def _diag(field, eq):
    return {
        "t": field.time,
        "mass": field.mass(),
        "entropy": diagnostics.entropy(field),
        "l1_to_eq": diagnostics.l1_distance(field, eq) if eq is not None else 0.0,
        "sup": float(field.values.max()),
    }


def solve_numeric(f0, T, dt=None, snapshot_times=None, safety=0.9):
    """March ``f0`` to time ``T``, recording snapshots.

    With ``dt=None`` each step uses ``safety * stable_dt``; a fixed ``dt``
    is checked against the bound at every step.  Steps are shortened to
    land exactly on snapshot times.  The reference equilibrium for
    ``l1_to_eq`` is sampled on the grid with ``beta`` from the mass of
    ``f0``.
    """
    if np.any(f0.values < 0):
        raise ValueError("initial field must be non-negative")
    if snapshot_times is None:
        snapshot_times = [T]
    targets = sorted(float(t) for t in snapshot_times if t <= T + 1e-14)
    if not targets or targets[-1] < T:
        targets.append(float(T))
    m0 = f0.mass()
    eq = None
    if m0 > 0:
        beta = beta_from_mass(m0)
        eq = Field2D(f0.grid, bose_einstein(beta, f0.grid.radii()))
    times, snaps = [], []
    if targets[0] == 0.0:
        times.append(0.0)
        snaps.append(f0)
        targets = targets[1:]
    field = f0
    drift = 0.0
    min_val = float(f0.values.min())
    n_steps = 0
    for target in targets:
        while field.time < target - 1e-14:
            k = dt if dt is not None else safety * stable_dt(field)
            k = min(k, target - field.time)
            new = step(field, k)
            n_steps += 1
            lo = float(new.values.min())
            if lo < NEGATIVE_ABORT:
                raise NumericalAbort(f"cell value {lo:.3e} < 0 at t = {new.time:.6g} after {n_steps} steps")
            m_old, m_new = field.mass(), new.mass()
            if m_old > 0:
                drift = max(drift, abs(m_new - m_old) / m_old)
            min_val = min(min_val, lo)
            field = new
        field = Field2D(field.grid, field.values, time=target)
        times.append(target)
        snaps.append(field)
    traj = FieldTrajectory(times, snaps, [_diag(s, eq) for s in snaps])
    traj.max_step_mass_drift = drift
    traj.min_value = min_val
    traj.n_steps = n_steps
    return traj


def sample_radial(grid, radial_profile):
    """Sample a BEFP radial profile's density at the cell centres."""
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(radial_profile.grid.nodes, radial_profile.density())
    r = grid.radii()
    if r.max() > radial_profile.grid.rmax:
        out = np.zeros_like(r)
        inside = r <= radial_profile.grid.rmax
        out[inside] = spline(r[inside])
        return Field2D(grid, np.maximum(out, 0.0))
    return Field2D(grid, np.maximum(spline(r), 0.0))
