"""Radial change of variables between BEFP and FP densities.

A radially symmetric density ``f(v)`` on the plane is carried as the
profile ``phi(r) = r f(r)``, so that ``2*pi * int_0^R phi dr`` is the mass
of ``f`` in the ball of radius ``R``.  The FP density ``g`` is carried the
same way as ``psi(r) = r g(r)``.  The two are linked through their running
integrals by ``Phi = log(1 + Psi)``, which pointwise reads

    phi = psi / (1 + Psi),        psi = phi * exp(Phi).

An optional atom at the origin stores the measure of ``{0}`` divided by
``2*pi`` (a Dirac mass ``M delta_0`` has atom ``M / (2*pi)``).
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy.linalg import solve_banded

from . import quadrature

BEFP = "befp"
FP = "fp"
KINDS = (BEFP, FP)

# exp(700) is near the float64 ceiling; a finite-mass profile never gets close
MAX_EXPONENT = 700.0

DEFAULT_RMAX = 8.0
DEFAULT_N = 4000


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radii starting at 0."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("radial grid needs at least 3 nodes (N >= 2)")
        if nodes[0] != 0.0:
            raise ValueError("radial grid must start at r = 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("radial grid must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, rmax=DEFAULT_RMAX, n=DEFAULT_N):
        """Grid with ``n`` equal intervals on ``[0, rmax]``."""
        return cls(np.linspace(0.0, rmax, n + 1))

    @property
    def r(self):
        return self.nodes

    @property
    def n(self):
        return self.nodes.size - 1

    @property
    def rmax(self):
        return float(self.nodes[-1])

    @cached_property
    def weights(self):
        return quadrature.interval_weights(self.nodes)

    @cached_property
    def node_weights(self):
        return self.weights.node_weights(self.nodes.size)

    def same_as(self, other):
        return self is other or (
            self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)
        )


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled ``r * density`` on a radial grid, plus an origin atom."""

    grid: RadialGrid
    values: np.ndarray
    atom: float = 0.0
    kind: str = FP

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError(
                f"profile has {values.size} values for {self.grid.nodes.size} grid nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        if values.min() < 0.0:
            raise ValueError(f"profile values must be non-negative (min {values.min():.3e})")
        if not (self.atom >= 0.0 and math.isfinite(self.atom)):
            raise ValueError(f"atom must be finite and non-negative, got {self.atom}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "atom", float(self.atom))

    @classmethod
    def from_density(cls, grid, density, atom=0.0, kind=FP):
        """Build from density values ``f(r)`` (a callable or an array)."""
        r = grid.nodes
        d = density(r) if callable(density) else np.asarray(density, dtype=float)
        return cls(grid, r * d, atom=atom, kind=kind)

    @classmethod
    def zeros(cls, grid, kind=FP):
        return cls(grid, np.zeros_like(grid.nodes), kind=kind)

    def replace(self, **changes):
        fields = dict(grid=self.grid, values=self.values, atom=self.atom, kind=self.kind)
        fields.update(changes)
        return RadialProfile(**fields)

    def density(self):
        """Density values ``values / r``.

        The origin value is extrapolated with a quadratic in ``r^2``
        through the next three nodes (the density is even in ``r``).
        """
        r = self.grid.nodes
        d = np.empty_like(self.values)
        d[1:] = self.values[1:] / r[1:]
        x = r[1:4] ** 2
        y = d[1:4]
        if x.size == 3:
            l0 = x[1] * x[2] / ((x[0] - x[1]) * (x[0] - x[2]))
            l1 = x[0] * x[2] / ((x[1] - x[0]) * (x[1] - x[2]))
            l2 = x[0] * x[1] / ((x[2] - x[0]) * (x[2] - x[1]))
            d[0] = l0 * y[0] + l1 * y[1] + l2 * y[2]
        else:
            d[0] = (y[0] * x[1] - y[1] * x[0]) / (x[1] - x[0])
        d[0] = max(d[0], 0.0)
        return d

    def mass(self):
        """Total mass ``2*pi * (atom + int_0^R values dr)``."""
        return 2.0 * math.pi * (self.atom + quadrature.integrate(self.values, self.grid.nodes, self.grid.weights))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# atom={self.atom!r} kind={self.kind}\n")
            fh.write("r,value\n")
            for r, v in zip(self.grid.nodes.tolist(), self.values.tolist()):
                fh.write(f"{r!r},{v!r}\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("#"):
                raise ValueError(f"{path}: missing '# atom=... kind=...' header line")
            meta = dict(item.split("=", 1) for item in header[1:].split())
            rows = [line.strip() for line in fh if line.strip()]
        if rows and rows[0].replace(" ", "") == "r,value":
            rows = rows[1:]
        data = np.array([[float(x) for x in row.split(",")] for row in rows])
        return cls(RadialGrid(data[:, 0]), data[:, 1], atom=float(meta.get("atom", 0.0)),
                   kind=meta.get("kind", FP))


@dataclass(frozen=True, eq=False)
class CumulativeProfile:
    """Running integral ``atom + int_0^r values ds`` of a profile."""

    grid: RadialGrid
    values: np.ndarray
    kind: str = FP

    @property
    def atom(self):
        return float(self.values[0])

    @property
    def total(self):
        return float(self.values[-1])

    def mass(self):
        return 2.0 * math.pi * self.total


def cumulate(p):
    vals = quadrature.cumulative(p.values, p.grid.nodes, initial=p.atom, weights=p.grid.weights)
    return CumulativeProfile(p.grid, vals, kind=p.kind)


def _require_kind(p, kind):
    if p.kind != kind:
        raise ValueError(f"expected a {kind}-side profile, got {p.kind}")


def lambda_forward(g_profile):
    """FP-side profile ``psi`` to the BEFP-side profile ``psi / (1 + Psi)``."""
    _require_kind(g_profile, FP)
    big_psi = cumulate(g_profile).values
    phi = g_profile.values / (1.0 + big_psi)
    return RadialProfile(g_profile.grid, phi, atom=math.log1p(g_profile.atom), kind=BEFP)


def _inverse_system(phi, weights, n_nodes):
    """Banded matrix for ``X_k - X_{k-1} = sum_j w_kj phi_j X_j`` with ``X_0`` fixed.

    ``X = 1 + Psi``.  Reusing the forward weights makes this the exact
    inverse of :func:`lambda_forward` on the grid.
    """
    lower, upper = 3, 2
    ab = np.zeros((lower + upper + 1, n_nodes))

    def put(rows, cols, vals):
        np.add.at(ab, (upper + rows - cols, cols), vals)

    put(np.array([0]), np.array([0]), np.array([1.0]))
    k = np.arange(1, n_nodes)
    put(k, k, np.ones(k.size))
    put(k, k - 1, -np.ones(k.size))
    cols = weights.start[:, None] + np.arange(weights.width)[None, :]
    rows = np.broadcast_to(k[:, None], cols.shape)
    put(rows.ravel(), cols.ravel(), -(weights.weights * phi[cols]).ravel())
    return (lower, upper), ab


def lambda_inverse(f_profile):
    """BEFP-side profile ``phi`` to the FP-side profile ``phi * exp(Phi)``.

    ``exp(Phi)`` is obtained by integrating ``X' = phi X`` with the same
    interval weights used by :func:`cumulate`, so ``lambda_forward`` undoes
    this map to round-off.
    """
    _require_kind(f_profile, BEFP)
    if f_profile.atom > MAX_EXPONENT:
        raise FloatingPointError(f"origin atom {f_profile.atom} overflows exp")
    grid = f_profile.grid
    phi = f_profile.values
    x0 = math.exp(f_profile.atom)
    if not phi.any():
        return RadialProfile(grid, np.zeros_like(phi), atom=x0 - 1.0, kind=FP)
    bands, ab = _inverse_system(phi, grid.weights, phi.size)
    rhs = np.zeros(phi.size)
    rhs[0] = x0
    x = solve_banded(bands, ab, rhs)
    if not np.all(np.isfinite(x)) or x.min() < x0 * (1.0 - 1e-9):
        raise ValueError("profile is too steep for its grid; refine the radial grid")
    if math.log(x.max()) > MAX_EXPONENT:
        raise FloatingPointError("cumulative exponent exceeds 700; profile mass is not finite")
    return RadialProfile(grid, phi * np.maximum(x, 1.0), atom=math.expm1(f_profile.atom), kind=FP)


def mass_f_from_M(M):
    """BEFP mass ``m = 2 pi log(1 + M / 2 pi)`` of the transform of an FP mass."""
    if M < 0:
        raise ValueError("mass must be non-negative")
    return 2.0 * math.pi * math.log1p(M / (2.0 * math.pi))


def mass_M_from_m(m):
    """FP mass ``M = 2 pi (exp(m / 2 pi) - 1)``."""
    if m < 0:
        raise ValueError("mass must be non-negative")
    return 2.0 * math.pi * math.expm1(m / (2.0 * math.pi))


def lipschitz_bound(M1, M2):
    """L1 Lipschitz factor ``1 + M2 / 2 pi`` of the forward transform.

    ``||L(g1) - L(g2)||_1 <= lipschitz_bound(M1, M2) * ||g1 - g2||_1``
    whenever ``M2 = ||g2||_1``.  ``M1`` does not enter the factor.
    """
    if M1 < 0 or M2 < 0:
        raise ValueError("masses must be non-negative")
    return 1.0 + M2 / (2.0 * math.pi)


def inverse_lipschitz_bound(m):
    """L1 Lipschitz factor ``exp(m/2pi) (1 + m/2pi)`` of the inverse transform
    on BEFP profiles of mass at most ``m``.

    From ``|e^a - e^b| <= e^max(a,b) |a - b|`` applied to ``psi = phi e^Phi``.
    """
    if m < 0:
        raise ValueError("mass must be non-negative")
    x = m / (2.0 * math.pi)
    return math.exp(x) * (1.0 + x)


def l1_distance(p, q):
    """``||p - q||_1`` over the plane for two profiles on the same grid.

    Origin atoms contribute their mass difference.
    """
    if not p.grid.same_as(q.grid):
        raise ValueError("profiles live on different grids")
    diff = np.abs(p.values - q.values)
    return 2.0 * math.pi * (abs(p.atom - q.atom) + float(p.grid.node_weights @ diff))
