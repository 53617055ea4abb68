"""Running-integral weights for sampled radial profiles.

Each grid interval ``[r[k-1], r[k]]`` is integrated exactly against the
cubic through the four nearest nodes (clipped at both ends of the grid),
so the running integral is fourth-order accurate on smooth data.  The
weights are stored in a banded form that the inverse transform reuses
to solve its linear recurrence.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IntervalWeights:
    """Per-interval quadrature weights.

    ``start[k-1]`` is the first stencil node of interval ``k`` and
    ``weights[k-1, j]`` multiplies the sample at ``start[k-1] + j``.
    """

    start: np.ndarray
    weights: np.ndarray

    @property
    def width(self):
        return self.weights.shape[1]

    def increments(self, values):
        """Integral of ``values`` over every grid interval."""
        values = np.asarray(values, dtype=float)
        idx = self.start[:, None] + np.arange(self.width)[None, :]
        return np.einsum("kj,kj->k", self.weights, values[idx])

    def node_weights(self, n_nodes):
        """Collapse to weights for the integral over the whole grid."""
        w = np.zeros(n_nodes)
        idx = self.start[:, None] + np.arange(self.width)[None, :]
        np.add.at(w, idx.ravel(), self.weights.ravel())
        return w


def interval_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    n_int = nodes.size - 1
    p = min(4, nodes.size)
    k = np.arange(1, n_int + 1)
    start = np.clip(k - p // 2, 0, nodes.size - p)
    stencil = nodes[start[:, None] + np.arange(p)[None, :]]
    # local coordinate on each interval, scaled to unit width for conditioning
    lo = nodes[k - 1]
    width = nodes[k] - lo
    x = (stencil - lo[:, None]) / width[:, None]
    powers = np.arange(p)
    vander = x[:, None, :] ** powers[None, :, None]  # (n_int, p, p): row = power
    moments = 1.0 / (powers + 1.0)  # integral of x**q over [0, 1]
    w = np.linalg.solve(vander, np.broadcast_to(moments, (n_int, p))[..., None])[..., 0]
    return IntervalWeights(start=start, weights=w * width[:, None])


def cumulative(values, nodes, initial=0.0, weights=None):
    """Running integral of ``values`` starting from ``initial`` at ``nodes[0]``."""
    if weights is None:
        weights = interval_weights(nodes)
    inc = weights.increments(values)
    out = np.empty(inc.size + 1)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out + initial


def integrate(values, nodes, weights=None):
    if weights is None:
        weights = interval_weights(nodes)
    return float(np.sum(weights.increments(values)))


def derivative(values, nodes):
    """First derivative at every node from the quartic through the five
    nearest nodes (one-sided near the ends)."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    p = min(5, nodes.size)
    k = np.arange(nodes.size)
    start = np.clip(k - p // 2, 0, nodes.size - p)
    idx = start[:, None] + np.arange(p)[None, :]
    stencil = nodes[idx]
    scale = stencil[:, -1] - stencil[:, 0]
    x = (stencil - nodes[:, None]) / scale[:, None]
    powers = np.arange(p)
    vander = x[:, None, :] ** powers[None, :, None]
    # d/dx of x**q at 0 picks out q = 1
    rhs = np.zeros((nodes.size, p, 1))
    rhs[:, 1, 0] = 1.0
    w = np.linalg.solve(vander, rhs)[..., 0]
    return np.einsum("kj,kj->k", w, values[idx]) / scale
