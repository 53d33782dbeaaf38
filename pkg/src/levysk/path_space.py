"""Cadlag paths on a grid and the three distances the experiments compare.

A GridPath is a time grid plus node values with an interpolation convention:
"step" (cadlag piecewise-constant, for noise-driven positions and velocities)
or "linear" (for time integrals of velocities).  The module computes

* the uniform distance  sup_t |x(t) - y(t)|,
* the L1 distance       int_0^T |x(t) - y(t)| dt  (exact segment integrals),
* a grid-restricted Skorokhod distance: Billingsley's equivalent metric
  inf_lambda max(||lambda - id||, ||x - y o lambda||) minimized over
  piecewise-linear bijections that map merged grid nodes to merged grid
  nodes.  That restriction is an upper bound on the true infimum, is exact
  for jump-alignment configurations, and is computed by an O(n*m)
  minimax dynamic program over monotone node matchings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridPath",
    "uniform_distance",
    "l1_distance",
    "skorokhod_distance",
]

_HORIZON_RTOL = 1e-12


@dataclass
class GridPath:
    """Grid path: strictly increasing times from 0, one d-vector per node."""

    times: np.ndarray
    values: np.ndarray
    interp: str = "step"

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        self.values = values
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("times must be a 1-d array with at least two nodes")
        if self.times[0] != 0.0:
            raise ValueError(f"times must start at 0, got {self.times[0]}")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.values.shape[0] != self.times.size:
            raise ValueError(
                f"values must have one row per node ({self.times.size}), "
                f"got {self.values.shape[0]}"
            )
        if self.interp not in ("step", "linear"):
            raise ValueError(f"interp must be 'step' or 'linear', got {self.interp!r}")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __call__(self, t) -> np.ndarray:
        """Evaluate the path at times t (right-continuous for step paths)."""
        t = np.asarray(t, dtype=float)
        if self.interp == "step":
            idx = np.searchsorted(self.times, t, side="right") - 1
            idx = np.clip(idx, 0, self.times.size - 1)
            return self.values[idx]
        out = np.empty(t.shape + (self.dim,))
        for j in range(self.dim):
            out[..., j] = np.interp(t, self.times, self.values[:, j])
        return out

    def left_limit(self, t) -> np.ndarray:
        """Left limits x(t-); equals the value itself for linear paths."""
        t = np.asarray(t, dtype=float)
        if self.interp == "linear":
            return self(t)
        idx = np.searchsorted(self.times, t, side="left") - 1
        idx = np.clip(idx, 0, self.times.size - 1)
        return self.values[idx]


def _merged_nodes(x: GridPath, y: GridPath) -> np.ndarray:
    tx, ty = x.horizon, y.horizon
    if abs(tx - ty) > _HORIZON_RTOL * max(1.0, abs(tx), abs(ty)):
        raise ValueError(f"paths must share the horizon, got {tx} and {ty}")
    return np.union1d(x.times, y.times)


def uniform_distance(x: GridPath, y: GridPath) -> float:
    """sup over merged nodes (and pre-jump left limits) of |x(t) - y(t)|."""
    nodes = _merged_nodes(x, y)
    diff = x(nodes) - y(nodes)
    sup = float(np.linalg.norm(diff, axis=1).max())
    interior = nodes[1:]
    ldiff = x.left_limit(interior) - y.left_limit(interior)
    sup_left = float(np.linalg.norm(ldiff, axis=1).max()) if interior.size else 0.0
    return max(sup, sup_left)


def _segment_abs_integral(d0: np.ndarray, d1: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Exact integral of |d0 + s*(d1-d0)| over s in [0,1], times dt, per row."""
    q = d1 - d0
    a = np.einsum("ij,ij->i", q, q)
    b = 2.0 * np.einsum("ij,ij->i", d0, q)
    c = np.einsum("ij,ij->i", d0, d0)
    out = np.empty(a.shape)

    flat = a <= 1e-30 * np.maximum(c, 1.0)
    out[flat] = np.sqrt(c[flat])

    disc = 4.0 * a * c - b * b  # >= 0 by Cauchy-Schwarz
    disc = np.maximum(disc, 0.0)
    lin = (~flat) & (disc <= 1e-24 * (4.0 * a * np.maximum(c, 1.0)))
    if np.any(lin):
        # difference passes through (or grazes) zero: |d0 + s q| = sqrt(a)|s - s0|
        ra = np.sqrt(a[lin])
        s0 = -b[lin] / (2.0 * a[lin])
        crossing = (s0 > 0.0) & (s0 < 1.0)
        out[lin] = np.where(
            crossing,
            ra * (s0**2 + (1.0 - s0) ** 2) / 2.0,
            ra * np.abs(0.5 - s0),
        )

    gen = (~flat) & (~lin)
    if np.any(gen):
        ag, bg, cg = a[gen], b[gen], c[gen]
        dg = disc[gen]

        def antider(s):
            r = np.sqrt(ag * s * s + bg * s + cg)
            u = 2.0 * ag * s + bg
            return u * r / (4.0 * ag) + dg / (8.0 * ag**1.5) * np.arcsinh(u / np.sqrt(dg))

        out[gen] = antider(1.0) - antider(0.0)
    return out * dt


def l1_distance(x: GridPath, y: GridPath) -> float:
    """int_0^T |x(t) - y(t)| dt, exact under the declared conventions."""
    nodes = _merged_nodes(x, y)
    left_ends = nodes[:-1]
    right_ends = nodes[1:]
    d0 = x(left_ends) - y(left_ends)
    d1 = x.left_limit(right_ends) - y.left_limit(right_ends)
    return float(_segment_abs_integral(d0, d1, np.diff(nodes)).sum())


def _alignment_costs(x: GridPath, y: GridPath):
    """Cell and corner costs of the segment-alignment lattice.

    The merged grid cuts [0,T] into segments on which both step paths are
    constant.  A time change is encoded as a monotone staircase through the
    lattice of (x-segment, y-segment) cells; carrying part of x-segment i
    onto y-segment j costs

        cell(i,j) = max(|x_i - y_j|, gap between the closed segments),

    and a diagonal step into cell (i,j) additionally pins the time change to
    the lattice corner, costing |tau_i - tau_j|.  The value at the right
    endpoint T is matched separately (lambda(T) = T).
    """
    nodes = _merged_nodes(x, y)
    xv = x(nodes[:-1])
    yv = y(nodes[:-1])
    k = nodes.size - 1  # number of segments
    vc2 = np.zeros((k, k))
    for j in range(xv.shape[1]):
        vc2 += (xv[:, j][:, None] - yv[:, j][None, :]) ** 2
    cell = np.sqrt(vc2)
    lo = nodes[:-1]
    hi = nodes[1:]
    gap = np.maximum(lo[:, None] - hi[None, :], lo[None, :] - hi[:, None])
    np.maximum(cell, np.maximum(gap, 0.0), out=cell)
    corner = np.abs(lo[:, None] - lo[None, :])
    end_cost = float(np.linalg.norm(x(nodes[-1:]) - y(nodes[-1:])))
    return cell, corner, end_cost


def _minimax_alignment(cell: np.ndarray, corner: np.ndarray) -> float:
    """Min over monotone staircases of the max cost along the way.

    Steps are (i+1,j), (i,j+1), (i+1,j+1); diagonal steps add the corner
    cost of the cell they enter.  Swept by antidiagonal so each sweep is a
    vectorized slice update.
    """
    n, m = cell.shape
    inf = np.inf
    prev2 = np.full(n, inf)
    prev = np.full(n, inf)
    prev[0] = cell[0, 0]
    if n == 1 and m == 1:
        return float(prev[0])
    for k in range(1, n + m - 1):
        cur = np.full(n, inf)
        i_lo = max(0, k - m + 1)
        i_hi = min(k, n - 1)
        i = np.arange(i_lo, i_hi + 1)
        c = cell[i, k - i]
        up = np.full(i.size, inf)
        if i_lo == 0:
            up[1:] = prev[i_lo:i_hi]
        else:
            up[:] = prev[i_lo - 1 : i_hi]
        left = np.where(i <= k - 1, prev[i], inf)
        diag = np.full(i.size, inf)
        take = (i >= 1) & (i <= k - 1)
        if np.any(take):
            it = i[take]
            diag[take] = np.maximum(prev2[it - 1], corner[it, k - it])
        cur[i] = np.maximum(c, np.minimum(np.minimum(up, left), diag))
        prev2, prev = prev, cur
    return float(prev[n - 1])


def skorokhod_distance(x: GridPath, y: GridPath) -> float:
    """Grid-restricted Skorokhod distance between two step paths.

    Upper bound on inf over increasing bijections of
    max(||lambda - id||_inf, ||x - y o lambda||_inf), minimized over time
    changes whose vertices align merged-grid segments; exact for
    jump-alignment configurations and non-increasing under grid refinement.
    """
    if x.interp != "step" or y.interp != "step":
        raise ValueError("skorokhod_distance requires cadlag step paths")
    cell, corner, end_cost = _alignment_costs(x, y)
    return max(_minimax_alignment(cell, corner), end_cost)
