"""Uniformly sampled vector signals on a finite horizon.

Signals live on a fixed uniform grid over [0, t_f] and are treated as
piecewise-linear in time.  The L2 inner product is evaluated with the
trapezoidal rule; the quadrature sum is accumulated symmetrically in
time so that time reversal preserves inner products and norms to the
last bit, not just to rounding order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two signals on different grids are combined."""


def as_signature(sigma, size: int, name: str = "sigma") -> np.ndarray:
    """Validate a diagonal signature matrix (entries +1 or -1) of the given size."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (size, size):
        raise ValueError(f"{name} must be {size} x {size}, got {sigma.shape}")
    if np.any(sigma - np.diag(np.diagonal(sigma))):
        raise ValueError(f"{name} must be diagonal")
    if not np.all(np.abs(np.diagonal(sigma)) == 1.0):
        raise ValueError(f"{name} diagonal entries must be +1 or -1")
    return sigma


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_f] with n_steps intervals (n_steps + 1 nodes)."""

    t_f: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.t_f > 0:
            raise ValueError(f"t_f must be positive, got {self.t_f}")
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be at least 2, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_f / self.n_steps

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.linspace(0.0, self.t_f, self.n_steps + 1)
        t.flags.writeable = False
        return t

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_steps + 1, self.dt)
        w[0] = 0.5 * self.dt
        w[-1] = 0.5 * self.dt
        w.flags.writeable = False
        return w


def _symmetric_quad_sum(s: np.ndarray) -> float:
    # Pair node i with node N - i before summing.  The trapezoid weights are
    # symmetric, so a time-reversed signal produces the same pair values and
    # the same float result, making J an exact isometry in finite precision.
    n = s.shape[0]
    half = n // 2
    total = float(np.sum(s[:half] + s[-1 : -half - 1 : -1]))
    if n % 2 == 1:
        total += float(s[half])
    return total


@dataclass(frozen=True, eq=False)
class Signal:
    """Immutable (n_steps + 1) x m array of samples on a TimeGrid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n_nodes:
            raise ValueError(
                f"values must be ({self.grid.n_nodes}, m), got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, grid: TimeGrid, m: int) -> "Signal":
        return cls(grid, np.zeros((grid.n_nodes, m)))

    @classmethod
    def from_function(cls, grid: TimeGrid, f) -> "Signal":
        """Sample f(t) at the grid nodes; f returns a scalar or length-m vector."""
        rows = np.array([np.atleast_1d(f(t)) for t in grid.nodes], dtype=float)
        return cls(grid, rows)

    def apply_matrix(self, mat: np.ndarray) -> "Signal":
        """Apply a constant channel map node-wise: v(t) = mat @ u(t)."""
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        if mat.shape[1] != self.m:
            raise ValueError(f"matrix has {mat.shape[1]} columns, signal has {self.m} channels")
        return Signal(self.grid, self.values @ mat.T)

    def _check_same_grid(self, other: "Signal") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")

    def __add__(self, other: "Signal") -> "Signal":
        self._check_same_grid(other)
        if other.m != self.m:
            raise ValueError(f"channel counts differ: {self.m} vs {other.m}")
        return Signal(self.grid, self.values + other.values)

    def __sub__(self, other: "Signal") -> "Signal":
        self._check_same_grid(other)
        if other.m != self.m:
            raise ValueError(f"channel counts differ: {self.m} vs {other.m}")
        return Signal(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Signal":
        return Signal(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "Signal":
        return Signal(self.grid, -self.values)


def time_reverse(u: Signal) -> Signal:
    """Reflect a signal about the horizon midpoint: (Ju)(t) = u(t_f - t)."""
    return Signal(u.grid, u.values[::-1])


def inner_product(u: Signal, v: Signal) -> float:
    """Trapezoidal approximation of the L2 inner product on [0, t_f]."""
    u._check_same_grid(v)
    if u.m != v.m:
        raise ValueError(f"channel counts differ: {u.m} vs {v.m}")
    node_dots = np.einsum("ij,ij->i", u.values, v.values)
    return _symmetric_quad_sum(node_dots * u.grid.trapezoid_weights)


def norm(u: Signal, p: float = 2) -> float:
    """Signal norm: p = 2 for the L2 norm, p = inf for the sup over nodes."""
    if p == 2:
        sq = np.einsum("ij,ij->i", u.values, u.values)
        return math.sqrt(max(_symmetric_quad_sum(sq * u.grid.trapezoid_weights), 0.0))
    if p == math.inf:
        return float(np.max(np.abs(u.values)))
    raise ValueError(f"p must be 2 or inf, got {p}")


def write_csv(u: Signal, path) -> None:
    """Write as CSV with header t,u_1,...,u_m at full double precision."""
    header = ",".join(["t"] + [f"u_{j + 1}" for j in range(u.m)])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for t, row in zip(u.grid.nodes, u.values):
            fh.write(",".join(f"{x:.17g}" for x in (t, *row)) + "\n")


def read_csv(path) -> Signal:
    """Read a signal written by write_csv; the grid is rebuilt from the t column."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    if t.shape[0] < 3 or t[0] != 0.0:
        raise ValueError(f"{path}: expected at least 3 nodes starting at t = 0")
    n_steps = t.shape[0] - 1
    grid = TimeGrid(t_f=float(t[-1]), n_steps=n_steps)
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-9 * grid.t_f):
        raise ValueError(f"{path}: time column is not a uniform grid")
    return Signal(grid, data[:, 1:])
