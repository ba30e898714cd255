"""Retarded fundamental solution of d^2/dt^2 + V on a proper-time grid.

The retarded kernel factorizes as R_V(x1, x2) = theta(x1-x2) S(x1, x2) where
S is the unique antisymmetric bi-solution of the homogeneous equation with
unit slope at coincidence. S is assembled from two independent homogeneous
solutions u, v (unit Wronskian initial data):

    S(x1, x2) = v(x1) u(x2) - u(x1) v(x2),

which is antisymmetric by construction and needs only two fixed-step ODE
solves for the whole two-point table. Retarded integrals against grid
samples reduce to cumulative Simpson integrals of u*f and v*f, so every
quadrature endpoint falls on a grid point and the theta kink never lands
inside a cell (S vanishes at coincidence, keeping the integrand continuous
there).

Caution: for strongly negative V over long intervals u and v grow
exponentially and the difference formula loses digits; the potentials
treated here are desk-scale (|V| of order one on intervals of a few Planck
times).
"""

from __future__ import annotations

import threading
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .congruence import Potential, Trajectory, _spline_or_constant
from .grids import ProperTimeGrid
from .smearing import TestFunction

__all__ = [
    "GreenOperator",
    "bisolution",
    "retarded_apply",
    "retarded_adjoint_apply",
    "verify_green",
]


def _solve_homogeneous_pair(V: Potential) -> tuple[np.ndarray, ...]:
    """RK4 solve of y'' + V y = 0 for initial data (1,0) and (0,1) at t_start."""
    grid = V.grid
    vfun = _spline_or_constant(V.values, grid)
    times = grid.times
    h = grid.h

    def rhs(t, y):
        # y rows: (value, derivative) for each of the two solutions
        return np.column_stack([y[:, 1], -vfun(t) * y[:, 0]])

    y = np.array([[1.0, 0.0], [0.0, 1.0]])
    u = np.empty(grid.n_points)
    udot = np.empty(grid.n_points)
    v = np.empty(grid.n_points)
    vdot = np.empty(grid.n_points)
    u[0], udot[0] = y[0]
    v[0], vdot[0] = y[1]
    for i in range(grid.n_points - 1):
        t = times[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2.0, y + h / 2.0 * k1)
        k3 = rhs(t + h / 2.0, y + h / 2.0 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u[i + 1], udot[i + 1] = y[0]
        v[i + 1], vdot[i + 1] = y[1]
    return u, udot, v, vdot


class GreenOperator:
    """Retarded Green machinery for a fixed sampled potential.

    Immutable after construction; the O(n^2) bi-solution table is filled
    lazily under a lock, everything else is precomputed.
    """

    def __init__(self, potential: Potential):
        self.potential = potential
        self.grid = potential.grid
        self.u, self.udot, self.v, self.vdot = _solve_homogeneous_pair(potential)
        for arr in (self.u, self.udot, self.v, self.vdot):
            arr.setflags(write=False)
        self._u_spline = CubicSpline(self.grid.times, self.u)
        self._v_spline = CubicSpline(self.grid.times, self.v)
        self._table: Optional[np.ndarray] = None
        self._table_lock = threading.Lock()

    @classmethod
    def flat(cls, grid: ProperTimeGrid) -> "GreenOperator":
        """Green operator of the vanishing potential (S(x1,x2) = x1-x2)."""
        return cls(Potential.flat(grid))

    @property
    def bisolution_table(self) -> np.ndarray:
        """S(t_i, t_j) as an (n, n) table; antisymmetric to rounding."""
        if self._table is None:
            with self._table_lock:
                if self._table is None:
                    table = np.outer(self.v, self.u) - np.outer(self.u, self.v)
                    table.setflags(write=False)
                    self._table = table
        return self._table

    def bisolution(self, x2: float) -> Callable[[np.ndarray], np.ndarray]:
        """S(., x2): solves the homogeneous equation with a simple zero of
        unit slope at x2. Domain error if x2 lies off the grid interval."""
        if not self.grid.contains(x2):
            raise ValueError(
                f"x2={x2} outside the grid [{self.grid.t_start}, {self.grid.t_end}]"
            )
        u2 = float(self._u_spline(x2))
        v2 = float(self._v_spline(x2))

        def s_at(x1):
            return self._v_spline(x1) * u2 - self._u_spline(x1) * v2

        return s_at

    def wronskian_drift(self) -> float:
        """max |u v' - u' v - 1|: conservation check of the ODE integrator."""
        w = self.u * self.vdot - self.udot * self.v
        return float(np.max(np.abs(w - 1.0)))

    def _sample_and_clip(self, f: TestFunction) -> tuple[np.ndarray, float, float]:
        lo, hi = f.effective_support()
        if lo < self.grid.t_start or hi > self.grid.t_end:
            raise ValueError(
                f"test-function support [{lo}, {hi}] escapes the grid "
                f"[{self.grid.t_start}, {self.grid.t_end}]"
            )
        return f.values_on(self.grid), lo, hi


def bisolution(V: Potential, x2: float) -> Callable[[np.ndarray], np.ndarray]:
    """Convenience wrapper: bi-solution of a bare potential at source point x2."""
    return GreenOperator(V).bisolution(x2)


def retarded_apply(G: GreenOperator, f: TestFunction) -> Trajectory:
    """(R_V f)(t) = integral_{s <= t} S(t, s) f(s) ds on the grid.

    The output vanishes identically (exactly) before the support of f.
    """
    fs, lo, _ = G._sample_and_clip(f)
    h = G.grid.h
    a = cumulative_simpson(G.u * fs, dx=h, initial=0.0)
    b = cumulative_simpson(G.v * fs, dx=h, initial=0.0)
    out = G.v * a - G.u * b
    out[G.grid.times <= lo] = 0.0
    return Trajectory(G.grid, out)


def retarded_adjoint_apply(G: GreenOperator, f: TestFunction) -> Trajectory:
    """f_R(x) = integral_{y >= x} S(y, x) f(y) dy on the grid.

    The adjoint weight vanishes identically (exactly) past the support of f.
    """
    fs, _, hi = G._sample_and_clip(f)
    h = G.grid.h
    a = cumulative_simpson(G.u * fs, dx=h, initial=0.0)
    b = cumulative_simpson(G.v * fs, dx=h, initial=0.0)
    ra = a[-1] - a
    rb = b[-1] - b
    out = G.u * rb - G.v * ra
    out[G.grid.times >= hi] = 0.0
    return Trajectory(G.grid, out)


def verify_green(G: GreenOperator, f: TestFunction) -> float:
    """max over interior grid points of |(d^2/dt^2 + V)(R_V f) - f|.

    The second derivative is a central finite difference, so the residual of
    a smooth f shrinks as h^2 under grid refinement.
    """
    g = retarded_apply(G, f).values
    fs = f.values_on(G.grid)
    h = G.grid.h
    d2 = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / (h * h)
    resid = d2 + G.potential.values[1:-1] * g[1:-1] - fs[1:-1]
    return float(np.max(np.abs(resid)))
