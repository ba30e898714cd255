"""Classical expansion dynamics of a timelike geodesic congruence.

The nonlinear equation for the expansion scalar theta along proper time is

    dtheta/dt = -theta^2/3 - sigma2 + omega2 - ricci_xx

with sigma2, omega2 the squared shear and twist scalars and ricci_xx the
Ricci tensor contracted twice with the tangent. Writing theta = 3 phidot/phi
turns it into a linear second-order equation for phi with the external
potential

    V = (sigma2 - omega2 + t_anom/2) / 3,

and a focusing point (theta -> -infinity) shows up as a zero of phi.

Integration is a fixed-step classical Runge-Kutta scheme: deterministic
across platforms and with a testable order of convergence. Sampled
coefficients are interpolated with a cubic spline, which preserves the
scheme's order and is exact for constant backgrounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, ZeroCrossingError
from .grids import ProperTimeGrid

__all__ = [
    "CongruenceBackground",
    "Potential",
    "Trajectory",
    "RaychaudhuriResult",
    "potential_from_background",
    "evolve_classical_raychaudhuri",
    "theta_from_phi",
    "solve_linear_phi",
    "detect_collapse",
    "BLOWUP_THRESHOLD",
    "ZERO_TOLERANCE",
]

#: |theta| beyond which the nonlinear solve is declared divergent.
BLOWUP_THRESHOLD = 1.0e12

#: |phi| below which a sample counts as an exact zero (focusing point).
ZERO_TOLERANCE = 1.0e-12


def _as_samples(values, grid: ProperTimeGrid, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.n_points, float(arr))
    if arr.shape != (grid.n_points,):
        raise ConfigurationError(
            f"{name}: expected {grid.n_points} samples, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name}: samples must be finite")
    return arr


@dataclass(frozen=True)
class CongruenceBackground:
    """Classical background scalars sampled along proper time.

    sigma2 and omega2 are the non-negative squared shear and twist, ricci_xx
    is R_cd xi^c xi^d, and t_anom the anomalous stress-tensor contribution
    (all user-supplied samples; the fluctuations do not act back on them).
    """

    sigma2: np.ndarray
    omega2: np.ndarray
    ricci_xx: np.ndarray
    t_anom: np.ndarray

    def __post_init__(self):
        arrays = {}
        n = None
        for name in ("sigma2", "omega2", "ricci_xx", "t_anom"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ConfigurationError(f"{name} must be a 1-d sample sequence")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ConfigurationError(
                    f"{name} has {arr.size} samples, expected {n}"
                )
            if not np.all(np.isfinite(arr)):
                raise ConfigurationError(f"{name} contains non-finite samples")
            arrays[name] = arr
        if np.any(arrays["sigma2"] < 0):
            raise ConfigurationError("sigma2 must be non-negative")
        if np.any(arrays["omega2"] < 0):
            raise ConfigurationError("omega2 must be non-negative")
        for name, arr in arrays.items():
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def flat(cls, grid: ProperTimeGrid) -> "CongruenceBackground":
        z = np.zeros(grid.n_points)
        return cls(z, z, z, z)

    @classmethod
    def constant(cls, grid: ProperTimeGrid, sigma2: float = 0.0,
                 omega2: float = 0.0, ricci_xx: float = 0.0,
                 t_anom: float = 0.0) -> "CongruenceBackground":
        n = grid.n_points
        return cls(np.full(n, sigma2), np.full(n, omega2),
                   np.full(n, ricci_xx), np.full(n, t_anom))

    @property
    def n_samples(self) -> int:
        return self.sigma2.size


@dataclass(frozen=True)
class Potential:
    """External potential V(t) of the linear phi equation, sampled on a grid."""

    values: np.ndarray
    grid: ProperTimeGrid

    def __post_init__(self):
        vals = _as_samples(self.values, self.grid, "potential")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: ProperTimeGrid, value: float) -> "Potential":
        return cls(np.full(grid.n_points, float(value)), grid)

    @classmethod
    def flat(cls, grid: ProperTimeGrid) -> "Potential":
        return cls.constant(grid, 0.0)

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))


@dataclass(frozen=True)
class Trajectory:
    """A sampled real function of proper time."""

    grid: ProperTimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_points,):
            raise ConfigurationError(
                f"trajectory has {vals.shape} values for a "
                f"{self.grid.n_points}-point grid"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def pairs(self) -> np.ndarray:
        """(n, 2) array of ordered (t, value) rows."""
        return np.column_stack([self.times, self.values])


@dataclass(frozen=True)
class RaychaudhuriResult:
    """Outcome of the nonlinear expansion solve.

    When the solution blows up before t_end, `trajectory` holds the samples
    up to the last finite one, `diverged` is set, and `divergence_time`
    estimates the caustic position by extrapolating 1/theta to zero (1/theta
    is asymptotically linear near the pole).
    """

    trajectory: Trajectory
    diverged: bool
    divergence_time: Optional[float]


def potential_from_background(bg: CongruenceBackground,
                              grid: ProperTimeGrid) -> Potential:
    """V = (sigma2 - omega2 + t_anom/2) / 3 at every grid point."""
    if bg.n_samples != grid.n_points:
        raise ConfigurationError(
            f"background has {bg.n_samples} samples, grid has {grid.n_points}"
        )
    v = (bg.sigma2 - bg.omega2 + 0.5 * bg.t_anom) / 3.0
    return Potential(v, grid)


def _spline_or_constant(values: np.ndarray, grid: ProperTimeGrid):
    """Callable coefficient on [t_start, t_end]; avoids spline wiggle for constants."""
    if np.ptp(values) == 0.0:
        c = float(values[0])
        return lambda t, c=c: c
    return CubicSpline(grid.times, values)


def evolve_classical_raychaudhuri(theta0: float, bg: CongruenceBackground,
                                  grid: ProperTimeGrid,
                                  blowup_threshold: float = BLOWUP_THRESHOLD,
                                  ) -> RaychaudhuriResult:
    """Integrate dtheta/dt = -theta^2/3 - sigma2 + omega2 - ricci_xx.

    Fixed-step RK4 from theta(t_start) = theta0. Integration halts once
    |theta| exceeds `blowup_threshold` (or stops being finite); the result
    then carries the truncated trajectory and a divergence-time estimate.
    """
    if not np.isfinite(theta0):
        raise ConfigurationError("theta0 must be finite")
    if abs(theta0) >= blowup_threshold:
        raise ConfigurationError(
            f"|theta0| = {abs(theta0)} already beyond the blow-up threshold"
        )
    if bg.n_samples != grid.n_points:
        raise ConfigurationError(
            f"background has {bg.n_samples} samples, grid has {grid.n_points}"
        )

    drive_samples = -bg.sigma2 + bg.omega2 - bg.ricci_xx
    drive = _spline_or_constant(drive_samples, grid)

    def rhs(t, th):
        return -th * th / 3.0 + drive(t)

    times = grid.times
    h = grid.h
    out = np.empty(grid.n_points)
    out[0] = theta0
    n_good = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(grid.n_points - 1):
            t = times[i]
            y = out[i]
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2.0, y + h / 2.0 * k1)
            k3 = rhs(t + h / 2.0, y + h / 2.0 * k2)
            k4 = rhs(t + h, y + h * k3)
            y_next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(y_next) or abs(y_next) > blowup_threshold:
                break
            out[i + 1] = y_next
            n_good += 1

    if n_good == grid.n_points:
        return RaychaudhuriResult(Trajectory(grid, out), False, None)

    sub = grid.prefix(max(n_good, 2))
    traj = Trajectory(sub, out[: sub.n_points])
    t_div = _extrapolate_divergence_time(traj)
    return RaychaudhuriResult(traj, True, t_div)


def _extrapolate_divergence_time(traj: Trajectory) -> float:
    """Root of the line through the last two samples of 1/theta.

    For the vacuum dust solution theta = theta0/(1 + theta0 t / 3) the
    reciprocal is exactly linear, so the extrapolation is exact there.
    """
    t = traj.times
    th = traj.values
    t1, t2 = t[-2], t[-1]
    th1, th2 = th[-2], th[-1]
    if th1 == 0.0 or th2 == 0.0 or np.sign(th1) != np.sign(th2):
        return float(t2 + (t2 - t1))
    w1, w2 = 1.0 / th1, 1.0 / th2
    if w2 == w1:
        return float(t2 + (t2 - t1))
    t_root = t2 - w2 * (t2 - t1) / (w2 - w1)
    return float(t_root)


def theta_from_phi(phi: Trajectory, tol: float = ZERO_TOLERANCE) -> Trajectory:
    """theta = 3 phidot / phi with second-order finite differences.

    Central differences inside, one-sided second-order at the endpoints.
    Raises ZeroCrossingError at the first sample where |phi| <= tol: a zero
    of phi is a focusing point and theta is not defined past it.
    """
    vals = phi.values
    small = np.nonzero(np.abs(vals) <= tol)[0]
    if small.size:
        i = int(small[0])
        raise ZeroCrossingError(i, float(phi.times[i]))
    dphi = np.gradient(vals, phi.grid.h, edge_order=2)
    return Trajectory(phi.grid, 3.0 * dphi / vals)


def solve_linear_phi(phi0: float, phidot0: float, V: Optional[Potential],
                     source: Optional[Trajectory],
                     grid: ProperTimeGrid) -> Trajectory:
    """Fixed-step RK4 solve of phidotdot + (V + source/3) phi = 0.

    `source` is a sampled classical stand-in for the quadratic fluctuation
    term (lambda * phidot_matter^2); pass None for the free equation. The
    explicit 1/3 matches the interaction normalization of the phi equation.
    """
    if not (np.isfinite(phi0) and np.isfinite(phidot0)):
        raise ConfigurationError("initial data must be finite")
    coeff = np.zeros(grid.n_points)
    if V is not None:
        if V.grid != grid:
            raise ConfigurationError("potential grid does not match")
        coeff = coeff + V.values
    if source is not None:
        if source.grid != grid:
            raise ConfigurationError("source grid does not match")
        coeff = coeff + source.values / 3.0
    cfun = _spline_or_constant(coeff, grid)

    def rhs(t, y):
        return np.array([y[1], -cfun(t) * y[0]])

    times = grid.times
    h = grid.h
    out = np.empty(grid.n_points)
    y = np.array([float(phi0), float(phidot0)])
    out[0] = y[0]
    for i in range(grid.n_points - 1):
        t = times[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2.0, y + h / 2.0 * k1)
        k3 = rhs(t + h / 2.0, y + h / 2.0 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y[0]
    return Trajectory(grid, out)


def detect_collapse(phi: Trajectory, tol: float = ZERO_TOLERANCE) -> Optional[float]:
    """First zero of phi: exact small samples win, else a linear-interpolated
    sign change. None when phi keeps its sign on the whole grid."""
    vals = phi.values
    t = phi.times
    small = np.abs(vals) <= tol
    prods = vals[:-1] * vals[1:]
    crossings = prods <= 0.0

    i_small = int(np.argmax(small)) if small.any() else None
    i_cross = int(np.argmax(crossings)) if crossings.any() else None

    if i_small is not None and (i_cross is None or i_small <= i_cross):
        return float(t[i_small])
    if i_cross is None:
        return None
    i = i_cross
    a, b = vals[i], vals[i + 1]
    # a is nonzero here (|a| > tol), and a, b have opposite signs or b == 0
    frac = a / (a - b)
    return float(t[i] + frac * phi.grid.h)
