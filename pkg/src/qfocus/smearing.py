"""Smearing test functions, compactly supported coupling windows, and their
Fourier transforms.

Two families of test functions are supported:

* ``gaussian`` -- the analytic profile ``n * exp(-((t-c)/tau)^2) / (sqrt(pi) tau)``
  whose integral, Fourier transform, and dilation behavior are closed-form;
* ``sampled`` -- arbitrary values on a :class:`~qfocus.grids.ProperTimeGrid`,
  handled by composite quadrature.

Dilation acts as ``f_tau(x) = f(x/tau) / tau``, which preserves the integral
and rescales the transform as ``f_tau_hat(p) = f_hat(tau p)``.

The Fourier convention is ``f_hat(p) = integral f(x) exp(-i x p) dx``.

Coupling windows are either the adiabatic constant 1 or a fixed C-infinity
mollifier bump with analytically generated derivatives up to order 8; an
eighth derivative obtained by finite differences of samples would be far too
noisy for the moment kernels, so the derivative recursion is done on the
rational prefactor polynomials exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from .errors import ConfigurationError, ResolutionError
from .grids import ProperTimeGrid

__all__ = [
    "TestFunction",
    "CouplingWindow",
    "PolynomialBump",
    "fourier_transform",
    "mollifier_derivative",
]


# ---------------------------------------------------------------------------
# C-infinity mollifier exp(-1/(1-u^2)) and its derivatives
# ---------------------------------------------------------------------------

# E^(k)(u) = P_k(u) / (1-u^2)^(2k) * E(u) with E(u) = exp(-1/(1-u^2)).
# The P_k satisfy P_{k+1} = P_k' (1-u^2)^2 + (4k u (1-u^2) - 2u) P_k.
_U = Polynomial([0.0, 1.0])
_ONE_MINUS_U2 = Polynomial([1.0, 0.0, -1.0])

_MAX_DERIVATIVE = 8


def _build_prefactor_polys(max_order: int) -> list[Polynomial]:
    polys = [Polynomial([1.0])]
    for k in range(max_order):
        p = polys[-1]
        polys.append(
            p.deriv() * _ONE_MINUS_U2**2 + (4.0 * k * _U * _ONE_MINUS_U2 - 2.0 * _U) * p
        )
    return polys


_PREFACTOR_POLYS = _build_prefactor_polys(_MAX_DERIVATIVE)

# exp(-1/(1-u^2)) underflows long before the rational prefactor can overflow;
# beyond this exponent the product is < 1e-200 and is set to exactly zero.
_EXPONENT_CUTOFF = 600.0


def mollifier_derivative(order: int, u) -> np.ndarray:
    """k-th derivative of the unit-peak mollifier exp(1 - 1/(1-u^2)).

    Vanishes identically (with all derivatives) for |u| >= 1.
    """
    if not 0 <= order <= _MAX_DERIVATIVE:
        raise ValueError(f"derivative order {order} outside [0, {_MAX_DERIVATIVE}]")
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    if not np.any(inside):
        return out
    ui = u[inside]
    q = 1.0 - ui * ui
    expo = 1.0 / q
    live = expo <= _EXPONENT_CUTOFF
    ui, q, expo = ui[live], q[live], expo[live]
    vals = _PREFACTOR_POLYS[order](ui) / q ** (2 * order) * np.exp(1.0 - expo)
    tmp = np.zeros(np.count_nonzero(inside))
    tmp[live] = vals
    out[inside] = tmp
    return out


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

# |f| / peak below exp(-EFFECTIVE_RADIUS^2) ~ 4e-25 is treated as zero when
# locating the effective support of a gaussian profile.
_EFFECTIVE_RADIUS = 7.5


@dataclass(frozen=True)
class TestFunction:
    """Smearing function f, either analytic-gaussian or sampled-compact."""

    __test__ = False  # keep pytest from collecting the domain type

    kind: str
    center: float = 0.0
    tau: float = 1.0
    normalization: float = 1.0
    samples: Optional[np.ndarray] = None
    grid: Optional[ProperTimeGrid] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "sampled"):
            raise ConfigurationError(f"unknown test-function kind {self.kind!r}")
        if self.kind == "gaussian":
            if not self.tau > 0:
                raise ConfigurationError(f"dilation tau must be > 0, got {self.tau}")
        else:
            if self.samples is None or self.grid is None:
                raise ConfigurationError("sampled kind requires samples and grid")
            samples = np.asarray(self.samples, dtype=float)
            if samples.shape != (self.grid.n_points,):
                raise ConfigurationError(
                    f"sample count {samples.shape} does not match grid "
                    f"({self.grid.n_points} points)"
                )
            if not np.all(np.isfinite(samples)):
                raise ConfigurationError("samples must be finite")
            samples = samples.copy()
            samples.setflags(write=False)
            object.__setattr__(self, "samples", samples)

    # -- constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, center: float = 0.0, tau: float = 1.0,
                 normalization: float = 1.0) -> "TestFunction":
        """n * exp(-((t-c)/tau)^2) / (sqrt(pi) tau); integral equals n."""
        return cls(kind="gaussian", center=center, tau=tau,
                   normalization=normalization)

    @classmethod
    def from_samples(cls, samples, grid: ProperTimeGrid) -> "TestFunction":
        return cls(kind="sampled", samples=np.asarray(samples, dtype=float),
                   grid=grid)

    @classmethod
    def bump(cls, grid: ProperTimeGrid, center: float, width: float,
             amplitude: float = 1.0) -> "TestFunction":
        """Sampled mollifier bump supported on [center-width, center+width]."""
        u = (grid.times - center) / width
        return cls.from_samples(amplitude * mollifier_derivative(0, u), grid)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            z = (t - self.center) / self.tau
            return self.normalization * np.exp(-z * z) / (np.sqrt(np.pi) * self.tau)
        # Sampled values are exact on their own grid; cubic interpolation and a
        # hard zero outside the grid otherwise.
        from scipy.interpolate import CubicSpline

        spl = CubicSpline(self.grid.times, self.samples, extrapolate=False)
        out = spl(t)
        return np.where(np.isnan(out), 0.0, out)

    def values_on(self, grid: ProperTimeGrid) -> np.ndarray:
        if self.kind == "sampled" and grid == self.grid:
            return np.asarray(self.samples)
        return np.asarray(self(grid.times), dtype=float)

    def integral(self) -> float:
        if self.kind == "gaussian":
            return self.normalization
        return float(simpson(self.samples, dx=self.grid.h))

    # -- support ------------------------------------------------------------

    def effective_support(self) -> tuple[float, float]:
        """Interval outside which f is zero (sampled) or negligible (gaussian)."""
        if self.kind == "gaussian":
            r = _EFFECTIVE_RADIUS * self.tau
            return (self.center - r, self.center + r)
        nz = np.nonzero(self.samples)[0]
        if nz.size == 0:
            return (self.grid.t_start, self.grid.t_start)
        t = self.grid.times
        return (float(t[nz[0]]), float(t[nz[-1]]))

    # -- transforms ---------------------------------------------------------

    def dilated(self, tau: float) -> "TestFunction":
        """f_tau(x) = f(x/tau)/tau."""
        if not tau > 0:
            raise ConfigurationError(f"dilation parameter must be > 0, got {tau}")
        if self.kind == "gaussian":
            return TestFunction.gaussian(center=self.center * tau,
                                         tau=self.tau * tau,
                                         normalization=self.normalization)
        g = self.grid
        return TestFunction.from_samples(
            np.asarray(self.samples) / tau,
            ProperTimeGrid(g.t_start * tau, g.t_end * tau, g.n_points),
        )

    def translated(self, shift: float) -> "TestFunction":
        if self.kind == "gaussian":
            return TestFunction.gaussian(center=self.center + shift, tau=self.tau,
                                         normalization=self.normalization)
        g = self.grid
        return TestFunction.from_samples(
            self.samples, ProperTimeGrid(g.t_start + shift, g.t_end + shift,
                                         g.n_points)
        )

    def fourier(self, p) -> np.ndarray:
        return fourier_transform(self, p)


def fourier_transform(f: TestFunction, p) -> np.ndarray:
    """f_hat(p) = integral f(x) exp(-i x p) dx on the given frequencies.

    Closed form for the gaussian kind, composite Simpson quadrature for the
    sampled kind.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if f.kind == "gaussian":
        out = f.normalization * np.exp(-1j * p * f.center - (f.tau * p) ** 2 / 4.0)
        return out
    t = f.grid.times
    w = _simpson_weights(f.grid.n_points, f.grid.h)
    wf = w * f.samples
    out = np.empty(p.shape, dtype=complex)
    # chunked to keep the (n_t, n_p) phase matrix small
    step = max(1, 2_000_000 // t.size)
    for lo in range(0, p.size, step):
        block = p[lo:lo + step]
        out[lo:lo + step] = np.exp(-1j * np.outer(block, t)) @ wf
    return out


def _simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights on n uniform points (3/8 patch when n is even)."""
    if n < 2:
        raise ValueError("need at least two points")
    if n == 2:
        return np.array([0.5, 0.5]) * h
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 3
    # Simpson 1/3 over the first m points (odd count)
    if m >= 3:
        w[0:m:2] += 2.0 / 3.0
        w[1:m:2] += 4.0 / 3.0
        w[0] -= 1.0 / 3.0
        w[m - 1] -= 1.0 / 3.0
    if n % 2 == 0:
        if n == 4:
            w[:] = 0.0
            w[[0, 1, 2, 3]] = [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0]
        else:
            # Simpson 3/8 over the last three cells
            w[[n - 4, n - 3, n - 2, n - 1]] += [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0,
                                                3.0 / 8.0]
    return w * h


# ---------------------------------------------------------------------------
# Coupling windows
# ---------------------------------------------------------------------------

# A bump narrower than this many grid steps cannot resolve 8 derivatives.
_MIN_POINTS_PER_WIDTH = 16


@dataclass(frozen=True)
class CouplingWindow:
    """Coupling switch-on window: a mollifier bump, or the adiabatic constant 1.

    The bump is amplitude * exp(1 - 1/(1-u^2)) with u = (t-center)/width,
    supported on [center-width, center+width] and equal to `amplitude` at the
    center. Derivatives up to order 8 are analytic.
    """

    center: float = 0.0
    width: float = 0.0
    amplitude: float = 1.0
    adiabatic: bool = False

    def __post_init__(self):
        if not self.adiabatic and not self.width > 0:
            raise ConfigurationError("bump window requires width > 0")

    @classmethod
    def adiabatic_limit(cls) -> "CouplingWindow":
        """The constant window lambda = 1 (limit of bumps of growing support)."""
        return cls(adiabatic=True)

    @classmethod
    def bump(cls, center: float, width: float, amplitude: float = 1.0) -> "CouplingWindow":
        return cls(center=center, width=width, amplitude=amplitude)

    @property
    def is_adiabatic(self) -> bool:
        return self.adiabatic

    def support(self) -> Optional[tuple[float, float]]:
        if self.adiabatic:
            return None
        return (self.center - self.width, self.center + self.width)

    def derivative(self, order: int, t) -> np.ndarray:
        """Analytic d^k lambda / dt^k, order <= 8."""
        t = np.asarray(t, dtype=float)
        if self.adiabatic:
            if order == 0:
                return np.ones_like(t)
            return np.zeros_like(t)
        u = (t - self.center) / self.width
        return (self.amplitude / self.width**order) * mollifier_derivative(order, u)

    def __call__(self, t) -> np.ndarray:
        return self.derivative(0, t)

    def values_on(self, grid: ProperTimeGrid) -> np.ndarray:
        return self.derivative(0, grid.times)

    def validate_resolution(self, grid: ProperTimeGrid) -> None:
        """Require the bump to be wide enough for resolved 8th derivatives."""
        if self.adiabatic:
            return
        if self.width < _MIN_POINTS_PER_WIDTH * grid.h:
            raise ResolutionError(
                f"coupling window width {self.width} spans fewer than "
                f"{_MIN_POINTS_PER_WIDTH} grid steps (h={grid.h}); "
                "8th derivatives are not resolved"
            )
        lo, hi = self.support()
        if lo < grid.t_start or hi > grid.t_end:
            raise ConfigurationError(
                f"coupling window support [{lo}, {hi}] escapes the grid "
                f"[{grid.t_start}, {grid.t_end}]"
            )


@dataclass(frozen=True)
class PolynomialBump:
    """p(u) times a mollifier bump, with exact derivatives up to order 8.

    Convenient as a smooth compactly supported probe with an analytically
    known high-order derivative (finite differences of order 8 are hopeless).
    `coeffs` are polynomial coefficients in increasing degree, in the
    unscaled variable w = (u - center)/width.
    """

    coeffs: tuple
    center: float = 0.0
    width: float = 1.0
    _poly_derivs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigurationError("bump width must be > 0")
        polys = [Polynomial(list(self.coeffs))]
        for _ in range(_MAX_DERIVATIVE):
            polys.append(polys[-1].deriv())
        object.__setattr__(self, "_poly_derivs", tuple(polys))

    def support(self) -> tuple[float, float]:
        return (self.center - self.width, self.center + self.width)

    def derivative(self, order: int, u) -> np.ndarray:
        """Exact d^k/du^k [p * bump] by the Leibniz rule."""
        if not 0 <= order <= _MAX_DERIVATIVE:
            raise ResolutionError(
                f"derivative order {order} not available (max {_MAX_DERIVATIVE})"
            )
        u = np.asarray(u, dtype=float)
        w = (u - self.center) / self.width
        out = np.zeros_like(w)
        for j in range(order + 1):
            out += (comb(order, j) * self._poly_derivs[j](w)
                    * mollifier_derivative(order - j, w))
        return out / self.width**order

    def __call__(self, u) -> np.ndarray:
        return self.derivative(0, u)
