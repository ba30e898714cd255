"""Uniform proper-time grids.

All dynamical quantities in this package live on a uniform sampling of a
proper-time interval, in Planck units (c = hbar = 8 pi G = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ProperTimeGrid:
    """Uniform sampling of [t_start, t_end] with n_points samples."""

    t_start: float
    t_end: float
    n_points: int
    _times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise ValueError("grid endpoints must be finite")
        if self.t_end <= self.t_start:
            raise ValueError(
                f"t_end ({self.t_end}) must exceed t_start ({self.t_start})"
            )
        if self.n_points < 2:
            raise ValueError(f"n_points must be >= 2, got {self.n_points}")
        times = np.linspace(self.t_start, self.t_end, self.n_points)
        times.setflags(write=False)
        object.__setattr__(self, "_times", times)

    @property
    def h(self) -> float:
        """Grid step (t_end - t_start)/(n_points - 1)."""
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        """Read-only array of the sample times."""
        return self._times

    def contains(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end

    def index_of(self, t: float) -> int:
        """Index of the grid point nearest to t (t must lie on the grid interval)."""
        if not self.contains(t):
            raise ValueError(f"t={t} outside grid [{self.t_start}, {self.t_end}]")
        return int(round((t - self.t_start) / self.h))

    def prefix(self, n: int) -> "ProperTimeGrid":
        """Sub-grid consisting of the first n samples."""
        if not 2 <= n <= self.n_points:
            raise ValueError(f"prefix length {n} outside [2, {self.n_points}]")
        return ProperTimeGrid(self.t_start, self._times[n - 1], n)

    def refined(self, factor: int = 2) -> "ProperTimeGrid":
        """Same interval with the step divided by `factor`."""
        return ProperTimeGrid(
            self.t_start, self.t_end, (self.n_points - 1) * factor + 1
        )


#: Default resolution used by the CLI when a config omits n_points.
DEFAULT_N_POINTS = 4001
