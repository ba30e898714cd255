import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from qfocus import (
    GreenOperator,
    Potential,
    ProperTimeGrid,
    TestFunction,
    bisolution,
    retarded_adjoint_apply,
    retarded_apply,
    verify_green,
)

GRID = ProperTimeGrid(-2.0, 6.0, 801)


def smooth_random_potential(grid, seed=11, amplitude=0.5):
    """Fixed-seed smooth potential: a short Fourier sum, |V| <= amplitude."""
    rng = np.random.default_rng(seed)
    t = grid.times
    span = grid.t_end - grid.t_start
    v = np.zeros_like(t)
    for k in range(1, 4):
        v += rng.normal() * np.sin(2 * np.pi * k * (t - grid.t_start) / span)
        v += rng.normal() * np.cos(2 * np.pi * k * (t - grid.t_start) / span)
    return Potential(amplitude * v / np.max(np.abs(v)), grid)


def smoothed_plateau(grid, lo=0.0, hi=1.0, edge=0.125):
    """Unit plateau on [lo, hi] with symmetric quintic-smoothstep edges.

    Against any kernel linear in s the symmetric edges integrate exactly like
    the sharp indicator, so closed-form plateau values stay exact.
    """
    t = grid.times

    def smoothstep(x):
        x = np.clip(x, 0.0, 1.0)
        return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)

    vals = smoothstep((t - lo + edge / 2) / edge) * smoothstep(
        (hi + edge / 2 - t) / edge
    )
    return TestFunction.from_samples(vals, grid)


# ---------------------------------------------------------------------------
# bi-solution
# ---------------------------------------------------------------------------

class TestBisolution:
    def test_flat_is_time_difference(self):
        G = GreenOperator.flat(GRID)
        x2 = 1.5
        s = G.bisolution(x2)(GRID.times)
        assert np.max(np.abs(s - (GRID.times - x2))) < 1e-10

    def test_harmonic_is_sine(self):
        # V = 1 with unit slope at coincidence -> sin(x1 - x2); h = 1e-3
        grid = ProperTimeGrid(-2.0, 6.0, 8001)
        G = GreenOperator(Potential.constant(grid, 1.0))
        x2 = 0.5
        s = G.bisolution(x2)(grid.times)
        assert np.max(np.abs(s - np.sin(grid.times - x2))) < 1e-6

    def test_zero_at_coincidence_exact(self):
        for V in (Potential.flat(GRID), Potential.constant(GRID, 1.0),
                  smooth_random_potential(GRID)):
            G = GreenOperator(V)
            tbl = G.bisolution_table
            assert np.all(np.diag(tbl) == 0.0)

    def test_antisymmetry(self):
        for V in (Potential.flat(GRID), Potential.constant(GRID, 1.0),
                  smooth_random_potential(GRID)):
            tbl = GreenOperator(V).bisolution_table
            assert np.max(np.abs(tbl + tbl.T)) < 1e-9

    @pytest.mark.parametrize("make_v, c_slope", [
        (Potential.flat, 1e-12),          # S = x1-x2 exactly, no h^2 term
        (lambda g: Potential.constant(g, 1.0), 1.0),
        (smooth_random_potential, 2.0),
    ])
    def test_unit_coincidence_slope(self, make_v, c_slope):
        G = GreenOperator(make_v(GRID))
        tbl = G.bisolution_table
        h = GRID.h
        idx = np.arange(50, GRID.n_points - 50, 25)
        slopes = (tbl[idx + 1, idx] - tbl[idx - 1, idx]) / (2.0 * h)
        assert np.max(np.abs(slopes - 1.0)) < max(c_slope * h**2, 1e-12)

    def test_coincidence_slope_second_order(self):
        # |slope - 1| shrinks ~4x when h halves (harmonic case, sin(h)/h)
        devs = []
        for n in (401, 801):
            grid = ProperTimeGrid(-2.0, 6.0, n)
            G = GreenOperator(Potential.constant(grid, 1.0))
            tbl = G.bisolution_table
            i = grid.index_of(2.0)
            devs.append(abs((tbl[i + 1, i] - tbl[i - 1, i]) / (2 * grid.h) - 1.0))
        assert 2.5 < devs[0] / devs[1] < 6.0

    def test_columns_solve_the_equation(self):
        V = smooth_random_potential(GRID)
        G = GreenOperator(V)
        tbl = G.bisolution_table
        h = GRID.h
        for j in (100, 400, 700):
            col = tbl[:, j]
            d2 = (col[2:] - 2 * col[1:-1] + col[:-2]) / h**2
            resid = np.max(np.abs(d2 + V.values[1:-1] * col[1:-1]))
            # FD residual of a smooth solution with |S| up to ~range
            assert resid < 20.0 * h**2

    def test_wronskian_conserved(self):
        for V in (Potential.flat(GRID), Potential.constant(GRID, 1.0),
                  smooth_random_potential(GRID)):
            assert GreenOperator(V).wronskian_drift() < 1e-9

    def test_source_point_outside_grid_rejected(self):
        with pytest.raises(ValueError):
            bisolution(Potential.flat(GRID), 7.0)

    def test_bisolution_matches_initial_conditions(self):
        # u(x2) = 0 with unit slope, both measured off-grid via the callable
        V = smooth_random_potential(GRID)
        s = bisolution(V, 1.234)
        assert abs(float(s(1.234))) < 1e-12
        eps = 1e-5
        slope = (float(s(1.234 + eps)) - float(s(1.234 - eps))) / (2 * eps)
        assert slope == pytest.approx(1.0, abs=1e-7)


# ---------------------------------------------------------------------------
# retarded application
# ---------------------------------------------------------------------------

class TestRetardedApply:
    def test_plateau_closed_form(self):
        # V = 0: (R f)(2) = int_0^1 (2 - s) ds = 3/2
        grid = ProperTimeGrid(-2.0, 6.0, 8001)
        G = GreenOperator.flat(grid)
        f = smoothed_plateau(grid)
        rv = retarded_apply(G, f)
        assert rv.values[grid.index_of(2.0)] == pytest.approx(1.5, abs=1e-6)

    def test_vanishes_before_support_exactly(self):
        G = GreenOperator(Potential.constant(GRID, 1.0))
        f = TestFunction.bump(GRID, 2.0, 0.7)
        rv = retarded_apply(G, f)
        lo, _ = f.effective_support()
        assert np.all(rv.values[GRID.times <= lo] == 0.0)

    def test_narrow_bump_approaches_kernel(self):
        # V = 1: (R f)(t) -> sin(t - s0) * int f as the bump shrinks
        grid = ProperTimeGrid(-2.0, 6.0, 8001)
        G = GreenOperator(Potential.constant(grid, 1.0))
        s0, t_eval = 1.0, 4.0
        errs = []
        for width in (0.4, 0.2, 0.1):
            f = TestFunction.bump(grid, s0, width)
            rv = retarded_apply(G, f)
            target = math.sin(t_eval - s0) * f.integral()
            errs.append(abs(rv.values[grid.index_of(t_eval)] - target))
        assert errs[1] < errs[0] / 3.0
        assert errs[2] < errs[1] / 3.0

    def test_support_escaping_grid_rejected(self):
        G = GreenOperator.flat(GRID)
        with pytest.raises(ValueError):
            retarded_apply(G, TestFunction.gaussian(center=5.0, tau=1.0))

    @given(st.floats(min_value=-1.0, max_value=4.0),
           st.floats(min_value=0.2, max_value=1.2))
    @settings(max_examples=25, deadline=None)
    def test_retardation_property(self, center, width):
        lo = max(center - width, GRID.t_start + GRID.h)
        hi = min(center + width, GRID.t_end - GRID.h)
        if hi - lo < 4 * GRID.h:
            return
        f = TestFunction.bump(GRID, (lo + hi) / 2, (hi - lo) / 2)
        rv = retarded_apply(GreenOperator.flat(GRID), f)
        flo, _ = f.effective_support()
        assert np.all(rv.values[GRID.times <= flo] == 0.0)


class TestRetardedAdjoint:
    def test_plateau_closed_form(self):
        # V = 0: f_R(-1) = int_0^1 (s + 1) ds = 3/2
        grid = ProperTimeGrid(-2.0, 6.0, 8001)
        G = GreenOperator.flat(grid)
        f = smoothed_plateau(grid)
        fr = retarded_adjoint_apply(G, f)
        assert fr.values[grid.index_of(-1.0)] == pytest.approx(1.5, abs=1e-6)

    def test_vanishes_past_support_exactly(self):
        G = GreenOperator(Potential.constant(GRID, 1.0))
        f = TestFunction.bump(GRID, 2.0, 0.7)
        fr = retarded_adjoint_apply(G, f)
        _, hi = f.effective_support()
        assert np.all(fr.values[GRID.times >= hi] == 0.0)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_pairing_symmetry(self, seed):
        # int g (R_V f) dt = int g_R f dt  (Fubini on the double integral)
        rng = np.random.default_rng(seed)
        G = GreenOperator(smooth_random_potential(GRID))
        f = TestFunction.bump(GRID, rng.uniform(-1, 3), rng.uniform(0.3, 1.0))
        g = TestFunction.bump(GRID, rng.uniform(-1, 3), rng.uniform(0.3, 1.0))
        lhs = simpson(g.values_on(GRID) * retarded_apply(G, f).values, dx=GRID.h)
        rhs = simpson(retarded_adjoint_apply(G, g).values * f.values_on(GRID),
                      dx=GRID.h)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


# ---------------------------------------------------------------------------
# inverse property
# ---------------------------------------------------------------------------

class TestVerifyGreen:
    def test_zero_function_zero_residual(self):
        G = GreenOperator.flat(GRID)
        f = TestFunction.from_samples(np.zeros(GRID.n_points), GRID)
        assert verify_green(G, f) == 0.0

    def test_residual_bound_flat(self):
        # empirical bound: residual <= 10 h^2 ||f''||_inf
        f = TestFunction.bump(GRID, 0.8, 1.0)
        fpp = np.max(np.abs(np.gradient(np.gradient(
            f.values_on(GRID), GRID.h), GRID.h)))
        assert verify_green(GreenOperator.flat(GRID), f) < 10 * GRID.h**2 * fpp

    def test_residual_bound_harmonic(self):
        f = TestFunction.bump(GRID, 0.8, 1.0)
        vals = f.values_on(GRID)
        fpp = np.max(np.abs(np.gradient(np.gradient(vals, GRID.h), GRID.h)))
        scale = fpp + np.max(np.abs(vals))
        G = GreenOperator(Potential.constant(GRID, 1.0))
        assert verify_green(G, f) < 10 * GRID.h**2 * scale

    @pytest.mark.parametrize("v_const", [0.0, 1.0])
    def test_convergence_order(self, v_const):
        residuals, hs = [], []
        for n in (201, 401, 801, 1601):
            grid = ProperTimeGrid(-2.0, 6.0, n)
            G = GreenOperator(Potential.constant(grid, v_const))
            f = TestFunction.bump(grid, 0.8, 1.0)
            residuals.append(verify_green(G, f))
            hs.append(grid.h)
        order = np.polyfit(np.log(hs), np.log(residuals), 1)[0]
        assert 1.8 <= order <= 2.2
