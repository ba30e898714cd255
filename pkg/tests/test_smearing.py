import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qfocus import (
    ConfigurationError,
    CouplingWindow,
    PolynomialBump,
    ProperTimeGrid,
    ResolutionError,
    TestFunction,
    fourier_transform,
)
from qfocus.smearing import mollifier_derivative, _simpson_weights


# ---------------------------------------------------------------------------
# mollifier derivative machinery
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sympy_bump_derivs():
    """Independent oracle: symbolic derivatives of exp(1 - 1/(1-w^2))."""
    w = sp.symbols("w")
    expr = sp.exp(1 - 1 / (1 - w**2))
    return [sp.lambdify(w, sp.diff(expr, w, k), "math") for k in range(9)]


@pytest.mark.parametrize("order", range(9))
def test_mollifier_derivatives_match_symbolic(order, sympy_bump_derivs):
    # near the support edge the expanded prefactor polynomial is mildly
    # ill-conditioned; a few times 1e-9 relative is the honest agreement there
    us = np.linspace(-0.995, 0.995, 41)
    mine = mollifier_derivative(order, us)
    oracle = np.array([sympy_bump_derivs[order](u) for u in us])
    scale = np.max(np.abs(oracle))
    assert np.max(np.abs(mine - oracle)) < 1e-8 * scale


def test_mollifier_vanishes_outside():
    us = np.array([-2.0, -1.0, 1.0, 1.5])
    for order in range(9):
        assert np.all(mollifier_derivative(order, us) == 0.0)


def test_mollifier_unit_peak():
    assert mollifier_derivative(0, 0.0) == pytest.approx(1.0)


def test_mollifier_order_out_of_range():
    with pytest.raises(ValueError):
        mollifier_derivative(9, 0.0)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

class TestGaussianKind:
    def test_unit_integral(self):
        f = TestFunction.gaussian()
        assert f.integral() == 1.0
        assert f(0.0) == pytest.approx(1.0 / math.sqrt(math.pi))

    def test_fourier_closed_form(self):
        # base profile transforms to exp(-p^2/4)
        f = TestFunction.gaussian()
        p = np.linspace(0.0, 8.0, 33)
        assert np.max(np.abs(f.fourier(p) - np.exp(-(p**2) / 4.0))) < 1e-15

    def test_fourier_at_zero_is_integral(self):
        f = TestFunction.gaussian(normalization=2.5)
        assert f.fourier(0.0)[0] == pytest.approx(2.5)

    def test_dilation_rescales_transform(self):
        # f_tau(x) = f(x/tau)/tau  =>  f_tau_hat(p) = f_hat(tau p)
        f = TestFunction.gaussian()
        tau = 3.0
        p = np.linspace(-4.0, 4.0, 17)
        assert np.allclose(f.dilated(tau).fourier(p), f.fourier(tau * p),
                           rtol=0, atol=1e-15)

    def test_dilation_preserves_integral(self):
        f = TestFunction.gaussian(center=0.7, normalization=1.3)
        assert f.dilated(5.0).integral() == pytest.approx(1.3)

    def test_center_shifts_phase_only(self):
        f = TestFunction.gaussian()
        g = f.translated(1.2)
        p = np.linspace(0.0, 5.0, 11)
        assert np.allclose(np.abs(g.fourier(p)), np.abs(f.fourier(p)))

    def test_invalid_tau(self):
        with pytest.raises(ConfigurationError):
            TestFunction.gaussian(tau=0.0)


class TestSampledKind:
    def test_matches_gaussian_when_sampled(self):
        grid = ProperTimeGrid(-9.0, 9.0, 3001)
        f = TestFunction.gaussian()
        fs = TestFunction.from_samples(f.values_on(grid), grid)
        assert fs.integral() == pytest.approx(1.0, abs=1e-12)
        p = np.linspace(0.0, 6.0, 25)
        assert np.max(np.abs(fs.fourier(p) - np.exp(-(p**2) / 4.0))) < 1e-12

    def test_fourier_at_zero_is_integral(self):
        grid = ProperTimeGrid(-2.0, 2.0, 501)
        fs = TestFunction.bump(grid, 0.3, 0.8)
        assert fs.fourier(0.0)[0].real == pytest.approx(fs.integral(), rel=1e-12)

    def test_dilation_is_exact_on_samples(self):
        grid = ProperTimeGrid(-2.0, 2.0, 401)
        fs = TestFunction.bump(grid, 0.0, 1.0)
        tau = 2.0
        fd = fs.dilated(tau)
        assert fd.grid.t_start == pytest.approx(-4.0)
        # f_tau(x) = f(x/tau)/tau at corresponding sample points
        assert np.allclose(fd.samples, fs.samples / tau)
        assert fd.integral() == pytest.approx(fs.integral(), rel=1e-12)

    def test_effective_support_from_nonzero_samples(self):
        grid = ProperTimeGrid(-2.0, 2.0, 401)
        fs = TestFunction.bump(grid, 0.5, 0.5)
        lo, hi = fs.effective_support()
        assert lo == pytest.approx(0.0, abs=2 * grid.h)
        assert hi == pytest.approx(1.0, abs=2 * grid.h)

    def test_length_mismatch_rejected(self):
        grid = ProperTimeGrid(-2.0, 2.0, 401)
        with pytest.raises(ConfigurationError):
            TestFunction.from_samples(np.zeros(400), grid)

    def test_evaluation_off_grid_interpolates_and_zero_pads(self):
        grid = ProperTimeGrid(-1.0, 1.0, 801)
        fs = TestFunction.bump(grid, 0.0, 0.9)
        assert fs(0.12345) == pytest.approx(
            float(mollifier_derivative(0, 0.12345 / 0.9)), abs=1e-9)
        assert fs(3.0) == 0.0


@given(st.floats(min_value=0.1, max_value=10.0),
       st.floats(min_value=-3.0, max_value=3.0))
@settings(max_examples=30, deadline=None)
def test_fourier_dilation_property(tau, p):
    f = TestFunction.gaussian()
    lhs = f.dilated(tau).fourier(p)[0]
    rhs = f.fourier(tau * p)[0]
    assert abs(lhs - rhs) < 1e-14


# ---------------------------------------------------------------------------
# Simpson weights helper
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 5, 9, 4, 6, 10, 2])
def test_simpson_weights_integrate_cubics(n):
    h = 0.1
    w = _simpson_weights(n, h)
    t = np.arange(n) * h
    length = (n - 1) * h
    assert w.sum() == pytest.approx(length, rel=1e-13)
    if n >= 3:
        # composite Simpson (with 3/8 patch) is exact for cubics
        assert w @ t**3 == pytest.approx(length**4 / 4.0, rel=1e-12)


# ---------------------------------------------------------------------------
# coupling windows
# ---------------------------------------------------------------------------

class TestCouplingWindow:
    def test_adiabatic_is_unit(self):
        lam = CouplingWindow.adiabatic_limit()
        g = ProperTimeGrid(0.0, 1.0, 11)
        assert np.all(lam.values_on(g) == 1.0)
        assert np.all(lam.derivative(3, g.times) == 0.0)
        assert lam.support() is None

    def test_bump_support_and_peak(self):
        lam = CouplingWindow.bump(1.0, 2.0)
        assert lam.support() == (-1.0, 3.0)
        assert lam(1.0) == pytest.approx(1.0)
        assert lam(3.5) == 0.0

    def test_derivatives_scale_with_width(self, sympy_bump_derivs):
        lam = CouplingWindow.bump(0.0, 2.0)
        ts = np.linspace(-1.9, 1.9, 21)
        for k in (1, 4, 8):
            oracle = np.array([sympy_bump_derivs[k](t / 2.0) for t in ts]) / 2.0**k
            scale = max(np.max(np.abs(oracle)), 1e-30)
            assert np.max(np.abs(lam.derivative(k, ts) - oracle)) < 1e-9 * scale

    def test_resolution_validation(self):
        g = ProperTimeGrid(0.0, 1.0, 11)   # h = 0.1
        with pytest.raises(ResolutionError):
            CouplingWindow.bump(0.5, 0.5).validate_resolution(g)
        with pytest.raises(ConfigurationError):
            CouplingWindow.bump(0.0, 3.0).validate_resolution(
                ProperTimeGrid(0.0, 1.0, 1001))
        CouplingWindow.bump(0.5, 0.4).validate_resolution(
            ProperTimeGrid(0.0, 1.0, 1001))

    def test_zero_width_rejected(self):
        with pytest.raises(ConfigurationError):
            CouplingWindow.bump(0.0, 0.0)


# ---------------------------------------------------------------------------
# polynomial bumps
# ---------------------------------------------------------------------------

class TestPolynomialBump:
    def test_against_symbolic(self):
        # (1 + w + 2 w^3) * bump(w), derivatives up to 8
        w = sp.symbols("w")
        expr = (1 + w + 2 * w**3) * sp.exp(1 - 1 / (1 - w**2))
        pb = PolynomialBump((1.0, 1.0, 0.0, 2.0), center=0.5, width=2.0)
        us = np.linspace(-1.4, 2.4, 17)
        for k in (0, 3, 8):
            fn = sp.lambdify(w, sp.diff(expr, w, k), "math")
            oracle = np.array([fn((u - 0.5) / 2.0) for u in us]) / 2.0**k
            scale = max(np.max(np.abs(oracle)), 1e-30)
            assert np.max(np.abs(pb.derivative(k, us) - oracle)) < 1e-8 * scale

    def test_vanishes_outside_support_exactly(self):
        pb = PolynomialBump((1.0, 2.0), center=0.0, width=1.0)
        for k in range(9):
            assert pb.derivative(k, 1.5) == 0.0
            assert pb.derivative(k, -1.0) == 0.0

    def test_order_above_eight_raises(self):
        pb = PolynomialBump((1.0,))
        with pytest.raises(ResolutionError):
            pb.derivative(9, 0.0)
