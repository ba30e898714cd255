import numpy as np
import pytest

from qfocus import ProperTimeGrid


def test_basic_properties():
    g = ProperTimeGrid(-2.0, 6.0, 801)
    assert g.h == pytest.approx(0.01)
    assert g.times[0] == -2.0
    assert g.times[-1] == 6.0
    assert len(g.times) == 801


def test_validation():
    with pytest.raises(ValueError):
        ProperTimeGrid(1.0, 0.0, 11)
    with pytest.raises(ValueError):
        ProperTimeGrid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        ProperTimeGrid(0.0, float("inf"), 11)


def test_index_of_and_contains():
    g = ProperTimeGrid(0.0, 1.0, 101)
    assert g.contains(0.5)
    assert not g.contains(1.5)
    assert g.index_of(0.5) == 50
    with pytest.raises(ValueError):
        g.index_of(2.0)


def test_prefix_and_refined():
    g = ProperTimeGrid(0.0, 1.0, 101)
    p = g.prefix(51)
    assert p.n_points == 51
    assert p.t_end == pytest.approx(0.5)
    assert p.h == pytest.approx(g.h)
    r = g.refined(2)
    assert r.n_points == 201
    assert r.h == pytest.approx(g.h / 2)


def test_times_read_only():
    g = ProperTimeGrid(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        g.times[0] = 99.0
    assert np.all(g.times == np.linspace(0, 1, 11))
