import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maslov_shoot.core_numerics import (TimeGrid, as_grid, bracket_root, expand_bracket, integrate, track_angles,
                                        unit_circle_eigvals, wrap)
from maslov_shoot.errors import NoBracket, NonFinite, NotUnitary, StepFailure, TrackingAmbiguity
from oracles import SINH_1


def harmonic(t, w):
    return np.array([w[1], -np.pi ** 2 * w[0]])


def test_time_grid_invariants():
    g = TimeGrid.uniform(5)
    assert g.t0 == 0.0 and g.t1 == 1.0 and len(g) == 5
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5, 1.0]))
    assert len(as_grid(17)) == 17


def test_zero_field_is_constant():
    tr = integrate(lambda t, w: np.zeros_like(w), [1.0, 0.0, 0.0], 9)
    assert np.all(tr.states == np.array([1.0, 0.0, 0.0]))


def test_sine_oracle():
    tr = integrate(harmonic, [0.0, 1.0], 33)
    assert abs(tr.final[0]) < 1e-8
    assert abs(tr.final[1] + 1.0) < 1e-8


def test_sinh_oracle():
    tr = integrate(lambda t, w: np.array([w[1], w[0]]), [0.0, 1.0], 33)
    assert abs(tr.final[0] - SINH_1) < 1e-8


def test_blowup_raises():
    with pytest.raises(NonFinite):
        integrate(lambda t, w: 1000.0 * w, [1.0], 5)
    with pytest.raises((NonFinite, StepFailure)):
        integrate(lambda t, w: w ** 2, [10.0], 5)


def _sine_error(tol):
    tr = integrate(harmonic, [0.0, 1.0], 2, tol=tol)
    return math.hypot(tr.final[0], tr.final[1] + 1.0)


def test_halving_tol_reduces_error_fourfold():
    # required gain per halving; a per-step error controller only gives about 2x
    for tol in (1e-6, 1e-8):
        assert _sine_error(tol / 2) * 4 <= _sine_error(tol)


def test_error_proportional_to_tol():
    for tol in (1e-4, 1e-6, 1e-8):
        e1, e2 = _sine_error(tol), _sine_error(tol / 100)
        assert e2 < e1 / 20
        assert e1 < tol


def test_unit_circle_examples():
    assert np.allclose(unit_circle_eigvals(np.eye(2)), [0, 0])
    assert np.allclose(np.sort(unit_circle_eigvals(np.diag([1j, -1j]))), [-np.pi / 2, np.pi / 2])
    c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    assert np.allclose(np.sort(unit_circle_eigvals(rot)), [-np.pi / 3, np.pi / 3])


def test_not_unitary():
    with pytest.raises(NotUnitary):
        unit_circle_eigvals(np.diag([2.0, 1.0]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3.1, 3.1), min_size=1, max_size=8))
def test_diagonal_unitary_round_trip(args):
    out = unit_circle_eigvals(np.diag(np.exp(1j * np.array(args))))
    assert np.allclose(np.sort(out), np.sort(args), atol=1e-9)


def test_wrap_range():
    x = wrap(np.array([np.pi, -np.pi, 3 * np.pi, 0.1]))
    assert np.all(x <= np.pi) and np.all(x > -np.pi)


def test_track_constant():
    g = TimeGrid.uniform(11)
    t, th = track_angles(np.zeros((11, 2)), g)
    assert np.all(th == 0)


def test_track_rotation_unwraps():
    # 2*theta rotates at 6 pi per unit time, theta reaches 3 pi
    g = TimeGrid.uniform(200)
    rate = 6 * np.pi

    def spec(t):
        return np.array([wrap(rate * t)])

    t, th = track_angles(np.array([spec(s) for s in g.points]), g, refine=spec)
    assert abs(th[-1, 0] - 3 * np.pi) < 1e-9
    assert np.all(np.abs(np.diff(th[:, 0])) < np.pi / 2)


def test_track_coarse_grid_refines():
    g = TimeGrid.uniform(3)
    rate = 6 * np.pi

    def spec(t):
        return np.array([wrap(rate * t), wrap(-rate * t / 2)])

    t, th = track_angles(np.array([spec(s) for s in g.points]), g, refine=spec)
    # both labels start coalesced at 0, so only the multiset is meaningful
    assert np.allclose(np.sort(th[-1]), [-1.5 * np.pi, 3 * np.pi], atol=1e-9)
    with pytest.raises(TrackingAmbiguity):
        track_angles(np.array([spec(s) for s in g.points]), g)


def test_track_prufer_scalar_monotone():
    # a = pi^2: 2*theta = 2*atan2(sin(pi t)/pi, cos(pi t))
    def spec(t):
        return np.array([wrap(2 * math.atan2(math.sin(math.pi * t) / math.pi, math.cos(math.pi * t)))])

    g = TimeGrid.uniform(65)
    t, th = track_angles(np.array([spec(s) for s in g.points]), g, refine=spec)
    assert abs(th[-1, 0] - np.pi) < 1e-9
    assert np.all(np.diff(th[:, 0]) > 0)


def test_bracket_examples():
    assert abs(bracket_root(lambda x: x - 2, 0, 5) - 2) < 1e-12
    assert abs(bracket_root(math.sin, 3, 4) - math.pi) < 1e-12
    assert abs(bracket_root(lambda x: x * x - 2, 1, 2) - math.sqrt(2)) < 1e-12
    with pytest.raises(NoBracket):
        bracket_root(lambda x: x * x + 1, -1, 1)


def test_expand_bracket():
    assert abs(expand_bracket(lambda x: x - 7.5, 0.0, 0.1, 100.0) - 7.5) < 1e-12
    with pytest.raises(NoBracket):
        expand_bracket(lambda x: 1.0, 0.0, 0.1, 10.0)
