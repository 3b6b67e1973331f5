import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maslov_shoot.hamiltonian import Signature, SplitSymmetricPath, decouple, fundamental_solution
from maslov_shoot.phase_angles import (compute_phase_trace, crossing_dimensions, crossing_form, detect_crossings,
                                       frame_spectrum, k_alpha_values, y_matrix)
from oracles import scalar_angle

PI = np.pi


def trace_for(diag, nu, grid=129, force=False):
    sig = Signature(len(diag), nu)
    F = fundamental_solution(decouple(SplitSymmetricPath.from_diagonal(diag, sig)), grid, force_integration=force)
    return compute_phase_trace(F)


def test_y_matrix_is_unitary_symmetric():
    sig = Signature(2, 0)
    path = SplitSymmetricPath.from_blocks(lambda t: np.array([[30.0, 4.0], [4.0, -7.0 + t]]), None, sig)
    F = fundamental_solution(decouple(path), 17)
    Y = y_matrix(F.frames_at(0.6)[0])
    assert np.allclose(Y @ Y.conj().T, np.eye(2))
    assert np.allclose(Y, Y.T)


def test_frame_spectrum_at_start():
    assert np.allclose(frame_spectrum(np.vstack([np.zeros((2, 2)), np.eye(2)])), 0.0)


@pytest.mark.parametrize("a", [0.0, -1.0, PI ** 2, 4 * PI ** 2, 50.0, -30.0, 120.0])
def test_scalar_angles_match_closed_form(a):
    tr = trace_for([a], 0)
    for k in (0, len(tr.times) // 3, len(tr.times) - 1):
        assert abs(tr.raw1[k, 0] - scalar_angle(a, tr.times[k])) < 1e-8


def test_second_block_sign():
    tr = trace_for([-PI ** 2], 1)
    assert abs(tr.raw2[-1, 0] + PI) < 1e-8
    assert abs(trace_for([0.0], 1).raw2[-1, 0] + PI / 4) < 1e-8


@pytest.mark.parametrize("force", [False, True])
def test_crossings_of_4pi2(force):
    tr = trace_for([4 * PI ** 2], 0, force=force)
    cr = detect_crossings(tr, (1e-3, 1.0))
    assert [round(c.t, 9) for c in cr] == [0.5, 1.0]
    assert all(c.multiplicity == 1 for c in cr)


def test_double_crossing():
    d = 0.3
    tr = trace_for([PI ** 2 + d, PI ** 2 + d], 0)
    cr = detect_crossings(tr, (1e-3, 1.0))
    assert len(cr) == 1 and cr[0].multiplicity == 2
    assert 0.9 < cr[0].t < 1.0
    assert crossing_dimensions(tr, cr[0]) == (2, 2)


def test_no_crossings_for_zero():
    assert detect_crossings(trace_for([0.0], 0), (1e-3, 1.0)) == []


def test_crossing_form_sign():
    sig = Signature(2, 1)
    F = fundamental_solution(decouple(SplitSymmetricPath.from_diagonal([PI ** 2, -PI ** 2], sig)), 33)
    assert crossing_form(F, 1.0, 1)[0, 0] > 0
    assert crossing_form(F, 1.0, 2)[0, 0] < 0


def test_k_alpha_conventions():
    d = k_alpha_values([PI, 2.5 * PI], [-1.2 * PI])
    assert d.k1 == (0, 2)
    assert d.alpha1[0] == pytest.approx(PI) and d.alpha1[1] == pytest.approx(0.5 * PI)
    assert d.k2 == (1,) and d.alpha2[0] == pytest.approx(0.2 * PI)


def test_csv_header_and_line_endings():
    tr = trace_for([5.0, -5.0], 1, grid=9)
    text = tr.to_csv()
    assert text.splitlines()[0] == "t,theta1_1,theta2_1"
    assert "\r" not in text
    assert text.endswith("\n")


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-120, 180), min_size=1, max_size=3), st.data())
def test_grid_refinement_stability(diag, data):
    nu = data.draw(st.integers(0, len(diag)))
    a = trace_for(diag, nu, 65)
    b = trace_for(diag, nu, 129)
    for x, y in zip(a.terminal(), b.terminal()):
        assert np.allclose(x, y, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-120, 180), min_size=2, max_size=4), st.data())
def test_crossing_multiplicity_matches_kernel(diag, data):
    nu = data.draw(st.integers(0, len(diag)))
    tr = trace_for(diag, nu)
    for c in detect_crossings(tr, (1e-2, 1.0)):
        count, kdim = crossing_dimensions(tr, c)
        assert count == kdim == c.multiplicity


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-120, 180), min_size=1, max_size=3), st.data())
def test_crossing_form_signature_matches_angle_signs(diag, data):
    nu = data.draw(st.integers(0, len(diag)))
    tr = trace_for(diag, nu)
    for c in detect_crossings(tr, (1e-2, 0.999)):
        sig_total = 0
        for j in (1, 2):
            Q = crossing_form(tr.fundamental, c.t, j)
            if Q.size:
                ev = np.linalg.eigvalsh(Q)
                sig_total += int(np.sum(ev > 0) - np.sum(ev < 0))
        assert sig_total == c.signature_contribution
