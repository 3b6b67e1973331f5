import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maslov_shoot.errors import Degenerate, DegenerateEndpoint
from maslov_shoot.hamiltonian import Signature, SplitSymmetricPath, decouple, fundamental_solution
from maslov_shoot.maslov import (ConstantSplitSpectrum, count_N, degenerate_bound, is_dirichlet_eigenvalue,
                                 maslov_all_methods, maslov_constant_split, maslov_crossing_form,
                                 maslov_from_phase_angles)
from maslov_shoot.phase_angles import compute_phase_trace
from oracles import count_below, maslov_twice_constant

PI = np.pi


def trace_for(diag, nu, grid=129):
    sig = Signature(len(diag), nu)
    return compute_phase_trace(fundamental_solution(decouple(SplitSymmetricPath.from_diagonal(diag, sig)), grid))


def test_count_examples():
    assert count_N(0.0) == 0
    assert count_N(4 * PI ** 2) == 1
    assert count_N(50.0) == 2


@settings(max_examples=200)
@given(st.floats(-1e4, 1e4))
def test_count_matches_oracle(a):
    assert count_N(a) == count_below(a)


def test_constant_split_examples():
    assert maslov_constant_split(ConstantSplitSpectrum((50.0,), (-50.0,))).twice_value == 0
    assert maslov_constant_split(ConstantSplitSpectrum((50.0,), (5.0,))).twice_value == 4
    assert maslov_constant_split(np.diag([50.0, 50.0]), Signature(2, 0)).value == 4


def test_constant_split_degenerate():
    with pytest.raises(Degenerate):
        maslov_constant_split(ConstantSplitSpectrum((PI ** 2,), ()))
    assert is_dirichlet_eigenvalue(4 * PI ** 2)
    assert not is_dirichlet_eigenvalue(-PI ** 2)


def test_from_matrix_uses_block_eigenvalues():
    S = np.array([[40.0, 5.0, 0.0], [5.0, 10.0, 0.0], [0.0, 0.0, -3.0]])
    spec = ConstantSplitSpectrum.from_matrix(S, Signature(3, 1))
    assert np.allclose(sorted(spec.lam), np.linalg.eigvalsh(S[:2, :2]))
    assert spec.mu == (-3.0,)


def test_phase_angle_examples():
    assert maslov_from_phase_angles(trace_for([50.0], 0)).twice_value == 4
    assert maslov_from_phase_angles(trace_for([-50.0], 1)).twice_value == -4
    assert maslov_from_phase_angles(trace_for([0.0], 0)).twice_value == 0
    with pytest.raises(DegenerateEndpoint):
        maslov_from_phase_angles(trace_for([PI ** 2], 0))


def test_crossing_form_examples():
    m = maslov_crossing_form(trace_for([4 * PI ** 2], 0))
    assert m.twice_value == 3
    assert 0 < m.epsilon < 0.5
    assert maslov_crossing_form(trace_for([0.0], 0)).twice_value == 0
    assert maslov_crossing_form(trace_for([50.0, 5.0], 1)).twice_value == 4


def test_degenerate_bound_examples():
    spec = ConstantSplitSpectrum((PI ** 2,), ())
    measured = maslov_crossing_form(trace_for([PI ** 2], 0)).twice_value
    assert measured == 1
    assert degenerate_bound(spec, measured)
    ok = ConstantSplitSpectrum((50.0,), (5.0,))
    assert degenerate_bound(ok, 4)
    assert not degenerate_bound(ok, 4 + 2 * 2 + 1)


def test_all_methods_report():
    comp = maslov_all_methods(SplitSymmetricPath.from_diagonal([50.0, -50.0], Signature(2, 1)))
    assert comp.agree
    assert set(comp.values) == {"constant_split", "phase_angles", "crossing_form"}


def test_time_dependent_path_two_methods():
    sig = Signature(2, 1)
    path = SplitSymmetricPath.from_blocks(lambda t: np.array([[20.0 + 60.0 * t]]),
                                          lambda t: np.array([[-15.0 - 20.0 * t * t]]), sig)
    comp = maslov_all_methods(path)
    assert "constant_split" not in comp.values
    assert comp.agree


def _off_lattice(x):
    k = max(1, round(np.sqrt(abs(x)) / PI))
    return abs(abs(x) - (k * PI) ** 2) > 0.1


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-150, 150).filter(_off_lattice), min_size=1, max_size=3), st.data())
def test_three_way_agreement_property(diag, data):
    nu = data.draw(st.integers(0, len(diag)))
    sig = Signature(len(diag), nu)
    tr = trace_for(diag, nu)
    a = maslov_constant_split(np.diag(diag), sig).twice_value
    assert a == maslov_twice_constant(diag[: sig.m], diag[sig.m:])
    assert a == maslov_from_phase_angles(tr).twice_value == maslov_crossing_form(tr).twice_value
