import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maslov_shoot.errors import NotSplit
from maslov_shoot.hamiltonian import Signature, SplitSymmetricPath, decouple, fundamental_solution, scalar_sine


def test_signature():
    s = Signature(3, 1)
    assert s.m == 2
    assert np.array_equal(s.J, np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        Signature(9, 0)
    with pytest.raises(ValueError):
        Signature(2, 3)


def test_block_read_off():
    D = decouple(SplitSymmetricPath.from_diagonal([7.0, -3.0], Signature(2, 1)))
    assert np.array_equal(D.kA(0.3), np.array([[0.0, 1.0], [-7.0, 0.0]]))
    assert np.array_equal(D.kB(0.3), np.array([[0.0, -1.0], [3.0, 0.0]]))


def test_definite_and_antidefinite():
    D0 = decouple(SplitSymmetricPath.from_diagonal([2.0, 5.0], Signature(2, 0)))
    assert D0.kB(0.0).shape == (0, 0)
    assert np.array_equal(D0.kA(0.0), np.block([[np.zeros((2, 2)), np.eye(2)], [-np.diag([2.0, 5.0]), np.zeros((2, 2))]]))
    Dn = decouple(SplitSymmetricPath.from_diagonal([2.0, 5.0], Signature(2, 2)))
    assert Dn.kA(0.0).shape == (0, 0)


def test_not_split():
    with pytest.raises(NotSplit):
        SplitSymmetricPath.from_constant([[1.0, 0.5], [0.5, 2.0]], Signature(2, 1))
    with pytest.raises(NotSplit):
        SplitSymmetricPath.from_constant([[1.0, 0.5], [0.0, 2.0]], Signature(2, 0))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.data())
def test_conjugation_identity(n, data):
    nu = data.draw(st.integers(0, n))
    sig = Signature(n, nu)
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 16)))
    S = np.zeros((n, n))
    m = n - nu
    R = rng.normal(size=(n, n))
    S[:m, :m] = (R[:m, :m] + R[:m, :m].T)
    S[m:, m:] = (R[m:, m:] + R[m:, m:].T)
    D = decouple(SplitSymmetricPath.from_constant(S, sig))
    assert np.max(np.abs(D.U @ D.K(0.5) - D.K_tilde(0.5) @ D.U)) < 1e-12


def _close(F, j, t, X, P):
    assert np.allclose(F.X(j, t), X, atol=1e-8)
    assert np.allclose(F.P(j, t), P, atol=1e-8)


@pytest.mark.parametrize("force", [False, True])
def test_closed_forms(force):
    ts = [0.0, 0.3, 0.77, 1.0]
    F = fundamental_solution(decouple(SplitSymmetricPath.from_diagonal([0.0], Signature(1, 0))), 33,
                             force_integration=force)
    for t in ts:
        _close(F, 1, t, [[t]], [[1.0]])
    F = fundamental_solution(decouple(SplitSymmetricPath.from_diagonal([np.pi ** 2], Signature(1, 0))), 33,
                             force_integration=force)
    for t in ts:
        _close(F, 1, t, [[np.sin(np.pi * t) / np.pi]], [[np.cos(np.pi * t)]])
    c = 3.0
    F = fundamental_solution(decouple(SplitSymmetricPath.from_diagonal([-c * c], Signature(1, 1))), 33,
                             force_integration=force)
    for t in ts:
        _close(F, 2, t, [[-np.sin(c * t) / c]], [[np.cos(c * t)]])


def test_time_dependent_matches_constant_when_frozen():
    sig = Signature(2, 1)
    const = SplitSymmetricPath.from_diagonal([30.0, -20.0], sig)
    dyn = SplitSymmetricPath.from_blocks(lambda t: np.array([[30.0]]), lambda t: np.array([[-20.0]]), sig)
    F1 = fundamental_solution(decouple(const), 17)
    F2 = fundamental_solution(decouple(dyn), 17)
    for j in (1, 2):
        assert np.allclose(F1.frames(j), F2.frames(j), atol=1e-8)


def test_lagrangian_and_rank():
    sig = Signature(3, 1)
    path = SplitSymmetricPath.from_blocks(lambda t: np.array([[40 + 10 * t, 2.0], [2.0, -5.0]]),
                                          lambda t: np.array([[-30.0 * t]]), sig)
    F = fundamental_solution(decouple(path), 33)
    assert F.lagrangian_defect() < 1e-8
    F.check_rank()
    for j, d in ((1, 2), (2, 1)):
        Z0 = F.frames(j)[0]
        assert np.array_equal(Z0, np.vstack([np.zeros((d, d)), np.eye(d)]))


def test_scalar_sine_branches():
    s, ds = scalar_sine(np.array([4.0, 0.0, -4.0]), 0.5)
    assert np.allclose(s, [np.sin(1.0) / 2, 0.5, np.sinh(1.0) / 2])
    assert np.allclose(ds, [np.cos(1.0), 1.0, np.cosh(1.0)])
