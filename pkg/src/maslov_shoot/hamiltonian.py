"""Linear Hamiltonian systems with split symmetric coefficients.

The second order system ``J u'' + S(t) u = 0`` with
``J = diag(Id_{n-nu}, -Id_nu)`` is written in first order form
``w' = K(t) w`` with ``w = (u, v)``, ``v = J u'`` and

    K = [[0, J], [-S, 0]].

When ``S = diag(A, B)`` the system decouples, after a permutation of
coordinates, into ``kA = [[0, Id], [-A, 0]]`` and ``kB = [[0, -Id], [-B, 0]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core_numerics import TOL_INTEGRATE, TimeGrid, as_grid, integrate
from .errors import NotSplit, RankLoss

MAX_DIM = 8
TOL_SPLIT = 1e-12
TOL_SEPARATION = 1e-8


@dataclass(frozen=True)
class Signature:
    """Dimension ``n`` and number ``nu`` of negative entries of ``J``."""

    n: int
    nu: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DIM:
            raise ValueError(f"n must lie in [1, {MAX_DIM}], got {self.n}")
        if not 0 <= self.nu <= self.n:
            raise ValueError(f"nu must lie in [0, n], got {self.nu}")

    @property
    def m(self) -> int:
        """Size of the positive block."""
        return self.n - self.nu

    @property
    def jvec(self) -> np.ndarray:
        return np.concatenate([np.ones(self.m), -np.ones(self.nu)])

    @property
    def J(self) -> np.ndarray:
        return np.diag(self.jvec)

    def blocks(self, S: np.ndarray):
        m = self.m
        return S[:m, :m], S[m:, m:]


def _symmetric_split_defect(S: np.ndarray, sig: Signature) -> float:
    m = sig.m
    sym = np.max(np.abs(S - S.T), initial=0.0)
    off = max(np.max(np.abs(S[:m, m:]), initial=0.0), np.max(np.abs(S[m:, :m]), initial=0.0))
    return max(sym, off)


@dataclass
class SplitSymmetricPath:
    """A path ``t -> S(t)`` of symmetric matrices, block diagonal w.r.t. the signature.

    Parameters
    ----------
    sig : Signature
    S : callable
        Returns the full ``n x n`` matrix at time ``t``.
    constant : ndarray, optional
        Set when the path does not depend on ``t``.
    kind : str
        One of ``"constant"``, ``"expression"``, ``"tabulated"``, ``"callable"``.
    """

    sig: Signature
    S: Callable[[float], np.ndarray]
    constant: Optional[np.ndarray] = None
    kind: str = "callable"

    @classmethod
    def from_constant(cls, S, sig: Signature) -> "SplitSymmetricPath":
        S = np.array(S, dtype=float).reshape(sig.n, sig.n)
        if _symmetric_split_defect(S, sig) > TOL_SPLIT * max(1.0, np.max(np.abs(S))):
            raise NotSplit("constant matrix is not symmetric block diagonal")
        S = 0.5 * (S + S.T)
        return cls(sig, lambda t, _S=S: _S, S, "constant")

    @classmethod
    def from_diagonal(cls, diag, sig: Signature) -> "SplitSymmetricPath":
        return cls.from_constant(np.diag(np.asarray(diag, dtype=float)), sig)

    @classmethod
    def from_blocks(cls, A: Callable[[float], np.ndarray], B: Callable[[float], np.ndarray],
                    sig: Signature) -> "SplitSymmetricPath":
        m, nu = sig.m, sig.nu

        def full(t):
            out = np.zeros((sig.n, sig.n))
            if m:
                out[:m, :m] = np.asarray(A(t), dtype=float).reshape(m, m)
            if nu:
                out[m:, m:] = np.asarray(B(t), dtype=float).reshape(nu, nu)
            return out

        return cls(sig, full)

    @classmethod
    def tabulated(cls, times, matrices, sig: Signature) -> "SplitSymmetricPath":
        """Piecewise linear interpolation of sampled matrices."""
        times = np.asarray(times, dtype=float)
        mats = np.asarray(matrices, dtype=float).reshape(len(times), sig.n, sig.n)
        flat = mats.reshape(len(times), -1)

        def full(t):
            vals = np.array([np.interp(t, times, flat[:, k]) for k in range(flat.shape[1])])
            return vals.reshape(sig.n, sig.n)

        return cls(sig, full, None, "tabulated")

    def __call__(self, t: float) -> np.ndarray:
        return self.S(t)

    def A(self, t: float) -> np.ndarray:
        return self.S(t)[: self.sig.m, : self.sig.m]

    def B(self, t: float) -> np.ndarray:
        return self.S(t)[self.sig.m:, self.sig.m:]

    @property
    def is_constant(self) -> bool:
        return self.constant is not None


@dataclass
class DecoupledSystems:
    """The pair ``(kA, kB)`` and the permutation ``U`` with ``U K = K~ U``."""

    path: SplitSymmetricPath

    @property
    def sig(self) -> Signature:
        return self.path.sig

    def kA(self, t: float) -> np.ndarray:
        m = self.sig.m
        A = self.path.A(t)
        return np.block([[np.zeros((m, m)), np.eye(m)], [-A, np.zeros((m, m))]])

    def kB(self, t: float) -> np.ndarray:
        nu = self.sig.nu
        B = self.path.B(t)
        return np.block([[np.zeros((nu, nu)), -np.eye(nu)], [-B, np.zeros((nu, nu))]])

    def K(self, t: float) -> np.ndarray:
        n = self.sig.n
        return np.block([[np.zeros((n, n)), self.sig.J], [-self.path(t), np.zeros((n, n))]])

    def K_tilde(self, t: float) -> np.ndarray:
        m, nu = self.sig.m, self.sig.nu
        out = np.zeros((2 * self.sig.n, 2 * self.sig.n))
        out[: 2 * m, : 2 * m] = self.kA(t)
        out[2 * m:, 2 * m:] = self.kB(t)
        return out

    @property
    def U(self) -> np.ndarray:
        """Permutation taking ``(u1, u2, v1, v2)`` to ``(u1, v1, u2, v2)``."""
        n, m = self.sig.n, self.sig.m
        order = np.concatenate([np.arange(m), n + np.arange(m), m + np.arange(self.sig.nu),
                                n + m + np.arange(self.sig.nu)])
        return np.eye(2 * n)[order]


def decouple(path: SplitSymmetricPath, samples: int = 17) -> DecoupledSystems:
    """Check the split structure on sample times and return the block systems.

    Raises
    ------
    NotSplit
        If ``S(t)`` is not symmetric or has off-block entries above ``1e-12``
        (relative to its size) at any sampled time.
    """
    for t in np.linspace(0.0, 1.0, samples):
        S = np.asarray(path(t), dtype=float)
        scale = max(1.0, float(np.max(np.abs(S))))
        if _symmetric_split_defect(S, path.sig) > TOL_SPLIT * scale:
            raise NotSplit(f"S(t) is not symmetric and block diagonal at t={t:.4g}")
    return DecoupledSystems(path)


def scalar_sine(lam, t):
    """Solution of ``s'' = -lam s, s(0) = 0, s'(0) = 1`` and its derivative."""
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    pos = lam > 0
    neg = lam < 0
    w = np.sqrt(np.abs(lam))
    ws = np.where(w > 0, w, 1.0)
    s = np.where(pos, np.sin(ws * t) / ws, np.where(neg, np.sinh(ws * t) / ws, t))
    ds = np.where(pos, np.cos(ws * t), np.where(neg, np.cosh(ws * t), np.ones_like(t)))
    return s, ds


def _separated(eigs: np.ndarray) -> bool:
    if eigs.size < 2:
        return True
    return bool(np.min(np.diff(np.sort(eigs))) > TOL_SEPARATION)


@dataclass
class FundamentalSolution:
    """Lagrangian frames ``[X_j; P_j]`` of both block systems starting at ``[0; Id]``.

    ``P_j`` is the second component of the first order state, so for the
    positive block ``P = X'`` and for the negative block ``P = -X'``.
    """

    sig: Signature
    grid: TimeGrid
    frames_at: Callable[[float], tuple]
    method: str
    _cache: dict = field(default_factory=dict, repr=False)

    def frames(self, j: int) -> np.ndarray:
        """Array of shape ``(N, 2d, d)`` of block ``j`` (1 or 2) frames on the grid."""
        if j not in self._cache:
            self._cache[j] = np.array([self.frames_at(t)[j - 1] for t in self.grid.points])
        return self._cache[j]

    def X(self, j: int, t: float) -> np.ndarray:
        Z = self.frames_at(t)[j - 1]
        return Z[: Z.shape[1]]

    def P(self, j: int, t: float) -> np.ndarray:
        Z = self.frames_at(t)[j - 1]
        return Z[Z.shape[1]:]

    def lagrangian_defect(self) -> float:
        """Max of ``|X^T P - P^T X|`` over both blocks and the grid."""
        worst = 0.0
        for j in (1, 2):
            F = self.frames(j)
            d = F.shape[2]
            if d == 0:
                continue
            X, P = F[:, :d], F[:, d:]
            D = np.einsum("kij,kil->kjl", X, P)
            worst = max(worst, float(np.max(np.abs(D - np.swapaxes(D, 1, 2)))))
        return worst

    def check_rank(self, tol: float = 1e-8) -> None:
        for j in (1, 2):
            F = self.frames(j)
            if F.shape[2] == 0:
                continue
            sv = np.linalg.svd(F, compute_uv=False)
            ratio = sv[:, -1] / np.maximum(sv[:, 0], 1.0)
            if np.min(ratio) < tol:
                k = int(np.argmin(ratio))
                raise RankLoss(f"frame {j} loses rank at t={self.grid.points[k]:.6g}")


def _closed_form(path: SplitSymmetricPath, grid: TimeGrid) -> Optional[FundamentalSolution]:
    sig = path.sig
    A, B = sig.blocks(path.constant)
    la, Qa = np.linalg.eigh(A) if sig.m else (np.zeros(0), np.zeros((0, 0)))
    lb, Qb = np.linalg.eigh(B) if sig.nu else (np.zeros(0), np.zeros((0, 0)))
    if not (_separated(la) and _separated(lb)):
        return None

    def frames_at(t):
        s, c = scalar_sine(la, t)
        Z1 = np.vstack([(Qa * s) @ Qa.T, (Qa * c) @ Qa.T]) if sig.m else np.zeros((0, 0))
        s2, c2 = scalar_sine(-lb, t)
        Z2 = np.vstack([-(Qb * s2) @ Qb.T, (Qb * c2) @ Qb.T]) if sig.nu else np.zeros((0, 0))
        return Z1, Z2

    return FundamentalSolution(sig, grid, frames_at, "closed_form")


def frames_from_state(w: np.ndarray, sig: Signature, offset: int = 0):
    """Unpack ``(X1, P1, X2, P2)`` stored row-major after ``offset`` entries."""
    m, nu = sig.m, sig.nu
    k = offset
    X1 = w[k:k + m * m].reshape(m, m)
    k += m * m
    P1 = w[k:k + m * m].reshape(m, m)
    k += m * m
    X2 = w[k:k + nu * nu].reshape(nu, nu)
    k += nu * nu
    P2 = w[k:k + nu * nu].reshape(nu, nu)
    return np.vstack([X1, P1]), np.vstack([X2, P2])


def frame_rhs(sig: Signature, A: np.ndarray, B: np.ndarray, w: np.ndarray, offset: int = 0) -> np.ndarray:
    """Derivative of the packed frame state for coefficient blocks ``A`` and ``B``."""
    m, nu = sig.m, sig.nu
    Z1, Z2 = frames_from_state(w, sig, offset)
    X1, P1 = Z1[:m], Z1[m:]
    X2, P2 = Z2[:nu], Z2[nu:]
    return np.concatenate([P1.ravel(), (-A @ X1).ravel(), (-P2).ravel(), (-B @ X2).ravel()])


def initial_frame_state(sig: Signature) -> np.ndarray:
    m, nu = sig.m, sig.nu
    return np.concatenate([np.zeros(m * m), np.eye(m).ravel(), np.zeros(nu * nu), np.eye(nu).ravel()])


def fundamental_solution(systems, grid=129, tol: float = TOL_INTEGRATE,
                         force_integration: bool = False) -> FundamentalSolution:
    """Frames of both decoupled systems on ``grid``.

    Constant coefficients with eigenvalues separated by more than ``1e-8``
    use the closed form from an eigendecomposition; otherwise the matrix
    equations are integrated.

    Raises
    ------
    RankLoss
        If a frame stops having full column rank.
    """
    path = systems.path if isinstance(systems, DecoupledSystems) else systems
    g = as_grid(grid)
    sig = path.sig
    if path.is_constant and not force_integration:
        sol = _closed_form(path, g)
        if sol is not None:
            return sol
    m = sig.m

    def rhs(t, w):
        S = path(t)
        return frame_rhs(sig, S[:m, :m], S[m:, m:], w)

    traj = integrate(rhs, initial_frame_state(sig), g, tol)

    def frames_at(t):
        return frames_from_state(traj.dense(t), sig)

    sol = FundamentalSolution(sig, g, frames_at, "integrated")
    sol.check_rank()
    return sol
