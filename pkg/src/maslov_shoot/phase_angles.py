"""Phase angles of the block Lagrangian frames and their crossings with the Dirichlet plane.

For a frame ``[X; P]`` the matrix ``Y = (P + iX)(P - iX)^{-1}`` is unitary and
symmetric. Its eigenvalues are ``exp(2i theta_l)``; the ``theta_l`` are lifted to
continuous real paths starting at zero. Crossings are the instants where some
``theta_l`` is a multiple of ``pi``, which is exactly where ``X`` is singular.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .core_numerics import TOL_UNIT, as_grid, track_angles, unit_circle_eigvals, wrap
from .errors import NotInvertible, NotUnitary, TangentialCrossing
from .hamiltonian import FundamentalSolution, Signature

TOL_CROSS = 1e-9
TOL_ENDPOINT = 1e-7
TOL_TRANSVERSE = 1e-7
TOL_MERGE = 1e-8
TOL_KERNEL = 1e-6


def y_matrix(Z: np.ndarray) -> np.ndarray:
    """``(P + iX)(P - iX)^{-1}`` for a frame ``Z = [X; P]``.

    Raises
    ------
    NotInvertible
        If ``P - iX`` is numerically singular (only possible for a degenerate frame).
    """
    d = Z.shape[1]
    X, P = Z[:d], Z[d:]
    M1 = P + 1j * X
    M2 = P - 1j * X
    if d == 1:
        if abs(M2[0, 0]) < 1e-300:
            raise NotInvertible("P - iX vanishes")
        return M1 / M2[0, 0]
    if np.linalg.cond(M2) > 1e14:
        raise NotInvertible("P - iX is numerically singular")
    return np.linalg.solve(M2.T, M1.T).T


def frame_spectrum(Z: np.ndarray, tol_unit: float = TOL_UNIT) -> np.ndarray:
    """Eigenvalue arguments of ``Y`` for one frame, in ``(-pi, pi]``."""
    d = Z.shape[1]
    if d == 0:
        return np.zeros(0)
    if d == 1:
        return np.array([2.0 * np.arctan2(Z[0, 0], Z[1, 0])])
    # normalising the frame keeps Y well conditioned without changing it
    Y = y_matrix(Z / max(1.0, np.linalg.norm(Z, 2)))
    if np.max(np.abs(Y - Y.T)) > tol_unit * 10:
        raise NotUnitary("Y is not symmetric")
    return unit_circle_eigvals(Y, tol_unit)


@dataclass
class PhaseAngleTrace:
    """Continuous phase angle paths of both blocks.

    Attributes
    ----------
    times : ndarray
        Accepted tracking points, a refinement of the requested grid.
    raw1, raw2 : ndarray, shape (N, m) and (N, nu)
        Label-continuous paths.
    sorted1, sorted2 : ndarray
        Pointwise increasing rearrangements of the raw paths.
    """

    sig: Signature
    times: np.ndarray
    raw1: np.ndarray
    raw2: np.ndarray
    fundamental: Optional[FundamentalSolution] = field(default=None, repr=False)

    @property
    def sorted1(self) -> np.ndarray:
        return np.sort(self.raw1, axis=1)

    @property
    def sorted2(self) -> np.ndarray:
        return np.sort(self.raw2, axis=1)

    def raw(self, j: int) -> np.ndarray:
        return self.raw1 if j == 1 else self.raw2

    def terminal(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sorted angles of both blocks at the last time."""
        return self.sorted1[-1].copy(), self.sorted2[-1].copy()

    def sum_terminal(self) -> float:
        return float(np.sum(self.raw1[-1]) + np.sum(self.raw2[-1]))

    def local_angle(self, j: int, label: int, t: float) -> float:
        """Angle of one label at an arbitrary time, continued from the nearest tracked point."""
        if self.fundamental is None:
            raise ValueError("local evaluation needs the fundamental solution")
        k = int(np.clip(np.searchsorted(self.times, t), 1, len(self.times) - 1))
        t0, t1 = self.times[k - 1], self.times[k]
        path = self.raw(j)[:, label]
        w = (t - t0) / (t1 - t0)
        guess = 2.0 * ((1 - w) * path[k - 1] + w * path[k])
        args = frame_spectrum(self.fundamental.frames_at(t)[j - 1])
        cand = guess + wrap(args - guess)
        return 0.5 * float(cand[np.argmin(np.abs(cand - guess))])

    def to_csv(self, sorted_paths: bool = True) -> str:
        """CSV with header ``t, theta1_1.., theta2_1..`` and LF line endings."""
        a1 = self.sorted1 if sorted_paths else self.raw1
        a2 = self.sorted2 if sorted_paths else self.raw2
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"theta1_{i + 1}" for i in range(a1.shape[1])]
                   + [f"theta2_{i + 1}" for i in range(a2.shape[1])])
        for k, t in enumerate(self.times):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in a1[k]] + [repr(float(v)) for v in a2[k]])
        return buf.getvalue()


def compute_phase_trace(F: FundamentalSolution, grid=None) -> PhaseAngleTrace:
    """Track the phase angles of both blocks across ``grid`` (default: the solution grid).

    Raises
    ------
    NotInvertible, NotUnitary, TrackingAmbiguity
    """
    g = as_grid(grid) if grid is not None else F.grid
    out = []
    times = None
    for j in (1, 2):
        spectra = np.array([frame_spectrum(F.frames_at(t)[j - 1]) for t in g.points])
        if spectra.ndim == 1:
            spectra = spectra.reshape(len(g), -1)
        tj, th = track_angles(spectra, g, refine=lambda t, j=j: frame_spectrum(F.frames_at(t)[j - 1]))
        out.append((tj, th))
    # merge the two refined time sets
    times = np.union1d(out[0][0], out[1][0])
    paths = []
    for j, (tj, th) in enumerate(out, start=1):
        if th.shape[1] == 0:
            paths.append(np.zeros((times.size, 0)))
            continue
        if tj.size == times.size:
            paths.append(th)
            continue
        # fill points introduced by the other block by continuation from neighbours
        full = np.empty((times.size, th.shape[1]))
        idx = np.searchsorted(tj, times)
        for k, t in enumerate(times):
            i = idx[k]
            if i < tj.size and tj[i] == t:
                full[k] = th[i]
                continue
            w = (t - tj[i - 1]) / (tj[i] - tj[i - 1])
            guess = 2.0 * ((1 - w) * th[i - 1] + w * th[i])
            args = frame_spectrum(F.frames_at(t)[j - 1])
            diff = wrap(args[None, :] - guess[:, None])
            r, c = linear_sum_assignment(diff ** 2)
            full[k] = 0.5 * (guess + diff[r, c])
        paths.append(full)
    return PhaseAngleTrace(F.sig, times, paths[0], paths[1], F)


@dataclass(frozen=True)
class Crossing:
    """A time where the Lagrangian path meets the Dirichlet plane.

    ``block_labels`` lists ``(block, label)`` pairs of the angles at a multiple
    of ``pi``. ``signature_contribution`` is the sum of their derivative signs
    (``+1`` for the positive block, ``-1`` for the negative block).
    """

    t: float
    multiplicity: int
    block_labels: Tuple[Tuple[int, int], ...]
    signature_contribution: int
    levels: Tuple[int, ...] = ()


def _det_block(F, j, t):
    Z = F.frames_at(t)[j - 1]
    d = Z.shape[1]
    return float(np.linalg.det(Z[:d]))


def _angle_derivative(trace, j, lab, t, lo, hi, h=1e-6):
    a, b = max(lo, t - h), min(hi, t + h)
    if b - a < 1e-12:
        a, b = t - h, t + h
    return (trace.local_angle(j, lab, b) - trace.local_angle(j, lab, a)) / (b - a)


def detect_crossings(trace: PhaseAngleTrace, window: Sequence[float] = (0.0, 1.0),
                     tol_cross: float = TOL_CROSS, tol_endpoint: float = TOL_ENDPOINT,
                     tol_transverse: float = TOL_TRANSVERSE) -> List[Crossing]:
    """Crossings in the closed window, located to about ``1e-12``.

    Interior crossings are detected by an angle passing a multiple of ``pi``
    between tracked points and refined by bisection on ``det X_j`` (simple
    crossings) or on the angle residual. Window endpoints count as crossings
    when an angle is within ``tol_endpoint`` of a multiple of ``pi``.

    Raises
    ------
    TangentialCrossing
        If an angle derivative at a crossing is below ``tol_transverse``.
    """
    lo, hi = float(window[0]), float(window[1])
    times = trace.times
    cands = []  # (t, block, label, level)
    for j in (1, 2):
        P = trace.raw(j)
        for lab in range(P.shape[1]):
            path = P[:, lab]
            # endpoints of the window
            for te in (lo, hi):
                val = np.interp(te, times, path) if trace.fundamental is None else trace.local_angle(j, lab, te)
                lev = int(np.round(val / np.pi))
                if abs(val - lev * np.pi) <= max(tol_endpoint, tol_cross):
                    cands.append((te, j, lab, lev))
            k = np.floor(path / np.pi)
            for i in range(len(times) - 1):
                ta, tb = times[i], times[i + 1]
                if tb <= lo or ta >= hi or k[i] == k[i + 1]:
                    continue
                lev = int(max(k[i], k[i + 1]))
                # levels strictly between are impossible with the tracking step bound
                if trace.fundamental is None:
                    pa, pb = path[i], path[i + 1]
                    tc = ta + (lev * np.pi - pa) * (tb - ta) / (pb - pa)
                else:
                    def g(t, j=j, lab=lab, lev=lev):
                        return trace.local_angle(j, lab, t) - lev * np.pi

                    d0 = _det_block(trace.fundamental, j, ta)
                    d1 = _det_block(trace.fundamental, j, tb)
                    others = sum(1 for l2 in range(P.shape[1]) if l2 != lab
                                 and np.floor(P[i, l2] / np.pi) != np.floor(P[i + 1, l2] / np.pi))
                    if others == 0 and d0 * d1 < 0:
                        tc = brentq(lambda t: _det_block(trace.fundamental, j, t), ta, tb, xtol=1e-13)
                    else:
                        ga, gb = g(ta), g(tb)
                        if ga == 0:
                            tc = ta
                        elif gb == 0:
                            tc = tb
                        else:
                            tc = brentq(g, ta, tb, xtol=1e-13)
                if lo + 1e-12 < tc < hi - 1e-12:
                    cands.append((tc, j, lab, lev))
    cands.sort()
    groups: List[list] = []
    for c in cands:
        if groups and c[0] - groups[-1][-1][0] <= TOL_MERGE:
            if not any(g_[1:3] == c[1:3] for g_ in groups[-1]):
                groups[-1].append(c)
        else:
            groups.append([c])
    out = []
    for grp in groups:
        t = float(np.mean([c[0] for c in grp]))
        if abs(t - lo) <= TOL_MERGE:
            t = lo
        if abs(t - hi) <= TOL_MERGE:
            t = hi
        sig_sum = 0
        for _, j, lab, _ in grp:
            if trace.fundamental is not None:
                der = _angle_derivative(trace, j, lab, t, lo, hi)
                if abs(der) < tol_transverse:
                    raise TangentialCrossing(f"angle derivative {der:.2e} at t={t:.6g}")
                sig_sum += int(np.sign(der))
            else:
                sig_sum += 1 if j == 1 else -1
        out.append(Crossing(t, len(grp), tuple((j, lab) for _, j, lab, _ in grp), sig_sum,
                            tuple(c[3] for c in grp)))
    return out


def _dirichlet_kernel(Z: np.ndarray, tol: float) -> np.ndarray:
    """Columns spanning ``ker X`` for the frame ``Z = [X; P]``.

    The frame is orthonormalised first so the threshold is independent of
    how fast the solutions grow.
    """
    d = Z.shape[1]
    Q, R = np.linalg.qr(Z)
    _, s, vt = np.linalg.svd(Q[:d])
    return np.linalg.solve(R, vt[s <= tol].T)


def crossing_dimensions(trace: PhaseAngleTrace, crossing: Crossing, tol: float = TOL_KERNEL):
    """Return ``(angle_count, kernel_dim)`` at a crossing.

    ``angle_count`` is the number of labels within ``tol`` of a multiple of
    ``pi``; ``kernel_dim`` is ``dim ker X_1 + dim ker X_2``.
    """
    F = trace.fundamental
    t = crossing.t
    count = 0
    kdim = 0
    for j in (1, 2):
        Z = F.frames_at(t)[j - 1]
        d = Z.shape[1]
        if d == 0:
            continue
        for lab in range(d):
            th = trace.local_angle(j, lab, t)
            if abs(th - np.round(th / np.pi) * np.pi) <= tol:
                count += 1
        kdim += _dirichlet_kernel(Z, tol).shape[1]
    return count, kdim


def crossing_form(F: FundamentalSolution, t: float, j: int, tol: float = TOL_KERNEL, h: float = 1e-6) -> np.ndarray:
    """Symplectic crossing form of block ``j`` restricted to ``ker X_j(t)``.

    Computed as ``omega(Z' c_a, Z c_b)`` with a central difference for ``Z'``,
    independently of the angle derivatives. With this orientation the form is
    positive where positive block angles increase through a multiple of ``pi``.
    """
    Z = F.frames_at(t)[j - 1]
    d = Z.shape[1]
    if d == 0:
        return np.zeros((0, 0))
    C = _dirichlet_kernel(Z, tol)
    if C.size == 0:
        return np.zeros((0, 0))
    dZ = (F.frames_at(t + h)[j - 1] - F.frames_at(t - h)[j - 1]) / (2 * h)
    sigma = np.block([[np.zeros((d, d)), np.eye(d)], [-np.eye(d), np.zeros((d, d))]])
    Q = (dZ @ C).T @ sigma @ (Z @ C)
    return 0.5 * (Q + Q.T)


@dataclass(frozen=True)
class KAlphaDecomposition:
    """Integer parts ``k`` and remainders ``alpha`` in ``(0, pi]`` of sorted angles.

    ``theta1 = k1 * pi + alpha1`` and ``theta2 = -k2 * pi - alpha2``.
    """

    k1: Tuple[int, ...]
    alpha1: Tuple[float, ...]
    k2: Tuple[int, ...]
    alpha2: Tuple[float, ...]


def k_alpha_values(theta1: Sequence[float], theta2: Sequence[float]) -> KAlphaDecomposition:
    th1 = np.asarray(theta1, dtype=float)
    th2 = np.asarray(theta2, dtype=float)
    k1 = np.ceil(th1 / np.pi) - 1
    k2 = np.ceil(-th2 / np.pi) - 1
    a1 = th1 - k1 * np.pi
    a2 = -th2 - k2 * np.pi
    return KAlphaDecomposition(tuple(int(v) for v in k1), tuple(float(v) for v in a1),
                               tuple(int(v) for v in k2), tuple(float(v) for v in a2))


def k_alpha(trace: PhaseAngleTrace, t: float = 1.0) -> KAlphaDecomposition:
    """Decomposition of the sorted angles at time ``t``."""
    if np.isclose(t, trace.times[-1], rtol=0, atol=1e-15):
        th1, th2 = trace.terminal()
    else:
        th1 = np.sort([trace.local_angle(1, l, t) for l in range(trace.raw1.shape[1])])
        th2 = np.sort([trace.local_angle(2, l, t) for l in range(trace.raw2.shape[1])])
    return k_alpha_values(th1, th2)
