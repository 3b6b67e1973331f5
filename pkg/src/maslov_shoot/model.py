"""Nonlinear Dirichlet problem ``J u'' + S(t, u) u = 0`` and the objects built on it.

Covers the structural checks, the linear system along a shooting trajectory,
the radii ``alpha0 < alpha_inf`` separating the small and large data regimes,
the trajectory bound, maxima of the diagonal entries on cylinders, and the
enumeration of admissible winding vectors ``h``.
"""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core_numerics import TOL_INTEGRATE, TimeGrid, Trajectory, integrate
from .errors import (BoundViolated, ConsistencyViolation, Degenerate, DegenerateEndpoint, NoSeparation,
                     NonFinite, StepFailure)
from .expr import MatrixExpression
from .hamiltonian import (FundamentalSolution, Signature, SplitSymmetricPath, decouple, frame_rhs,
                          frames_from_state, fundamental_solution, initial_frame_state)
from .maslov import (MaslovIndex, count_N, maslov_constant_split, maslov_crossing_form,
                     maslov_from_phase_angles)
from .phase_angles import PhaseAngleTrace, compute_phase_trace
from .sturm import ScalarPotential, eta_j

TOL_T_MARGIN = 1e-9
TOL_RADIAL = 1e-10
TOL_STRUCT = 1e-12


@dataclass
class ProblemOptions:
    """Numerical settings shared by the pipeline.

    ``eps`` defaults to half the smallest margin of the admissible set, capped
    below ``pi/2``.
    """

    tol: float = TOL_INTEGRATE
    grid: int = 129
    tol_f: float = 1e-8
    tol_u: float = 1e-6
    tol_angle: float = 1e-6
    hmax: int = 32
    eps: Optional[float] = None
    cyl_resolution: int = 33
    search_min: float = 1e-3
    search_max: float = 1e3
    search_per_decade: int = 3
    n_directions: int = 12
    threads: int = 1
    max_evals: int = 3000

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemOptions":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown option(s): {', '.join(sorted(unknown))}")
        return cls(**d)


def sphere_directions(n: int, count: int = 12, seed: int = 7) -> np.ndarray:
    """Deterministic unit vectors: axes, diagonals, then seeded random ones."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dirs = [s * e for e in np.eye(n) for s in (1.0, -1.0)]
    for signs in itertools.product((1.0, -1.0), repeat=n):
        if len(dirs) >= max(count, 2 * n + 2):
            break
        dirs.append(np.array(signs) / np.sqrt(n))
    rng = np.random.default_rng(seed)
    while len(dirs) < count:
        v = rng.normal(size=n)
        dirs.append(v / np.linalg.norm(v))
    return np.array(dirs)


class NonlinearProblem:
    """Problem data: signature, nonlinearity and its limits at zero and infinity.

    Parameters
    ----------
    sig : Signature
    S : callable
        ``S(t, x)`` returning a symmetric ``n x n`` matrix.
    S0, Sinf : SplitSymmetricPath
        Limits of ``S(t, x)`` as ``|x| -> 0`` and ``|x| -> inf``.
    options : ProblemOptions
    sources : dict, optional
        Expression sources, kept for reports and problem files.
    """

    def __init__(self, sig: Signature, S: Callable[[float, np.ndarray], np.ndarray],
                 S0: SplitSymmetricPath, Sinf: SplitSymmetricPath, options: Optional[ProblemOptions] = None,
                 name: str = "", sources: Optional[dict] = None):
        self.sig = sig
        self.S = S
        self.S0 = S0
        self.Sinf = Sinf
        self.options = options or ProblemOptions()
        self.name = name
        self.sources = sources or {}
        self._cache: Dict[tuple, "LSystem"] = {}
        self._lock = threading.Lock()
        self._asym = None

    @classmethod
    def from_expressions(cls, n: int, nu: int, S, S0, Sinf, options: Optional[ProblemOptions] = None,
                         name: str = "") -> "NonlinearProblem":
        """Build from matrices of expression strings (or numbers)."""
        sig = Signature(n, nu)
        Sm = MatrixExpression(S, n)
        S0m = MatrixExpression(S0, 0)
        Sim = MatrixExpression(Sinf, 0)

        def as_path(M):
            if M.is_constant:
                return SplitSymmetricPath.from_constant(M(0.0, ()), sig)
            p = SplitSymmetricPath(sig, lambda t, _M=M: _M(t, ()))
            p.kind = "expression"
            return p

        sources = {"S": Sm.sources(), "S0": S0m.sources(), "Sinf": Sim.sources()}
        return cls(sig, Sm, as_path(S0m), as_path(Sim), options, name, sources)

    @property
    def n(self) -> int:
        return self.sig.n

    def matrix(self, t: float, x) -> np.ndarray:
        return np.asarray(self.S(t, np.asarray(x, dtype=float)), dtype=float)

    def clear_cache(self):
        with self._lock:
            self._cache.clear()

    def asymptotic(self) -> "AsymptoticData":
        if self._asym is None:
            self._asym = asymptotic_data(self)
        return self._asym


# ---------------------------------------------------------------- conditions


@dataclass
class ConditionReport:
    """Outcome of the structural checks with their supporting numbers."""

    V0: bool
    Vinf: bool
    V1: bool
    V2: bool
    V3: bool
    details: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.V0 and self.Vinf and self.V1 and self.V2 and self.V3

    def to_dict(self) -> dict:
        return {"V0": self.V0, "Vinf": self.Vinf, "V1": self.V1, "V2": self.V2, "V3": self.V3,
                "all_pass": self.all_pass, "details": self.details}


def _remainder_profile(P: NonlinearProblem, radii, limit: SplitSymmetricPath, ts, dirs) -> List[float]:
    out = []
    for r in radii:
        worst = 0.0
        for t in ts:
            L = limit(t)
            for d in dirs:
                x = r * d
                worst = max(worst, float(np.linalg.norm(P.matrix(t, x) @ x - L @ x)) / r)
        out.append(worst)
    return out


def nondegeneracy_margin(path: SplitSymmetricPath, grid=129) -> float:
    """Smallest singular value of ``X_j(1)`` relative to the frame size, over both blocks."""
    F = fundamental_solution(decouple(path), grid)
    worst = np.inf
    for j in (1, 2):
        Z = F.frames_at(1.0)[j - 1]
        d = Z.shape[1]
        if d == 0:
            continue
        sv = np.linalg.svd(Z[:d], compute_uv=False)
        worst = min(worst, float(sv[-1] / max(1.0, np.linalg.norm(Z, 2))))
    return worst


def verify_conditions(P: NonlinearProblem, tol_nondeg: float = 1e-8) -> ConditionReport:
    """Sampled checks of the split, diagonal, asymptotic and non-degeneracy conditions.

    Samples 17 times, 9 radii and ``2n+2`` directions. The asymptotic
    conditions are a heuristic pass when the scaled remainder falls below
    ``1e-3`` at ``r = 1e-4`` (zero) and ``r = 1e4`` (infinity).
    """
    sig = P.sig
    n, m = sig.n, sig.m
    ts = np.linspace(0.0, 1.0, 17)
    radii = np.logspace(-4, 4, 9)
    dirs = [s * e for e in np.eye(n) for s in (1.0, -1.0)]
    dirs += [np.ones(n) / np.sqrt(n), -np.ones(n) / np.sqrt(n)]
    split_defect = 0.0
    diag_defect = 0.0
    for t in ts:
        for r in radii:
            for d in dirs:
                S = P.matrix(t, r * d)
                scale = max(1.0, float(np.max(np.abs(S))))
                off = max(np.max(np.abs(S[:m, m:]), initial=0.0), np.max(np.abs(S - S.T)))
                split_defect = max(split_defect, float(off) / scale)
        for i in range(n):
            for r in radii:
                for d in dirs:
                    x = r * d.copy()
                    x[i] = 0.0
                    if np.linalg.norm(x) == 0:
                        continue
                    x *= r / np.linalg.norm(x)
                    S = P.matrix(t, x)
                    scale = max(1.0, float(np.max(np.abs(S))))
                    diag_defect = max(diag_defect, float(np.max(np.abs(S - np.diag(np.diag(S))))) / scale)
    asym_diag = 0.0
    for path in (P.S0, P.Sinf):
        for t in ts:
            L = path(t)
            asym_diag = max(asym_diag, float(np.max(np.abs(L - np.diag(np.diag(L))))))
    prof0 = _remainder_profile(P, np.logspace(0, -4, 9), P.S0, ts[::4], dirs)
    profi = _remainder_profile(P, np.logspace(0, 4, 9), P.Sinf, ts[::4], dirs)
    nd0 = nondegeneracy_margin(P.S0, P.options.grid)
    ndi = nondegeneracy_margin(P.Sinf, P.options.grid)
    details = {
        "split_defect": split_defect,
        "diagonal_defect_on_hyperplanes": diag_defect,
        "asymptote_offdiagonal": asym_diag,
        "profile_zero": {"radii": list(np.logspace(0, -4, 9)), "remainder": prof0,
                         "monotone": bool(np.all(np.diff(prof0) <= 1e-12 + 1e-9 * np.abs(prof0[:-1])))},
        "profile_inf": {"radii": list(np.logspace(0, 4, 9)), "remainder": profi,
                        "monotone": bool(np.all(np.diff(profi) <= 1e-12 + 1e-9 * np.abs(profi[:-1])))},
        "nondegeneracy_S0": nd0,
        "nondegeneracy_Sinf": ndi,
        "heuristic": ["V0", "Vinf"],
    }
    return ConditionReport(
        V0=prof0[-1] < 1e-3,
        Vinf=profi[-1] < 1e-3,
        V1=split_defect <= TOL_STRUCT,
        V2=nd0 > tol_nondeg and ndi > tol_nondeg,
        V3=diag_defect <= TOL_STRUCT and asym_diag <= TOL_STRUCT,
        details=details,
    )


# ---------------------------------------------------------------- L-system


@dataclass
class LSystem:
    """Shooting trajectory from ``u(0) = 0, J u'(0) = alpha`` and the frames of ``S(t, u(t))``.

    The state is ``(u, v)`` with ``v = J u'`` so that ``v(0) = alpha``.
    """

    alpha: np.ndarray
    sig: Signature
    trajectory: Trajectory
    fundamental: FundamentalSolution
    split_defect: float
    _trace: Optional[PhaseAngleTrace] = field(default=None, repr=False)

    @property
    def u1(self) -> np.ndarray:
        return self.trajectory.final[: self.sig.n]

    def u(self, t: float) -> np.ndarray:
        return self.trajectory.dense(t)[: self.sig.n]

    def state_norms(self) -> np.ndarray:
        """``|(u, u')(t)|`` on the grid."""
        return np.linalg.norm(self.trajectory.states[:, : 2 * self.sig.n], axis=1)

    @property
    def trace(self) -> PhaseAngleTrace:
        if self._trace is None:
            self._trace = compute_phase_trace(self.fundamental)
        return self._trace

    def terminal_angles(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.trace.terminal()

    def angle_sum(self) -> float:
        th1, th2 = self.terminal_angles()
        return float(np.sum(th1) + np.sum(th2))


def l_system(P: NonlinearProblem, alpha, grid=None, tol: Optional[float] = None,
             use_cache: bool = True) -> LSystem:
    """Integrate the shooting trajectory together with the frames of ``S(t, u(t))``.

    Raises
    ------
    NonFinite
        If the trajectory blows up.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(P.n)
    g = grid if grid is not None else P.options.grid
    tol = P.options.tol if tol is None else tol
    key = (tuple(alpha.tolist()), g if np.isscalar(g) else None, tol)
    if use_cache and key[1] is not None:
        with P._lock:
            hit = P._cache.get(key)
        if hit is not None:
            return hit
    sig = P.sig
    n, m = sig.n, sig.m
    jv = sig.jvec
    S = P.S

    def rhs(t, w):
        u = w[:n]
        v = w[n:2 * n]
        M = np.asarray(S(t, u), dtype=float)
        return np.concatenate([jv * v, -(M @ u), frame_rhs(sig, M[:m, :m], M[m:, m:], w, 2 * n)])

    w0 = np.concatenate([np.zeros(n), alpha, initial_frame_state(sig)])
    try:
        traj = integrate(rhs, w0, g, tol)
    except StepFailure as exc:
        raise NonFinite(str(exc)) from exc

    def frames_at(t):
        return frames_from_state(traj.dense(t), sig, 2 * n)

    F = FundamentalSolution(sig, traj.grid, frames_at, "nonlinear")
    defect = 0.0
    for w in traj.states[:: max(1, len(traj.grid) // 16)]:
        M = np.asarray(S(0.0, w[:n]), dtype=float)
        defect = max(defect, float(max(np.max(np.abs(M[:m, m:]), initial=0.0), 0.0)))
    ls = LSystem(alpha, sig, traj, F, defect)
    if use_cache and key[1] is not None:
        with P._lock:
            if len(P._cache) > 20000:
                P._cache.clear()
            P._cache[key] = ls
    return ls


# ---------------------------------------------------------------- asymptotics


@dataclass
class AsymptoticData:
    """Maslov indices and terminal angles of the limit systems."""

    m0: MaslovIndex
    minf: MaslovIndex
    theta0: Tuple[np.ndarray, np.ndarray]
    thetainf: Tuple[np.ndarray, np.ndarray]

    @property
    def sum0(self) -> float:
        return float(np.sum(self.theta0[0]) + np.sum(self.theta0[1]))

    @property
    def suminf(self) -> float:
        return float(np.sum(self.thetainf[0]) + np.sum(self.thetainf[1]))


def path_maslov(path: SplitSymmetricPath, grid=129) -> Tuple[MaslovIndex, PhaseAngleTrace]:
    """Maslov index of a coefficient path by the best available method."""
    F = fundamental_solution(decouple(path), grid)
    trace = compute_phase_trace(F)
    if path.is_constant:
        try:
            return maslov_constant_split(path.constant, path.sig), trace
        except Degenerate:
            return maslov_crossing_form(trace), trace
    try:
        return maslov_from_phase_angles(trace), trace
    except DegenerateEndpoint:
        return maslov_crossing_form(trace), trace


def asymptotic_data(P: NonlinearProblem) -> AsymptoticData:
    m0, tr0 = path_maslov(P.S0, P.options.grid)
    mi, tri = path_maslov(P.Sinf, P.options.grid)
    return AsymptoticData(m0, mi, tr0.terminal(), tri.terminal())


@dataclass
class ProfileRow:
    radius: float
    l1_to_inf: float
    l1_to_zero: float
    y_to_inf: float
    y_to_zero: float


def _y_blocks(Z1, Z2):
    from .phase_angles import y_matrix

    out = []
    for Z in (Z1, Z2):
        out.append(y_matrix(Z) if Z.shape[1] else np.zeros((0, 0)))
    return out


def asymptotic_profile(P: NonlinearProblem, radii: Sequence[float], directions=None) -> List[ProfileRow]:
    """Distances of ``S_alpha`` and its phase matrices to the limit systems, maximised over directions."""
    dirs = sphere_directions(P.n, P.options.n_directions) if directions is None else np.asarray(directions)
    g = P.options.grid
    F0 = fundamental_solution(decouple(P.S0), g)
    Fi = fundamental_solution(decouple(P.Sinf), g)
    ts = np.linspace(0.0, 1.0, g)
    rows = []
    for r in radii:
        vals = np.zeros(4)
        for d in dirs:
            L = l_system(P, r * d)
            d_inf, d_zero, y_inf, y_zero = [], [], 0.0, 0.0
            for t in ts:
                u = L.u(t)
                M = P.matrix(t, u)
                d_inf.append(np.linalg.norm(M - P.Sinf(t), 2))
                d_zero.append(np.linalg.norm(M - P.S0(t), 2))
                Y = _y_blocks(*L.fundamental.frames_at(t))
                Yi = _y_blocks(*Fi.frames_at(t))
                Y0 = _y_blocks(*F0.frames_at(t))
                for a, b, c in zip(Y, Yi, Y0):
                    if a.size:
                        y_inf = max(y_inf, float(np.max(np.abs(a - b))))
                        y_zero = max(y_zero, float(np.max(np.abs(a - c))))
            vals = np.maximum(vals, [np.trapezoid(d_inf, ts), np.trapezoid(d_zero, ts), y_inf, y_zero])
        rows.append(ProfileRow(float(r), *map(float, vals)))
    return rows


# ---------------------------------------------------------------- radii


@dataclass
class AlphaBounds:
    """Radii of the conical shell and the per-component radius used for emptiness checks.

    ``alpha_inf_strict`` is the smallest radius beyond which the angle sum
    also exceeds the limit sum minus ``eps``; it is ``None`` if no sampled
    radius qualifies.
    """

    alpha0: float
    alpha_inf: float
    alpha_tilde_inf: float
    eps: float
    alpha_inf_strict: Optional[float] = None
    linear: bool = False
    profile: list = field(default_factory=list)

    def as_tuple(self):
        return self.alpha0, self.alpha_inf, self.alpha_tilde_inf


def default_eps(m0_twice: int, minf_twice: int, sig: Signature, hmax: int = 32) -> float:
    """Half the smallest margin of the admissible set, capped below ``pi/2``."""
    lo = m0_twice / 2 + sig.n - sig.nu
    hi = minf_twice / 2 - sig.nu
    cap = 0.48 * np.pi
    if hi - lo <= 0:
        return cap / 2
    # pairings of h realise every integer strictly inside (lo, hi)
    ints = [k for k in range(int(np.floor(lo)) + 1, int(np.ceil(hi))) if lo < k < hi]
    if not ints:
        return cap / 2
    margin = min(min(k - lo, hi - k) for k in ints) * np.pi
    return float(min(margin / 2, cap))


def _radius_grid(opts: ProblemOptions) -> np.ndarray:
    lo, hi = np.log10(opts.search_min), np.log10(opts.search_max)
    num = int(round((hi - lo) * opts.search_per_decade)) + 1
    return np.logspace(lo, hi, num)


def _angles_at(P, alpha):
    try:
        L = l_system(P, alpha)
        th1, th2 = L.terminal_angles()
        return np.concatenate([th1, th2])
    except NonFinite:
        return None


def find_alpha_bounds(P: NonlinearProblem, eps: Optional[float] = None) -> AlphaBounds:
    """Sampled radii ``alpha0 < alpha_inf`` and ``alpha_tilde_inf``.

    ``alpha0`` is the largest sampled radius such that every sampled ``|alpha|``
    up to it has angle sum below both ``Sum Theta_0 + eps`` and
    ``(m0 + n - nu) pi + eps``. ``alpha_inf`` is the smallest sampled radius
    such that every sampled ``|alpha|`` from it up to the search limit has
    angle sum above ``(m_inf - nu) pi - eps``. ``alpha_tilde_inf`` uses the
    per-component condition with ``eps / n`` against the limit angles and is
    ``inf`` when no radius qualifies.

    Raises
    ------
    NoSeparation
    """
    sig = P.sig
    asym = P.asymptotic()
    if eps is None:
        eps = P.options.eps if P.options.eps is not None else default_eps(
            asym.m0.twice_value, asym.minf.twice_value, sig, P.options.hmax)
    radii = _radius_grid(P.options)
    dirs = sphere_directions(P.n, P.options.n_directions)
    lim0 = asym.sum0
    liminf = asym.suminf
    th_inf = np.concatenate(asym.thetainf)
    low_cap = min(lim0, (asym.m0.twice_value / 2 + sig.n - sig.nu) * np.pi) + eps
    high_floor = (asym.minf.twice_value / 2 - sig.nu) * np.pi - eps
    table = {}

    def sums(r):
        if r not in table:
            table[r] = [_angles_at(P, r * d) for d in dirs]
        return table[r]

    # linear problems: the angles never move
    probe = [sums(radii[0]), sums(radii[-1])]
    flat = all(a is not None for s in probe for a in s)
    if flat:
        ref = probe[0][0]
        flat = all(np.max(np.abs(a - ref)) < 1e-9 for s in probe for a in s)
    if flat and abs(lim0 - liminf) < 1e-9:
        mid = sums(radii[len(radii) // 2])
        if all(a is not None and np.max(np.abs(a - ref)) < 1e-9 for a in mid):
            r0 = float(radii[0])
            return AlphaBounds(r0, r0, r0, float(eps), r0, True)

    def low_ok(r):
        return all(a is not None and np.sum(a) < low_cap for a in sums(r))

    def high_ok(r):
        return all(a is not None and np.sum(a) > high_floor for a in sums(r))

    def strict_ok(r):
        return all(a is not None and np.sum(a) > liminf - eps for a in sums(r))

    def tilde_ok(r):
        return all(a is not None and np.all(a > th_inf - eps / sig.n) for a in sums(r))

    alpha0 = None
    for r in radii:
        if not low_ok(r):
            break
        alpha0 = float(r)

    def from_top(pred):
        best = None
        for r in radii[::-1]:
            if not pred(r):
                break
            best = float(r)
        return best

    alpha_inf = from_top(high_ok)
    strict = from_top(strict_ok)
    tilde = from_top(tilde_ok)
    profile = [(float(r), [None if a is None else float(np.sum(a)) for a in table[r]]) for r in sorted(table)]
    if alpha0 is None:
        raise NoSeparation("angle sum exceeds the small-data cap at the smallest radius", profile)
    if alpha_inf is None:
        raise NoSeparation("angle sum stays below the large-data floor at the search limit", profile)
    if alpha0 >= alpha_inf:
        raise NoSeparation(f"alpha0={alpha0:.3g} is not below alpha_inf={alpha_inf:.3g}", profile)
    return AlphaBounds(alpha0, alpha_inf, np.inf if tilde is None else tilde, float(eps), strict, False, profile)


# ---------------------------------------------------------------- trajectory bound


@dataclass
class ElasticBound:
    """Radius ``R_traj = alpha_inf * exp(max(1, M))`` containing all trajectories started in the ball."""

    alpha_inf: float
    M: float
    M_gronwall: float
    R_traj: float
    rounds: int
    max_observed: float


def _sup_norm(P, alpha) -> float:
    L = l_system(P, alpha)
    ts = np.linspace(0.0, 1.0, 4 * P.options.grid)
    w = np.array([L.trajectory.dense(t)[: 2 * P.n] for t in ts])
    return float(np.max(np.linalg.norm(w, axis=1)))


def elastic_bound(P: NonlinearProblem, alpha_inf: float, rounds: int = 5, seed: int = 11) -> ElasticBound:
    """Estimate the log growth ``M`` and check containment a posteriori.

    ``M`` starts from the observed growth of sampled trajectories (with a 10 %
    safety factor) and is never taken above the Gronwall value
    ``sup |S|`` over ``|x| <= 10 alpha_inf``. Each round checks 100 fresh
    random initial data in the ball and enlarges ``M`` if one escapes.

    Raises
    ------
    BoundViolated
        If containment still fails after ``rounds`` enlargements.
    """
    n = P.n
    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, 1.0, 17)
    dirs = sphere_directions(n, max(P.options.n_directions, 2 * n + 2))
    M_gr = 0.0
    for t in ts:
        for r in np.concatenate([[0.0], np.logspace(-3, 0, 7) * 10 * alpha_inf]):
            for d in dirs:
                M_gr = max(M_gr, float(np.linalg.norm(P.matrix(t, r * d), 2)))
    observed = 0.0
    for scale in (0.25, 0.5, 1.0):
        for d in dirs:
            a = scale * alpha_inf * d
            observed = max(observed, _sup_norm(P, a) / alpha_inf)
    M = min(M_gr, 1.1 * math.log(max(observed, 1.0)) + 0.1)
    for k in range(rounds):
        R = alpha_inf * math.exp(max(1.0, M))
        worst = 0.0
        for _ in range(100):
            v = rng.normal(size=n)
            a = v / np.linalg.norm(v) * alpha_inf * rng.uniform() ** (1.0 / n)
            worst = max(worst, _sup_norm(P, a))
        if worst <= R:
            return ElasticBound(alpha_inf, M, M_gr, R, k + 1, max(worst, observed * alpha_inf))
        M = min(max(M, M_gr), 1.1 * math.log(worst / alpha_inf) + 0.1) if M < M_gr else M * 1.25
    raise BoundViolated(f"trajectories leave the ball of radius {R:.3g} after {rounds} rounds")


# ---------------------------------------------------------------- cylinder maxima


@dataclass
class CylinderMaxima:
    """``values[i, k]``: max of ``S_kk(t, x)`` over ``t`` in ``[0, 1]`` and ``x`` in the disk of ``W_i``.

    ``W_i`` is the coordinate hyperplane ``x_i = 0``. ``profiles`` holds the
    per-time maxima when requested.
    """

    values: np.ndarray
    argmax: dict
    R_traj: float
    resolution: int
    times: Optional[np.ndarray] = None
    profiles: Optional[np.ndarray] = None

    def diagonal_profile(self, i: int, k: int) -> ScalarPotential:
        return ScalarPotential.tabulated(self.times, self.profiles[i, k])


def _axis_nodes(R: float, resolution: int) -> np.ndarray:
    half = max(1, (resolution - 1) // 2)
    pos = R * np.geomspace(max(1e-6, 1e-6 / max(R, 1e-300)), 1.0, half)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _hyperplane_points(n: int, i: int, R: float, resolution: int, seed: int = 3) -> np.ndarray:
    k = n - 1
    if k == 0:
        return np.zeros((1, n))
    if resolution ** k <= 40000:
        nodes = _axis_nodes(R, resolution)
        grid = np.array(list(itertools.product(nodes, repeat=k)))
    else:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(40000, k))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        rad = R * np.geomspace(1e-6, 1.0, 40000)
        rng.shuffle(rad)
        grid = np.vstack([np.zeros((1, k)), v * rad[:, None]])
    grid = grid[np.linalg.norm(grid, axis=1) <= R * (1 + 1e-12)]
    pts = np.zeros((grid.shape[0], n))
    cols = [c for c in range(n) if c != i]
    pts[:, cols] = grid
    return pts


def _pattern_search(f, t0, y0, R, step_t, step_y, iters=60):
    """Coordinate ascent on ``f(t, y)`` over ``[0, 1] x {|y| <= R}``."""
    t, y = t0, y0.copy()
    best = f(t, y)
    st, sy = step_t, step_y
    for _ in range(iters):
        improved = False
        moves = [(st, None), (-st, None)] + [(0.0, (c, s)) for c in range(y.size) for s in (sy, -sy)]
        for dt, dy in moves:
            tn = min(1.0, max(0.0, t + dt))
            yn = y.copy()
            if dy is not None:
                yn[dy[0]] += dy[1]
                nrm = np.linalg.norm(yn)
                if nrm > R:
                    yn *= R / nrm
            val = f(tn, yn)
            if val > best:
                best, t, y, improved = val, tn, yn, True
        if not improved:
            st *= 0.5
            sy *= 0.5
            if st < 1e-10 and sy < 1e-10 * max(1.0, R):
                break
    return best, t, y


def cylinder_maxima(P: NonlinearProblem, R_traj: float, resolution: Optional[int] = None,
                    time_dependent: bool = False) -> CylinderMaxima:
    """Maxima of the diagonal entries of ``S`` on the cylinders over each coordinate hyperplane.

    A tensor grid (``resolution`` points in time and per in-plane axis, with
    geometric spacing in the radius) is refined by a pattern search from the
    best sample.
    """
    n = P.n
    res = resolution or P.options.cyl_resolution
    ts = np.linspace(0.0, 1.0, res)
    values = np.full((n, n), -np.inf)
    argmax = {}
    profiles = np.full((n, n, res), -np.inf) if time_dependent else None
    for i in range(n):
        pts = _hyperplane_points(n, i, R_traj, res)
        diag = np.array([[np.diag(P.matrix(t, x)) for x in pts] for t in ts])  # (T, X, n)
        cols = [c for c in range(n) if c != i]
        for k in range(n):
            slab = diag[:, :, k]
            ti, xi = np.unravel_index(np.argmax(slab), slab.shape)

            def f(t, y, k=k):
                x = np.zeros(n)
                x[cols] = y
                return float(P.matrix(t, x)[k, k])

            y0 = pts[xi, cols]
            step_y = max(1e-3, 0.25 * float(np.linalg.norm(y0))) if y0.size else 0.0
            best, tb, yb = _pattern_search(f, float(ts[ti]), y0, R_traj, 0.5 / (res - 1), step_y)
            best = max(best, float(slab[ti, xi]))
            values[i, k] = best
            xb = np.zeros(n)
            xb[cols] = yb
            argmax[(i, k)] = (tb, xb.tolist())
            if time_dependent:
                profiles[i, k] = np.max(slab, axis=1)
    return CylinderMaxima(values, argmax, float(R_traj), res, ts if time_dependent else None, profiles)


# ---------------------------------------------------------------- admissible h


@dataclass
class DeltaDiagonal:
    """The sorted diagonal ``Delta_bar`` and the permutations that produced it."""

    values: np.ndarray
    sigma1: List[List[int]]
    sigma2: List[List[int]]
    profiles: Optional[List[ScalarPotential]] = None


def delta_diagonal(CM: CylinderMaxima, sig: Signature, time_dependent: bool = False) -> DeltaDiagonal:
    """``Delta_bar_ii``: the ``i``-th smallest block maximum on cylinder ``i`` within its block."""
    n, m = sig.n, sig.m
    vals = np.zeros(n)
    s1, s2 = [], []
    prof = [] if time_dependent else None
    for i in range(n):
        row = CM.values[i]
        if i < m:
            order = list(np.argsort(row[:m], kind="stable"))
            s1.append(order)
            k = order[i]
        else:
            order = list(np.argsort(row[m:], kind="stable"))
            s2.append(order)
            k = m + order[i - m]
        vals[i] = row[k]
        if time_dependent:
            prof.append(CM.diagonal_profile(i, k))
    return DeltaDiagonal(vals, s1, s2, prof)


def delta_bar(D: DeltaDiagonal, sig: Signature, h: Sequence[int]) -> np.ndarray:
    """Eigenvalue shifts ``eta_{h_i}`` of ``Delta_bar_ii`` (first block) and of ``-Delta_bar_ii`` (second block)."""
    out = np.zeros(sig.n)
    for i, hi in enumerate(h):
        if D.profiles is not None:
            pot = D.profiles[i]
            if i < sig.m:
                out[i] = eta_j(pot, int(hi)).eta
            else:
                neg = ScalarPotential(lambda t, _p=pot: -_p(t))
                out[i] = eta_j(neg, int(hi)).eta
        elif i < sig.m:
            out[i] = (hi * np.pi) ** 2 - D.values[i]
        else:
            out[i] = (hi * np.pi) ** 2 + D.values[i]
    return out


@dataclass
class TSet:
    """Admissible winding vectors and the sets they are drawn from."""

    members: List[Tuple[int, ...]]
    S_members: List[Tuple[int, ...]]
    S_prime_members: List[Tuple[int, ...]]
    certificates: Dict[Tuple[int, ...], list]
    m0_twice: int
    minf_twice: int
    hmax: int
    truncated: bool
    S_truncated: bool

    @property
    def empty(self) -> bool:
        return not self.members

    def to_dict(self) -> dict:
        return {
            "T": [list(h) for h in self.members],
            "S": [list(h) for h in self.S_members],
            "S_prime": [list(h) for h in self.S_prime_members],
            "delta_bar": {",".join(map(str, h)): v for h, v in self.certificates.items()},
            "m0": self.m0_twice / 2,
            "m_inf": self.minf_twice / 2,
            "hmax": self.hmax,
            "truncated": self.truncated,
            "S_truncated": self.S_truncated,
        }


def pairing(h: Sequence[int], sig: Signature) -> int:
    """``<h, j>``: sum of first block entries minus sum of second block entries."""
    return int(sum(h[: sig.m]) - sum(h[sig.m:]))


def _window_members(sig, lo2, hi2, hmax):
    """All ``h`` in ``[1, hmax]^n`` with ``lo2 < 2<h,j> < hi2``."""
    out = []
    truncated = False
    for h in itertools.product(range(1, hmax + 1), repeat=sig.n):
        p = 2 * pairing(h, sig)
        if lo2 < p < hi2:
            out.append(tuple(h))
            if max(h) == hmax:
                truncated = True
    return out, truncated


def enumerate_T(D: DeltaDiagonal, sig: Signature, m0_twice: int, minf_twice: int, hmax: int = 32,
                margin: float = TOL_T_MARGIN) -> TSet:
    """Admissible set: pairing window plus strict sign conditions on the shifts.

    First block shifts must exceed ``margin`` and second block shifts must be
    below ``-margin``. Components are capped at ``hmax``; ``truncated`` is set
    when the cap could have cut off members.
    """
    n, m, nu = sig.n, sig.m, sig.nu
    lo2 = m0_twice + 2 * (n - nu)
    hi2 = minf_twice - 2 * nu
    ranges = []
    truncated = False
    for i in range(n):
        if D.profiles is None:
            if i < m:
                lo = 1
                while lo <= hmax and (lo * np.pi) ** 2 - D.values[i] <= margin:
                    lo += 1
                ranges.append(range(lo, hmax + 1))
            else:
                hi = 0
                while hi + 1 <= hmax and ((hi + 1) * np.pi) ** 2 + D.values[i] < -margin:
                    hi += 1
                if hi == hmax and ((hmax + 1) * np.pi) ** 2 + D.values[i] < -margin:
                    truncated = True
                ranges.append(range(1, hi + 1))
        else:
            ranges.append(range(1, hmax + 1))
    members = []
    certs = {}
    # second block entries first, then the first block is bounded by the window
    for tail in itertools.product(*ranges[m:]):
        s2 = sum(tail)
        for head in itertools.product(*ranges[:m]):
            p2 = 2 * (sum(head) - s2)
            if p2 >= hi2:
                continue
            if not lo2 < p2:
                continue
            h = tuple(head) + tuple(tail)
            db = delta_bar(D, sig, h)
            if np.all(db[:m] > margin) and np.all(db[m:] < -margin):
                members.append(h)
                certs[h] = db.tolist()
                if max(h[:m], default=0) == hmax:
                    truncated = True
    members.sort()
    S_members, S_trunc = _window_members(sig, lo2, hi2, hmax)
    S_prime = []
    if minf_twice + 2 * n < m0_twice:
        S_prime, _ = _window_members(sig, minf_twice + 2 * (n - nu), m0_twice - 2 * nu, hmax)
    return TSet(members, S_members, S_prime, certs, m0_twice, minf_twice, hmax, truncated, S_trunc)


@dataclass
class SufficiencyReport:
    """Which of the closed-form sufficient conditions hold, with witnesses."""

    lambda_negative: bool
    m_delta_twice: Optional[int]
    window_degenerate: bool
    window_nondegenerate: bool
    witness_degenerate: Optional[Tuple[int, ...]]
    witness_nondegenerate: Optional[Tuple[int, ...]]

    def to_dict(self) -> dict:
        return {
            "second_block_below_minus_pi2": self.lambda_negative,
            "m_delta": None if self.m_delta_twice is None else self.m_delta_twice / 2,
            "window_degenerate": self.window_degenerate,
            "window_nondegenerate": self.window_nondegenerate,
            "witness_degenerate": None if self.witness_degenerate is None else list(self.witness_degenerate),
            "witness_nondegenerate": None if self.witness_nondegenerate is None else list(self.witness_nondegenerate),
        }


def sufficiency_checks(D: DeltaDiagonal, sig: Signature, m0_twice: int, minf_twice: int) -> SufficiencyReport:
    """Closed-form conditions guaranteeing a non-empty admissible set.

    (i) every second block diagonal maximum is below ``-pi^2``;
    (ii) ``m0 - n/2 + nu < m(Delta) < m_inf - 5n/2 + nu`` with ``m0 + 2n < m_inf``;
    (iii) ``m0 < m(Delta) < m_inf - n``.
    """
    n, m, nu = sig.n, sig.m, sig.nu
    lam_neg = bool(np.all(D.values[m:] < -np.pi ** 2))
    try:
        md = maslov_constant_split(np.diag(D.values), sig).twice_value
    except Degenerate:
        path = SplitSymmetricPath.from_diagonal(D.values, sig)
        md = maslov_crossing_form(compute_phase_trace(fundamental_solution(decouple(path)))).twice_value
    # compare doubled quantities to keep half-integers exact
    t2 = lam_neg and (m0_twice + 4 * n < minf_twice) and \
        (m0_twice - n + 2 * nu < md < minf_twice - 5 * n + 2 * nu)
    t3 = lam_neg and (m0_twice < md < minf_twice - 2 * n)
    w2 = tuple([count_N(v) + 2 for v in D.values[:m]] + [count_N(-v) for v in D.values[m:]]) if t2 else None
    w3 = tuple([count_N(v) + 1 for v in D.values[:m]] + [count_N(-v) for v in D.values[m:]]) if t3 else None
    return SufficiencyReport(lam_neg, md, t2, t3, w2, w3)


# ---------------------------------------------------------------- emptiness


@dataclass
class EmptinessReport:
    radial: bool
    radial_defect: float
    tilde_applies: bool
    consistent: bool

    def to_dict(self) -> dict:
        return {"radial": self.radial, "radial_defect": self.radial_defect,
                "alpha_inf_beyond_tilde": self.tilde_applies, "consistent": self.consistent}


def radial_defect(P: NonlinearProblem, seed: int = 5) -> float:
    """Largest change of ``S(t, x)`` across directions at fixed ``|x|``, relative to its size."""
    n = P.n
    dirs = sphere_directions(n, 12, seed)
    worst = 0.0
    for t in np.linspace(0.0, 1.0, 5):
        for r in (1e-2, 0.3, 1.0, 3.0, 30.0):
            ref = P.matrix(t, r * dirs[0])
            scale = max(1.0, float(np.max(np.abs(ref))))
            for d in dirs[1:]:
                worst = max(worst, float(np.max(np.abs(P.matrix(t, r * d) - ref))) / scale)
    return worst


def emptiness_checks(P: NonlinearProblem, bounds: Optional[AlphaBounds], T: TSet,
                     raise_on_violation: bool = True) -> EmptinessReport:
    """Detect the two situations in which the admissible set must be empty.

    Raises
    ------
    ConsistencyViolation
        If either situation is detected while ``T`` is non-empty.
    """
    rd = radial_defect(P)
    radial = rd < TOL_RADIAL
    tilde = bounds is not None and bounds.alpha_inf >= bounds.alpha_tilde_inf
    consistent = not ((radial or tilde) and not T.empty)
    if not consistent and raise_on_violation:
        raise ConsistencyViolation("admissible set is non-empty although an emptiness criterion holds")
    return EmptinessReport(radial, rd, tilde, consistent)
