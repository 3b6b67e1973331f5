"""Shooting on the angle field and Miranda-type localisation of its zeros.

For a winding vector ``h`` the field is

    f_i(alpha) = theta1_i(1) - h_i pi          (first block)
    f_i(alpha) = h_i pi + theta2_i(1)          (second block)

with sorted terminal angles of the linear system along the trajectory from
``J u'(0) = alpha``. A zero of ``f`` gives a solution of the Dirichlet problem
with prescribed winding. Zeros are searched in each orthant of a conical
shell ``r <= |alpha| <= R``.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import heapq
import numpy as np

from .errors import CertificateMismatch, NonFinite, NotFound
from .model import NonlinearProblem, l_system

TOL_DEGENERATE_JAC = 1e-6


@dataclass(frozen=True)
class ConicalShell:
    """The part of ``{r <= |alpha| <= R}`` in the orthant with the given signs."""

    r: float
    R: float
    signs: Tuple[int, ...]

    def __post_init__(self):
        if not 0 < self.r < self.R:
            raise ValueError("a shell needs 0 < r < R")

    def to_alpha(self, beta) -> np.ndarray:
        return np.asarray(self.signs, dtype=float) * np.asarray(beta, dtype=float)

    def contains_beta(self, beta, slack: float = 1e-12) -> bool:
        beta = np.asarray(beta, dtype=float)
        nrm = float(np.linalg.norm(beta))
        return bool(np.all(beta >= -slack) and self.r * (1 - slack) <= nrm <= self.R * (1 + slack))


@dataclass
class FieldEval:
    alpha: np.ndarray
    f: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    u1: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.f)))


def field_f(P: NonlinearProblem, alpha, h: Sequence[int]) -> FieldEval:
    """Evaluate the angle field at ``alpha`` for the winding vector ``h``."""
    L = l_system(P, alpha)
    th1, th2 = L.terminal_angles()
    m = P.sig.m
    h = np.asarray(h, dtype=float)
    f = np.concatenate([th1 - h[:m] * np.pi, h[m:] * np.pi + th2])
    return FieldEval(np.asarray(alpha, dtype=float), f, th1, th2, L.u1.copy())


def _patch_directions(k: int, res: int) -> np.ndarray:
    """Unit vectors in the closed positive orthant of ``R^k`` on a simplex lattice."""
    if k == 1:
        return np.array([[1.0]])
    pts = [c for c in itertools.product(range(res), repeat=k) if sum(c) == res - 1]
    v = np.array(pts, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class MirandaReport:
    """Sampled boundary values of the field on a shell.

    ``inner_max`` is the largest ``sum f`` on the inner sphere, ``outer_min``
    the smallest on the outer sphere. ``face_max[i]`` and ``face_min[i]`` are
    the extreme values of ``f_i`` on the face ``alpha_i = 0``.
    """

    inner_max: float
    outer_min: float
    face_max: List[float]
    face_min: List[float]
    samples: int

    @property
    def sphere_ok(self) -> bool:
        return self.inner_max < 0 < self.outer_min

    @property
    def variant(self) -> Optional[str]:
        if not self.sphere_ok:
            return None
        if all(v < 0 for v in self.face_max):
            return "negative_faces"
        if all(v > 0 for v in self.face_min):
            return "positive_faces"
        return None

    @property
    def holds(self) -> bool:
        return self.variant is not None

    def to_dict(self) -> dict:
        return {"inner_max": self.inner_max, "outer_min": self.outer_min, "face_max": self.face_max,
                "face_min": self.face_min, "variant": self.variant, "holds": self.holds}


def miranda_conditions(P: NonlinearProblem, h: Sequence[int], shell: ConicalShell, res: int = 9) -> MirandaReport:
    """Sample the sign conditions on the inner sphere, outer sphere and coordinate faces of the shell."""
    n = P.n
    dirs = _patch_directions(n, res)
    inner = [float(np.sum(field_f(P, shell.to_alpha(shell.r * d), h).f)) for d in dirs]
    outer = [float(np.sum(field_f(P, shell.to_alpha(shell.R * d), h).f)) for d in dirs]
    fmax, fmin = [], []
    radii = np.geomspace(shell.r, shell.R, res)
    count = 2 * len(dirs)
    for i in range(n):
        vals = []
        if n == 1:
            fmax.append(-np.inf)
            fmin.append(np.inf)
            continue
        sub = _patch_directions(n - 1, res)
        for d in sub:
            full = np.insert(d, i, 0.0)
            for rad in radii:
                vals.append(float(field_f(P, shell.to_alpha(rad * full), h).f[i]))
        count += len(vals)
        fmax.append(max(vals))
        fmin.append(min(vals))
    return MirandaReport(max(inner), min(outer), fmax, fmin, count)


@dataclass
class SolutionRecord:
    """A verified zero of the angle field."""

    h: Tuple[int, ...]
    orthant: Tuple[int, ...]
    alpha: np.ndarray
    residual_f: float
    residual_u: float
    theta1: np.ndarray
    theta2: np.ndarray
    degenerate_family: bool = False
    evaluations: int = 0

    def certificate(self) -> dict:
        m = len(self.theta1)
        return {
            "theta1_over_pi": [float(v / np.pi) for v in self.theta1],
            "theta2_over_pi": [float(v / np.pi) for v in self.theta2],
            "targets_over_pi": [float(v) for v in self.h[:m]] + [-float(v) for v in self.h[m:]],
        }

    def to_dict(self) -> dict:
        return {
            "h": list(self.h),
            "orthant": list(self.orthant),
            "alpha": [float(v) for v in self.alpha],
            "residual_f": self.residual_f,
            "residual_u": self.residual_u,
            "degenerate_family": self.degenerate_family,
            "evaluations": self.evaluations,
            "certificate": self.certificate(),
        }


class _Field:
    """Cached field in orthant coordinates with an evaluation budget."""

    def __init__(self, P, h, shell, budget):
        self.P, self.h, self.shell, self.budget = P, h, shell, budget
        self.cache: Dict[tuple, FieldEval] = {}
        self.evals = 0

    def __call__(self, beta) -> FieldEval:
        key = tuple(np.round(np.asarray(beta, dtype=float), 14).tolist())
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if self.evals >= self.budget:
            raise NotFound("evaluation budget exhausted")
        self.evals += 1
        try:
            ev = field_f(self.P, self.shell.to_alpha(beta), self.h)
        except NonFinite:
            ev = FieldEval(self.shell.to_alpha(beta), np.full(len(self.h), np.nan), np.array([]), np.array([]),
                           np.full(len(self.h), np.nan))
        self.cache[key] = ev
        return ev


def _jacobian(F: _Field, beta: np.ndarray, f0: np.ndarray) -> np.ndarray:
    n = beta.size
    J = np.zeros((n, n))
    for j in range(n):
        step = 1e-6 * (1.0 + abs(beta[j]))
        b = beta.copy()
        b[j] += step
        J[:, j] = (F(b).f - f0) / step
    return J


def _newton(F: _Field, beta0, tol_f: float, max_iter: int = 40):
    """Damped Newton with Armijo backtracking. Returns ``(beta, eval, J)`` or ``None``."""
    beta = np.asarray(beta0, dtype=float).copy()
    ev = F(beta)
    if not np.all(np.isfinite(ev.f)):
        return None
    J = None
    for _ in range(max_iter):
        fn = float(np.dot(ev.f, ev.f))
        J = _jacobian(F, beta, ev.f)
        if ev.residual < tol_f:
            return beta, ev, J
        try:
            step = np.linalg.lstsq(J, -ev.f, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-6:
            cand = beta + lam * step
            evc = F(cand)
            if np.all(np.isfinite(evc.f)) and float(np.dot(evc.f, evc.f)) <= (1 - 1e-4 * lam) * fn:
                beta, ev = cand, evc
                break
            lam *= 0.5
        else:
            return None
    if ev.residual < tol_f:
        return beta, ev, _jacobian(F, beta, ev.f)
    return None


def _box_norm_range(lo, hi):
    near = np.clip(0.0, lo, hi)
    far = np.maximum(np.abs(lo), np.abs(hi))
    return float(np.linalg.norm(near)), float(np.linalg.norm(far))


def _lattice(lo, hi):
    n = lo.size
    pts = [lo + (hi - lo) * np.array(c) / 2.0 for c in itertools.product(range(3), repeat=n)]
    return pts, list(itertools.product(range(3), repeat=n))


def miranda_solve(P: NonlinearProblem, h: Sequence[int], shell: ConicalShell, tol_f: Optional[float] = None,
                  tol_u: Optional[float] = None, tol_angle: Optional[float] = None, max_depth: int = 40,
                  budget: Optional[int] = None) -> SolutionRecord:
    """Locate a zero of the field inside the shell.

    Best-first subdivision of the bounding box ``[0, R]^n`` of the orthant.
    Boxes outside the shell are dropped, and so are boxes on which some
    ``f_i`` keeps one sign, beyond ``tol_f``, on both of its opposing faces. Damped Newton
    runs from the best sample of promising boxes.

    Raises
    ------
    NotFound
        When the budget or depth is exhausted.
    CertificateMismatch
        When a zero of the field does not satisfy the boundary condition to ``tol_u``.
    """
    opts = P.options
    tol_f = opts.tol_f if tol_f is None else tol_f
    tol_u = opts.tol_u if tol_u is None else tol_u
    tol_angle = opts.tol_angle if tol_angle is None else tol_angle
    budget = opts.max_evals if budget is None else budget
    n = P.n
    F = _Field(P, tuple(h), shell, budget)
    tried: List[np.ndarray] = []
    heap = []
    counter = itertools.count()

    def push(lo, hi, depth):
        nmin, nmax = _box_norm_range(lo, hi)
        if nmin > shell.R or nmax < shell.r:
            return
        pts, idx = _lattice(lo, hi)
        vals = [F(p).f for p in pts]
        finite = [v for v in vals if np.all(np.isfinite(v))]
        for i in range(n):
            lo_face = [v[i] for v, c in zip(vals, idx) if c[i] == 0]
            hi_face = [v[i] for v, c in zip(vals, idx) if c[i] == 2]
            face = np.array(lo_face + hi_face)
            if np.all(np.isfinite(face)) and (np.all(face > tol_f) or np.all(face < -tol_f)):
                return
        inside = [(float(np.max(np.abs(v))), k) for k, v in enumerate(vals)
                  if np.all(np.isfinite(v)) and shell.contains_beta(pts[k])]
        if not finite:
            return
        best = min(inside) if inside else (float(min(np.max(np.abs(v)) for v in finite)), None)
        heapq.heappush(heap, (best[0], next(counter), lo, hi, depth, None if best[1] is None else pts[best[1]]))

    best_seen = (np.inf, None)
    try:
        push(np.zeros(n), np.full(n, shell.R), 0)
        while heap:
            score, _, lo, hi, depth, start = heapq.heappop(heap)
            if score < best_seen[0] and start is not None:
                best_seen = (score, start)
            width = float(np.max(hi - lo))
            promising = start is not None and (score < 0.5 or width < shell.R / 64)
            if promising and not any(np.linalg.norm(start - t) < 1e-3 * width for t in tried):
                tried.append(start)
                out = _newton(F, start, tol_f)
                if out is not None:
                    beta, ev, J = out
                    if shell.contains_beta(beta):
                        return _finalise(P, h, shell, beta, ev, J, F.evals, tol_f, tol_u, tol_angle)
            if depth >= max_depth:
                continue
            mid = 0.5 * (lo + hi)
            for c in itertools.product((0, 1), repeat=n):
                c = np.array(c)
                push(np.where(c == 0, lo, mid), np.where(c == 0, mid, hi), depth + 1)
    except NotFound:
        pass
    raise NotFound(f"no zero of the field for h={tuple(h)} in orthant {shell.signs}",
                   None if best_seen[1] is None else shell.to_alpha(best_seen[1]).tolist(), best_seen[0])


def _finalise(P, h, shell, beta, ev, J, evals, tol_f, tol_u, tol_angle) -> SolutionRecord:
    m = P.sig.m
    u_res = float(np.max(np.abs(ev.u1)))
    targets1 = np.asarray(h[:m], dtype=float) * np.pi
    targets2 = -np.asarray(h[m:], dtype=float) * np.pi
    ang_err = float(np.max(np.abs(np.concatenate([ev.theta1 - targets1, ev.theta2 - targets2]))))
    if u_res >= tol_u or ang_err >= tol_angle:
        raise CertificateMismatch(f"field residual {ev.residual:.2e} but |u(1)|={u_res:.2e}, "
                                  f"angle error {ang_err:.2e}")
    degenerate = bool(np.max(np.abs(J)) < TOL_DEGENERATE_JAC)
    return SolutionRecord(tuple(int(v) for v in h), tuple(shell.signs), shell.to_alpha(beta), ev.residual, u_res,
                          ev.theta1, ev.theta2, degenerate, evals)


def thread_count(default: Optional[int] = None) -> int:
    env = os.environ.get("TOOL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, default or 1)


def orthant_results(P: NonlinearProblem, h: Sequence[int], r: float, R: float,
                    threads: Optional[int] = None) -> List[tuple]:
    """``(signs, record_or_error)`` for every orthant, computed by a thread pool of size ``TOOL_THREADS``."""
    orthants = list(itertools.product((1, -1), repeat=P.n))
    workers = thread_count(threads or P.options.threads)

    def run(signs):
        try:
            return signs, miranda_solve(P, h, ConicalShell(r, R, signs))
        except (NotFound, CertificateMismatch) as exc:
            return signs, exc

    if workers == 1:
        return [run(s) for s in orthants]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(run, orthants))


def solve_all_orthants(P: NonlinearProblem, h: Sequence[int], r: float, R: float, threads: Optional[int] = None,
                       strict: bool = True) -> List[SolutionRecord]:
    """One solution per orthant of the shell ``r <= |alpha| <= R``.

    With ``strict`` the first failing orthant re-raises its error; otherwise
    failing orthants are skipped.
    """
    out = []
    for signs, res in orthant_results(P, h, r, R, threads):
        if isinstance(res, Exception):
            if strict:
                raise res
            continue
        out.append(res)
    return out


def min_separation(records: Sequence[SolutionRecord]) -> float:
    """Smallest pairwise distance between solution data ``alpha``."""
    best = np.inf
    for a, b in itertools.combinations(records, 2):
        best = min(best, float(np.linalg.norm(a.alpha - b.alpha)))
    return best
