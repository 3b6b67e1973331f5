"""Maslov index of the Dirichlet problem, computed three independent ways.

* constant split coefficients: a counting formula over eigenvalues,
* phase angles: integer parts of the terminal angles,
* crossing form: signed count of crossings on ``[eps, 1]`` with half weight
  at the endpoints.

Indices are stored doubled so that half-integers stay exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import Degenerate, DegenerateEndpoint, EpsilonNotFound, NonRegularCrossing, TangentialCrossing
from .hamiltonian import FundamentalSolution, Signature, SplitSymmetricPath
from .phase_angles import (TOL_ENDPOINT, Crossing, PhaseAngleTrace, compute_phase_trace, detect_crossings,
                           k_alpha)

TOL_DEGENERATE = 1e-10
MIN_PREFIX = 1e-4


@dataclass(frozen=True)
class MaslovIndex:
    """Maslov index stored as ``twice_value`` (an integer)."""

    twice_value: int
    crossings: tuple = ()
    epsilon: Optional[float] = None
    method: str = ""

    @property
    def value(self) -> float:
        return self.twice_value / 2

    def __int__(self):
        if self.twice_value % 2:
            raise ValueError("half-integer index")
        return self.twice_value // 2


def count_N(a: float) -> int:
    """Number of integers ``i >= 1`` with ``i^2 pi^2 < a``."""
    a = float(a)
    if a <= np.pi ** 2:
        return 0
    k = int(np.floor(np.sqrt(a) / np.pi)) + 1
    while k > 0 and (k * np.pi) ** 2 >= a:
        k -= 1
    return k


def is_dirichlet_eigenvalue(a: float, tol: float = TOL_DEGENERATE) -> bool:
    """Whether ``a`` is within ``tol`` of some ``k^2 pi^2`` with ``k >= 1``."""
    if a <= 0:
        return False
    k = max(1, int(np.round(np.sqrt(a) / np.pi)))
    return min(abs(a - (j * np.pi) ** 2) for j in (k - 1, k, k + 1) if j >= 1) <= tol


@dataclass(frozen=True)
class ConstantSplitSpectrum:
    """Eigenvalues ``lam`` of ``A`` and ``mu`` of ``B`` for constant split coefficients."""

    lam: tuple
    mu: tuple

    @classmethod
    def from_matrix(cls, S, sig: Signature) -> "ConstantSplitSpectrum":
        path = SplitSymmetricPath.from_constant(S, sig)
        A, B = sig.blocks(path.constant)
        lam = tuple(np.linalg.eigvalsh(A)) if sig.m else ()
        mu = tuple(np.linalg.eigvalsh(B)) if sig.nu else ()
        return cls(tuple(float(v) for v in lam), tuple(float(v) for v in mu))

    @property
    def sig(self) -> Signature:
        return Signature(len(self.lam) + len(self.mu), len(self.mu))

    def matrix(self) -> np.ndarray:
        return np.diag(np.concatenate([self.lam, self.mu]))

    def is_degenerate(self, tol: float = TOL_DEGENERATE) -> bool:
        return any(is_dirichlet_eigenvalue(v, tol) for v in self.lam) or \
            any(is_dirichlet_eigenvalue(-v, tol) for v in self.mu)


def _spectrum(spec, sig: Optional[Signature]) -> ConstantSplitSpectrum:
    if isinstance(spec, ConstantSplitSpectrum):
        return spec
    if sig is None:
        raise ValueError("a signature is required for matrix input")
    return ConstantSplitSpectrum.from_matrix(spec, sig)


def maslov_formula_twice(spec: ConstantSplitSpectrum) -> int:
    return 2 * (sum(count_N(v) for v in spec.lam) - sum(count_N(-v) for v in spec.mu))


def maslov_constant_split(spec, sig: Optional[Signature] = None) -> MaslovIndex:
    """``sum N(lam_i) - sum N(-mu_i)`` for constant split coefficients.

    Raises
    ------
    Degenerate
        If some ``lam_i`` or ``-mu_i`` is within ``1e-10`` of ``k^2 pi^2``.
    """
    s = _spectrum(spec, sig)
    if s.is_degenerate():
        raise Degenerate("a block eigenvalue is a Dirichlet eigenvalue of -d^2/dt^2")
    return MaslovIndex(maslov_formula_twice(s), method="constant_split")


def _as_trace(obj) -> PhaseAngleTrace:
    if isinstance(obj, PhaseAngleTrace):
        return obj
    if isinstance(obj, FundamentalSolution):
        return compute_phase_trace(obj)
    raise TypeError("expected a FundamentalSolution or a PhaseAngleTrace")


def maslov_from_phase_angles(obj, tol_endpoint: float = TOL_ENDPOINT) -> MaslovIndex:
    """``sum k1(1) - sum k2(1)`` from the terminal sorted angles.

    Raises
    ------
    DegenerateEndpoint
        If a terminal angle lies within ``tol_endpoint`` of a multiple of ``pi``.
    """
    trace = _as_trace(obj)
    th1, th2 = trace.terminal()
    allv = np.concatenate([th1, th2])
    if allv.size and np.min(np.abs(allv - np.round(allv / np.pi) * np.pi)) <= tol_endpoint:
        raise DegenerateEndpoint("a terminal angle is a multiple of pi")
    ka = k_alpha(trace, trace.times[-1])
    return MaslovIndex(2 * (sum(ka.k1) - sum(ka.k2)), method="phase_angles")


def choose_epsilon(trace: PhaseAngleTrace, min_prefix: float = MIN_PREFIX) -> float:
    """Half of the first crossing time after ``0``.

    Raises
    ------
    EpsilonNotFound
        If the crossing-free prefix is shorter than ``min_prefix``.
    """
    lo = min_prefix * 1e-3
    # angles leave level 0 at t = 0, so a level-0 hit at the left edge is the start itself
    cr = [c for c in detect_crossings(trace, (lo, trace.times[-1]))
          if not (c.t == lo and all(v == 0 for v in c.levels))]
    if not cr:
        return 0.5 * float(trace.times[-1])
    first = cr[0].t
    if first < min_prefix:
        raise EpsilonNotFound(f"crossing at t={first:.3g} leaves no crossing-free prefix")
    return 0.5 * first


def maslov_crossing_form(obj, window: Optional[Sequence[float]] = None) -> MaslovIndex:
    """Signed crossing count on ``[eps, 1]``, endpoints weighted one half.

    Raises
    ------
    NonRegularCrossing
        If a crossing is tangential.
    EpsilonNotFound
    """
    trace = _as_trace(obj)
    if window is None:
        eps = choose_epsilon(trace)
        window = (eps, float(trace.times[-1]))
    lo, hi = float(window[0]), float(window[1])
    try:
        crossings = detect_crossings(trace, (lo, hi))
    except TangentialCrossing as exc:
        raise NonRegularCrossing(str(exc)) from exc
    twice = 0
    for c in crossings:
        if c.t == lo or c.t == hi:
            twice += c.signature_contribution
        else:
            twice += 2 * c.signature_contribution
    return MaslovIndex(twice, tuple(crossings), lo, "crossing_form")


def degenerate_bound(spec, twice_measured: int, sig: Optional[Signature] = None) -> bool:
    """Whether a measured index stays within ``n/2`` of the counting formula."""
    s = _spectrum(spec, sig)
    n = len(s.lam) + len(s.mu)
    return abs(twice_measured - maslov_formula_twice(s)) <= n


@dataclass
class MaslovComparison:
    """Side by side values from the available methods."""

    values: dict = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        vals = [v for v in self.values.values() if v is not None]
        return len(set(vals)) <= 1


def maslov_all_methods(path: SplitSymmetricPath, grid=129) -> MaslovComparison:
    """Doubled index by every method that applies to ``path``."""
    from .hamiltonian import decouple, fundamental_solution

    F = fundamental_solution(decouple(path), grid)
    trace = compute_phase_trace(F)
    out = MaslovComparison()
    if path.is_constant:
        try:
            out.values["constant_split"] = maslov_constant_split(path.constant, path.sig).twice_value
        except Degenerate:
            out.values["constant_split"] = None
    try:
        out.values["phase_angles"] = maslov_from_phase_angles(trace).twice_value
    except DegenerateEndpoint:
        out.values["phase_angles"] = None
    out.values["crossing_form"] = maslov_crossing_form(trace).twice_value
    return out
