"""Scalar Prüfer angles, Dirichlet eigenvalue shifts and Sturm comparison.

For a scalar potential ``a(t)`` the angle ``theta = arg(phi' + i phi)`` of the
solution of ``phi'' + a phi = 0, phi(0) = 0, phi'(0) = 1`` obeys

    theta' = cos(theta)^2 + a(t) sin(theta)^2,   theta(0) = 0.

The second block angle belongs to ``u' = -v, v' = a u`` and equals
``-theta``; it is computed here by a separate route as a cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import odeint

from .core_numerics import TOL_INTEGRATE, expand_bracket, integrate, wrap
from .errors import AngleMismatch, BracketFailure, HypothesisViolated, NoBracket
from .expr import Expression

ETA_LIMIT = 1e6
TOL_RESIDUAL = 1e-9
TOL_AGREE = 1e-8


@dataclass
class ScalarPotential:
    """A real potential ``a(t)`` on ``[0, 1]``.

    Build with :meth:`constant`, :meth:`from_expression`, :meth:`tabulated` or
    directly from a callable.
    """

    func: Callable[[float], float]
    const: Optional[float] = None
    label: str = ""

    @classmethod
    def constant(cls, a: float) -> "ScalarPotential":
        a = float(a)
        return cls(lambda t, _a=a: _a, a, repr(a))

    @classmethod
    def from_expression(cls, src: str) -> "ScalarPotential":
        e = Expression.compile(src, n=0)
        if e.is_constant:
            return cls.constant(e(0.0, ()))
        return cls(lambda t, _e=e: _e(t, ()), None, src)

    @classmethod
    def tabulated(cls, times, values) -> "ScalarPotential":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(lambda t: float(np.interp(t, times, values)), None, "tabulated")

    @classmethod
    def coerce(cls, a) -> "ScalarPotential":
        if isinstance(a, ScalarPotential):
            return a
        if isinstance(a, str):
            return cls.from_expression(a)
        if callable(a):
            return cls(a)
        return cls.constant(a)

    def __call__(self, t: float) -> float:
        return self.func(t)

    def shifted(self, eta: float) -> "ScalarPotential":
        if self.const is not None:
            return ScalarPotential.constant(self.const + eta)
        f = self.func
        return ScalarPotential(lambda t: f(t) + eta, None, f"{self.label}+{eta!r}")

    def mean(self, samples: int = 257) -> float:
        if self.const is not None:
            return self.const
        ts = np.linspace(0.0, 1.0, samples)
        return float(np.trapezoid([self.func(t) for t in ts], ts))

    def samples(self, num: int = 257) -> np.ndarray:
        ts = np.linspace(0.0, 1.0, num)
        return np.array([self.func(t) for t in ts])


def _prufer_rhs(f):
    def rhs(y, t):
        s = math.sin(y[0])
        return 1.0 + (f(t) - 1.0) * s * s

    return rhs


def prufer_path(a, times, tol: float = 1e-13) -> np.ndarray:
    """First block angle sampled at ``times`` (starting at ``t = 0``)."""
    pot = ScalarPotential.coerce(a)
    times = np.asarray(times, dtype=float)
    sol, info = odeint(_prufer_rhs(pot.func), [0.0], times, rtol=tol, atol=tol, mxstep=1_000_000,
                       full_output=True)
    if info["message"] != "Integration successful.":
        raise BracketFailure(info["message"])
    return sol[:, 0]


def scaled_prufer_angle(a, omega: float, t_end: float = 1.0, tol: float = 1e-13) -> float:
    """Angle of ``(phi', omega phi)``; it meets multiples of ``pi`` exactly when ``theta_a`` does.

    With ``omega^2`` close to ``a`` the angle rotates almost uniformly, which
    makes it a well conditioned target for eigenvalue searches.
    """
    pot = ScalarPotential.coerce(a)
    f = pot.func
    w = float(omega)

    def rhs(y, t):
        s = math.sin(y[0])
        return w + (f(t) / w - w) * s * s

    sol, info = odeint(rhs, [0.0], [0.0, t_end], rtol=tol, atol=tol, mxstep=1_000_000, full_output=True)
    if info["message"] != "Integration successful.":
        raise BracketFailure(info["message"])
    return float(sol[-1, 0])


def prufer_angle(a, t_end: float = 1.0, tol: float = 1e-13) -> float:
    """First block angle ``theta_a(t_end)`` from the Prüfer equation."""
    return float(prufer_path(a, [0.0, t_end], tol)[-1])


def second_block_angle_direct(a, t_end: float = 1.0, tol: float = TOL_INTEGRATE) -> float:
    """Angle ``arg(v + i u)`` of ``u' = -v, v' = a u`` with ``(u, v)(0) = (0, 1)``.

    The linear system is integrated and the argument unwrapped on a grid that
    is refined until consecutive samples differ by less than ``pi/8``.
    """
    pot = ScalarPotential.coerce(a)
    f = pot.func

    def rhs(t, w):
        return [-w[1], f(t) * w[0]]

    scale = np.sqrt(max(1.0, np.max(np.abs(pot.samples(65)))))
    num = int(max(65, 16 * scale * t_end))
    while True:
        traj = integrate(rhs, [0.0, 1.0], np.linspace(0.0, t_end, num), tol)
        u, v = traj.states[:, 0], traj.states[:, 1]
        raw = np.arctan2(u, v)
        steps = wrap(np.diff(raw))
        if np.max(np.abs(steps)) < np.pi / 8 or num > 1 << 18:
            return float(np.sum(steps))
        num *= 2


def second_block_angle(a, t_end: float = 1.0, check: bool = True) -> float:
    """Second block angle ``theta^2_a(t_end)``.

    Computed from the linear system; when ``check`` is true it must agree with
    ``-prufer_angle(a)`` to ``1e-8``.

    Raises
    ------
    AngleMismatch
    """
    direct = second_block_angle_direct(a, t_end)
    if check:
        ref = -prufer_angle(a, t_end)
        if abs(direct - ref) > TOL_AGREE:
            raise AngleMismatch(f"second block angle {direct!r} differs from the Prüfer value {ref!r}")
    return direct


@dataclass(frozen=True)
class EigenvalueResult:
    """Shift ``eta`` with ``theta_{a+eta}(1) = j pi`` and its residual."""

    j: int
    eta: float
    residual: float


def eta_j(a, j: int, tol: float = 1e-13) -> EigenvalueResult:
    """Smallest shift making ``j pi`` the terminal angle, i.e. the ``j``-th Dirichlet eigenvalue of ``-d^2 - a``.

    Seeds at ``j^2 pi^2 - mean(a)`` and expands the bracket geometrically.

    Raises
    ------
    BracketFailure
        If no bracket exists inside ``|eta| <= 1e6`` or the residual exceeds ``1e-9``.
    """
    if j < 1:
        raise ValueError("j must be a positive integer")
    pot = ScalarPotential.coerce(a)
    target = j * np.pi

    omega = j * np.pi

    def g(eta):
        return scaled_prufer_angle(pot.shifted(eta), omega) - target

    seed = (j * np.pi) ** 2 - pot.mean()
    if abs(seed) > ETA_LIMIT:
        raise BracketFailure(f"seed {seed:.3g} lies outside |eta| <= {ETA_LIMIT:g}")
    try:
        eta = expand_bracket(g, seed, 1e-3 * (1.0 + abs(seed)), ETA_LIMIT, growth=4.0, tol=tol)
    except NoBracket as exc:
        raise BracketFailure(str(exc)) from exc
    res = abs(prufer_angle(pot.shifted(eta)) - target)
    if res > TOL_RESIDUAL:
        raise BracketFailure(f"residual {res:.2e} exceeds {TOL_RESIDUAL:g}")
    return EigenvalueResult(j, float(eta), float(res))


def interior_zeros(a, eta: float, num: int = 4001) -> int:
    """Number of sign changes of the Dirichlet solution of ``a + eta`` inside ``(0, 1)``."""
    pot = ScalarPotential.coerce(a).shifted(eta)
    f = pot.func
    ts = np.linspace(0.0, 1.0, num)
    traj = integrate(lambda t, w: [w[1], -f(t) * w[0]], [0.0, 1.0], ts, 1e-11)
    phi = traj.states[1:-1, 0]
    return int(np.sum(np.sign(phi[1:]) * np.sign(phi[:-1]) < 0))


@dataclass(frozen=True)
class SturmComparison:
    theta1_a: float
    theta1_b: float
    theta2_a: float
    theta2_b: float

    @property
    def ordered(self) -> bool:
        return self.theta1_a <= self.theta1_b + TOL_AGREE and self.theta2_a >= self.theta2_b - TOL_AGREE


def sturm_compare(a, b, samples: int = 257) -> SturmComparison:
    """Angles of both blocks for ``a <= b``; monotonicity gives ``theta1_a <= theta1_b`` and ``theta2_a >= theta2_b``.

    Raises
    ------
    HypothesisViolated
        If ``a(t) > b(t)`` at a sample point.
    """
    pa, pb = ScalarPotential.coerce(a), ScalarPotential.coerce(b)
    if np.any(pa.samples(samples) > pb.samples(samples) + 1e-14):
        raise HypothesisViolated("comparison requires a <= b on [0, 1]")
    t1a, t1b = prufer_angle(pa), prufer_angle(pb)
    return SturmComparison(t1a, t1b, second_block_angle(pa), second_block_angle(pb))
