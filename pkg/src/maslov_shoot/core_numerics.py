"""Numerical core: ODE integration, unit-circle spectra, angle tracking, root bracketing.

All higher modules go through these four primitives so that tolerances and
failure modes are handled in one place.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, linear_sum_assignment

from .errors import NoBracket, NonFinite, NotUnitary, StepFailure, TrackingAmbiguity

TOL_UNIT = 1e-8
TOL_EIG = 1e-9
TOL_INTEGRATE = 1e-10
MAX_STEP_ANGLE = np.pi / 8
BLOWUP_NORM = 1e100


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sample points covering an interval."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a time grid needs at least two points")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, num: int = 129, t0: float = 0.0, t1: float = 1.0) -> "TimeGrid":
        return cls(np.linspace(t0, t1, int(num)))

    @property
    def t0(self) -> float:
        return float(self.points[0])

    @property
    def t1(self) -> float:
        return float(self.points[-1])

    def __len__(self) -> int:
        return self.points.size


def as_grid(grid) -> TimeGrid:
    if isinstance(grid, TimeGrid):
        return grid
    if np.isscalar(grid):
        return TimeGrid.uniform(int(grid))
    return TimeGrid(np.asarray(grid, dtype=float))


@dataclass
class Trajectory:
    """Solution of an ODE sampled on a grid, with a dense interpolant.

    Attributes
    ----------
    grid : TimeGrid
    states : ndarray, shape (len(grid), dim)
    dense : callable
        ``dense(t)`` returns the state at any ``t`` in the grid interval.
    nfev : int
        Number of right-hand side evaluations.
    """

    grid: TimeGrid
    states: np.ndarray
    dense: Callable[[float], np.ndarray]
    nfev: int = 0

    def __call__(self, t):
        return self.dense(t)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], w0, grid, tol: float = TOL_INTEGRATE,
              *, method: str = "DOP853") -> Trajectory:
    """Integrate ``w' = rhs(t, w)`` from ``w0`` across ``grid``.

    Uses an adaptive explicit Runge-Kutta pair with dense output. The local
    tolerances are set a factor 100 below ``tol`` so that the global error
    stays near ``tol * (1 + |w0|)`` for moderately stiff linear systems.

    Raises
    ------
    NonFinite
        If the state leaves the finite range or exceeds ``1e100`` in norm.
    StepFailure
        If the step size controller gives up.
    """
    g = as_grid(grid)
    w0 = np.asarray(w0, dtype=float).ravel()
    if not np.all(np.isfinite(w0)):
        raise NonFinite("initial state is not finite")

    def blowup(t, w):
        return BLOWUP_NORM - np.max(np.abs(w))

    blowup.terminal = True
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, (g.t0, g.t1), w0, method=method, t_eval=g.points,
                        rtol=tol * 1e-2, atol=tol * 1e-2, dense_output=True, events=blowup)
    if sol.status == 1:
        raise NonFinite(f"solution exceeded {BLOWUP_NORM:g} at t={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        last = sol.y[:, -1] if sol.y.size else w0
        if not np.all(np.isfinite(last)):
            raise NonFinite(sol.message)
        raise StepFailure(sol.message)
    states = sol.y.T
    if not np.all(np.isfinite(states)):
        raise NonFinite("non-finite state produced by the integrator")
    dense = sol.sol

    def dense_eval(t):
        return dense(t)

    return Trajectory(g, states, dense_eval, int(sol.nfev))


def unit_circle_eigvals(M, tol: float = TOL_UNIT) -> np.ndarray:
    """Arguments in ``(-pi, pi]`` of the eigenvalues of a unitary matrix.

    Raises
    ------
    NotUnitary
        If ``|M^* M - I|`` exceeds ``tol`` in max norm.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    defect = np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0])))
    if defect > tol:
        raise NotUnitary(f"unitarity defect {defect:.3e} exceeds {tol:.1e}")
    if M.shape[0] == 1:
        ang = np.angle(M[0])
    else:
        ang = np.angle(np.linalg.eigvals(M))
    return np.where(ang <= -np.pi, np.pi, ang)


def wrap(x):
    """Reduce angles to ``(-pi, pi]``."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(y <= -np.pi, y + 2 * np.pi, y)


def _match_step(psi, vel, dt, args, tol_coal, max_step):
    """Assign the new spectrum to labels. Returns (ok, new_psi)."""
    pred = psi + vel * dt
    d = pred.size
    if d == 1:
        new = pred + wrap(args - pred)
        return bool(np.abs(new - psi)[0] <= max_step), new
    diff = wrap(args[None, :] - pred[:, None])
    rows, cols = linear_sum_assignment(diff ** 2)
    sigma = np.empty(d, dtype=int)
    sigma[rows] = cols
    new = pred + diff[np.arange(d), sigma]
    if np.max(np.abs(new - psi)) > max_step:
        return False, new
    owner = np.empty(d, dtype=int)
    owner[sigma] = np.arange(d)
    same = np.abs(pred[:, None] - pred[None, :]) <= max(tol_coal, 1e-7)
    for lab in range(d):
        own = abs(diff[lab, sigma[lab]])
        for j in range(d):
            if j == sigma[lab] or same[lab, owner[j]]:
                continue
            if abs(diff[lab, j]) <= max(2.0 * own, tol_coal):
                return False, new
    return True, new


def track_angles(spectra, grid, *, refine: Optional[Callable[[float], np.ndarray]] = None,
                 initial=None, max_step: float = MAX_STEP_ANGLE, tol_coal: float = TOL_EIG,
                 min_dt: float = 1e-12, return_refined: bool = True):
    """Lift unit-circle spectra to continuous real angle paths.

    Parameters
    ----------
    spectra : array_like, shape (N, d)
        Eigenvalue arguments ``2*theta`` in ``(-pi, pi]`` at each grid point.
    grid : TimeGrid or array_like
    refine : callable, optional
        ``refine(t)`` returns the spectrum at an intermediate time. It is used
        to bisect steps whose displacement exceeds ``max_step`` or whose
        assignment is ambiguous.
    initial : array_like, optional
        Starting angles ``theta(t0)``; defaults to zeros.
    return_refined : bool
        If true return all accepted points, otherwise only the input grid.

    Returns
    -------
    times : ndarray
    theta : ndarray, shape (len(times), d)
        The unwrapped doubled angles halved, so ``exp(2i theta)`` reproduces
        the spectrum.
    """
    g = as_grid(grid)
    spec = np.atleast_2d(np.asarray(spectra, dtype=float))
    if spec.shape[0] != len(g):
        raise ValueError("one spectrum per grid point is required")
    d = spec.shape[1]
    if d == 0:
        return g.points.copy(), np.zeros((len(g), 0))
    psi = np.zeros(d) if initial is None else 2.0 * np.asarray(initial, dtype=float)
    if np.max(np.abs(wrap(np.sort(wrap(spec[0])) - np.sort(wrap(psi)))), initial=0.0) > 1e-6:
        raise TrackingAmbiguity("initial angles do not match the first spectrum")
    t = g.t0
    vel = np.zeros(d)
    out_t = [t]
    out_psi = [psi.copy()]
    on_grid = [True]
    stack = [(float(tt), spec[k], True) for k, tt in reversed(list(enumerate(g.points)))][:-1]
    while stack:
        t1, a1, is_grid = stack[-1]
        dt = t1 - t
        ok, new = _match_step(psi, vel, dt, a1, tol_coal, max_step)
        if ok:
            stack.pop()
            vel = (new - psi) / dt
            psi = new
            t = t1
            out_t.append(t)
            out_psi.append(psi.copy())
            on_grid.append(is_grid)
            continue
        if refine is None or dt < min_dt:
            raise TrackingAmbiguity(f"cannot resolve eigenvalue paths near t={t1:.6g}")
        tm = 0.5 * (t + t1)
        stack.append((tm, np.asarray(refine(tm), dtype=float), False))
    times = np.asarray(out_t)
    theta = 0.5 * np.asarray(out_psi)
    if not return_refined:
        mask = np.asarray(on_grid)
        return times[mask], theta[mask]
    return times, theta


def bracket_root(g: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of a scalar function on a sign-changing bracket.

    Raises
    ------
    NoBracket
        If ``g(lo)`` and ``g(hi)`` have the same strict sign.
    """
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return float(lo)
    if ghi == 0:
        return float(hi)
    if np.sign(glo) == np.sign(ghi):
        raise NoBracket(f"g({lo:.6g})={glo:.3e} and g({hi:.6g})={ghi:.3e} have the same sign")
    return float(brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def expand_bracket(g: Callable[[float], float], center: float, width: float, limit: float,
                   growth: float = 2.0, tol: float = 1e-12):
    """Grow a symmetric bracket around ``center`` until ``g`` changes sign.

    Returns the root. Raises NoBracket when the bracket would leave
    ``[-limit, limit]``.
    """
    lo, hi = center - width, center + width
    while True:
        lo_c, hi_c = max(lo, -limit), min(hi, limit)
        glo, ghi = g(lo_c), g(hi_c)
        if np.sign(glo) != np.sign(ghi) or glo == 0 or ghi == 0:
            return bracket_root(g, lo_c, hi_c, tol)
        if lo <= -limit and hi >= limit:
            raise NoBracket(f"no sign change within [{-limit:g}, {limit:g}]")
        width *= growth
        lo, hi = center - width, center + width
