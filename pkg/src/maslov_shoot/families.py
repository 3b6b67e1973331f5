"""Built-in test problems with two components (``n = 2, nu = 1``) and sigmoid nonlinearities.

``sigmoid_family`` is direction dependent: on the plane ``x1 = 0`` the first
entry rises from ``a0`` only to ``c1``, while away from it it reaches
``a_inf``. This keeps the first block maximum on that plane below the next
Dirichlet eigenvalue, which is what makes the admissible set non-empty.
``radial_family`` uses the same profiles as functions of ``|x|``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import NonlinearProblem, ProblemOptions


@dataclass(frozen=True)
class SigmoidParams:
    a0: float = 5.0
    c1: float = 80.0
    a_inf: float = 230.0
    b0: float = -50.0
    b_inf: float = 5.0
    rho: float = 1.0


def _fmt(v: float) -> str:
    return repr(float(v))


def sigmoid_entries(p: SigmoidParams):
    s1 = (f"{_fmt(p.a0)} + {_fmt(p.a_inf - p.a0)}*tanh((x1/{_fmt(p.rho)})^2)"
          f" + {_fmt(p.c1 - p.a0)}*tanh((x2/{_fmt(p.rho)})^2)*(1 - tanh((x1/{_fmt(p.rho)})^2))")
    s2 = f"{_fmt(p.b0)} + {_fmt(p.b_inf - p.b0)}*tanh((x2/{_fmt(p.rho)})^2)"
    return [[s1, "0"], ["0", s2]]


def sigmoid_family(params: SigmoidParams = SigmoidParams(), options: ProblemOptions = None,
                   name: str = "sigmoid") -> NonlinearProblem:
    """Non-radial problem with ``S0 = diag(a0, b0)`` and ``S_inf = diag(a_inf, b_inf)``.

    The defaults give ``m0 = -2``, ``m_inf = 4`` and admissible set
    ``{(3, 1), (3, 2), (4, 2)}``.
    """
    return NonlinearProblem.from_expressions(
        2, 1, sigmoid_entries(params),
        [[params.a0, 0], [0, params.b0]], [[params.a_inf, 0], [0, params.b_inf]],
        options, name)


def radial_family(a0: float, a_inf: float, b0: float, b_inf: float, rho: float = 1.0,
                  options: ProblemOptions = None, name: str = "radial") -> NonlinearProblem:
    """Problem whose entries depend on ``x`` only through ``r = |x|``."""
    tau = f"tanh((r/{_fmt(rho)})^2)"
    S = [[f"{_fmt(a0)} + {_fmt(a_inf - a0)}*{tau}", "0"], ["0", f"{_fmt(b0)} + {_fmt(b_inf - b0)}*{tau}"]]
    return NonlinearProblem.from_expressions(2, 1, S, [[a0, 0], [0, b0]], [[a_inf, 0], [0, b_inf]], options, name)


RADIAL_SET = [
    (5.0, 150.0, -50.0, 5.0),
    (5.0, 230.0, -50.0, 5.0),
    (-3.0, 200.0, -30.0, -2.0),
    (20.0, 300.0, -120.0, 3.0),
    (2.0, 100.0, -15.0, 1.0),
]


def literal_family(options: ProblemOptions = None) -> NonlinearProblem:
    """``S0 = diag(5, -5)``, ``S_inf = diag(300, 5)``: the gap ``m_inf - m0`` is 5 but ``-5 > -pi^2``."""
    return sigmoid_family(SigmoidParams(a0=5.0, c1=80.0, a_inf=300.0, b0=-5.0, b_inf=5.0), options, "literal")


BUILTIN = {
    "sigmoid": lambda: sigmoid_family(),
    "literal": lambda: literal_family(),
    "radial": lambda: radial_family(*RADIAL_SET[0]),
}
