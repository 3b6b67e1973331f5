"""End-to-end analysis of a problem: checks, radii, admissible set and solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .model import (AlphaBounds, AsymptoticData, ConditionReport, CylinderMaxima, DeltaDiagonal, ElasticBound,
                    EmptinessReport, NonlinearProblem, SufficiencyReport, TSet, cylinder_maxima, delta_diagonal,
                    elastic_bound, emptiness_checks, enumerate_T, find_alpha_bounds, sufficiency_checks,
                    verify_conditions)
from .shooting import ConicalShell, MirandaReport, SolutionRecord, miranda_conditions, orthant_results


@dataclass
class Analysis:
    problem: NonlinearProblem
    conditions: Optional[ConditionReport]
    asymptotic: AsymptoticData
    bounds: AlphaBounds
    elastic: ElasticBound
    cylinder: CylinderMaxima
    delta: DeltaDiagonal
    tset: TSet
    sufficiency: SufficiencyReport
    emptiness: EmptinessReport

    def to_dict(self) -> dict:
        a = self.asymptotic
        out = {
            "problem": {"name": self.problem.name, "n": self.problem.sig.n, "nu": self.problem.sig.nu,
                        "sources": self.problem.sources},
            "m0": a.m0.value,
            "m_inf": a.minf.value,
            "theta0_over_pi": [float(v / math.pi) for v in np.concatenate(a.theta0)],
            "thetainf_over_pi": [float(v / math.pi) for v in np.concatenate(a.thetainf)],
            "eps": self.bounds.eps,
            "alpha0": self.bounds.alpha0,
            "alpha_inf": self.bounds.alpha_inf,
            "alpha_tilde_inf": self.bounds.alpha_tilde_inf,
            "alpha_inf_strict": self.bounds.alpha_inf_strict,
            "elastic": {"M": self.elastic.M, "M_gronwall": self.elastic.M_gronwall, "R_traj": self.elastic.R_traj,
                        "rounds": self.elastic.rounds},
            "cylinder_maxima": self.cylinder.values.tolist(),
            "delta_bar_diagonal": self.delta.values.tolist(),
            "tset": self.tset.to_dict(),
            "sufficiency": self.sufficiency.to_dict(),
            "emptiness": self.emptiness.to_dict(),
        }
        if self.conditions is not None:
            out["conditions"] = self.conditions.to_dict()
        return out


def analyze(P: NonlinearProblem, verify: bool = True, raise_on_inconsistency: bool = False) -> Analysis:
    """Run the structural checks and build the admissible set."""
    cond = verify_conditions(P) if verify else None
    asym = P.asymptotic()
    bounds = find_alpha_bounds(P)
    eb = elastic_bound(P, bounds.alpha_inf)
    cm = cylinder_maxima(P, eb.R_traj)
    D = delta_diagonal(cm, P.sig)
    T = enumerate_T(D, P.sig, asym.m0.twice_value, asym.minf.twice_value, P.options.hmax)
    suff = sufficiency_checks(D, P.sig, asym.m0.twice_value, asym.minf.twice_value)
    emp = emptiness_checks(P, bounds, T, raise_on_violation=raise_on_inconsistency)
    return Analysis(P, cond, asym, bounds, eb, cm, D, T, suff, emp)


@dataclass
class SolveOutcome:
    h: tuple
    miranda: Optional[MirandaReport]
    records: List[SolutionRecord] = field(default_factory=list)
    failures: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"h": list(self.h), "miranda": None if self.miranda is None else self.miranda.to_dict(),
                "solutions": [r.to_dict() for r in self.records], "failures": self.failures}


def solve_h(P: NonlinearProblem, h, bounds: AlphaBounds, check_miranda: bool = True) -> SolveOutcome:
    """All orthant solutions for one winding vector on the shell ``[alpha0, alpha_inf]``."""
    r, R = bounds.alpha0, bounds.alpha_inf
    rep = miranda_conditions(P, h, ConicalShell(r, R, (1,) * P.n)) if check_miranda else None
    out = SolveOutcome(tuple(int(v) for v in h), rep)
    for signs, res in orthant_results(P, h, r, R):
        if isinstance(res, Exception):
            out.failures.append({"orthant": list(signs), "error": type(res).__name__, "message": str(res)})
        else:
            out.records.append(res)
    return out
