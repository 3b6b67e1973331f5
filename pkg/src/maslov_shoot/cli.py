"""Command line interface.

Every command prints a JSON object on stdout. Errors print a JSON object
``{"error": ..., "message": ...}`` on stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import MaslovShootError
from .families import BUILTIN
from .maslov import maslov_all_methods
from .model import NonlinearProblem, l_system, verify_conditions
from .problem_file import load_problem
from .sturm import eta_j, interior_zeros


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return obj


def dump_json(obj) -> str:
    """JSON text with sorted keys; non-finite floats become strings."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def _load(args) -> NonlinearProblem:
    if args.problem:
        P = load_problem(Path(args.problem))
    else:
        P = BUILTIN[args.builtin]()
    if getattr(args, "tol_f", None) is not None:
        P.options.tol_f = args.tol_f
    if getattr(args, "grid", None) is not None:
        P.options.grid = args.grid
    if getattr(args, "hmax", None) is not None:
        P.options.hmax = args.hmax
    return P


def _write(out: Optional[str], name: str, text: str) -> Optional[str]:
    if not out:
        return None
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    path = d / name
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return str(path)


def cmd_verify(args) -> dict:
    P = _load(args)
    return {"command": "verify", "conditions": verify_conditions(P).to_dict()}


def cmd_phase(args) -> dict:
    P = _load(args)
    if args.which == "alpha":
        alpha = args.alpha or []
        if len(alpha) == 1:
            alpha = alpha * P.n
        if len(alpha) != P.n:
            raise MaslovShootError(f"--alpha needs {P.n} comma separated values")
        L = l_system(P, alpha)
        args.alpha = alpha
        trace = L.trace
        extra = {"alpha": args.alpha, "u1": L.u1.tolist()}
    else:
        from .hamiltonian import decouple, fundamental_solution
        from .phase_angles import compute_phase_trace

        path = P.S0 if args.which == "zero" else P.Sinf
        trace = compute_phase_trace(fundamental_solution(decouple(path), P.options.grid))
        extra = {}
    csv_text = trace.to_csv()
    written = _write(args.out, "phase.csv", csv_text)
    th1, th2 = trace.terminal()
    res = {"command": "phase", "which": args.which, "terminal_theta1_over_pi": (th1 / np.pi).tolist(),
           "terminal_theta2_over_pi": (th2 / np.pi).tolist(), "points": int(trace.times.size), **extra}
    if written:
        res["csv"] = written
    else:
        res["csv_text"] = csv_text
    return res


def cmd_maslov(args) -> dict:
    P = _load(args)
    out = {"command": "maslov"}
    for key, path in (("m0", P.S0), ("m_inf", P.Sinf)):
        comp = maslov_all_methods(path, P.options.grid)
        vals = {k: (None if v is None else v / 2) for k, v in comp.values.items()}
        out[key] = {"methods": vals, "agree": comp.agree}
    if args.with_delta:
        from .pipeline import analyze

        A = analyze(P, verify=False)
        from .hamiltonian import SplitSymmetricPath

        comp = maslov_all_methods(SplitSymmetricPath.from_diagonal(A.delta.values, P.sig), P.options.grid)
        out["m_delta"] = {"delta_bar_diagonal": A.delta.values.tolist(),
                          "methods": {k: (None if v is None else v / 2) for k, v in comp.values.items()},
                          "agree": comp.agree}
    agree = all(v["agree"] for k, v in out.items() if isinstance(v, dict) and "agree" in v)
    out["agreement"] = "all methods agree" if agree else "methods disagree"
    return out


def cmd_eta(args) -> dict:
    rows = []
    for j in range(1, args.jmax + 1):
        r = eta_j(args.potential, j)
        rows.append({"j": j, "eta": r.eta, "residual": r.residual, "interior_zeros": interior_zeros(args.potential, r.eta)})
    return {"command": "eta", "potential": args.potential, "table": rows}


def cmd_tset(args) -> dict:
    from .pipeline import analyze

    P = _load(args)
    A = analyze(P, verify=False)
    d = A.to_dict()
    d["command"] = "tset"
    return d


def _solve(P, hs, A):
    from .pipeline import solve_h

    outcomes = [solve_h(P, h, A.bounds) for h in hs]
    return [o.to_dict() for o in outcomes]


def cmd_solve(args) -> dict:
    from .pipeline import analyze

    P = _load(args)
    A = analyze(P, verify=False)
    hs = [tuple(args.h)] if args.h else A.tset.members
    if args.h and len(args.h) != P.n:
        raise MaslovShootError(f"--h needs {P.n} entries")
    res = {"command": "solve", "tset": A.tset.to_dict(), "shell": [A.bounds.alpha0, A.bounds.alpha_inf],
           "results": _solve(P, hs, A)}
    if args.h and tuple(args.h) not in A.tset.members:
        res["warning"] = "h is not in the admissible set; the boundary conditions may fail"
    written = _write(args.out, "solutions.json", dump_json(res) + "\n")
    if written:
        res["written"] = written
    return res


def cmd_report(args) -> dict:
    from .pipeline import analyze

    P = _load(args)
    A = analyze(P, verify=True)
    from dataclasses import asdict

    res = {"command": "report", "analysis": A.to_dict(), "options": asdict(P.options),
           "results": _solve(P, A.tset.members, A), "version": __version__,
           "timing": {"elapsed_seconds": time.perf_counter() - args.started}}
    if args.out:
        from .hamiltonian import decouple, fundamental_solution
        from .phase_angles import compute_phase_trace

        for key, path in (("zero", P.S0), ("inf", P.Sinf)):
            trace = compute_phase_trace(fundamental_solution(decouple(path), P.options.grid))
            _write(args.out, f"phase_{key}.csv", trace.to_csv())
        res["written"] = _write(args.out, "report.json", dump_json(res) + "\n")
    return res


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maslov-shoot", description="Winding-prescribed solutions of split Hamiltonian "
                                                                 "boundary value problems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, problem=True):
        if problem:
            g = sp.add_mutually_exclusive_group(required=True)
            g.add_argument("--problem", help="problem file")
            g.add_argument("--builtin", choices=sorted(BUILTIN), help="built-in problem")
        sp.add_argument("--out", help="directory for written artefacts")
        sp.add_argument("--grid", type=int, help="number of time grid points")
        sp.add_argument("--timing", action="store_true", help="include elapsed time in the output")

    sp = sub.add_parser("verify", help="check the structural conditions")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("phase", help="phase angle trace as CSV")
    common(sp)
    sp.add_argument("--alpha", type=_floats, help="initial data J u'(0), comma separated")
    sp.add_argument("--which", choices=("alpha", "zero", "inf"), default="alpha")
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("maslov", help="Maslov indices by every applicable method")
    common(sp)
    sp.add_argument("--with-delta", action="store_true", help="also compute the index of the cylinder maxima")
    sp.set_defaults(func=cmd_maslov)

    sp = sub.add_parser("eta", help="Dirichlet eigenvalue shifts of a scalar potential")
    sp.add_argument("--potential", required=True, help="expression in t")
    sp.add_argument("--jmax", type=int, default=5)
    sp.add_argument("--timing", action="store_true")
    sp.add_argument("--out", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_eta)

    sp = sub.add_parser("tset", help="admissible winding vectors")
    common(sp)
    sp.add_argument("--hmax", type=int)
    sp.set_defaults(func=cmd_tset)

    sp = sub.add_parser("solve", help="shooting solutions for h (default: every admissible h)")
    common(sp)
    sp.add_argument("--h", type=_ints, help="winding vector, comma separated")
    sp.add_argument("--tol-f", dest="tol_f", type=float)
    sp.add_argument("--hmax", type=int)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("report", help="full analysis and solutions")
    common(sp)
    sp.add_argument("--tol-f", dest="tol_f", type=float)
    sp.add_argument("--hmax", type=int)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = args.started = time.perf_counter()
    try:
        result = args.func(args)
    except (MaslovShootError, ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("line", "column", "offset", "expected", "name", "subexpression"):
            if hasattr(exc, attr):
                err[attr] = getattr(exc, attr)
        print(dump_json(err), file=sys.stderr)
        return 2
    result["version"] = __version__
    if args.timing and "timing" not in result:
        result["timing"] = {"elapsed_seconds": time.perf_counter() - start}
    print(dump_json(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
