"""Run the full pipeline on a built-in problem and write a report.

Usage: python3 scripts/run_builtin.py --family sigmoid --out runs/sigmoid
"""
import argparse
import time
from pathlib import Path

from maslov_shoot.cli import dump_json
from maslov_shoot.families import BUILTIN
from maslov_shoot.pipeline import analyze, solve_h


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(BUILTIN), default="sigmoid")
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--no-solve", action="store_true", help="stop after the admissible set")
    args = ap.parse_args()
    t0 = time.perf_counter()
    A = analyze(BUILTIN[args.family](), verify=True)
    print(f"m0 = {A.asymptotic.m0.value}, m_inf = {A.asymptotic.minf.value}")
    print(f"shell [{A.bounds.alpha0:.4g}, {A.bounds.alpha_inf:.4g}], admissible set {A.tset.members}")
    report = {"analysis": A.to_dict(), "results": []}
    if not args.no_solve:
        for h in A.tset.members:
            out = solve_h(A.problem, h, A.bounds)
            report["results"].append(out.to_dict())
            for r in out.records:
                print(f"h={h} orthant={r.orthant} alpha={r.alpha.round(6).tolist()} "
                      f"|f|={r.residual_f:.1e} |u(1)|={r.residual_u:.1e}")
            for f in out.failures:
                print(f"h={h} orthant={tuple(f['orthant'])} failed: {f['error']}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(dump_json(report) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
