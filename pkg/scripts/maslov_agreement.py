"""Compare the three Maslov index methods on random constant split spectra.

Usage: python3 scripts/maslov_agreement.py --count 50 --seed 7
"""
import argparse
import math

import numpy as np

from maslov_shoot.hamiltonian import Signature, SplitSymmetricPath
from maslov_shoot.maslov import maslov_all_methods


def off_lattice(rng, size, margin):
    out = []
    while len(out) < size:
        x = rng.uniform(-150.0, 150.0)
        k = round(math.sqrt(abs(x)) / math.pi)
        if k >= 1 and abs(abs(x) - (k * math.pi) ** 2) < margin:
            continue
        out.append(x)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--nmax", type=int, default=4)
    ap.add_argument("--margin", type=float, default=0.1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    bad = 0
    for i in range(args.count):
        n = int(rng.integers(1, args.nmax + 1))
        nu = int(rng.integers(0, n + 1))
        diag = off_lattice(rng, n, args.margin)
        comp = maslov_all_methods(SplitSymmetricPath.from_diagonal(diag, Signature(n, nu)))
        bad += not comp.agree
        vals = " ".join(f"{k}={v}" for k, v in sorted(comp.values.items()))
        print(f"{i:3d} n={n} nu={nu} {'ok ' if comp.agree else 'BAD'} {vals}")
    print(f"{args.count - bad}/{args.count} spectra agree")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
