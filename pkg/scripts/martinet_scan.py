"""Martinet drift: constant h_c0c and the conjugate scan for a few covector angles.

Usage: python3 scripts/martinet_scan.py [--alpha 0.5] [--T 1]
"""

import argparse

import numpy as np

from saa.errors import SaaError
from saa.field_dsl import builtin_system
from saa.flow import integrate, seed_on_locus
from saa.jacobi import analyze_extremal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()
    sys_ = builtin_system("martinet_drift", {"alpha": args.alpha, "beta": 0.3, "gamma": 0.2})
    print(f"{'theta':>7} {'hc0c':>10} {'|closed|':>10} {'verdict':>22} {'corank':>6}")
    for theta in np.linspace(np.arccos(-args.alpha) + 0.05, 2 * np.pi - np.arccos(-args.alpha) - 0.05, 7):
        try:
            lam0 = seed_on_locus(sys_, np.zeros(3), (np.cos(theta), np.sin(theta), -1.0))
            ext = integrate(sys_, lam0, args.T, args.steps)
            rep, _ = analyze_extremal(ext, sys_)
        except SaaError as exc:
            print(f"{theta:7.3f} {type(exc).__name__}: {exc}")
            continue
        closed = 0.5 * args.alpha * abs(np.sin(2 * theta))
        print(f"{theta:7.3f} {ext.hc0c.mean():10.6f} {closed:10.6f} {rep.verdict:>22} {rep.corank:6d}")


if __name__ == "__main__":
    main()
