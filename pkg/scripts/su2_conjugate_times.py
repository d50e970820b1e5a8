"""Conjugate times on the SU(2) extremal against the closed-form roots.

Usage: python3 scripts/su2_conjugate_times.py [--T 5] [--steps 20000] [--gamma 1.5]
"""

import argparse
import time

import numpy as np
from scipy.optimize import brentq

from saa.field_dsl import builtin_system
from saa.flow import integrate, seed_on_locus
from saa.jacobi import find_conjugate_times, frames


def closed_form_roots(k, T):
    f = lambda x: 2.0 - 2.0 * np.cos(x) - x * np.sin(x)
    xs = np.linspace(1e-3, k * T, 20001)
    fx = f(xs)
    return [brentq(f, a, b) / k for a, b, fa, fb in zip(xs[:-1], xs[1:], fx[:-1], fx[1:]) if fa * fb < 0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--gamma", type=float, default=1.5)
    args = ap.parse_args()
    sys_ = builtin_system("su2_left_invariant", {"alpha": 1.0, "beta": 0.0, "gamma": args.gamma})
    t0 = time.perf_counter()
    lam0 = seed_on_locus(sys_, np.zeros(3), (0.0, 1.0, 1.0))  # kappa = h_C = 1
    ext = integrate(sys_, lam0, args.T, args.steps)
    fs = frames(ext, sys_)
    found = {c: find_conjugate_times(ext, sys_, convention=c, fs=fs) for c in ("rev", "fwd")}
    k = args.gamma * np.sqrt(2.0)
    ref = closed_form_roots(k, args.T)
    print(f"k = {k:.6f}, runtime {time.perf_counter() - t0:.1f} s")
    print(f"{'closed form':>14} {'rev':>14} {'fwd':>14} {'mult':>5}")
    for i in range(max(len(ref), len(found["rev"]))):
        r = f"{ref[i]:14.9f}" if i < len(ref) else " " * 14
        a = found["rev"][i] if i < len(found["rev"]) else (np.nan, 0)
        b = found["fwd"][i] if i < len(found["fwd"]) else (np.nan, 0)
        print(f"{r} {a[0]:14.9f} {b[0]:14.9f} {a[1]:5d}")


if __name__ == "__main__":
    main()
