"""Raw versus integrated-by-parts second variation on smooth admissible variations.

Usage: python3 scripts/ibp_identity.py [--T 3.5] [--samples 100]
"""

import argparse

import numpy as np

from saa.field_dsl import builtin_system
from saa.flow import integrate, seed_on_locus
from saa.jacobi import frames
from saa.second_variation import assemble_qt, assemble_qt_raw


def smooth_admissible(qt, rng, modes=6):
    g = qt.grid
    tm, tn = g.mid_times / g.T, np.arange(1, g.N + 1) / g.N
    cols = []
    for j in range(modes):
        for c in range(g.m - 1):
            w = np.zeros((g.N, g.m - 1))
            w[:, c] = np.cos(j * np.pi * tm)
            cols.append(g.pack(w, np.zeros(g.N), 0.0))
        phi = np.sin((j + 0.5) * np.pi * tn)
        cols.append(g.pack(np.zeros((g.N, g.m - 1)), phi, phi[-1]))
    M = np.array(cols).T
    CM = qt.C @ M
    c = rng.normal(size=M.shape[1])
    x = M @ (c - np.linalg.pinv(CM) @ (CM @ c))
    return x / np.abs(x).max()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=3.5)
    ap.add_argument("--samples", type=int, default=100)
    args = ap.parse_args()
    sys_ = builtin_system("su2_left_invariant", {"alpha": 1.0, "beta": 0.0, "gamma": 1.5})
    ext = integrate(sys_, seed_on_locus(sys_, np.zeros(3), (0.0, 1.0, 1.0)), args.T, 16000)
    fs = frames(ext, sys_)
    rng = np.random.default_rng(0)
    for N in (50, 100, 200, 400, 800):
        ibp, raw = assemble_qt(ext, sys_, N, fs=fs), assemble_qt_raw(ext, sys_, N, fs=fs)
        rel = []
        for _ in range(args.samples):
            x = smooth_admissible(ibp, rng)
            rel.append(abs(raw.value(x) - ibp.value(x)) / (1 + abs(ibp.value(x))))
        print(f"N = {N:4d}  max relative gap {max(rel):.2e}")


if __name__ == "__main__":
    main()
