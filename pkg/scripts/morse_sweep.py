"""Morse index of the discretized second variation against the conjugate count, as a function of T.

Usage: python3 scripts/morse_sweep.py [--N 400] [--out morse_sweep.csv]
"""

import argparse
import csv

import numpy as np

from saa.field_dsl import builtin_system
from saa.flow import integrate, seed_on_locus
from saa.jacobi import find_conjugate_times, frames
from saa.second_variation import assemble_qt, morse_index


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=400)
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--points", type=int, default=10)
    ap.add_argument("--out", default="morse_sweep.csv")
    args = ap.parse_args()
    steps = args.N * args.points * 10  # every sample horizon is a multiple of N steps
    sys_ = builtin_system("su2_left_invariant", {"alpha": 1.0, "beta": 0.0, "gamma": 1.5})
    ext = integrate(sys_, seed_on_locus(sys_, np.zeros(3), (0.0, 1.0, 1.0)), args.T, steps)
    fs = frames(ext, sys_)
    rows = []
    for j in range(1, args.points + 1):
        T = args.T * j / args.points
        idx = morse_index(assemble_qt(ext, sys_, args.N, T=T, fs=fs))
        count = sum(k for _, k in find_conjugate_times(ext, sys_, T, fs=fs))
        rows.append((T, idx, count))
        print(f"T = {T:6.3f}  index = {idx}  conjugate = {count}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "morse_index", "conjugate_count"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
