"""Discretized second variation and its Morse index.

Variations live on ``N`` equal intervals: ``w_k`` is constant on interval
``k`` in the frame of ``h_I^perp``, ``phi`` is continuous and linear on each
interval with node values ``phi_1 .. phi_N`` (``phi_0 = 0``), and ``phiT`` is
an independent terminal value.  Interval boundaries must be nodes of the
extremal grid; the integrals are evaluated on the extremal grid inside each
interval, treating the integrands as piecewise linear between its nodes.

Two assemblies of the same form are provided.  The integrated-by-parts form
uses the Legendre matrix ``l_t`` and the frame ``Zcal``; the raw form uses
``rho = phi'`` and only ``Z_t``.  On this space of variations integration by
parts is exact, so the two agree up to sub-grid quadrature error, which is
how the integration-by-parts identity is checked.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import null_space

from saa.field_dsl import ControlAffineSystem
from saa.flow import SingularExtremal, omega
from saa.jacobi import FrameSet, frames

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariationGrid:
    """Coordinate layout ``[w_1..w_N, phi_1..phi_N, phiT]``."""

    N: int
    T: float
    m: int

    @property
    def D(self) -> int:
        return self.N * (self.m - 1) + self.N + 1

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def mid_times(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h

    def pack(self, w: np.ndarray, phi: np.ndarray, phiT: float) -> np.ndarray:
        w = np.asarray(w, dtype=float).reshape(self.N, self.m - 1)
        return np.concatenate([w.reshape(-1), np.asarray(phi, dtype=float).reshape(self.N), [float(phiT)]])

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        nw = self.N * (self.m - 1)
        return x[:nw].reshape(self.N, self.m - 1), x[nw:nw + self.N], float(x[-1])


@dataclass(frozen=True)
class QTMatrix:
    Q: np.ndarray  # (D, D), symmetric
    C: np.ndarray  # (n, D), admissibility constraints
    grid: VariationGrid
    kind: str = "ibp"

    def value(self, x: np.ndarray) -> float:
        return float(x @ self.Q @ x)

    def bilinear(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ self.Q @ y)


def _cell_nodes(ext: SingularExtremal, grid: VariationGrid) -> tuple[np.ndarray, int, int]:
    """Node indices ``(N, s+1)`` of every interval and the node of ``T``."""
    k_end = ext.node(grid.T)
    if k_end % grid.N:
        raise ValueError(f"{k_end} grid steps up to T is not a multiple of N = {grid.N}")
    s = k_end // grid.N
    return np.arange(grid.N)[:, None] * s + np.arange(s + 1)[None, :], s, k_end


def _local_index(grid: VariationGrid) -> np.ndarray:
    """Global index of the local variables ``(w_k, phi_{k-1}, phi_k)`` of each interval.

    ``phi_0`` maps to the scratch index ``D`` that is dropped after assembly.
    """
    N, m, D = grid.N, grid.m, grid.D
    nw = N * (m - 1)
    k = np.arange(N)
    w = k[:, None] * (m - 1) + np.arange(m - 1)[None, :]
    left = np.where(k == 0, D, nw + k - 1)
    right = nw + k
    return np.concatenate([w, left[:, None], right[:, None]], axis=1)


class _Assembler:
    """Quadratic forms of piecewise-linear integrands on the extremal sub-grid.

    Local integrands have shape ``(N, s+1, rows, L)``: the value at each
    sub-grid node of interval ``k`` as a linear map of its ``L`` local
    variables.  Between sub-grid nodes integrands are interpolated linearly and
    integrated exactly.
    """

    def __init__(self, grid: VariationGrid, s: int):
        self.grid = grid
        self.delta = grid.h / s
        self.idx = _local_index(grid)
        self.Q = np.zeros((grid.D + 1, grid.D + 1))
        w = np.full(s + 1, self.delta)
        w[0] = w[-1] = 0.5 * self.delta
        self.weights = w

    def scatter(self, local: np.ndarray) -> None:
        i = self.idx
        np.add.at(self.Q, (i[:, :, None], i[:, None, :]), local)

    def single(self, beta: np.ndarray, M: np.ndarray) -> None:
        """``int <beta x, M beta x> dt`` with ``M`` of shape ``(N, s+1, rows, rows)``."""
        self.scatter(np.einsum("i,kial,kiab,kibc->klc", self.weights, beta, M, beta, optimize=True))

    def integral(self, beta: np.ndarray) -> np.ndarray:
        """``int beta x dt`` per interval, scattered to global columns: ``(N, rows, D+1)``."""
        cell = np.einsum("i,kial->kal", self.weights, beta)
        N, rows, _ = cell.shape
        out = np.zeros((N, rows, self.grid.D + 1))
        np.put_along_axis(out, np.broadcast_to(self.idx[:, None, :], cell.shape), cell, axis=2)
        return out

    def causal(self, beta: np.ndarray) -> np.ndarray:
        """``iint_{s<t} sigma(beta(t) x, beta(s) x)``; returns the cell integrals for reuse."""
        n2 = beta.shape[2]
        Om = omega(n2 // 2)
        d = self.delta
        # within each interval: sub-interval pairs plus the exact diagonal term of linear pieces
        I = 0.5 * d * (beta[:, :-1] + beta[:, 1:])  # (N, s, 2n, L)
        prev = np.cumsum(I, axis=1) - I
        local = np.einsum("kial,ab,kibc->klc", I, Om, prev)
        local -= d * d / 6.0 * np.einsum("kial,ab,kibc->klc", beta[:, :-1], Om, beta[:, 1:])
        self.scatter(local)
        # across intervals
        cells = self.integral(beta)
        N, _, D1 = cells.shape
        before = np.cumsum(cells, axis=0) - cells
        self.Q += cells.reshape(N * n2, D1).T @ np.einsum("ab,kbd->kad", Om, before).reshape(N * n2, D1)
        return cells

    def result(self, extra: np.ndarray | None = None) -> np.ndarray:
        Q = self.Q if extra is None else self.Q + extra
        D = self.grid.D
        Q = Q[:D, :D]
        return 0.5 * (Q + Q.T)


def _grid_for(ext: SingularExtremal, grid: VariationGrid | int, T: float | None) -> VariationGrid:
    if isinstance(grid, VariationGrid):
        return grid
    return VariationGrid(int(grid), ext.T if T is None else float(T), ext.m)


def _ramps(s: int) -> np.ndarray:
    return np.arange(s + 1) / s


def assemble_qt(ext: SingularExtremal, sys: ControlAffineSystem, grid: VariationGrid | int, T: float | None = None,
                fs: FrameSet | None = None) -> QTMatrix:
    """Integrated-by-parts second variation.

    ``Q = phiT sigma(Z_I(T), int Zcal v) + int <v, l v> + iint_{s<t} sigma(Zcal v(t), Zcal v(s))``
    with ``v = (w, phi)`` and ``Zcal (w, phi) = Z_t W w - phi Z_I'``.  ``w``
    is constant and ``phi`` linear on every interval.
    """
    grid = _grid_for(ext, grid, T)
    fs = fs if fs is not None else frames(ext, sys, cross_check=False)
    nodes, s, k_end = _cell_nodes(ext, grid)
    N, m, D = grid.N, grid.m, grid.D
    th = _ramps(s)[None, :, None]
    ZW, ZIdot = fs["ZW"][nodes], fs["ZIdot"][nodes]  # (N, s+1, 2n, m-1), (N, s+1, 2n)
    beta = np.concatenate([ZW, -(1.0 - th)[..., None] * ZIdot[..., None], -th[..., None] * ZIdot[..., None]], axis=3)
    L = m + 1
    vloc = np.zeros((N, s + 1, m, L))
    vloc[:, :, : m - 1, : m - 1] = np.eye(m - 1)
    vloc[:, :, m - 1, m - 1] = 1.0 - th[..., 0]
    vloc[:, :, m - 1, m] = th[..., 0]
    asm = _Assembler(grid, s)
    asm.single(vloc, fs["l"][nodes])
    total = asm.causal(beta).sum(axis=0)  # (2n, D+1)
    ZIT = fs["ZI"][k_end]
    n = ext.n
    eT = np.zeros(D + 1)
    eT[D - 1] = 1.0
    Q = asm.result(np.outer(eT, ZIT @ omega(n) @ total))
    C = (total + np.outer(ZIT, eT))[:n, :D]
    return QTMatrix(Q, C, grid, "ibp")


def assemble_qt_raw(ext: SingularExtremal, sys: ControlAffineSystem, grid: VariationGrid | int, T: float | None = None,
                    fs: FrameSet | None = None) -> QTMatrix:
    """Second variation before integration by parts, in the variables ``(rho, w)``.

    ``Q = int |w|^2 / r + iint_{s<t} sigma(Z_t v(t), Z_s v(s))`` with the
    control variation ``v = rho h_I + W w`` and ``rho = phi'``, the backward
    difference ``(phi_k - phi_{k-1}) / h`` on interval ``k`` (``phi_0 = 0``).
    ``phiT`` does not enter, so comparisons with :func:`assemble_qt` take
    ``phiT = phi_N``.
    """
    grid = _grid_for(ext, grid, T)
    fs = fs if fs is not None else frames(ext, sys, cross_check=False)
    nodes, s, _ = _cell_nodes(ext, grid)
    N, m, h = grid.N, grid.m, grid.h
    ZW, ZI, r = fs["ZW"][nodes], fs["ZI"][nodes], fs["r"][nodes]
    beta = np.concatenate([ZW, -ZI[..., None] / h, ZI[..., None] / h], axis=3)
    wsel = np.zeros((N, s + 1, m - 1, m + 1))
    wsel[:, :, :, : m - 1] = np.eye(m - 1)
    asm = _Assembler(grid, s)
    asm.single(wsel, np.eye(m - 1)[None, None] / r[..., None, None])
    total = asm.causal(beta).sum(axis=0)
    return QTMatrix(asm.result(), total[: ext.n, : grid.D], grid, "raw")


def projected_spectrum(qt: QTMatrix, rank_tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of ``Q`` restricted to ``ker C`` (orthonormal null-space basis)."""
    C = qt.C
    sv = np.linalg.svd(C, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * max(sv[0], 1e-300))) if sv.size else 0
    if rank < C.shape[0]:
        log.warning("constraint matrix has rank %d < %d; dependent rows ignored", rank, C.shape[0])
    Nb = null_space(C, rcond=rank_tol)
    return np.linalg.eigvalsh(Nb.T @ qt.Q @ Nb)


def morse_index(qt: QTMatrix, tol_eig: float = 1e-8) -> int:
    """Number of eigenvalues of the constrained form below ``-tol_eig * max|eig|``."""
    ev = projected_spectrum(qt)
    return int(np.sum(ev < -tol_eig * np.abs(ev).max()))


def write_spectrum_csv(ev: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue"])
        for i, e in enumerate(np.sort(ev)):
            w.writerow([i, repr(float(e))])
