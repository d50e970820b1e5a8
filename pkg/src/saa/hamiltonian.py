"""Lifted Hamiltonians, their Poisson brackets and the singular feedback.

Everything is evaluated from field jets: ``h_a = <p, f_a(q)>`` and
``{h_a, h_b} = <p, [f_a, f_b](q)>`` with ``[f, g] = Dg f - Df g``.  Nested
brackets use second derivatives of the fields.  The internal helper
:func:`geometry` works on a single point or on a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from saa.errors import SingularDegenerate
from saa.field_dsl import ControlAffineSystem

EPS_SING = 1e-9
EPS_CLS = 1e-9


@dataclass(frozen=True)
class CotangentPoint:
    """A covector ``p`` attached to the base point ``q`` (canonical coordinates)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.shape != p.shape:
            raise ValueError(f"q and p must have the same length, got {q.shape} and {p.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("cotangent point must be finite")
        q.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def z(self) -> np.ndarray:
        """Phase-space vector ``(q, p)``."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_z(cls, z) -> "CotangentPoint":
        z = np.asarray(z, dtype=float)
        n = z.shape[0] // 2
        return cls(z[:n], z[n:])


@dataclass(frozen=True)
class BracketBundle:
    """Lifted Hamiltonians and bracket aggregates at one cotangent point.

    Index 0 of ``hij`` is the drift; ``hI`` holds ``h_1 .. h_m``.
    """

    hI: np.ndarray
    h0: float
    hij: np.ndarray
    h0c: float
    h00c: float
    hc0c: float
    hcI: np.ndarray

    @property
    def norm_hI(self) -> float:
        return float(np.linalg.norm(self.hI))

    @property
    def hc(self) -> float:
        return 0.5 * float(self.hI @ self.hI)


@dataclass(frozen=True)
class Classification:
    kind: str  # Boundary | Inactive | SingularCandidate
    gap: float  # |h_I| - 1


class Geometry(NamedTuple):
    """Field and bracket data at a point or a batch of points (leading axes)."""

    F: np.ndarray  # (..., m+1, n)
    DF: np.ndarray  # (..., m+1, n, n)
    D2F: np.ndarray  # (..., m+1, n, n, n)
    L: np.ndarray  # (..., m+1, m+1, n) Lie brackets [f_a, f_b]
    G: np.ndarray  # (..., m, n) [f_0, f_i]
    DG: np.ndarray  # (..., m, n, n)
    h: np.ndarray  # (..., m+1)
    hij: np.ndarray  # (..., m+1, m+1)
    nested: np.ndarray  # (..., m+1, m) h_{a0i} = <p, [f_a, [f_0, f_i]]>
    h0c: np.ndarray
    h00c: np.ndarray
    hc0c: np.ndarray
    hcI: np.ndarray  # (..., m)


def geometry(sys: ControlAffineSystem, q: np.ndarray, p: np.ndarray) -> Geometry:
    F, DF, D2F = sys.jets(q)
    p = np.asarray(p, dtype=float)
    # [f_a, f_b]^k = DF_b[k, i] F_a[i] - DF_a[k, i] F_b[i]
    DFF = np.einsum("...bki,...ai->...abk", DF, F)
    L = DFF - np.swapaxes(DFF, -3, -2)
    F0, DF0, D2F0 = F[..., 0, :], DF[..., 0, :, :], D2F[..., 0, :, :, :]
    FI, DFI, D2FI = F[..., 1:, :], DF[..., 1:, :, :], D2F[..., 1:, :, :, :]
    G = L[..., 0, 1:, :]
    DG = (
        np.einsum("...ikjl,...j->...ikl", D2FI, F0)
        + np.einsum("...ikj,...jl->...ikl", DFI, DF0)
        - np.einsum("...kjl,...ij->...ikl", D2F0, FI)
        - np.einsum("...kj,...ijl->...ikl", DF0, DFI)
    )
    # [f_a, G_i] = DG_i f_a - Df_a G_i, paired with p
    pDG = np.einsum("...k,...ikl->...il", p, DG)
    pDF = np.einsum("...k,...akl->...al", p, DF)
    nested = np.einsum("...il,...al->...ai", pDG, F) - np.einsum("...al,...il->...ai", pDF, G)
    h = np.einsum("...k,...ak->...a", p, F)
    hij = np.einsum("...k,...abk->...ab", p, L)
    hI = h[..., 1:]
    h0i = hij[..., 0, 1:]
    hIJ = hij[..., 1:, 1:]
    h0c = np.einsum("...i,...i->...", hI, h0i)
    h00c = np.einsum("...i,...i->...", h0i, h0i) + np.einsum("...i,...i->...", hI, nested[..., 0, :])
    hcI = np.einsum("...j,...ji->...i", hI, hIJ)
    hc0c = np.einsum("...i,...i->...", hcI, h0i) + np.einsum("...j,...i,...ji->...", hI, hI, nested[..., 1:, :])
    return Geometry(F, DF, D2F, L, G, DG, h, hij, nested, h0c, h00c, hc0c, hcI)


def bundle_from_geometry(g: Geometry) -> BracketBundle:
    return BracketBundle(
        hI=np.array(g.h[1:]),
        h0=float(g.h[0]),
        hij=np.array(g.hij),
        h0c=float(g.h0c),
        h00c=float(g.h00c),
        hc0c=float(g.hc0c),
        hcI=np.array(g.hcI),
    )


def _check_index(sys: ControlAffineSystem, i: int) -> None:
    if not 0 <= i <= sys.m:
        raise IndexError(f"field index {i} outside 0..{sys.m}")


def lift(sys: ControlAffineSystem, lam: CotangentPoint, i: int) -> float:
    """``h_i(lam) = <p, f_i(q)>``."""
    _check_index(sys, i)
    F, _, _ = sys.jets(lam.q)
    return float(lam.p @ F[i])


def poisson_pair(sys: ControlAffineSystem, lam: CotangentPoint, i: int, j: int) -> float:
    """``{h_i, h_j}(lam) = <p, [f_i, f_j](q)>``."""
    _check_index(sys, i)
    _check_index(sys, j)
    F, DF, _ = sys.jets(lam.q)
    v = DF[j] @ F[i] - DF[i] @ F[j]
    return float(lam.p @ v)


def bracket_bundle(sys: ControlAffineSystem, lam: CotangentPoint) -> BracketBundle:
    return bundle_from_geometry(geometry(sys, lam.q, lam.p))


def singular_feedback(bundle: BracketBundle, eps_sing: float = EPS_SING) -> float:
    """``r = -h_00c / h_c0c``; the caller decides whether ``r`` is admissible."""
    if abs(bundle.hc0c) <= eps_sing:
        raise SingularDegenerate(f"|h_c0c| = {abs(bundle.hc0c):.3e} <= {eps_sing:.1e}")
    return -bundle.h00c / bundle.hc0c


def singular_control(bundle: BracketBundle, eps_sing: float = EPS_SING) -> np.ndarray:
    return singular_feedback(bundle, eps_sing) * bundle.hI


def classify_point(bundle: BracketBundle, eps_cls: float = EPS_CLS) -> Classification:
    norm = bundle.norm_hI
    gap = norm - 1.0
    if gap > eps_cls:
        return Classification("Boundary", gap)
    if gap < -eps_cls:
        return Classification("Inactive", gap)
    return Classification("SingularCandidate", gap)


def regular_control(bundle: BracketBundle, eps_cls: float = EPS_CLS) -> np.ndarray | None:
    """Maximizing control away from the singular locus (``None`` on it)."""
    c = classify_point(bundle, eps_cls)
    if c.kind == "Boundary":
        return bundle.hI / bundle.norm_hI
    if c.kind == "Inactive":
        return np.zeros_like(bundle.hI)
    return None
