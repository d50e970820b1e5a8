"""Pulled-back frames, the Legendre form, the Jacobi equation and conjugate times.

Frames are evaluated at every grid node at once.  ``Z_t e_i`` is the pullback
of ``h_i_vec(lam_t)`` by ``J_t``; ``Z_I = Z_t h_I`` and its time derivative is
obtained from brackets and cross-checked against a centered difference.

Conjugate times are detected from the pairing determinant between the
propagated start space and the end space of the boundary value problem.  The
fundamental matrix of the Jacobi equation is propagated once with RK4 on
double steps, so that odd grid nodes serve as the RK4 midpoints, and roots are
refined with a bracketing solver that re-integrates the coupled
(extremal, linearization, Jacobi) system from the left node of the bracket.
Zeros of even multiplicity where the determinant touches zero without a sign
change are only seen when a node lands inside the noise band.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq

from saa.errors import CrossCheckFailure, DegenerateFrame, InconclusiveScan, SingularDegenerate, SingularMatrix
from saa.field_dsl import ControlAffineSystem
from saa.flow import COND_MAX, SingularExtremal, omega, sigma, stage
from saa.hamiltonian import EPS_SING, geometry

log = logging.getLogger(__name__)

VERDICTS = ("NotOptimal_GLC", "NotOptimal_Conjugate", "LocallyOptimal", "Inconclusive")


# ------------------------------------------------------------------------ frames

@dataclass(frozen=True)
class ZFrame:
    t: float
    Zcols: np.ndarray  # (2n, m)
    ZI: np.ndarray  # (2n,)
    ZIdot: np.ndarray  # (2n,)
    Wbasis: np.ndarray  # (m, m-1)
    hI: np.ndarray
    r: float


@dataclass(frozen=True)
class LegendreSample:
    t: float
    l: np.ndarray  # (m, m) in the (Wbasis, phi) coordinates
    schur: float
    hc0c: float


def w_basis(hI: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``hI^perp`` along the last axis; shape ``(..., m, m-1)``."""
    hI = np.asarray(hI, dtype=float)
    m = hI.shape[-1]
    v = hI / np.linalg.norm(hI, axis=-1, keepdims=True)
    if m == 1:
        return np.zeros(hI.shape + (0,))
    if m == 2:
        return np.stack([-v[..., 1], v[..., 0]], axis=-1)[..., None]
    # Householder reflection mapping e_1 to -s v; its other columns span v^perp
    s = np.where(v[..., :1] >= 0.0, 1.0, -1.0)
    w = v.copy()
    w[..., 0] += s[..., 0]
    H = np.eye(m) - 2.0 * np.einsum("...i,...j->...ij", w, w) / np.einsum("...i,...i->...", w, w)[..., None, None]
    return H[..., :, 1:]


def _frame_arrays(sys: ControlAffineSystem, z: np.ndarray, J: np.ndarray, eps_sing: float = EPS_SING) -> dict:
    """Frames and Legendre data at a batch of states ``z`` with flow differentials ``J``."""
    n, m = sys.n, sys.m
    q, p = z[:, :n], z[:, n:]
    g = geometry(sys, q, p)
    hc0c = g.hc0c
    if np.any(np.abs(hc0c) <= eps_sing):
        k = int(np.argmin(np.abs(hc0c)))
        raise SingularDegenerate(f"|h_c0c| = {abs(hc0c[k]):.3e} at node {k}")
    r = -g.h00c / hc0c
    hI = g.h[:, 1:]
    h0i = g.hij[:, 0, 1:]
    # Hamiltonian vector fields of h_i and h_0i, columns (B, 2n, m)
    Hq = np.swapaxes(g.F[:, 1:], 1, 2)
    Hp = -np.einsum("bikl,bk->bli", g.DF[:, 1:], p)
    Gq = np.swapaxes(g.G, 1, 2)
    Gp = -np.einsum("bikl,bk->bli", g.DG, p)
    Hv = np.concatenate([Hq, Hp], axis=1)
    Gv = np.concatenate([Gq, Gp], axis=1)
    coef = h0i + r[:, None] * g.hcI
    V = np.einsum("bki,bi->bk", Hv, coef) + np.einsum("bki,bi->bk", Gv, hI)
    cond = np.linalg.cond(J)
    if np.any(~np.isfinite(cond) | (cond > COND_MAX)):
        k = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise SingularMatrix(f"cond(J_t) = {cond[k]:.3e} at node {k}")
    X = np.linalg.solve(J, np.concatenate([Hv, V[:, :, None]], axis=2))
    Zcols, ZIdot = X[:, :, :m], X[:, :, m]
    ZI = np.einsum("bki,bi->bk", Zcols, hI)
    W = w_basis(hI)
    ZW = np.einsum("bki,bij->bkj", Zcols, W)
    a = sigma(np.swapaxes(ZW, 1, 2), ZI[:, None, :])  # (B, m-1)
    alpha = sigma(ZI, ZIdot)
    if np.any(r <= eps_sing):
        k = int(np.argmin(r))
        raise SingularDegenerate(f"feedback r = {r[k]:.3e} <= {eps_sing:.1e} at node {k}; Id/r is undefined")
    B = len(r)
    l = np.zeros((B, m, m))
    l[:, : m - 1, : m - 1] = np.eye(m - 1)[None] / r[:, None, None]
    l[:, : m - 1, m - 1] = a
    l[:, m - 1, : m - 1] = a
    l[:, m - 1, m - 1] = alpha
    schur = alpha - r * np.einsum("bi,bi->b", a, a)
    return dict(Zcols=Zcols, ZI=ZI, ZIdot=ZIdot, W=W, ZW=ZW, hI=hI, r=r, hc0c=hc0c, l=l, schur=schur)


def jacobi_matrices(fr: dict) -> np.ndarray:
    """``K_t`` with ``eta' = K_t eta``; batched over the leading axis of the frame arrays."""
    l = fr["l"]
    cond = np.linalg.cond(l)
    if np.any(~np.isfinite(cond) | (cond > COND_MAX)):
        k = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise SingularMatrix(f"cond(l_t) = {cond[k]:.3e} at node {k}")
    Zcal = np.concatenate([fr["ZW"], -fr["ZIdot"][:, :, None]], axis=2)
    n2 = Zcal.shape[1]
    X = np.linalg.solve(l, np.swapaxes(Zcal, 1, 2))
    return -Zcal @ X @ omega(n2 // 2)


@dataclass
class FrameSet:
    """Frames, Legendre forms and Jacobi matrices at every node of an extremal."""

    t: np.ndarray
    data: dict
    _K: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.data[key]

    @property
    def K(self) -> np.ndarray:
        if self._K is None:
            self._K = jacobi_matrices(self.data)
        return self._K

    def frame(self, k: int) -> ZFrame:
        d = self.data
        return ZFrame(float(self.t[k]), d["Zcols"][k], d["ZI"][k], d["ZIdot"][k], d["W"][k], d["hI"][k], float(d["r"][k]))

    def legendre(self, k: int) -> LegendreSample:
        d = self.data
        return LegendreSample(float(self.t[k]), d["l"][k], float(d["schur"][k]), float(d["hc0c"][k]))


def zidot_fd(t: np.ndarray, ZI: np.ndarray) -> np.ndarray:
    """Centered-difference derivative of ``Z_I`` at the interior nodes of a uniform grid."""
    return (ZI[2:] - ZI[:-2]) / (t[2:] - t[:-2])[:, None]


def frames(ext: SingularExtremal, sys: ControlAffineSystem, cross_check: bool = True,
           eps_sing: float = EPS_SING) -> FrameSet:
    """Frames at every node, with the bracket formula for ``Z_I'`` cross-checked by differencing.

    Raises:
        SingularMatrix: ``J_t`` is too ill-conditioned to pull back.
        CrossCheckFailure: the two evaluations of ``Z_I'`` disagree beyond
            ``1e-5 (1 + |Z_I'|)``.
    """
    fr = _frame_arrays(sys, ext.z, ext.J, eps_sing)
    if cross_check and len(ext.t) >= 3:
        fd = zidot_fd(ext.t, fr["ZI"])
        exact = fr["ZIdot"][1:-1]
        err = np.linalg.norm(fd - exact, axis=1)
        tol = 1e-5 * (1.0 + np.linalg.norm(exact, axis=1))
        if np.any(err > tol):
            k = int(np.argmax(err - tol))
            raise CrossCheckFailure(f"Z_I' bracket formula vs differencing: {err[k]:.3e} > {tol[k]:.3e} "
                                    f"at t = {ext.t[k + 1]:.6g}")
    return FrameSet(ext.t, fr)


def z_frame(ext: SingularExtremal, sys: ControlAffineSystem, t: float, cross_check: bool = True) -> ZFrame:
    k = ext.node(t)
    lo, hi = max(0, k - 2), min(len(ext.t), k + 3)
    sub = SingularExtremal(ext.n, ext.m, ext.t[lo:hi], ext.z[lo:hi], ext.r[lo:hi], ext.u[lo:hi], ext.J[lo:hi],
                           ext.drift[lo:hi], ext.hc0c[lo:hi])
    return frames(sub, sys, cross_check).frame(k - lo)


def legendre_sample(ext: SingularExtremal, sys: ControlAffineSystem, t: float) -> LegendreSample:
    k = ext.node(t)
    fr = _frame_arrays(sys, ext.z[k:k + 1], ext.J[k:k + 1])
    return FrameSet(ext.t[k:k + 1], fr).legendre(0)


def check_glc(ext: SingularExtremal, sys: ControlAffineSystem | None = None, tol_sglc: float = 1e-8) -> tuple[float, bool]:
    """``(min_t h_c0c, min_t h_c0c > tol_sglc)`` over the grid."""
    if sys is not None:
        hc0c = geometry(sys, ext.z[:, : ext.n], ext.z[:, ext.n:]).hc0c
    else:
        hc0c = ext.hc0c
    glc_min = float(np.min(hc0c))
    return glc_min, bool(glc_min > tol_sglc)


def jacobi_rhs(frame: ZFrame, leg: LegendreSample, eta: np.ndarray) -> np.ndarray:
    """``-Zcal l^{-1} sigma(Zcal ., eta)`` with ``Zcal (w, phi) = Z_t W w - phi Z_I'``."""
    l = leg.l
    if np.linalg.cond(l) > COND_MAX:
        raise SingularMatrix(f"cond(l_t) = {np.linalg.cond(l):.3e}")
    Zcal = np.column_stack([frame.Zcols @ frame.Wbasis, -frame.ZIdot])
    c = sigma(Zcal.T, np.asarray(eta, dtype=float)[None, :])
    return -Zcal @ np.linalg.solve(l, c)


# ----------------------------------------------------------- boundary subspaces

def _orth(B: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(B)
    return Q * np.where(np.diag(R) < 0.0, -1.0, 1.0)


def vertical_basis(n: int) -> np.ndarray:
    """``Pi_0``: the tangent space to the initial fiber, ``{(0, dp)}``."""
    return np.vstack([np.zeros((n, n)), np.eye(n)])


def cut_vertical(ZI: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of ``(Pi_0 + R ZI) cap (R ZI)^angle`` (Lagrangian, dimension n)."""
    ZI = np.asarray(ZI, dtype=float)
    n = ZI.shape[0] // 2
    Zq = ZI[:n]
    if np.linalg.norm(Zq) < tol * np.linalg.norm(ZI):
        raise DegenerateFrame("Z_I lies in the vertical fiber")
    dp = null_space(Zq[None, :])  # (n, n-1), dp . Zq = 0
    B = np.column_stack([np.vstack([np.zeros((n, n - 1)), dp]), ZI])
    return _orth(B)


def boundary_subspaces(frame0: ZFrame, frameT: ZFrame, convention: str = "rev") -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases ``(start, end)`` of the Jacobi boundary conditions.

    ``"rev"``: start ``Pi_0^{R Z_I(0)}``, end ``Pi_0``.  ``"fwd"``: start
    ``Pi_0``, end ``Pi_0^{R Z_I(T)}``.
    """
    n = frame0.ZI.shape[0] // 2
    if convention == "rev":
        return cut_vertical(frame0.ZI), vertical_basis(n)
    if convention == "fwd":
        return vertical_basis(n), cut_vertical(frameT.ZI)
    raise ValueError(f"unknown convention {convention!r}")


def constant_solutions(fs: FrameSet, k_end: int | None = None, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of constant Jacobi solutions lying in both boundary spaces.

    A solution is constant iff it is skew-orthogonal to every ``Zcal_t``
    column.  Those in ``Pi_0 cap Z_I(0)^angle`` belong to the start and end
    spaces of both conventions for every ``t`` and are excluded from the
    count, which is over non-constant solutions.  They arise from abnormal
    covectors along the extremal.
    """
    sl = slice(None) if k_end is None else slice(0, k_end + 1)
    Zcal = np.concatenate([fs["ZW"][sl], fs["ZIdot"][sl][:, :, None]], axis=2)
    n2 = Zcal.shape[1]
    n = n2 // 2
    G = np.swapaxes(Zcal, 1, 2).reshape(-1, n2) @ omega(n)
    rows = [G / max(np.abs(G).max(), 1e-300)]
    ZI0 = fs["ZI"][0]
    rows.append((ZI0 @ omega(n))[None] / max(np.abs(ZI0).max(), 1e-300))
    rows.append(np.hstack([np.eye(n), np.zeros((n, n))]))  # vertical: q-part vanishes
    A = np.vstack(rows)
    _, sv, Vt = np.linalg.svd(A, full_matrices=False)  # rows >= 2n, so Vt is square
    rank = int(np.sum(sv > rel_tol * sv[0]))
    return Vt[rank:].T


def _complement(B: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the part of ``span B`` orthogonal to ``span U`` (``U`` inside ``span B``)."""
    if U.shape[1] == 0:
        return B
    P = B - U @ (U.T @ B)
    Uc, sv, _ = np.linalg.svd(P, full_matrices=False)
    return Uc[:, : B.shape[1] - U.shape[1]]


def _align(E: np.ndarray, ref: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(E.T @ ref)
    return E @ (U @ Vt)


# ------------------------------------------------------------- conjugate scan

@dataclass
class ScanResult:
    convention: str
    t: np.ndarray
    det: np.ndarray
    smin: np.ndarray
    roots: list  # interior (t, multiplicity)
    endpoint_hit: bool
    inconclusive: bool = False
    message: str = ""
    n_constant: int = 0


def _pairing(Psi: np.ndarray, S: np.ndarray, E: np.ndarray) -> np.ndarray:
    Q = _orth(Psi @ S)
    return Q.T @ omega(S.shape[0] // 2) @ E


def _coupled_rhs(sys, z, J, Psi, eps_sing):
    st = stage(sys, z, eps_sing)
    fr = _frame_arrays(sys, z[None], J[None], eps_sing)
    K = jacobi_matrices(fr)[0]
    return st.zdot, st.A @ J, K @ Psi, fr


def _advance(sys, z, J, Psi, dt, nsub, eps_sing):
    h = dt / nsub
    for _ in range(nsub):
        a = _coupled_rhs(sys, z, J, Psi, eps_sing)
        b = _coupled_rhs(sys, z + 0.5 * h * a[0], J + 0.5 * h * a[1], Psi + 0.5 * h * a[2], eps_sing)
        c = _coupled_rhs(sys, z + 0.5 * h * b[0], J + 0.5 * h * b[1], Psi + 0.5 * h * b[2], eps_sing)
        d = _coupled_rhs(sys, z + h * c[0], J + h * c[1], Psi + h * c[2], eps_sing)
        z = z + h / 6.0 * (a[0] + 2 * b[0] + 2 * c[0] + d[0])
        J = J + h / 6.0 * (a[1] + 2 * b[1] + 2 * c[1] + d[1])
        Psi = Psi + h / 6.0 * (a[2] + 2 * b[2] + 2 * c[2] + d[2])
    return z, J, Psi


def propagate_fundamental(fs: FrameSet, k_end: int) -> np.ndarray:
    """Jacobi fundamental matrix at even nodes ``0, 2, .., k_end`` (RK4 with double steps)."""
    if k_end % 2:
        raise ValueError("the scan needs an even number of grid intervals")
    K = fs.K
    t = fs.t
    n2 = K.shape[1]
    out = np.empty((k_end // 2 + 1, n2, n2))
    Psi = np.eye(n2)
    out[0] = Psi
    for j in range(k_end // 2):
        k = 2 * j
        H = t[k + 2] - t[k]
        k1 = K[k] @ Psi
        k2 = K[k + 1] @ (Psi + 0.5 * H * k1)
        k3 = K[k + 1] @ (Psi + 0.5 * H * k2)
        k4 = K[k + 2] @ (Psi + H * k3)
        Psi = Psi + H / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[j + 1] = Psi
    return out


def conjugate_scan(ext: SingularExtremal, sys: ControlAffineSystem, T: float | None = None, convention: str = "rev",
                   fs: FrameSet | None = None, Psi: np.ndarray | None = None, tol_t: float | None = None,
                   band: float = 1e-11, mult_tol: float = 1e-7, max_band_run: int = 3,
                   eps_sing: float = EPS_SING) -> ScanResult:
    """Scan the pairing determinant on ``[0, T]`` and refine its sign changes.

    Args:
        ext: Extremal with an even number of intervals up to ``T``.
        sys: The control system.
        T: End of the scan; defaults to the extremal horizon.  Must be a node.
        convention: ``"rev"`` or ``"fwd"`` boundary conditions.
        fs: Precomputed frames.
        Psi: Precomputed fundamental matrices from :func:`propagate_fundamental`.
        tol_t: Time tolerance of the root refinement (default ``1e-8 T``).
        band: Noise band on the determinant.
        mult_tol: Relative singular-value cut for multiplicities.
        max_band_run: Longest tolerated run of in-band nodes after the
            leading structural zero.
    """
    if convention not in ("rev", "fwd"):
        raise ValueError(f"unknown convention {convention!r}")
    T = ext.T if T is None else float(T)
    k_end = ext.node(T)
    tol_t = 1e-8 * T if tol_t is None else tol_t
    fs = fs if fs is not None else frames(ext, sys, cross_check=False, eps_sing=eps_sing)
    if Psi is None or len(Psi) < k_end // 2 + 1:
        Psi = propagate_fundamental(fs, k_end)
    n = ext.n
    idx = np.arange(0, k_end + 1, 2)
    ts = ext.t[idx]
    ZI = fs["ZI"]
    Pi0 = vertical_basis(n)
    U = constant_solutions(fs, k_end)
    Pi0 = _complement(Pi0, U)
    if convention == "rev":
        S = _complement(cut_vertical(ZI[0]), U)
        Es = [Pi0] * len(idx)
    else:
        S = Pi0
        Es, prev = [], None
        for k in idx:
            E = _complement(cut_vertical(ZI[k]), U)
            E = E if prev is None else _align(E, prev)
            Es.append(E)
            prev = E
    dets = np.empty(len(idx))
    smin = np.empty(len(idx))
    for j, E in enumerate(Es):
        M = _pairing(Psi[j], S, E)
        dets[j] = np.linalg.det(M)
        smin[j] = np.linalg.svd(M, compute_uv=False)[-1]

    def eval_at(j_left: int, tau: float):
        k = idx[j_left]
        dt = tau - ext.t[k]
        if dt == 0.0:
            z, J, P = ext.z[k], ext.J[k], Psi[j_left]
        else:
            nsub = max(8, int(np.ceil(8 * dt / (ts[1] - ts[0]))))
            z, J, P = _advance(sys, ext.z[k], ext.J[k], Psi[j_left], dt, nsub, eps_sing)
        E = Pi0
        if convention == "fwd":
            fr = _frame_arrays(sys, z[None], J[None], eps_sing)
            E = _align(_complement(cut_vertical(fr["ZI"][0]), U), Es[j_left])
        return _pairing(P, S, E)

    def multiplicity(M: np.ndarray) -> int:
        sv = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(sv < mult_tol * max(sv[0], 1e-300)))

    roots: list = []
    endpoint_hit = False
    inband = np.abs(dets) <= band
    j0 = 1
    while j0 < len(idx) and inband[j0]:
        j0 += 1  # structural zero at t = 0
    if j0 == len(idx):
        msg = f"|det| <= {band:g} on the whole scan"
        return ScanResult(convention, ts, dets, smin, roots, endpoint_hit, True, msg, U.shape[1])
    last, run = None, 0
    for j in range(j0, len(idx)):
        if inband[j]:
            run += 1
            if run > max_band_run:
                msg = f"{run} consecutive nodes with |det| <= {band:g} near t = {ts[j]:.6g}"
                return ScanResult(convention, ts, dets, smin, roots, endpoint_hit, True, msg, U.shape[1])
            if j == len(idx) - 1:
                endpoint_hit = True
            continue
        if last is not None and np.sign(dets[j]) != np.sign(dets[last]):
            a, b = ts[last], ts[j]
            try:
                tr = brentq(lambda tau: np.linalg.det(eval_at(last, tau)), a, b, xtol=tol_t, rtol=4 * np.finfo(float).eps)
            except ValueError:
                tr = ts[last + int(np.argmin(np.abs(dets[last:j + 1])))]
            mult = max(1, multiplicity(eval_at(last, tr)))
            if abs(tr - T) <= tol_t:
                endpoint_hit = True
            else:
                roots.append((float(tr), mult))
        elif run > 0 and last is not None:
            # touched the band without a sign change: report if the pairing drops rank there
            jm = last + 1 + int(np.argmin(np.abs(dets[last + 1:j])))
            mult = multiplicity(_pairing(Psi[jm], S, Es[jm]))
            if mult > 0:
                roots.append((float(ts[jm]), mult))
        last, run = j, 0
    if not endpoint_hit and multiplicity(_pairing(Psi[len(idx) - 1], S, Es[-1])) > 0:
        endpoint_hit = True  # rank drop at T that the absolute band misses
    return ScanResult(convention, ts, dets, smin, roots, endpoint_hit, n_constant=U.shape[1])


def find_conjugate_times(ext: SingularExtremal, sys: ControlAffineSystem, T: float | None = None,
                         convention: str = "rev", **kw) -> list[tuple[float, int]]:
    """Conjugate times in ``(0, T)`` with multiplicities; a hit at ``T`` itself is appended last.

    Raises:
        InconclusiveScan: the determinant stayed in the noise band too long.
    """
    res = conjugate_scan(ext, sys, T, convention, **kw)
    if res.inconclusive:
        raise InconclusiveScan(res.message)
    out = list(res.roots)
    if res.endpoint_hit:
        Te = ext.T if T is None else float(T)
        out.append((Te, 1))
    return out


# -------------------------------------------------------------------- corank

def corank_from_images(Zq: np.ndarray, hI: np.ndarray, weights: np.ndarray, block: int = 10,
                       rel_tol: float = 1e-8) -> tuple[int, np.ndarray]:
    """Corank from the images of block-bump variations under the extended endpoint differential.

    Args:
        Zq: ``(K, n, m)`` base components of ``Z_t e_i`` at the nodes.
        hI: ``(K, m)``.
        weights: Quadrature weights of the nodes.
        block: Nodes per bump.
        rel_tol: Singular values of the Gram matrix above ``rel_tol * max`` count toward the rank.

    Returns:
        The corank and the Gram singular values.
    """
    K, n, m = Zq.shape
    rows = np.concatenate([Zq, hI[:, None, :]], axis=1) * weights[:, None, None]  # (K, n+1, m)
    nb = max(1, K // block)
    edges = np.linspace(0, K, nb + 1).astype(int)
    imgs = np.concatenate([rows[a:b].sum(axis=0) for a, b in zip(edges[:-1], edges[1:])], axis=1)
    gram = imgs @ imgs.T
    sv = np.linalg.svd(gram, compute_uv=False)
    rank = 0 if sv[0] == 0.0 else int(np.sum(sv > rel_tol * sv[0]))
    return n + 1 - rank, sv


def estimate_corank(ext: SingularExtremal, sys: ControlAffineSystem, fs: FrameSet | None = None,
                    block: int = 10, rel_tol: float = 1e-8) -> int:
    fs = fs if fs is not None else frames(ext, sys, cross_check=False)
    w = np.full(len(ext.t), ext.dt)
    w[0] = w[-1] = 0.5 * ext.dt
    return corank_from_images(fs["Zcols"][:, : ext.n, :], fs["hI"], w, block, rel_tol)[0]


# ------------------------------------------------------------------- verdicts

@dataclass
class ConjugateReport:
    glc_min: float
    sglc_holds: bool
    conjugate_times: list
    corank: int
    verdict: str
    endpoint_hit: bool = False
    diagnostics: dict = field(default_factory=dict)


def optimality_verdict(glc_min: float, sglc_holds: bool, conjugate_times: list | None, corank: int,
                       endpoint_hit: bool = False, inconclusive_scan: bool = False, tol: float = 1e-8,
                       diagnostics: dict | None = None) -> ConjugateReport:
    """Combine the Legendre test, the conjugate-time count and the corank.

    ``conjugate_times`` holds interior times only; a conjugate time at the
    horizon is passed through ``endpoint_hit``.
    """
    times = list(conjugate_times or [])
    count = sum(mult for _, mult in times)
    if glc_min < -tol:
        verdict = "NotOptimal_GLC"
    elif not sglc_holds or inconclusive_scan:
        verdict = "Inconclusive"
    elif count > 0 and count >= corank:
        verdict = "NotOptimal_Conjugate"
    elif count == 0 and not endpoint_hit:
        verdict = "LocallyOptimal"
    else:
        verdict = "Inconclusive"
    return ConjugateReport(glc_min, sglc_holds, times, corank, verdict, endpoint_hit, dict(diagnostics or {}))


def analyze_extremal(ext: SingularExtremal, sys: ControlAffineSystem, convention: str = "rev",
                     tol_sglc: float = 1e-8, tol_t: float | None = None, block: int = 10) -> tuple[ConjugateReport, ScanResult | None]:
    """GLC test, conjugate scan and corank on one extremal."""
    glc_min, sglc = check_glc(ext, sys, tol_sglc)
    if glc_min < -tol_sglc or not sglc:
        try:
            corank = estimate_corank(ext, sys, block=block)
        except (SingularMatrix, SingularDegenerate):
            corank = -1
        return optimality_verdict(glc_min, sglc, [], corank, tol=tol_sglc), None
    fs = frames(ext, sys, cross_check=True)
    scan = conjugate_scan(ext, sys, convention=convention, fs=fs, tol_t=tol_t)
    corank = estimate_corank(ext, sys, fs, block)
    diag = {"scan_message": scan.message} if scan.inconclusive else {}
    rep = optimality_verdict(glc_min, sglc, scan.roots, corank, scan.endpoint_hit, scan.inconclusive, tol_sglc, diag)
    return rep, scan
