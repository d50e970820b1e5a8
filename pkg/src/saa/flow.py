"""Singular Hamiltonian flow, its linearization and seeding on the singular locus.

The extremal solves ``lam' = h0_vec + r(lam) hc_vec`` with the feedback
``r = -h00c / hc0c``.  Alongside it we propagate ``J_t``, the differential of
the flow of the time-dependent Hamiltonian ``h_0 + <u(t), h_I>`` in which the
singular control ``u(t) = r(lam_t) h_I(lam_t)`` is frozen along the computed
extremal.  That flow is the one whose pullbacks define the Jacobi frames; its
Jacobian is assembled analytically from the second field derivatives, so it is
exactly Hamiltonian and ``J_t`` is symplectic up to integrator error.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from saa.errors import InvariantBlowup, NoConvergence, SingularDegenerate, SingularMatrix
from saa.field_dsl import ControlAffineSystem
from saa.hamiltonian import EPS_SING, CotangentPoint, Geometry, geometry

log = logging.getLogger(__name__)

TOL_SEED = 1e-12
TOL_INV = 1e-7
TOL_BLOWUP = 1e-4
COND_MAX = 1e12


def omega(n: int) -> np.ndarray:
    """Canonical symplectic matrix for states ordered ``(q, p)``: ``sigma(v, w) = v @ omega @ w``."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def sigma(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``<p_v, q_w> - <p_w, q_v>``, broadcasting over leading axes of both arguments."""
    n = v.shape[-1] // 2
    return np.einsum("...i,...i->...", v[..., n:], w[..., :n]) - np.einsum("...i,...i->...", w[..., n:], v[..., :n])


@dataclass(frozen=True)
class Stage:
    """Everything the integrators need at one phase-space point."""

    zdot: np.ndarray
    A: np.ndarray  # Jacobian of the frozen-control Hamiltonian field
    r: float
    u: np.ndarray
    geo: Geometry


def stage(sys: ControlAffineSystem, z: np.ndarray, eps_sing: float = EPS_SING) -> Stage:
    n = sys.n
    q, p = z[:n], z[n:]
    g = geometry(sys, q, p)
    hc0c = float(g.hc0c)
    if abs(hc0c) <= eps_sing:
        raise SingularDegenerate(f"|h_c0c| = {abs(hc0c):.3e} at q = {q}")
    r = -float(g.h00c) / hc0c
    u = r * g.h[1:]
    coef = np.concatenate([[1.0], u])
    gq = coef @ g.F
    Dg = np.tensordot(coef, g.DF, axes=1)
    D2g = np.tensordot(coef, g.D2F, axes=1)
    P = np.tensordot(p, D2g, axes=1)
    A = np.zeros((2 * n, 2 * n))
    A[:n, :n] = Dg
    A[n:, :n] = -P
    A[n:, n:] = -Dg.T
    zdot = np.concatenate([gq, -Dg.T @ p])
    return Stage(zdot, A, r, u, g)


def vector_field(sys: ControlAffineSystem, lam: CotangentPoint, eps_sing: float = EPS_SING) -> np.ndarray:
    """``h0_vec + r(lam) hc_vec`` at ``lam`` in canonical coordinates ``(q', p')``."""
    return stage(sys, lam.z, eps_sing).zdot


def locus_residual(sys: ControlAffineSystem, lam: CotangentPoint) -> tuple[float, float]:
    """``(|2 h_c - 1|, |h_0c|)``."""
    g = geometry(sys, lam.q, lam.p)
    hI = g.h[1:]
    return abs(float(hI @ hI) - 1.0), abs(float(g.h0c))


def _project_fiber(sys: ControlAffineSystem, q: np.ndarray, p: np.ndarray, tol: float, max_iter: int):
    for it in range(max_iter + 1):
        g = geometry(sys, q, p)
        hI, h0i = g.h[1:], g.hij[0, 1:]
        res = np.array([hI @ hI - 1.0, g.h0c])
        if np.all(np.abs(res) < tol):
            return p, g, it
        if it == max_iter:
            break
        FI, G = g.F[1:], g.G
        jac = np.stack([2.0 * hI @ FI, h0i @ FI + hI @ G])
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        if not np.all(np.isfinite(step)) or not np.any(step):
            break
        p = p + step
    raise NoConvergence(f"Newton on the singular locus did not converge (residual {np.abs(res).max():.3e})")


def seed_on_locus(sys: ControlAffineSystem, q0, p_guess, tol: float = TOL_SEED, max_iter: int = 50,
                  eps_sing: float = EPS_SING) -> CotangentPoint:
    """Move ``p_guess`` within the fiber over ``q0`` onto ``{|h_I| = 1, h_0c = 0}``.

    Newton iteration on the two constraints with minimal-norm updates.

    Raises:
        NoConvergence: after ``max_iter`` iterations, or when the Newton
            direction degenerates (e.g. ``p_guess = 0``).
        SingularDegenerate: ``h_c0c`` vanishes at the solution.
    """
    q = np.asarray(q0, dtype=float)
    p, g, _ = _project_fiber(sys, q, np.asarray(p_guess, dtype=float).copy(), tol, max_iter)
    if abs(float(g.hc0c)) <= eps_sing:
        raise SingularDegenerate(f"h_c0c = {float(g.hc0c):.3e} at the seed")
    return CotangentPoint(q, p)


@dataclass(frozen=True)
class SingularExtremal:
    """A singular extremal sampled on a uniform grid together with ``J_t``.

    Attributes:
        t: Grid times, shape ``(N+1,)``.
        z: Phase-space states ``(q, p)``, shape ``(N+1, 2n)``.
        r: Feedback at each node.
        u: Singular control at each node, shape ``(N+1, m)``.
        J: Differential of the flow at each node, shape ``(N+1, 2n, 2n)``.
        drift: Columns ``|2h_c - 1|`` and ``|h_0c|`` at each node.
        hc0c: ``h_c0c`` at each node.
        valid: Drift stayed below ``tol_inv``.
        admissible: ``r`` stayed in ``[0, 1]``.
    """

    n: int
    m: int
    t: np.ndarray
    z: np.ndarray
    r: np.ndarray
    u: np.ndarray
    J: np.ndarray
    drift: np.ndarray
    hc0c: np.ndarray
    valid: bool = True
    admissible: bool = True
    projected: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    @property
    def dt(self) -> float:
        return self.T / self.n_steps if self.n_steps else 0.0

    def lam(self, k: int) -> CotangentPoint:
        return CotangentPoint(self.z[k, : self.n], self.z[k, self.n:])

    def node(self, t: float, snap: bool = False) -> int:
        """Index of the grid node at time ``t``.

        Off-grid times raise ``ValueError`` unless ``snap`` is set, in which
        case the nearest node is used.
        """
        k = int(np.argmin(np.abs(self.t - t)))
        if not snap and abs(self.t[k] - t) > 1e-9 * max(1.0, abs(self.T)):
            raise ValueError(f"t = {t} is not on the grid (nearest node {self.t[k]})")
        return k

    def symplectic_defect(self) -> np.ndarray:
        Om = omega(self.n)
        D = np.einsum("kji,jl,klm->kim", self.J, Om, self.J) - Om
        return np.abs(D).max(axis=(1, 2))


def _rk4_step(sys, z, J, h, eps_sing, s1: Stage | None = None):
    s1 = s1 or stage(sys, z, eps_sing)
    K1 = s1.A @ J
    s2 = stage(sys, z + 0.5 * h * s1.zdot, eps_sing)
    K2 = s2.A @ (J + 0.5 * h * K1)
    s3 = stage(sys, z + 0.5 * h * s2.zdot, eps_sing)
    K3 = s3.A @ (J + 0.5 * h * K2)
    s4 = stage(sys, z + h * s3.zdot, eps_sing)
    K4 = s4.A @ (J + h * K3)
    z1 = z + h / 6.0 * (s1.zdot + 2.0 * s2.zdot + 2.0 * s3.zdot + s4.zdot)
    J1 = J + h / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
    return z1, J1


def integrate(sys: ControlAffineSystem, lam0: CotangentPoint, T: float, n_steps: int, scheme: str = "rk4",
              project: bool = False, tol_inv: float = TOL_INV, tol_blowup: float = TOL_BLOWUP,
              eps_sing: float = EPS_SING) -> SingularExtremal:
    """Integrate the singular flow and its linearization with fixed-step RK4.

    Args:
        sys: The control system.
        lam0: Initial point, on the singular locus to ``1e-9``.
        T: Horizon.
        n_steps: Number of RK4 steps; zero returns the single initial node.
        scheme: Only ``"rk4"`` is implemented.
        project: Re-impose the locus constraints on ``p`` after every step.
        tol_inv: Drift above this flags the record as invalid.
        tol_blowup: Drift above this aborts the integration.
        eps_sing: Degeneracy threshold on ``|h_c0c|``.

    Raises:
        SingularDegenerate: ``|h_c0c| <= eps_sing`` at some stage.
        InvariantBlowup: drift exceeded ``tol_blowup``.
    """
    if scheme != "rk4":
        raise ValueError(f"unknown scheme {scheme!r}")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    n, m = sys.n, sys.m
    res = locus_residual(sys, lam0)
    if max(res) > 1e-9:
        raise ValueError(f"initial point is off the singular locus (residuals {res[0]:.2e}, {res[1]:.2e})")
    N = n_steps
    h = T / N if N else 0.0
    ts = np.linspace(0.0, T, N + 1) if N else np.array([0.0])
    Z = np.empty((N + 1, 2 * n))
    Js = np.empty((N + 1, 2 * n, 2 * n))
    R = np.empty(N + 1)
    U = np.empty((N + 1, m))
    drift = np.empty((N + 1, 2))
    H = np.empty(N + 1)
    z = lam0.z.copy()
    J = np.eye(2 * n)
    for k in range(N + 1):
        s = stage(sys, z, eps_sing)
        hI = s.geo.h[1:]
        Z[k], Js[k], R[k], U[k], H[k] = z, J, s.r, s.u, s.geo.hc0c
        drift[k] = abs(float(hI @ hI) - 1.0), abs(float(s.geo.h0c))
        if drift[k].max() > tol_blowup:
            raise InvariantBlowup(f"locus drift {drift[k].max():.3e} at t = {ts[k]:.6g}")
        if k == N:
            break
        z, J = _rk4_step(sys, z, J, h, eps_sing, s)
        if project:
            p, _, _ = _project_fiber(sys, z[:n], z[n:].copy(), TOL_SEED, 10)
            z = np.concatenate([z[:n], p])
    valid = bool(drift.max() <= tol_inv)
    admissible = bool(np.all((R >= 0.0) & (R <= 1.0)))
    if not valid:
        log.warning("locus drift %.3e exceeds tol_inv %.1e", drift.max(), tol_inv)
    if not admissible:
        log.warning("feedback r leaves [0, 1] (range %.4g..%.4g)", R.min(), R.max())
    return SingularExtremal(n, m, ts, Z, R, U, Js, drift, H, valid, admissible, project)


def _checked_J(ext: SingularExtremal, t: float) -> np.ndarray:
    J = ext.J[ext.node(t)]
    c = np.linalg.cond(J)
    if not np.isfinite(c) or c > COND_MAX:
        raise SingularMatrix(f"cond(J_t) = {c:.3e} at t = {t}")
    return J


def pushforward(ext: SingularExtremal, t: float, v) -> np.ndarray:
    """``J_t v`` at the grid node ``t``."""
    return _checked_J(ext, t) @ np.asarray(v, dtype=float)


def pullback(ext: SingularExtremal, t: float, v) -> np.ndarray:
    """``J_t^{-1} v`` at the grid node ``t``, via a linear solve."""
    return np.linalg.solve(_checked_J(ext, t), np.asarray(v, dtype=float))


def hamiltonian_value(sys: ControlAffineSystem, z: np.ndarray) -> float:
    """``h_0 + r (|h_I| - 1)``; equals ``h_0`` on the locus."""
    s = stage(sys, z)
    return float(s.geo.h[0] + s.r * (np.linalg.norm(s.geo.h[1:]) - 1.0))


def write_extremal_csv(ext: SingularExtremal, path: str | Path) -> None:
    n, m = ext.n, ext.m
    header = (["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)] + ["r"]
              + [f"u{i + 1}" for i in range(m)] + ["drift_hc", "drift_h0c"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(ext.t)):
            row = [ext.t[k], *ext.z[k], ext.r[k], *ext.u[k], *ext.drift[k]]
            w.writerow([repr(float(x)) for x in row])


def write_jacobian_csv(ext: SingularExtremal, path: str | Path) -> None:
    """One block per node: a ``t`` line followed by the rows of ``J_t``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for k in range(len(ext.t)):
            w.writerow(["t", repr(float(ext.t[k]))])
            for row in ext.J[k]:
                w.writerow([repr(float(x)) for x in row])
