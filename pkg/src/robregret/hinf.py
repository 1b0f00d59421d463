"""Discrete-time H-infinity output-feedback synthesis.

Route: regularize singular channels if needed, map the plant to continuous
time with the bilinear transform ``z = (1 + s) / (1 - s)`` (which preserves
the H-infinity norm), apply the general two-Riccati central-controller
formulas (D11 and D22 allowed), then map the controller back. Every
controller is verified against the original discrete plant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AssumptionViolated, DimensionMismatch, NoStabilizingSolution
from .riccati import pbh_stabilizable, solve_dare_general
from .sscore import StateSpace, hinf_norm, is_schur, lft_lower

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- bilinear maps


def d2c(G: StateSpace) -> StateSpace:
    """Discrete to continuous with ``z = (1 + s) / (1 - s)``."""
    n = G.nx
    if n == 0:
        return G
    M = G.A + np.eye(n)
    if np.linalg.cond(M) > 1e12:
        raise AssumptionViolated("pole at z = -1: the bilinear transform is singular")
    Mi = np.linalg.inv(M)
    r2 = np.sqrt(2.0)
    return StateSpace(Mi @ (G.A - np.eye(n)), r2 * Mi @ G.B, r2 * G.C @ Mi, G.D - G.C @ Mi @ G.B)


def c2d(G: StateSpace) -> StateSpace:
    """Inverse of :func:`d2c`."""
    n = G.nx
    if n == 0:
        return G
    M = np.eye(n) - G.A
    if np.linalg.cond(M) > 1e12:
        raise AssumptionViolated("pole at s = 1: the inverse bilinear transform is singular")
    Mi = np.linalg.inv(M)
    r2 = np.sqrt(2.0)
    return StateSpace((np.eye(n) + G.A) @ Mi, r2 * Mi @ G.B, r2 * G.C @ Mi, G.D + G.C @ Mi @ G.B)


# ---------------------------------------------------------------- continuous-time core


def ric(H: np.ndarray) -> np.ndarray | None:
    """Stabilizing solution of the Riccati equation with Hamiltonian ``H``.

    Returns ``None`` when ``H`` has eigenvalues on the imaginary axis or the
    stable subspace is not a graph.
    """
    n = H.shape[0] // 2
    scale = max(np.linalg.norm(H, 1), 1.0)
    T, U, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    eigs = np.linalg.eigvals(H)
    if np.min(np.abs(eigs.real)) <= 1e-10 * scale or sdim != n:
        return None
    U11, U21 = U[:n, :n], U[n:, :n]
    if np.linalg.cond(U11) > 1e12:
        return None
    X = np.linalg.solve(U11.T, U21.T).T
    return (X + X.T) / 2


@dataclass
class _CPlant:
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    D11: np.ndarray
    D12: np.ndarray
    D21: np.ndarray


def _sigma(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _chol_like(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive definite matrix."""
    w, V = np.linalg.eigh((M + M.T) / 2)
    if w.size and w.min() <= 0:
        raise np.linalg.LinAlgError("not positive definite")
    return (V * np.sqrt(w)) @ V.T


def central_controller(p: _CPlant, gamma: float, psd_tol: float = 1e-9) -> StateSpace | None:
    """Central controller for a continuous plant with ``D12 = [0; I]``, ``D21 = [0 I]``, ``D22 = 0``.

    Implements the general state-space formulae that allow ``D11 != 0``.
    Returns ``None`` when ``gamma`` is not achievable.
    """
    A, B1, B2, C1, C2, D11 = p.A, p.B1, p.B2, p.C1, p.C2, p.D11
    n = A.shape[0]
    m1, m2 = B1.shape[1], B2.shape[1]
    p1, p2 = C1.shape[0], C2.shape[0]
    g2 = gamma**2
    D1111, D1112 = D11[: p1 - m2, : m1 - p2], D11[: p1 - m2, m1 - p2 :]
    D1121, D1122 = D11[p1 - m2 :, : m1 - p2], D11[p1 - m2 :, m1 - p2 :]
    if gamma <= max(_sigma(np.hstack([D1111, D1112])), _sigma(np.vstack([D1111, D1121]))):
        return None

    B = np.hstack([B1, B2])
    C = np.vstack([C1, C2])
    D1d = np.hstack([D11, p.D12])
    Dd1 = np.vstack([D11, p.D21])
    R = D1d.T @ D1d - scipy.linalg.block_diag(g2 * np.eye(m1), np.zeros((m2, m2)))
    Rt = Dd1 @ Dd1.T - scipy.linalg.block_diag(g2 * np.eye(p1), np.zeros((p2, p2)))
    try:
        Ri = np.linalg.inv(R)
        Rti = np.linalg.inv(Rt)
    except np.linalg.LinAlgError:
        return None
    H = np.block([[A, np.zeros((n, n))], [-C1.T @ C1, -A.T]]) - np.vstack([B, -C1.T @ D1d]) @ Ri @ np.hstack(
        [D1d.T @ C1, B.T]
    )
    J = np.block([[A.T, np.zeros((n, n))], [-B1 @ B1.T, -A]]) - np.vstack([C.T, -B1 @ Dd1.T]) @ Rti @ np.hstack(
        [Dd1 @ B1.T, C]
    )
    X = ric(H)
    Y = ric(J)
    if X is None or Y is None:
        return None
    sx = max(np.linalg.norm(X, 2), 1.0)
    sy = max(np.linalg.norm(Y, 2), 1.0)
    if np.linalg.eigvalsh(X).min() < -psd_tol * sx or np.linalg.eigvalsh(Y).min() < -psd_tol * sy:
        return None
    rho = np.max(np.abs(np.linalg.eigvals(X @ Y))) if n else 0.0
    if rho >= g2 * (1 - 1e-9):
        return None

    F = -Ri @ (D1d.T @ C1 + B.T @ X)
    L = -(B1 @ Dd1.T + Y @ C.T) @ Rti
    F12, F2 = F[m1 - p2 : m1], F[m1:]
    L12, L2 = L[:, p1 - m2 : p1], L[:, p1:]

    Dh11 = -D1121 @ D1111.T @ np.linalg.solve(g2 * np.eye(p1 - m2) - D1111 @ D1111.T, D1112) - D1122
    try:
        Dh12 = _chol_like(np.eye(m2) - D1121 @ np.linalg.solve(g2 * np.eye(m1 - p2) - D1111.T @ D1111, D1121.T))
        Dh21 = _chol_like(np.eye(p2) - D1112.T @ np.linalg.solve(g2 * np.eye(p1 - m2) - D1111 @ D1111.T, D1112))
    except np.linalg.LinAlgError:
        return None
    Zi = np.eye(n) - Y @ X / g2
    if np.linalg.cond(Zi) > 1e14:
        return None
    Z = np.linalg.inv(Zi)
    Bh2 = Z @ (B2 + L12) @ Dh12
    Ch2 = -Dh21 @ (C2 + F12)
    Bh1 = -Z @ L2 + Bh2 @ np.linalg.solve(Dh12, Dh11)
    Ch1 = F2 + Dh11 @ np.linalg.solve(Dh21, Ch2)
    Ah = A + B @ F + Bh1 @ np.linalg.solve(Dh21, Ch2)
    return StateSpace(Ah, Bh1, Ch1, Dh11)


def _normalize(A, B1, B2, C1, C2, D11, D12, D21):
    """Orthogonal/invertible channel changes giving ``D12 = [0; I]``, ``D21 = [0 I]``."""
    p1, m2 = D12.shape
    p2, m1 = D21.shape
    U, s, Vt = np.linalg.svd(D12, full_matrices=True)
    if m2 and (s.size < m2 or s[-1] <= 1e-12 * max(s[0], 1.0)):
        raise AssumptionViolated("D12 does not have full column rank")
    Theta = np.vstack([U[:, m2:].T, U[:, :m2].T])
    Ru = Vt.T @ np.diag(1.0 / s[:m2])
    U2, s2, V2t = np.linalg.svd(D21, full_matrices=True)
    if p2 and (s2.size < p2 or s2[-1] <= 1e-12 * max(s2[0], 1.0)):
        raise AssumptionViolated("D21 does not have full row rank")
    V = V2t.T
    Vr = np.hstack([V[:, p2:], V[:, :p2]])
    Ly = np.diag(1.0 / s2[:p2]) @ U2.T
    plant = _CPlant(
        A=A,
        B1=B1 @ Vr,
        B2=B2 @ Ru,
        C1=Theta @ C1,
        C2=Ly @ C2,
        D11=Theta @ D11 @ Vr,
        D12=Theta @ D12 @ Ru,
        D21=Ly @ D21 @ Vr,
    )
    return plant, Ru, Ly


def _remove_d22(K0: StateSpace, D22: np.ndarray) -> StateSpace:
    """Controller for a plant with ``D22`` from one designed with ``D22 = 0``."""
    if not np.any(D22):
        return K0
    E = np.eye(K0.nout) + K0.D @ D22
    Ei = np.linalg.inv(E)
    return StateSpace(
        K0.A - K0.B @ D22 @ Ei @ K0.C,
        K0.B @ (np.eye(D22.shape[0]) - D22 @ Ei @ K0.D),
        Ei @ K0.C,
        Ei @ K0.D,
    )


def hinf_continuous(Gc: StateSpace, n_u: int, n_y: int, gamma: float) -> StateSpace | None:
    p1, m1 = Gc.nout - n_y, Gc.nin - n_u
    A, B, C, D = Gc.A, Gc.B, Gc.C, Gc.D
    B1, B2 = B[:, :m1], B[:, m1:]
    C1, C2 = C[:p1], C[p1:]
    D11, D12, D21, D22 = D[:p1, :m1], D[:p1, m1:], D[p1:, :m1], D[p1:, m1:]
    plant, Ru, Ly = _normalize(A, B1, B2, C1, C2, D11, D12, D21)
    Kt = central_controller(plant, gamma)
    if Kt is None:
        return None
    K0 = Kt.scaled(left=Ru, right=Ly)
    return _remove_d22(K0, D22)


# ---------------------------------------------------------------- discrete-time driver


@dataclass
class HinfOptions:
    regularization: float = 1e-4
    verify_grid: int = 2048
    margin: float = 1e-9


def _needs_regularization(Gc: StateSpace, n_u: int, n_y: int) -> tuple[bool, bool]:
    p1, m1 = Gc.nout - n_y, Gc.nin - n_u
    D12 = Gc.D[:p1, m1:]
    D21 = Gc.D[p1:, :m1]

    def full(M, axis_len):
        if axis_len == 0:
            return True
        s = np.linalg.svd(M, compute_uv=False)
        return s.size >= axis_len and s[axis_len - 1] > 1e-8 * max(s[0], 1.0)

    return (not full(D12, n_u)), (not full(D21, n_y))


def regularize(G: StateSpace, n_u: int, n_y: int, eps: float, outputs: bool, inputs: bool) -> tuple[StateSpace, int, int]:
    """Append ``eps * u`` to the performance outputs and ``eps * noise`` to the measurements.

    Returns the enlarged plant and the numbers of added outputs/inputs.
    """
    p1, m1 = G.nout - n_y, G.nin - n_u
    A, B, C, D = G.A, G.B, G.C, G.D
    add_o = n_u if outputs else 0
    add_i = n_y if inputs else 0
    B1, B2 = B[:, :m1], B[:, m1:]
    C1, C2 = C[:p1], C[p1:]
    D11, D12, D21, D22 = D[:p1, :m1], D[:p1, m1:], D[p1:, :m1], D[p1:, m1:]
    nx = G.nx
    B_new = np.hstack([B1, np.zeros((nx, add_i)), B2])
    C_new = np.vstack([C1, np.zeros((add_o, nx)), C2])
    D_new = np.block(
        [
            [D11, np.zeros((p1, add_i)), D12],
            [np.zeros((add_o, m1 + add_i)), eps * np.eye(n_u)[:add_o]],
            [D21, eps * np.eye(n_y)[:, :add_i], D22],
        ]
    )
    return StateSpace(A, B_new, C_new, D_new), add_o, add_i


def check_regularity(G: StateSpace, n_u: int, n_y: int) -> None:
    """Stabilizability of ``(A, B2)`` and detectability of ``(C2, A)``."""
    m1 = G.nin - n_u
    p1 = G.nout - n_y
    if not pbh_stabilizable(G.A, G.B[:, m1:])[0]:
        raise AssumptionViolated("(A, B_u) is not stabilizable")
    if not pbh_stabilizable(G.A.T, G.C[p1:].T)[0]:
        raise AssumptionViolated("(C_y, A) is not detectable")


def verify(G: StateSpace, K: StateSpace, grid: int = 2048) -> float:
    """Closed-loop H-infinity norm, ``inf`` if the loop is unstable."""
    try:
        cl = lft_lower(G, K)
    except Exception:
        return np.inf
    if not is_schur(cl.A):
        return np.inf
    return hinf_norm(cl, grid=grid)


def hinf_synthesize(
    G: StateSpace, n_u: int, n_y: int, gamma: float, opts: HinfOptions | None = None, check: bool = True
) -> StateSpace | None:
    """Controller ``K`` (``y -> u``) with ``||F_L(G, K)||_inf < gamma``, or ``None``.

    ``G`` maps ``(d, u) -> (e, y)``; the last ``n_u`` inputs and ``n_y``
    outputs are the control channels. The ``(y, u)`` feedthrough must be zero.
    """
    opts = opts or HinfOptions()
    if n_u > G.nin or n_y > G.nout:
        raise DimensionMismatch("control channels exceed plant size")
    if np.any(G.D[G.nout - n_y :, G.nin - n_u :]):
        raise AssumptionViolated("D_yu must be zero")
    if check:
        check_regularity(G, n_u, n_y)
    if G.nout - n_y == 0 or G.nin - n_u == 0:
        K = StateSpace.static(np.zeros((n_u, n_y)))
        return K if verify(G, K, opts.verify_grid) < gamma else _stabilize_only(G, n_u, n_y, gamma, opts)
    Gc = d2c(G)
    reg_o, reg_i = _needs_regularization(Gc, n_u, n_y)
    Gs, nu, ny = G, n_u, n_y
    if reg_o or reg_i:
        scale = max(1.0, np.linalg.norm(G.D, 2))
        Gs, _, _ = regularize(G, n_u, n_y, opts.regularization * scale, reg_o, reg_i)
        Gc = d2c(Gs)
    try:
        Kc = hinf_continuous(Gc, nu, ny, gamma)
    except (np.linalg.LinAlgError, AssumptionViolated) as exc:
        log.debug("continuous synthesis failed at gamma=%g: %s", gamma, exc)
        return None
    if Kc is None:
        return None
    try:
        K = c2d(Kc)
    except AssumptionViolated:
        return None
    level = verify(G, K, opts.verify_grid)
    if level < gamma * (1 - opts.margin):
        return K
    log.debug("controller at gamma=%g failed verification (%g)", gamma, level)
    return None


def _stabilize_only(G, n_u, n_y, gamma, opts):
    # no performance channel left: any stabilizing controller is optimal
    A = G.A
    n = G.nx
    B2 = G.B[:, G.nin - n_u :]
    C2 = G.C[G.nout - n_y :]
    try:
        _, Kx = solve_dare_general(A, B2, np.eye(n), np.eye(n_u))
        _, Lt = solve_dare_general(A.T, C2.T, np.eye(n), np.eye(n_y))
    except NoStabilizingSolution:
        return None
    L = Lt.T
    K = StateSpace(A - B2 @ Kx - L @ C2, L, -Kx, np.zeros((n_u, n_y)))
    return K if verify(G, K, opts.verify_grid) < gamma else None


def hinf_optimal(
    G: StateSpace,
    n_u: int,
    n_y: int,
    lo: float = 0.0,
    hi: float | None = None,
    rtol: float = 1e-3,
    opts: HinfOptions | None = None,
) -> tuple[float, StateSpace]:
    """Bisect for the smallest verified achievable level; return ``(level, K)``.

    The returned level is the verified closed-loop norm of ``K`` (never above
    the bisection upper bracket).
    """
    opts = opts or HinfOptions()
    check_regularity(G, n_u, n_y)
    if hi is None:
        hi = 1.0
        K = None
        for _ in range(60):
            K = hinf_synthesize(G, n_u, n_y, hi, opts, check=False)
            if K is not None:
                break
            hi *= 4.0
        if K is None:
            raise AssumptionViolated("no stabilizing H-infinity controller found")
    else:
        K = hinf_synthesize(G, n_u, n_y, hi, opts, check=False)
        if K is None:
            return np.inf, None
    best = (verify(G, K, opts.verify_grid), K)
    hi = min(hi, best[0] * (1 + 1e-9))
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi) if lo > 0 else hi / 2 if hi / 2 > best[0] * 0.25 else 0.5 * (lo + hi)
        Km = hinf_synthesize(G, n_u, n_y, mid, opts, check=False)
        if Km is None:
            lo = mid
        else:
            lvl = verify(G, Km, opts.verify_grid)
            if lvl < best[0]:
                best = (lvl, Km)
            hi = min(mid, lvl * (1 + 1e-9))
    return best
