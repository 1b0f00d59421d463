"""Random instances and independent oracles shared by the test modules."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from robregret.baseline import RealizedPlant
from robregret.sscore import StateSpace, UncertainPlant, spectral_radius


def random_stable(rng, nx, nin, nout, radius=0.9, feedthrough=True) -> StateSpace:
    A = rng.standard_normal((nx, nx))
    rho = spectral_radius(A) if nx else 0.0
    if rho > 0:
        A = A * (radius * rng.uniform(0.2, 1.0) / rho)
    B = rng.standard_normal((nx, nin))
    C = rng.standard_normal((nout, nx))
    D = rng.standard_normal((nout, nin)) if feedthrough else np.zeros((nout, nin))
    return StateSpace(A, B, C, D)


def random_realized_plant(rng, max_nx=3, max_acl=0.75, B_d_zero=False) -> RealizedPlant:
    """Random plant whose optimal closed loop has spectral radius below ``max_acl``."""
    while True:
        nx = int(rng.integers(1, max_nx + 1))
        n_u = int(rng.integers(1, 3))
        n_d = int(rng.integers(1, 3))
        n_e = nx + n_u
        A = rng.standard_normal((nx, nx)) * rng.uniform(0.3, 0.8)
        B_u = rng.standard_normal((nx, n_u))
        B_d = np.zeros((nx, n_d)) if B_d_zero else rng.standard_normal((nx, n_d))
        C_e = rng.standard_normal((n_e, nx))
        D_eu = rng.standard_normal((n_e, n_u))
        if np.linalg.matrix_rank(D_eu) < n_u:
            continue
        Q, S, R = C_e.T @ C_e, C_e.T @ D_eu, D_eu.T @ D_eu
        try:
            X = scipy.linalg.solve_discrete_are(A, B_u, Q, R, s=S)
        except (ValueError, np.linalg.LinAlgError):
            continue
        K = np.linalg.solve(R + B_u.T @ X @ B_u, B_u.T @ X @ A + S.T)
        A_cl = A - B_u @ K
        if spectral_radius(A_cl) < max_acl and np.linalg.cond(A_cl) < 1e6:
            return RealizedPlant(A=A, B_d=B_d, B_u=B_u, C_e=C_e, D_eu=D_eu)


def least_squares_cost(p: RealizedPlant, d: np.ndarray, start: int, horizon: int) -> float:
    """Minimal cost over all input sequences on ``[0, horizon)`` from ``x_0 = 0``.

    ``d`` occupies ``[start, start + len(d))``. The tail after the horizon is
    priced with the infinite-horizon value ``x'Px`` from SciPy's DARE solver;
    the disturbance has ended by then, so the tail price is exact. States and
    inputs are both decision variables tied by the dynamics (KKT system), which
    stays well conditioned for unstable ``A``.
    """
    A, B_d, B_u, C_e, D_eu = p.A, p.B_d, p.B_u, p.C_e, p.D_eu
    nx, n_u = B_u.shape
    n_d = B_d.shape[1]
    T = horizon
    dd = np.zeros((T, n_d))
    dd[start : start + len(d)] = d
    Q, S, R = C_e.T @ C_e, C_e.T @ D_eu, D_eu.T @ D_eu
    P = scipy.linalg.solve_discrete_are(A, B_u, Q, R, s=S)
    nX, nU = (T + 1) * nx, T * n_u
    N = nX + nU
    H = np.zeros((N, N))
    for t in range(T):
        ix = slice(t * nx, (t + 1) * nx)
        iu = slice(nX + t * n_u, nX + (t + 1) * n_u)
        H[ix, ix] += Q
        H[ix, iu] += S
        H[iu, ix] += S.T
        H[iu, iu] += R
    H[T * nx : nX, T * nx : nX] += P
    E = np.zeros(((T + 1) * nx, N))
    f = np.zeros((T + 1) * nx)
    E[:nx, :nx] = np.eye(nx)
    for t in range(T):
        r = slice((t + 1) * nx, (t + 2) * nx)
        E[r, (t + 1) * nx : (t + 2) * nx] = np.eye(nx)
        E[r, t * nx : (t + 1) * nx] = -A
        E[r, nX + t * n_u : nX + (t + 1) * n_u] = -B_u
        f[r] = B_d @ dd[t]
    KKT = np.block([[H, E.T], [E, np.zeros((E.shape[0], E.shape[0]))]])
    sol = np.linalg.solve(KKT, np.concatenate([np.zeros(N), f]))
    z = sol[:N]
    return float(z @ H @ z)


def riccati_recursion(A, B, Q, S, R, steps=500) -> np.ndarray:
    """Finite-horizon value matrix after ``steps`` backward steps from zero."""
    X = np.zeros_like(Q)
    for _ in range(steps):
        G = A.T @ X @ B + S
        X = A.T @ X @ A + Q - G @ np.linalg.solve(R + B.T @ X @ B, G.T)
        X = (X + X.T) / 2
    return X


def causal_state_feedback_cost(p: RealizedPlant, Kx, Kd, d: np.ndarray, tail: int = 400) -> float:
    """Cost of ``u = -Kx x - Kd d`` against ``d`` from zero state."""
    x = np.zeros(p.A.shape[0])
    cost = 0.0
    for t in range(len(d) + tail):
        dt = d[t] if t < len(d) else np.zeros(p.B_d.shape[1])
        u = -Kx @ x - Kd @ dt
        e = p.C_e @ x + p.D_eu @ u
        cost += float(e @ e)
        x = p.A @ x + p.B_d @ dt + p.B_u @ u
    return cost


def frozen_plant():
    """The scalar example with the uncertainty disconnected."""
    return UncertainPlant.from_blocks(
        A=[[0.5]],
        B_w=[[0.0]],
        B_d=[[5.0]],
        B_u=[[1.0]],
        C_v=[[0.0]],
        C_e=[[np.sqrt(3.0)], [0.0]],
        C_y=[[1.0], [0.0]],
        D_eu=[[0.0], [1.0]],
        D_yd=[[0.0], [1.0]],
        block=(1,),
    )
