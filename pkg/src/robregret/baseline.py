"""Optimal non-causal (full disturbance preview) controller for one plant realization.

The controller runs an adjoint recursion backwards in time,

    adj[t] = A_cl' (adj[t+1] + X B_d d[t]),     adj[+inf] = 0
    u[t]   = -K_x x[t] - K_v adj[t+1] - K_d d[t],

where ``adj`` is called the adjoint state to keep it apart from the
uncertainty output channel ``v`` of the plant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, NonConvergedTail
from .riccati import CostData, DareSolution, check_assumptions, solve_dare
from .sscore import Signal, StateSpace, UncertainPlant


@dataclass(frozen=True, eq=False)
class RealizedPlant:
    """``F_U(P, Delta)`` split into the matrices the baseline needs."""

    A: np.ndarray
    B_d: np.ndarray
    B_u: np.ndarray
    C_e: np.ndarray
    D_eu: np.ndarray
    C_y: np.ndarray | None = None
    D_yd: np.ndarray | None = None

    @classmethod
    def from_plant(cls, P: UncertainPlant, deltas=None) -> "RealizedPlant":
        deltas = np.zeros(P.block.S) if deltas is None else deltas
        G = P.at(deltas)
        return cls.from_state_space(G, P.n_d, P.n_e)

    @classmethod
    def from_state_space(cls, G: StateSpace, n_d: int, n_e: int) -> "RealizedPlant":
        return cls(
            A=G.A,
            B_d=G.B[:, :n_d],
            B_u=G.B[:, n_d:],
            C_e=G.C[:n_e],
            D_eu=G.D[:n_e, n_d:],
            C_y=G.C[n_e:],
            D_yd=G.D[n_e:, :n_d],
        )

    @property
    def cost(self) -> CostData:
        return CostData.from_output(self.C_e, self.D_eu)

    def performance_system(self) -> StateSpace:
        """The open-loop ``(d, u) -> e`` map."""
        return StateSpace(
            self.A,
            np.hstack([self.B_d, self.B_u]),
            self.C_e,
            np.hstack([np.zeros((self.C_e.shape[0], self.B_d.shape[1])), self.D_eu]),
        )


@dataclass(frozen=True, eq=False)
class NoncausalBaseline:
    dare: DareSolution
    K_v: np.ndarray
    K_d: np.ndarray
    plant: RealizedPlant

    @property
    def A_cl(self) -> np.ndarray:
        return self.dare.A_cl


def build_baseline(plant: RealizedPlant, check: bool = True) -> NoncausalBaseline:
    """Gains of the optimal non-causal controller for one realized plant."""
    if check:
        report = check_assumptions(plant.A, plant.B_u, plant.C_e, plant.D_eu)
        if not report.ok:
            raise AssumptionViolated("baseline assumptions fail: " + "; ".join(report.failures()))
    cost = plant.cost
    dare = solve_dare(plant.A, plant.B_u, cost)
    X, B_u = dare.X, plant.B_u
    W = cost.R + B_u.T @ X @ B_u
    K_v = np.linalg.solve(W, B_u.T)
    K_d = np.linalg.solve(W, B_u.T @ X @ plant.B_d)
    return NoncausalBaseline(dare=dare, K_v=K_v, K_d=K_d, plant=plant)


def baseline_at(P: UncertainPlant, deltas=None, check: bool = True) -> NoncausalBaseline:
    return build_baseline(RealizedPlant.from_plant(P, deltas), check=check)


def noncausal_cost(
    nc: NoncausalBaseline, d: Signal, settle: int = 50, tol: float = 1e-12, max_steps: int = 200_000
) -> tuple[Signal, Signal, float]:
    """Run the non-causal controller against ``d``; return ``(u_nc, e_nc, cost)``.

    The adjoint state is zero after the support of ``d`` and decays backwards
    before it, so the simulation starts once it is negligible and runs forward
    until the state has decayed.
    """
    p = nc.plant
    A_cl, X = nc.A_cl, nc.dare.X
    nx = p.A.shape[0]
    T = len(d)
    drive = (X @ p.B_d @ d.samples.T).T  # X B_d d_t
    adj = np.zeros((T + 1, nx))  # adj[k] is the adjoint at time start + k
    for k in range(T - 1, -1, -1):
        adj[k] = A_cl.T @ (adj[k + 1] + drive[k])

    scale = max(np.linalg.norm(adj), 1e-300)
    pre = []  # adjoint at start-1, start-2, ... while d is zero
    a = adj[0]
    while np.linalg.norm(a) > tol * scale:
        a = A_cl.T @ a
        pre.append(a)
        if len(pre) > max_steps:
            raise NonConvergedTail("adjoint state does not decay backwards")
    L = len(pre)
    adj_full = np.vstack([np.array(pre[::-1]).reshape(L, nx), adj])  # times start-L .. stop
    t0 = d.start - L
    d_full = np.vstack([np.zeros((L, d.width)), d.samples])

    x = np.zeros(nx)
    us, es = [], []
    n_steps = L + T
    for k in range(n_steps):
        dk = d_full[k]
        u = -nc.dare.K_x @ x - nc.K_v @ adj_full[k + 1] - nc.K_d @ dk
        es.append(p.C_e @ x + p.D_eu @ u)
        us.append(u)
        x = p.A @ x + p.B_d @ dk + p.B_u @ u
    cost = float(sum(e @ e for e in es))
    # after the support the adjoint is zero and the loop runs as u = -K_x x
    while True:
        tail = 0.0
        for _ in range(settle):
            u = -nc.dare.K_x @ x
            e = p.C_e @ x + p.D_eu @ u
            us.append(u)
            es.append(e)
            tail += float(e @ e)
            x = A_cl @ x
        cost += tail
        if tail <= tol * max(cost, 1e-300) or cost == 0.0:
            break
        if len(es) > max_steps:
            raise NonConvergedTail(f"tail energy {tail:.3e} after {len(es)} steps")
    n_u, n_e = p.B_u.shape[1], p.C_e.shape[0]
    return (
        Signal(t0, np.array(us).reshape(-1, n_u)),
        Signal(t0, np.array(es).reshape(-1, n_e)),
        cost,
    )


def baseline_freq_map(nc: NoncausalBaseline, theta) -> np.ndarray:
    """Frequency response of the ``d -> e`` map under the non-causal controller.

    Composes the anticausal adjoint branch
    ``adj_next(z) = (z^{-1} I - A_cl')^{-1} A_cl' X B_d``, the control law and
    the causal plant branch. Scalar ``theta`` gives ``(n_e, n_d)``; arrays
    give ``(N, n_e, n_d)``.
    """
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    p = nc.plant
    nx, n_d = p.B_d.shape
    I = np.eye(nx)
    A_cl, X = nc.A_cl, nc.dare.X
    z = np.exp(1j * th)[:, None, None]
    adj = np.linalg.solve(
        (1.0 / z) * I - A_cl.T, np.broadcast_to((A_cl.T @ X @ p.B_d).astype(complex), (th.size, nx, n_d))
    )
    rhs = (p.B_d - p.B_u @ nc.K_d)[None] - p.B_u @ nc.K_v @ adj
    x = np.linalg.solve(z * I - A_cl, rhs)
    u = -nc.dare.K_x @ x - nc.K_v @ adj - nc.K_d[None]
    e = p.C_e @ x + p.D_eu @ u
    return e[0] if scalar else e
