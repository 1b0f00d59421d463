"""Stabilizing DARE solutions and the standing assumptions of the LQ baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NoStabilizingSolution, SingularClosedLoop
from .sscore import is_schur, spectral_radius

RANK_RTOL = 1e-9
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class CostData:
    """Quadratic cost ``x'Qx + 2x'Su + u'Ru`` induced by ``e = C_e x + D_eu u``."""

    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("Q", "S", "R"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))

    @classmethod
    def from_output(cls, C_e, D_eu) -> "CostData":
        C_e = np.atleast_2d(np.asarray(C_e, dtype=float))
        D_eu = np.atleast_2d(np.asarray(D_eu, dtype=float))
        return cls(C_e.T @ C_e, C_e.T @ D_eu, D_eu.T @ D_eu)


@dataclass(frozen=True, eq=False)
class DareSolution:
    X: np.ndarray
    K_x: np.ndarray
    A_cl: np.ndarray
    residual: float
    iterations: int = 0


@dataclass
class AssumptionReport:
    """Outcome of the four checks (i)-(iv) on ``(A, B_u, C_e, D_eu)``."""

    R_positive: bool
    stabilizable: bool
    nonsingular_shift: bool
    full_column_rank: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.R_positive and self.stabilizable and self.nonsingular_shift and self.full_column_rank

    def failures(self) -> list[str]:
        names = {
            "R_positive": "(i) R > 0",
            "stabilizable": "(ii) (A, B_u) stabilizable",
            "nonsingular_shift": "(iii) A - B_u R^-1 S' nonsingular",
            "full_column_rank": "(iv) [A - e^{jt} I, B_u; C_e, D_eu] full column rank",
        }
        return [label for key, label in names.items() if not getattr(self, key)]

    def to_dict(self) -> dict:
        return {
            "R_positive": self.R_positive,
            "stabilizable": self.stabilizable,
            "nonsingular_shift": self.nonsingular_shift,
            "full_column_rank": self.full_column_rank,
            "ok": self.ok,
            "diagnostics": self.diagnostics,
        }


def _rank_deficient(M: np.ndarray, rtol: float = RANK_RTOL) -> tuple[bool, float]:
    """Whether ``M`` loses column rank; also the relative smallest singular value."""
    if M.shape[1] == 0:
        return False, 1.0
    if M.shape[0] < M.shape[1]:
        return True, 0.0
    s = np.linalg.svd(M, compute_uv=False)
    rel = s[-1] / max(s[0], 1e-300)
    return bool(rel <= rtol), float(rel)


def pbh_stabilizable(A, B, rtol: float = RANK_RTOL) -> tuple[bool, float]:
    """PBH test ``rank [A - lam I, B] = n`` over eigenvalues with ``|lam| >= 1``.

    Returns the verdict and the smallest relative singular value encountered
    (1.0 when no eigenvalue needs checking).
    """
    A = np.atleast_2d(A)
    B = np.atleast_2d(B).reshape(A.shape[0], -1)
    n = A.shape[0]
    margin = 1.0
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - 1e-12:
            continue
        M = np.hstack([A - lam * np.eye(n), B]).conj().T
        deficient, rel = _rank_deficient(M, rtol)
        margin = min(margin, rel)
        if deficient:
            return False, margin
    return True, margin


def check_assumptions(A, B_u, C_e, D_eu, n_grid: int = 720) -> AssumptionReport:
    """Check conditions (i)-(iv) under which the baseline DARE is well behaved.

    Condition (iv) is a statement over the whole unit circle; it is sampled on
    ``n_grid`` points and the smallest relative singular value is reported as
    ``diagnostics['rank_margin']``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B_u = np.asarray(B_u, dtype=float).reshape(n, -1)
    C_e = np.asarray(C_e, dtype=float).reshape(-1, n)
    D_eu = np.asarray(D_eu, dtype=float).reshape(C_e.shape[0], B_u.shape[1])
    cost = CostData.from_output(C_e, D_eu)
    diag: dict = {}

    r_eigs = np.linalg.eigvalsh(cost.R) if cost.R.size else np.array([1.0])
    r_ok = bool(r_eigs.min() > RANK_RTOL * max(r_eigs.max(), 1.0))
    diag["R_min_eig"] = float(r_eigs.min())

    stab, pbh_margin = pbh_stabilizable(A, B_u)
    diag["pbh_margin"] = pbh_margin

    if r_ok:
        shifted = A - B_u @ np.linalg.solve(cost.R, cost.S.T)
        cond = float(np.linalg.cond(shifted)) if n else 1.0
        shift_ok = bool(np.isfinite(cond) and cond <= COND_LIMIT)
    else:
        cond, shift_ok = float("inf"), False
    diag["shift_condition_number"] = cond

    theta = np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False)
    margin = np.inf
    for t in theta:
        M = np.block([[A - np.exp(1j * t) * np.eye(n), B_u], [C_e, D_eu]])
        _, rel = _rank_deficient(M)
        margin = min(margin, rel)
    diag["rank_margin"] = float(margin)
    rank_ok = bool(margin > RANK_RTOL)

    return AssumptionReport(r_ok, stab, shift_ok, rank_ok, diag)


def dare_residual(A, B, X, cost: CostData) -> float:
    # a diverged iterate may overflow; the residual is then inf, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        G = A.T @ X @ B + cost.S
        W = cost.R + B.T @ X @ B
        res = X - A.T @ X @ A - cost.Q + G @ np.linalg.solve(W, G.T)
        val = float(np.linalg.norm(res, 2)) if res.size else 0.0
    return val if np.isfinite(val) else np.inf


def _sda(A, B, cost: CostData, rtol: float, max_doublings: int) -> tuple[np.ndarray, int]:
    n = A.shape[0]
    RiSt = np.linalg.solve(cost.R, cost.S.T)
    Ak = A - B @ RiSt
    Gk = B @ np.linalg.solve(cost.R, B.T)
    Hk = cost.Q - cost.S @ RiSt
    Gk, Hk = (Gk + Gk.T) / 2, (Hk + Hk.T) / 2
    I = np.eye(n)
    for k in range(1, max_doublings + 1):
        W = I + Gk @ Hk
        WiA = np.linalg.solve(W, Ak)
        WiG = np.linalg.solve(W, Gk)
        H_next = Hk + Ak.T @ Hk @ WiA
        G_next = Gk + Ak @ WiG @ Ak.T
        Ak = Ak @ WiA
        H_next, G_next = (H_next + H_next.T) / 2, (G_next + G_next.T) / 2
        if not np.all(np.isfinite(H_next)):
            raise NoStabilizingSolution("doubling iteration diverged")
        step = np.linalg.norm(H_next - Hk)
        Hk, Gk = H_next, G_next
        if step <= rtol * max(np.linalg.norm(Hk), 1e-300) or step == 0.0:
            return Hk, k
    raise NoStabilizingSolution(f"doubling did not converge in {max_doublings} steps")


def solve_dare(
    A, B_u, cost: CostData, rtol: float = 1e-13, max_doublings: int = 100, require_nonsingular: bool = True
) -> DareSolution:
    """Stabilizing solution of ``X = A'XA + Q - (A'XB+S)(R+B'XB)^{-1}(A'XB+S)'``.

    Uses the structure-preserving doubling algorithm. The result is checked:
    ``A - B_u K_x`` must be Schur and, unless ``require_nonsingular`` is off,
    well conditioned, since the spectral factor construction inverts it.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B_u, dtype=float).reshape(n, -1)
    X, iters = _sda(A, B, cost, rtol, max_doublings)
    W = cost.R + B.T @ X @ B
    K_x = np.linalg.solve(W, (A.T @ X @ B + cost.S).T)
    A_cl = A - B @ K_x
    res = dare_residual(A, B, X, cost)
    tol = 1e-10 * (1.0 + np.linalg.norm(X, 2))
    if res > tol:
        # one Hewer (Newton) step polishes the doubling result
        Qk = cost.Q - cost.S @ K_x - K_x.T @ cost.S.T + K_x.T @ cost.R @ K_x
        X = scipy.linalg.solve_discrete_lyapunov(A_cl.T, Qk)
        X = (X + X.T) / 2
        W = cost.R + B.T @ X @ B
        K_x = np.linalg.solve(W, (A.T @ X @ B + cost.S).T)
        A_cl = A - B @ K_x
        res = dare_residual(A, B, X, cost)
    if not is_schur(A_cl):
        raise NoStabilizingSolution(f"closed loop not Schur (spectral radius {spectral_radius(A_cl):.6g})")
    if res > tol:
        raise NoStabilizingSolution(f"DARE residual {res:.3e} exceeds {tol:.3e}")
    if require_nonsingular and n and np.linalg.cond(A_cl) > COND_LIMIT:
        raise SingularClosedLoop("A - B_u K_x is numerically singular")
    return DareSolution(X=X, K_x=K_x, A_cl=A_cl, residual=res, iterations=iters)


def solve_dare_general(A, B, Q, R, S=None) -> tuple[np.ndarray, np.ndarray]:
    """Stabilizing solution of a DARE with possibly indefinite ``Q``.

    Thin wrapper over the QZ-based SciPy solver; the returned pair is
    ``(X, K)`` with ``K = (R + B'XB)^{-1}(B'XA + S')`` and ``A - BK`` checked Schur.
    """
    A = np.atleast_2d(A)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    S = np.zeros_like(B) if S is None else S
    try:
        X = scipy.linalg.solve_discrete_are(A, B, Q, R, s=S)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NoStabilizingSolution(str(exc)) from exc
    X = (X + X.T) / 2
    K = np.linalg.solve(R + B.T @ X @ B, B.T @ X @ A + S.T)
    if not is_schur(A - B @ K):
        raise NoStabilizingSolution("QZ solution is not stabilizing")
    return X, K


def solve_stein(A1, A2, H) -> np.ndarray:
    """Solve ``Y - A1 Y A2 = H`` by a complex Schur (Bartels-Stewart) recursion."""
    A1 = np.atleast_2d(A1)
    A2 = np.atleast_2d(A2)
    H = np.asarray(H, dtype=float).reshape(A1.shape[0], A2.shape[0])
    if H.size == 0:
        return np.zeros_like(H)
    T1, U = scipy.linalg.schur(A1.astype(complex), output="complex")
    T2, V = scipy.linalg.schur(A2.astype(complex), output="complex")
    Ht = U.conj().T @ H @ V
    n1, n2 = H.shape
    Y = np.zeros((n1, n2), dtype=complex)
    I = np.eye(n1)
    for j in range(n2):
        rhs = Ht[:, j] + T1 @ (Y[:, :j] @ T2[:j, j])
        Y[:, j] = scipy.linalg.solve_triangular(I - T2[j, j] * T1, rhs)
    return np.real(U @ Y @ V.conj().T)
