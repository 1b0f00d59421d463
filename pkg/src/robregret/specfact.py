"""Canonical spectral factor of the regret-augmented cost.

For a baseline with ``d -> e`` map ``T`` and level ``gamma`` we build a
square system ``F`` that is stable, causal and causally invertible with

    F(z)^* F(z) = gamma^2 I + T(z)^* T(z)      on |z| = 1,

so that ``||F d||^2 = gamma^2 ||d||^2 + J_nc(d)`` for every ``d``.

Construction:

1. ``T`` has a causal part (poles of ``A_cl``) and a strictly anticausal part
   (the adjoint recursion). A Stein equation separates the two exactly.
2. The causal half ``Z`` of the para-Hermitian spectrum ``Phi = Z + Z~`` is
   assembled from Gramians of both parts plus one cross term.
3. ``Phi`` is written as a Popov function of ``Z``'s realization and
   factored by a DARE; the feedthrough of ``F`` is the symmetric square root
   of ``R + B'XB``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .baseline import NoncausalBaseline, baseline_freq_map
from .errors import FactorizationDiverged, NoninvertibleFactor, NoStabilizingSolution, StabilizabilityViolated
from .riccati import pbh_stabilizable, solve_dare_general, solve_stein
from .sscore import StateSpace, freq_response, is_schur


@dataclass(frozen=True, eq=False)
class SpectralFactorPair:
    F: StateSpace
    Finv: StateSpace
    gamma_R: float
    delta: object = None
    hypothesis_ok: bool = True


@dataclass(frozen=True, eq=False)
class TwoSidedMap:
    """``T(z) = Tc(z) + C_a (z^{-1} I - A_a)^{-1} B_a`` with ``Tc`` causal."""

    causal: StateSpace
    A_a: np.ndarray
    B_a: np.ndarray
    C_a: np.ndarray

    def __call__(self, theta) -> np.ndarray:
        th = np.atleast_1d(theta)
        out = freq_response(self.causal, th)
        if self.A_a.size:
            zi = np.exp(-1j * th)[:, None, None]
            n = self.A_a.shape[0]
            rhs = np.broadcast_to(self.B_a.astype(complex), (th.size,) + self.B_a.shape)
            out = out + self.C_a @ np.linalg.solve(zi * np.eye(n) - self.A_a, rhs)
        return out


def split_noncausal_map(nc: NoncausalBaseline) -> TwoSidedMap:
    """Exact causal/anticausal split of the non-causal closed loop ``d -> e``.

    With ``p[t] = adj[t+1]`` the loop reads

        xi[t+1] = A_cl xi + (B_d - B_u K_d) d - B_u K_v p
        p[t-1]  = A_cl' p + A_cl' X B_d d
        e       = (C_e - D_eu K_x) xi - D_eu K_v p - D_eu K_d d

    and the coupling ``(zI - A_cl)^{-1} H (z^{-1}I - A_cl')^{-1}`` is split
    using ``Y - A_cl Y A_cl' = H``.
    """
    p = nc.plant
    A_cl, X = nc.A_cl, nc.dare.X
    B1 = p.B_d - p.B_u @ nc.K_d
    H = -p.B_u @ nc.K_v
    C1 = p.C_e - p.D_eu @ nc.dare.K_x
    C2 = -p.D_eu @ nc.K_v
    D = -p.D_eu @ nc.K_d
    A2 = A_cl.T
    B2 = A_cl.T @ X @ p.B_d
    Y = solve_stein(A_cl, A2, H)
    causal = StateSpace(A_cl, B1 + A_cl @ Y @ B2, C1, D + C1 @ Y @ B2)
    return TwoSidedMap(causal, A2, B2, C2 + C1 @ Y @ A2)


def spectrum_causal_part(T: TwoSidedMap, gamma: float) -> StateSpace:
    """Causal ``Z`` with ``Z + Z~ = gamma^2 I + T~ T``; ``Z``'s feedthrough is half the constant term."""
    Tc = T.causal
    A1, B1, C1, D = Tc.A, Tc.B, Tc.C, Tc.D
    A2, B2, C2 = T.A_a, T.B_a, T.C_a
    P1 = scipy.linalg.solve_discrete_lyapunov(A1.T, C1.T @ C1) if A1.size else np.zeros((0, 0))
    P2 = scipy.linalg.solve_discrete_lyapunov(A2.T, C2.T @ C2) if A2.size else np.zeros((0, 0))
    n_d = D.shape[1]
    phi0 = gamma**2 * np.eye(n_d) + D.T @ D + B1.T @ P1 @ B1 + B2.T @ P2 @ B2
    n1, n2 = A1.shape[0], A2.shape[0]
    # states [x1 (A1, driven by d); x2 (A2', driven by C2'C1 x1 + (C2'D + A2'P2B2) d)]
    A = np.block([[A1, np.zeros((n1, n2))], [C2.T @ C1, A2.T]])
    B = np.vstack([B1, C2.T @ D + A2.T @ P2 @ B2])
    C = np.hstack([D.T @ C1 + B1.T @ P1 @ A1, B2.T])
    return StateSpace(A, B, C, 0.25 * (phi0 + phi0.T))


def _sym_sqrt(W: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((W + W.T) / 2)
    if w.min() <= 0:
        raise NoninvertibleFactor(f"factor feedthrough not positive definite (min eig {w.min():.3e})")
    return (V * np.sqrt(w)) @ V.T


def factor_from_causal_part(Z: StateSpace) -> tuple[StateSpace, StateSpace]:
    """Factor ``Phi = Z + Z~`` as ``F~ F`` with ``F`` and ``F^{-1}`` stable."""
    R = Z.D + Z.D.T
    if Z.nx == 0:
        F = StateSpace.static(_sym_sqrt(R))
        return F, StateSpace.static(np.linalg.inv(F.D))
    try:
        X, K = solve_dare_general(Z.A, Z.B, np.zeros_like(Z.A), R, Z.C.T)
    except NoStabilizingSolution as exc:
        raise FactorizationDiverged(f"spectral DARE failed: {exc}") from exc
    W = R + Z.B.T @ X @ Z.B
    Wh = _sym_sqrt(W)
    Whi = np.linalg.inv(Wh)
    F = StateSpace(Z.A, Z.B, Wh @ K, Wh)
    Finv = StateSpace(Z.A - Z.B @ K, Z.B @ Whi, -K, Whi)
    if not (is_schur(F.A) and is_schur(Finv.A)):
        raise FactorizationDiverged("spectral factor or its inverse is not Schur")
    return F, Finv


def lemma_hypothesis(nc: NoncausalBaseline) -> bool:
    """Stabilizability of ``(A_cl^{-T}, X B_d)``."""
    A_cl = nc.A_cl
    if A_cl.size == 0:
        return True
    ok, _ = pbh_stabilizable(np.linalg.inv(A_cl).T, nc.dare.X @ nc.plant.B_d)
    return ok


def spectral_factorize(nc: NoncausalBaseline, gamma_R: float, delta=None, strict: bool = False) -> SpectralFactorPair:
    """Spectral factor pair of ``gamma_R^2 I + T_nc~ T_nc``.

    The stabilizability hypothesis on ``(A_cl^{-T}, X B_d)`` is always
    evaluated and recorded; it fails e.g. when ``B_d = 0`` although the factor
    still exists. Pass ``strict=True`` to turn a failure into an error.
    """
    if not gamma_R > 0:
        raise ValueError("gamma_R must be positive")
    hyp = lemma_hypothesis(nc)
    if strict and not hyp:
        raise StabilizabilityViolated("(A_cl^{-T}, X B_d) is not stabilizable")
    T = split_noncausal_map(nc)
    Z = spectrum_causal_part(T, gamma_R)
    F, Finv = factor_from_causal_part(Z)
    if np.linalg.cond(F.D) > 1e12:
        raise NoninvertibleFactor("feedthrough of F is singular")
    return SpectralFactorPair(F=F, Finv=Finv, gamma_R=float(gamma_R), delta=delta, hypothesis_ok=hyp)


def check_factor(pair: SpectralFactorPair, nc: NoncausalBaseline, grid: int = 512) -> float:
    """Largest relative deviation of ``F*F`` from ``gamma^2 I + T*T`` over a grid on [0, 2 pi)."""
    th = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    Fv = freq_response(pair.F, th)
    Tv = baseline_freq_map(nc, th)
    lhs = np.conj(np.swapaxes(Fv, 1, 2)) @ Fv
    n_d = lhs.shape[1]
    rhs = pair.gamma_R**2 * np.eye(n_d) + np.conj(np.swapaxes(Tv, 1, 2)) @ Tv
    err = np.linalg.norm(lhs - rhs, ord=2, axis=(1, 2)) / np.linalg.norm(rhs, ord=2, axis=(1, 2))
    return float(err.max())
