"""Affine approximation of the inverse spectral factor over the uncertainty box.

The inverse factor depends on the realized uncertainty in a complicated way.
It is replaced by the fit

    F_Delta^{-1}  ~  N_0 + sum_i delta_i N_i,
    N_0 = F_0^{-1},   N_i = (F_{E_i}^{-1} - F_{-E_i}^{-1}) / 2,

which is an upper LFT in ``Delta`` and can therefore be absorbed into a
plant with a second copy of the uncertainty.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RobRegretError, VertexError
from .specfact import SpectralFactorPair
from .sscore import (
    BlockStructure,
    StateSpace,
    UncertainPlant,
    freq_response,
    hinf_norm,
    hstack,
    is_schur,
    lft_upper,
    parallel,
)

log = logging.getLogger(__name__)

NEGLIGIBLE = 1e-12


class BlockIndexError(IndexError, RobRegretError):
    """Block index outside ``1..S``."""


@dataclass(frozen=True, eq=False)
class LinearizedInverse:
    N: list
    gamma_R: float
    block: BlockStructure

    @property
    def n_d(self) -> int:
        return self.N[0].nin

    def __call__(self, deltas, theta) -> np.ndarray:
        """Frequency response of ``N_0 + sum_i delta_i N_i``."""
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        out = freq_response(self.N[0], theta)
        for di, Ni in zip(deltas, self.N[1:]):
            out = out + di * freq_response(Ni, theta)
        return out


@dataclass(frozen=True, eq=False)
class AugmentedPlant:
    Phat: UncertainPlant
    M: StateSpace


def vertex(i: int, sign: int, block: BlockStructure) -> np.ndarray:
    """``sign * E_i``: identity on block ``i`` (1-based), zero elsewhere."""
    if not 1 <= i <= block.S:
        raise BlockIndexError(f"block index {i} outside 1..{block.S}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    deltas = np.zeros(block.S)
    deltas[i - 1] = sign
    return block.matrix(deltas)


def _vertex_values(i: int, sign: int, block: BlockStructure) -> np.ndarray:
    deltas = np.zeros(block.S)
    deltas[i - 1] = sign
    return deltas


def linearize_inverse(
    factory: Callable[[np.ndarray], SpectralFactorPair], block: BlockStructure
) -> LinearizedInverse:
    """Fit ``N_0..N_S`` from ``2S + 1`` factorizations at ``0`` and ``+-E_i``.

    ``factory`` maps block values ``(delta_1..delta_S)`` to a spectral factor pair.
    """

    def call(deltas, label):
        try:
            return factory(deltas)
        except Exception as exc:
            raise VertexError(label, exc) from exc

    pair0 = call(np.zeros(block.S), "0")
    N = [pair0.Finv]
    for i in range(1, block.S + 1):
        plus = call(_vertex_values(i, 1, block), f"+E_{i}")
        minus = call(_vertex_values(i, -1, block), f"-E_{i}")
        Ni = parallel(plus.Finv.scaled(left=0.5), minus.Finv.scaled(left=-0.5))
        # a block with no effect gives two identical halves; keep the exact zero
        # rather than a realization whose states cancel only at the output
        if hinf_norm(Ni) <= NEGLIGIBLE * max(1.0, hinf_norm(pair0.Finv)):
            Ni = StateSpace.static(np.zeros((Ni.nout, Ni.nin)))
        N.append(Ni)
    for k, Ni in enumerate(N):
        if Ni.nx and not is_schur(Ni.A):
            raise VertexError(f"N_{k}", RobRegretError("fitted term is not stable"))
    log.debug("linearized inverse: %s states per term", [Ni.nx for Ni in N])
    return LinearizedInverse(N=N, gamma_R=pair0.gamma_R, block=block)


def assemble_M(lin: LinearizedInverse) -> StateSpace:
    """``M = [0, [I; ...; I]; [N_1 ... N_S], N_0]`` with channels ``(w_M, d_hat) -> (v_M, d)``.

    Block ``i`` of the uncertainty copy is ``delta_i I_{n_d}``.
    """
    n_d, S = lin.n_d, lin.block.S
    bottom = hstack(*lin.N[1:], lin.N[0])
    nx = bottom.nx
    top_D = np.hstack([np.zeros((S * n_d, S * n_d)), np.tile(np.eye(n_d), (S, 1))])
    return StateSpace(
        bottom.A,
        bottom.B,
        np.vstack([np.zeros((S * n_d, nx)), bottom.C]),
        np.vstack([top_D, bottom.D]),
    )


def m_block(lin: LinearizedInverse) -> BlockStructure:
    return BlockStructure((lin.n_d,) * lin.block.S)


def close_M(M: StateSpace, lin: LinearizedInverse, deltas) -> StateSpace:
    """``F_U(M, Delta)`` for block values ``deltas``."""
    return lft_upper(M, m_block(lin).matrix(deltas))


def build_augmented(P: UncertainPlant, M: StateSpace, m_sizes: Sequence[int] | None = None) -> AugmentedPlant:
    """Plant ``P_hat`` with inputs ``(w_M, w_P, d_hat, u)`` and outputs ``(v_M, v_P, e, y)``.

    ``M``'s disturbance output drives ``P``'s ``d`` input. States are
    ``[x_M; x_P]``; the uncertainty structure is ``M``'s copy then ``P``'s.
    """
    m_sizes = tuple(m_sizes) if m_sizes is not None else (P.n_d,) * P.block.S
    nm = sum(m_sizes)
    if M.nout != nm + P.n_d or M.nin != nm + P.n_d:
        raise DimensionMismatch(f"M must map {nm}+{P.n_d} inputs to {nm}+{P.n_d} outputs, got {M.nin}->{M.nout}")
    n, n_d, n_u = P.n, P.n_d, P.n_u
    # split M into (w_M, d_hat) -> (v_M, d)
    Bm_w, Bm_d = M.B[:, :nm], M.B[:, nm:]
    Cm_v, Cm_d = M.C[:nm], M.C[nm:]
    Dm = M.D
    Dm_vw, Dm_vd, Dm_dw, Dm_dd = Dm[:nm, :nm], Dm[:nm, nm:], Dm[nm:, :nm], Dm[nm:, nm:]
    # P columns by channel
    Bw, Bd, Bu = P.input_matrix("w"), P.input_matrix("d"), P.input_matrix("u")
    Cp = P.ss.C
    Dp = P.ss.D
    Dp_w, Dp_d, Dp_u = Dp[:, :n], Dp[:, n : n + n_d], Dp[:, n + n_d :]
    nxm, nxp = M.nx, P.ss.nx

    A = np.block([[M.A, np.zeros((nxm, nxp))], [Bd @ Cm_d, P.A]])
    B = np.block(
        [
            [Bm_w, np.zeros((nxm, n)), Bm_d, np.zeros((nxm, n_u))],
            [Bd @ Dm_dw, Bw, Bd @ Dm_dd, Bu],
        ]
    )
    C = np.block([[Cm_v, np.zeros((nm, nxp))], [Dp_d @ Cm_d, Cp]])
    D = np.block(
        [
            [Dm_vw, np.zeros((nm, n)), Dm_vd, np.zeros((nm, n_u))],
            [Dp_d @ Dm_dw, Dp_w, Dp_d @ Dm_dd, Dp_u],
        ]
    )
    block = BlockStructure(m_sizes + P.block.sizes)
    Phat = UncertainPlant(
        StateSpace(A, B, C, D), n_d=n_d, n_u=n_u, n_e=P.n_e, n_y=P.n_y, block=block, strict=False
    )
    return AugmentedPlant(Phat=Phat, M=M)


def approximation_error(
    lin: LinearizedInverse,
    factory: Callable[[np.ndarray], SpectralFactorPair],
    deltas: Sequence,
    grid: int = 256,
) -> dict:
    """Relative error of the affine fit against the exact inverse factor.

    Returns the overall maximum and the per-sample maxima over ``grid``
    frequencies for each entry of ``deltas``.
    """
    th = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    per = []
    for dl in deltas:
        dl = np.atleast_1d(np.asarray(dl, dtype=float))
        exact = freq_response(factory(dl).Finv, th)
        approx = lin(dl, th)
        num = np.linalg.norm(exact - approx, ord=2, axis=(1, 2))
        den = np.linalg.norm(exact, ord=2, axis=(1, 2))
        per.append(float(np.max(num / den)))
    worst = max(per) if per else 0.0
    log.info("affine inverse-factor fit: worst relative error %.4g", worst)
    return {"deltas": [np.atleast_1d(d).tolist() for d in deltas], "errors": per, "max": worst}
