"""Discrete-time state-space algebra.

Realizations are ``x[t+1] = A x[t] + B d[t]``, ``e[t] = C x[t] + D d[t]``.
Every operation is a pure function of immutable inputs. Interconnections
order states upstream-first so realizations are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IllPosedInterconnection,
    NonConvergedTail,
    SingularAtFrequency,
    UnstableSystem,
)

SCHUR_TOL = 1e-9


def _mat(x, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if rows is not None and cols is not None and rows * cols == a.size:
            a = a.reshape(rows, cols)
        elif cols == 1 or (rows is not None and rows == a.size and cols is None):
            a = a.reshape(-1, 1)
        else:
            a = a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got array of shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Discrete-time realization ``(A, B, C, D)``.

    ``n_x = 0`` is allowed and represents the static gain ``D``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = _mat(self.D)
        A = np.array(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, 0)
        A = _mat(A) if A.size else A
        nx = A.shape[0]
        if A.shape != (nx, nx):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        B = np.array(self.B, dtype=float)
        C = np.array(self.C, dtype=float)
        B = B.reshape(nx, D.shape[1]) if B.size == nx * D.shape[1] else _mat(B)
        C = C.reshape(D.shape[0], nx) if C.size == D.shape[0] * nx else _mat(C)
        if B.shape != (nx, D.shape[1]) or C.shape != (D.shape[0], nx):
            raise DimensionMismatch(
                f"inconsistent realization: A {A.shape}, B {B.shape}, C {C.shape}, D {D.shape}"
            )
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} contains non-finite entries")
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nin(self) -> int:
        return self.D.shape[1]

    @property
    def nout(self) -> int:
        return self.D.shape[0]

    @classmethod
    def static(cls, D) -> "StateSpace":
        D = _mat(D)
        return cls(np.zeros((0, 0)), np.zeros((0, D.shape[1])), np.zeros((D.shape[0], 0)), D)

    def __neg__(self) -> "StateSpace":
        return StateSpace(self.A, self.B, -self.C, -self.D)

    def __add__(self, other: "StateSpace") -> "StateSpace":
        return parallel(self, other)

    def __sub__(self, other: "StateSpace") -> "StateSpace":
        return parallel(self, -other)

    def __mul__(self, other: "StateSpace") -> "StateSpace":
        return series(self, other)

    def scaled(self, left=None, right=None) -> "StateSpace":
        """Return ``left @ G @ right`` for constant matrices."""
        B, C, D = self.B, self.C, self.D
        if right is not None:
            right = _mat(right)
            B, D = B @ right, D @ right
        if left is not None:
            left = _mat(left)
            C, D = left @ C, left @ D
        return StateSpace(self.A, B, C, D)

    def select(self, outputs=None, inputs=None) -> "StateSpace":
        """Sub-system restricted to the given output and input index sets."""
        o = np.arange(self.nout) if outputs is None else np.asarray(outputs, dtype=int)
        i = np.arange(self.nin) if inputs is None else np.asarray(inputs, dtype=int)
        return StateSpace(self.A, self.B[:, i], self.C[o, :], self.D[np.ix_(o, i)])

    def transformed(self, T: np.ndarray) -> "StateSpace":
        """Similarity transform ``x = T xi``."""
        Ti = np.linalg.inv(T)
        return StateSpace(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D)

    def __repr__(self) -> str:
        return f"StateSpace(nx={self.nx}, nin={self.nin}, nout={self.nout})"

    def to_dict(self) -> dict:
        return {k: np.asarray(getattr(self, k)).tolist() for k in "ABCD"} | {
            "nx": self.nx,
            "nin": self.nin,
            "nout": self.nout,
        }


@dataclass(frozen=True)
class BlockStructure:
    """Sizes ``r_1..r_S`` of the repeated real scalar blocks ``delta_i I_{r_i}``."""

    sizes: tuple[int, ...] = ()

    def __post_init__(self):
        sizes = tuple(int(r) for r in self.sizes)
        if any(r <= 0 for r in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def S(self) -> int:
        return len(self.sizes)

    def offsets(self) -> list[int]:
        return list(np.cumsum((0,) + self.sizes[:-1])) if self.sizes else []

    def matrix(self, deltas: Sequence[float]) -> np.ndarray:
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        if deltas.size != self.S:
            raise DimensionMismatch(f"expected {self.S} block values, got {deltas.size}")
        return np.diag(np.repeat(deltas, self.sizes)) if self.S else np.zeros((0, 0))

    def doubled(self) -> "BlockStructure":
        return BlockStructure(self.sizes + self.sizes)


@dataclass(frozen=True, eq=False)
class UncertainPlant:
    """Plant with channels ``(w, d, u) -> (v, e, y)`` and an uncertainty structure.

    With ``strict`` the zero-feedthrough pattern ``D_ew = D_ed = D_yw = D_yu = 0``
    is enforced; augmented plants built for synthesis relax the ``(y, w)`` block.
    """

    ss: StateSpace
    n_d: int
    n_u: int
    n_e: int
    n_y: int
    block: BlockStructure = field(default_factory=BlockStructure)
    strict: bool = True

    def __post_init__(self):
        n = self.block.n
        if self.ss.nin != n + self.n_d + self.n_u:
            raise DimensionMismatch(
                f"plant has {self.ss.nin} inputs, expected w({n}) + d({self.n_d}) + u({self.n_u})"
            )
        if self.ss.nout != n + self.n_e + self.n_y:
            raise DimensionMismatch(
                f"plant has {self.ss.nout} outputs, expected v({n}) + e({self.n_e}) + y({self.n_y})"
            )
        zero_blocks = [("e", "d"), ("y", "u"), ("e", "w")]
        if self.strict:
            zero_blocks.append(("y", "w"))
        for o, i in zero_blocks:
            blk = self.feedthrough(o, i)
            if blk.size and np.max(np.abs(blk)) > 0.0:
                raise DimensionMismatch(f"feedthrough D_{o}{i} must be zero")

    @property
    def n(self) -> int:
        return self.block.n

    def _in(self, ch: str) -> slice:
        n = self.n
        return {
            "w": slice(0, n),
            "d": slice(n, n + self.n_d),
            "u": slice(n + self.n_d, n + self.n_d + self.n_u),
        }[ch]

    def _out(self, ch: str) -> slice:
        n = self.n
        return {
            "v": slice(0, n),
            "e": slice(n, n + self.n_e),
            "y": slice(n + self.n_e, n + self.n_e + self.n_y),
        }[ch]

    def feedthrough(self, out: str, inp: str) -> np.ndarray:
        return self.ss.D[self._out(out), self._in(inp)]

    def input_matrix(self, inp: str) -> np.ndarray:
        return self.ss.B[:, self._in(inp)]

    def output_matrix(self, out: str) -> np.ndarray:
        return self.ss.C[self._out(out), :]

    @property
    def A(self) -> np.ndarray:
        return self.ss.A

    def at(self, deltas) -> StateSpace:
        """``F_U(P, Delta)`` for block values ``deltas``: channels (d, u) -> (e, y)."""
        return lft_upper(self, self.block.matrix(deltas))

    @classmethod
    def from_blocks(
        cls,
        A,
        B_w,
        B_d,
        B_u,
        C_v,
        C_e,
        C_y,
        D_vw=None,
        D_vd=None,
        D_vu=None,
        D_eu=None,
        D_yd=None,
        block: BlockStructure | Sequence[int] = (),
        strict: bool = True,
    ) -> "UncertainPlant":
        A = _mat(A)
        nx = A.shape[0]
        block = block if isinstance(block, BlockStructure) else BlockStructure(tuple(block))
        n = block.n
        B_w = _mat(B_w, nx, n) if n else np.zeros((nx, 0))
        B_d = _mat(B_d, nx, None)
        if B_d.shape[0] != nx:
            B_d = B_d.T
        B_u = _mat(B_u, nx, None)
        if B_u.shape[0] != nx:
            B_u = B_u.T
        n_d, n_u = B_d.shape[1], B_u.shape[1]
        C_v = _mat(C_v, n, nx) if n else np.zeros((0, nx))
        C_e = _mat(C_e, None, nx)
        if C_e.shape[1] != nx:
            C_e = C_e.T
        C_y = _mat(C_y, None, nx)
        if C_y.shape[1] != nx:
            C_y = C_y.T
        n_e, n_y = C_e.shape[0], C_y.shape[0]

        def blk(M, r, c):
            return np.zeros((r, c)) if M is None else _mat(M, r, c).reshape(r, c)

        D = np.block(
            [
                [blk(D_vw, n, n), blk(D_vd, n, n_d), blk(D_vu, n, n_u)],
                [np.zeros((n_e, n)), np.zeros((n_e, n_d)), blk(D_eu, n_e, n_u)],
                [np.zeros((n_y, n)), blk(D_yd, n_y, n_d), np.zeros((n_y, n_u))],
            ]
        )
        ss = StateSpace(A, np.hstack([B_w, B_d, B_u]), np.vstack([C_v, C_e, C_y]), D)
        return cls(ss, n_d=n_d, n_u=n_u, n_e=n_e, n_y=n_y, block=block, strict=strict)


@dataclass(frozen=True, eq=False)
class Signal:
    """Finitely supported two-sided sequence; zero outside ``[start, start + len)``."""

    start: int
    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s.reshape(-1, 1)
        if s.ndim != 2:
            raise DimensionMismatch("samples must be a (T, width) array")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "start", int(self.start))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def stop(self) -> int:
        return self.start + len(self)

    def energy(self) -> float:
        return float(np.sum(self.samples**2))

    @classmethod
    def impulse(cls, width: int = 1, at: int = 0, channel: int = 0) -> "Signal":
        s = np.zeros((1, width))
        s[0, channel] = 1.0
        return cls(at, s)

    def dft(self, thetas: np.ndarray) -> np.ndarray:
        """``sum_t d_t e^{-j theta t}`` for each theta; shape (N, width)."""
        t = np.arange(self.start, self.stop)
        return np.exp(-1j * np.outer(thetas, t)) @ self.samples


# ---------------------------------------------------------------- interconnections


def series(G1: StateSpace, G2: StateSpace) -> StateSpace:
    """Realization of ``G1 o G2`` (G2 acts first; its states come first)."""
    if G1.nin != G2.nout:
        raise DimensionMismatch(f"series: G1 takes {G1.nin} inputs but G2 gives {G2.nout}")
    n1, n2 = G1.nx, G2.nx
    A = np.block([[G2.A, np.zeros((n2, n1))], [G1.B @ G2.C, G1.A]])
    B = np.vstack([G2.B, G1.B @ G2.D])
    C = np.hstack([G1.D @ G2.C, G1.C])
    return StateSpace(A, B, C, G1.D @ G2.D)


def parallel(G1: StateSpace, G2: StateSpace) -> StateSpace:
    """``G1 + G2`` on shared inputs and summed outputs."""
    if (G1.nin, G1.nout) != (G2.nin, G2.nout):
        raise DimensionMismatch("parallel: systems must have equal input/output widths")
    return StateSpace(
        _blkdiag(G1.A, G2.A), np.vstack([G1.B, G2.B]), np.hstack([G1.C, G2.C]), G1.D + G2.D
    )


def append(*systems: StateSpace) -> StateSpace:
    """Block-diagonal concatenation of independent systems."""
    return StateSpace(
        _blkdiag(*(g.A for g in systems)),
        _blkdiag(*(g.B for g in systems)),
        _blkdiag(*(g.C for g in systems)),
        _blkdiag(*(g.D for g in systems)),
    )


def hstack(*systems: StateSpace) -> StateSpace:
    """``[G1 G2 ...]``: separate inputs, summed outputs."""
    nout = systems[0].nout
    if any(g.nout != nout for g in systems):
        raise DimensionMismatch("hstack: output widths differ")
    return StateSpace(
        _blkdiag(*(g.A for g in systems)),
        _blkdiag(*(g.B for g in systems)),
        np.hstack([g.C for g in systems]),
        np.hstack([g.D for g in systems]),
    )


def vstack(*systems: StateSpace) -> StateSpace:
    """``[G1; G2; ...]``: shared input, stacked outputs."""
    nin = systems[0].nin
    if any(g.nin != nin for g in systems):
        raise DimensionMismatch("vstack: input widths differ")
    return StateSpace(
        _blkdiag(*(g.A for g in systems)),
        np.vstack([g.B for g in systems]),
        _blkdiag(*(g.C for g in systems)),
        np.vstack([g.D for g in systems]),
    )


def _blkdiag(*mats: np.ndarray) -> np.ndarray:
    r = sum(m.shape[0] for m in mats)
    c = sum(m.shape[1] for m in mats)
    out = np.zeros((r, c))
    i = j = 0
    for m in mats:
        out[i : i + m.shape[0], j : j + m.shape[1]] = m
        i += m.shape[0]
        j += m.shape[1]
    return out


def lft_upper(P, Delta) -> StateSpace:
    """Close ``w = Delta v`` around the top channels of ``P``.

    ``P`` is an :class:`UncertainPlant` or a :class:`StateSpace` whose first
    ``Delta.shape[1]`` inputs are ``w`` and first ``Delta.shape[0]`` outputs are ``v``.
    """
    ss = P.ss if isinstance(P, UncertainPlant) else P
    Delta = np.atleast_2d(np.asarray(Delta, dtype=float))
    if Delta.size == 0:
        Delta = np.zeros((0, 0))
    nw, nv = Delta.shape[1], Delta.shape[0]
    if isinstance(P, UncertainPlant) and (nw, nv) != (P.n, P.n):
        raise DimensionMismatch(f"Delta must be {P.n}x{P.n}, got {Delta.shape}")
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    Bw, B2 = B[:, :nw], B[:, nw:]
    Cv, C2 = C[:nv, :], C[nv:, :]
    Dvw, Dv2 = D[:nv, :nw], D[:nv, nw:]
    D2w, D22 = D[nv:, :nw], D[nv:, nw:]
    M = np.eye(nw) - Delta @ Dvw
    if nw and np.linalg.cond(M) > 1e12:
        raise IllPosedInterconnection("I - D_vw Delta is singular")
    L = np.linalg.solve(M, Delta) if nw else np.zeros((0, nv))
    return StateSpace(A + Bw @ L @ Cv, B2 + Bw @ L @ Dv2, C2 + D2w @ L @ Cv, D22 + D2w @ L @ Dv2)


def lft_lower(P: StateSpace, K: StateSpace) -> StateSpace:
    """Close controller ``u = K y`` around the bottom channels of ``P``.

    The last ``K.nout`` inputs of ``P`` are ``u`` and its last ``K.nin``
    outputs are ``y``. States are ordered ``[x_P; x_K]``.
    """
    nu, ny = K.nout, K.nin
    if nu > P.nin or ny > P.nout:
        raise DimensionMismatch("controller larger than plant channels")
    m1, p1 = P.nin - nu, P.nout - ny
    A, B, C, D = P.A, P.B, P.C, P.D
    B1, B2 = B[:, :m1], B[:, m1:]
    C1, C2 = C[:p1, :], C[p1:, :]
    D11, D12, D21, D22 = D[:p1, :m1], D[:p1, m1:], D[p1:, :m1], D[p1:, m1:]
    Ak, Bk, Ck, Dk = K.A, K.B, K.C, K.D
    # u = Ck xk + Dk y ,  y = C2 x + D21 w + D22 u
    E = np.eye(nu) - Dk @ D22
    if nu and np.linalg.cond(E) > 1e12:
        raise IllPosedInterconnection("I - D_K D_yu is singular")
    Ei = np.linalg.inv(E) if nu else np.zeros((0, 0))
    Ux = Ei @ Dk @ C2
    Uk = Ei @ Ck
    Uw = Ei @ Dk @ D21
    Yx = C2 + D22 @ Ux
    Yk = D22 @ Uk
    Yw = D21 + D22 @ Uw
    Acl = np.block([[A + B2 @ Ux, B2 @ Uk], [Bk @ Yx, Ak + Bk @ Yk]])
    Bcl = np.vstack([B1 + B2 @ Uw, Bk @ Yw])
    Ccl = np.hstack([C1 + D12 @ Ux, D12 @ Uk])
    Dcl = D11 + D12 @ Uw
    return StateSpace(Acl, Bcl, Ccl, Dcl)


def closed_loop(P: UncertainPlant, K: StateSpace, Delta=None) -> StateSpace:
    """``CL(P, K, Delta)``: the ``d -> e`` map with both loops closed."""
    Delta = np.zeros((P.n, P.n)) if Delta is None else np.atleast_2d(Delta)
    return lft_lower(lft_upper(P, Delta), K)


# ---------------------------------------------------------------- analysis


def spectral_radius(A: np.ndarray) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def is_schur(A, tol: float = SCHUR_TOL) -> bool:
    """True iff every eigenvalue of ``A`` lies strictly inside ``|z| < 1 - tol``."""
    A = np.atleast_2d(np.asarray(A, dtype=float)) if np.size(A) else np.zeros((0, 0))
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("is_schur needs a square matrix")
    return spectral_radius(A) < 1.0 - tol


def freq_response(sys: StateSpace, theta) -> np.ndarray:
    """``C (e^{j theta} I - A)^{-1} B + D``.

    A scalar ``theta`` gives an ``(nout, nin)`` matrix; an array gives shape
    ``(N, nout, nin)``.
    """
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    z = np.exp(1j * th)
    out = np.broadcast_to(sys.D.astype(complex), (th.size, sys.nout, sys.nin)).copy()
    if sys.nx:
        n = sys.nx
        M = z[:, None, None] * np.eye(n) - sys.A[None, :, :]
        # rcond-style singularity test on the batch
        sv = np.linalg.svd(M, compute_uv=False)
        bad = sv[:, -1] <= 1e-13 * np.maximum(sv[:, 0], 1.0)
        if np.any(bad):
            raise SingularAtFrequency(f"pole on the unit circle at theta={th[bad][0]:.6g}")
        X = np.linalg.solve(M, np.broadcast_to(sys.B.astype(complex), (th.size, n, sys.nin)))
        out += sys.C[None, :, :] @ X
    return out[0] if scalar else out


def sigma_max(G: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a stack."""
    if G.shape[-1] == 0 or G.shape[-2] == 0:
        return np.zeros(G.shape[:-2])
    return np.linalg.svd(G, compute_uv=False)[..., 0]


def default_grid(n: int = 2048) -> np.ndarray:
    """Frequency grid on [0, pi]: log-spaced near DC, uniform elsewhere."""
    half = n // 2
    lin = np.linspace(0.0, np.pi, n - half)
    log = np.geomspace(1e-6, 0.1, half)
    return np.unique(np.concatenate([lin, log]))


def golden_max(f, a: float, b: float, xtol: float = 1e-9, maxiter: int = 200) -> tuple[float, float]:
    """Golden-section search for a local maximum of ``f`` on ``[a, b]``."""
    g = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    best = max((fc, c), (fd, d))
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
            best = max(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
            best = max(best, (fd, d))
    return best[1], best[0]


def sup_on_circle(fun, grid: int | np.ndarray = 2048, peaks: int = 5, rtol: float = 1e-8) -> tuple[float, float]:
    """Supremum over ``theta in [0, pi]`` of a vectorized scalar function.

    A coarse grid locates the largest ``peaks`` local candidates, each refined
    by golden-section search. Peaks narrower than the grid spacing can be
    missed; increase ``grid`` for lightly damped systems.
    Returns ``(value, theta)``.
    """
    th = default_grid(grid) if np.ndim(grid) == 0 else np.asarray(grid, dtype=float)
    vals = np.asarray(fun(th), dtype=float)
    order = np.argsort(vals)[::-1]
    best_val, best_th = float(vals[order[0]]), float(th[order[0]])
    seen = []
    for k in order:
        if len(seen) >= peaks:
            break
        if any(abs(int(k) - s) <= 1 for s in seen):
            continue
        seen.append(int(k))
        lo, hi = th[max(k - 1, 0)], th[min(k + 1, th.size - 1)]
        if hi <= lo:
            continue
        t, v = golden_max(lambda x: float(fun(np.array([x]))[0]), lo, hi, xtol=max(1e-12, np.sqrt(rtol) * 1e-3))
        if v > best_val:
            best_val, best_th = v, t
    return best_val, best_th


def hinf_norm(sys: StateSpace, grid: int = 2048, peaks: int = 5, rtol: float = 1e-8) -> float:
    """H-infinity norm of a Schur-stable system by grid search plus refinement."""
    if not is_schur(sys.A):
        raise UnstableSystem(f"spectral radius {spectral_radius(sys.A):.6g} >= 1")
    if sys.nx == 0:
        return float(sigma_max(sys.D[None])[0])
    val, _ = sup_on_circle(lambda th: sigma_max(freq_response(sys, th)), grid, peaks, rtol)
    return val


def simulate(
    sys: StateSpace,
    d: Signal,
    settle: int = 50,
    tol: float = 1e-12,
    max_steps: int = 200_000,
) -> tuple[Signal, float]:
    """Response to ``d`` from zero state, run until the tail energy is negligible.

    Returns ``(e, cost)`` with ``cost = sum_t e_t' e_t``.
    """
    if not is_schur(sys.A):
        raise UnstableSystem("simulate requires a Schur-stable system")
    if d.width != sys.nin:
        raise DimensionMismatch(f"signal width {d.width} != system inputs {sys.nin}")
    T = len(d)
    x = np.zeros(sys.nx)
    out = []
    for t in range(T):
        u = d.samples[t]
        out.append(sys.C @ x + sys.D @ u)
        x = sys.A @ x + sys.B @ u
    cost = float(sum(e @ e for e in out))
    window = settle
    while True:
        tail = []
        for _ in range(window):
            tail.append(sys.C @ x)
            x = sys.A @ x
        out.extend(tail)
        tail_energy = float(sum(e @ e for e in tail))
        cost += tail_energy
        # whatever remains in the state is bounded by its own decay
        if tail_energy <= tol * max(cost, 1e-300) or cost == 0.0:
            break
        if len(out) > max_steps:
            raise NonConvergedTail(f"tail energy {tail_energy:.3e} after {len(out)} steps")
    return Signal(d.start, np.array(out).reshape(len(out), sys.nout)), cost
