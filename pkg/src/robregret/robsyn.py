"""Robust and regret-weighted controller synthesis.

Three regret problems are posed as H-infinity or robust-performance tests at
level one on weighted plants:

* nominal: ``CL(P, K, 0) F_0^{-1}``;
* robust with the nominal baseline: the uncertain plant with its disturbance
  channel weighted by ``F_0^{-1}``;
* robust with the uncertainty-dependent baseline: the augmented plant that
  carries the affine fit of ``F_Delta^{-1}`` and a second uncertainty copy.

The robust tests use DK iteration with constant per-block scales and the
complex structured-singular-value upper bound.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .baseline import RealizedPlant, build_baseline
from .errors import NominalInfeasible, UpperBoundInfeasible
from .hinf import HinfOptions, hinf_optimal, hinf_synthesize, verify
from .specfact import SpectralFactorPair, spectral_factorize
from .sscore import (
    BlockStructure,
    StateSpace,
    UncertainPlant,
    append,
    freq_response,
    golden_max,
    hinf_norm,
    is_schur,
    lft_lower,
    series,
)
from .uncapprox import AugmentedPlant, assemble_M, build_augmented, linearize_inverse, m_block

log = logging.getLogger(__name__)

FEASIBLE_LEVEL = 1.0 - 1e-9


@dataclass
class SynthesisResult:
    K: StateSpace
    gamma_achieved: float
    log: list = field(default_factory=list)
    converged: bool = True
    scales: "ScalingSet | None" = None


@dataclass(frozen=True)
class ScalingSet:
    """One positive scale per uncertainty block, constant over frequency."""

    scales: tuple[float, ...]

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if any(not s > 0 for s in scales):
            raise ValueError("scales must be strictly positive")
        object.__setattr__(self, "scales", scales)

    @classmethod
    def ones(cls, block: BlockStructure) -> "ScalingSet":
        return cls((1.0,) * block.S)

    def diagonal(self, block: BlockStructure) -> np.ndarray:
        return np.repeat(np.asarray(self.scales), block.sizes)


@dataclass
class DKOptions:
    max_iter: int = 12
    rel_improvement: float = 0.01
    freq_grid: int = 256
    target: float | None = FEASIBLE_LEVEL
    hinf: HinfOptions = field(default_factory=HinfOptions)
    rtol: float = 1e-3


# ---------------------------------------------------------------- scaling


def _scale_vectors(block: BlockStructure, scales: ScalingSet, n_perf_out: int, n_perf_in: int):
    dv = scales.diagonal(block) if block.S else np.zeros(0)
    left = np.concatenate([dv, np.ones(n_perf_out)])
    right = np.concatenate([1.0 / dv, np.ones(n_perf_in)])
    return left, right


def scaled_hinf_upper(CLfreq: np.ndarray, block: BlockStructure, scales: ScalingSet) -> float | np.ndarray:
    """``sigma_max(D M D^{-1})`` with the performance channels left unscaled.

    ``CLfreq`` is ``(p, m)`` or ``(N, p, m)`` with the first ``block.n`` rows
    and columns belonging to the uncertainty channels.
    """
    M = np.asarray(CLfreq)
    p, m = M.shape[-2:]
    left, right = _scale_vectors(block, scales, p - block.n, m - block.n)
    S = left[:, None] * M * right[None, :] if M.ndim == 2 else left[None, :, None] * M * right[None, None, :]
    s = np.linalg.norm(S, ord=2, axis=(-2, -1))
    return float(s) if M.ndim == 2 else s


def optimize_scales(
    CLfreq: np.ndarray,
    block: BlockStructure,
    start: ScalingSet | None = None,
    sweeps: int = 8,
    span: float = 8.0,
    bound: float = 1e5,
) -> tuple[ScalingSet, float]:
    """Coordinate descent on ``log d_i`` of ``max_theta sigma_max(D M D^{-1})``.

    Scales stay in ``[1/bound, bound]``: a block that barely couples to the
    loop would otherwise be driven toward zero and leave the next K-step
    with a badly scaled plant.
    """
    start = start or ScalingSet.ones(block)
    if block.S == 0:
        return start, float(np.max(scaled_hinf_upper(CLfreq, block, start)))
    lim = np.log(bound)
    logs = np.clip(np.log(np.asarray(start.scales)), -lim, lim)

    def peak(lg):
        return float(np.max(scaled_hinf_upper(CLfreq, block, ScalingSet(tuple(np.exp(lg))))))

    best = peak(logs)
    for _ in range(sweeps):
        prev = best
        for i in range(block.S):

            def f(x, i=i):
                lg = logs.copy()
                lg[i] = x
                return -peak(lg)

            x, val = golden_max(f, max(logs[i] - span, -lim), min(logs[i] + span, lim), xtol=1e-4)
            if -val < best:
                logs[i] = x
                best = -val
        if prev - best <= 1e-6 * prev:
            break
    return ScalingSet(tuple(np.exp(logs))), best


def scale_plant(G: StateSpace, block: BlockStructure, scales: ScalingSet, n_u: int, n_y: int) -> StateSpace:
    """Apply ``diag(D, I)`` on the output side and ``diag(D^{-1}, I)`` on the input side."""
    left, right = _scale_vectors(block, scales, G.nout - block.n - n_y, G.nin - block.n - n_u)
    left = np.concatenate([left, np.ones(n_y)])
    right = np.concatenate([right, np.ones(n_u)])
    return G.scaled(left=np.diag(left), right=np.diag(right))


# ---------------------------------------------------------------- DK iteration


def dk_iteration(G: StateSpace, block: BlockStructure, n_u: int, n_y: int, opts: DKOptions | None = None) -> SynthesisResult:
    """DK iteration on ``G: (w, d, u) -> (v, e, y)`` with uncertainty ``block``.

    The returned level is the verified scaled closed-loop norm
    ``||diag(D, I) F_L(G, K) diag(D^{-1}, I)||_inf`` of the best controller.
    Iteration stops after ``max_iter`` steps, when the level improves by less
    than ``rel_improvement``, or as soon as it is below ``target``.
    """
    opts = opts or DKOptions()
    th = np.linspace(0.0, np.pi, opts.freq_grid)
    scales = ScalingSet.ones(block)
    history: list[dict] = []
    best: SynthesisResult | None = None
    for it in range(opts.max_iter):
        Gs = scale_plant(G, block, scales, n_u, n_y)
        try:
            level, K = hinf_optimal(Gs, n_u, n_y, rtol=opts.rtol, opts=opts.hinf)
        except Exception as exc:
            if it == 0:
                raise NominalInfeasible(f"K-step failed at the first iteration: {exc}") from exc
            log.warning("K-step failed at iteration %d: %s", it, exc)
            break
        if K is None:
            if it == 0:
                raise NominalInfeasible("no stabilizing controller for the scaled plant")
            break
        cl = lft_lower(G, K)
        resp = freq_response(cl, th)
        new_scales, grid_level = optimize_scales(resp, block, scales)
        # verified level with the improved scales
        verified = hinf_norm(scale_plant(cl, block, new_scales, 0, 0), grid=opts.hinf.verify_grid)
        if verified > level:
            verified, new_scales = level, scales
        history.append(
            {"iteration": it, "k_level": level, "d_level": verified, "scales": list(new_scales.scales)}
        )
        log.debug("DK %d: K-step %.6g, D-step %.6g, scales %s", it, level, verified, new_scales.scales)
        improved = best is None or verified < best.gamma_achieved
        if improved:
            prev = best.gamma_achieved if best else np.inf
            best = SynthesisResult(K=K, gamma_achieved=verified, log=history, scales=new_scales)
        else:
            prev = best.gamma_achieved
        scales = new_scales
        if opts.target is not None and best.gamma_achieved < opts.target:
            break
        if not improved or prev - best.gamma_achieved < opts.rel_improvement * prev:
            break
    if best is None:
        raise NominalInfeasible("DK iteration produced no controller")
    best.log = history
    return best


def scaled_level(G: StateSpace, K: StateSpace, block: BlockStructure, scales: ScalingSet, grid: int = 2048) -> float:
    """Re-verify a DK result: scaled closed-loop norm, ``inf`` if unstable."""
    cl = lft_lower(G, K)
    if not is_schur(cl.A):
        return np.inf
    return hinf_norm(scale_plant(cl, block, scales, 0, 0), grid=grid)


# ---------------------------------------------------------------- regret problems


def nominal_factor(P: UncertainPlant, gamma_R: float, deltas=None) -> SpectralFactorPair:
    plant = RealizedPlant.from_plant(P, deltas)
    nc = build_baseline(plant)
    return spectral_factorize(nc, gamma_R, delta=deltas)


def factor_factory(P: UncertainPlant, gamma_R: float) -> Callable:
    def factory(deltas):
        return nominal_factor(P, gamma_R, deltas)

    return factory


def _weight_disturbance(G: StateSpace, n_before: int, W: StateSpace, n_after: int) -> StateSpace:
    """``G o diag(I_{n_before}, W, I_{n_after})``."""
    parts = []
    if n_before:
        parts.append(StateSpace.static(np.eye(n_before)))
    parts.append(W)
    if n_after:
        parts.append(StateSpace.static(np.eye(n_after)))
    return series(G, append(*parts))


def nominal_weighted_plant(P: UncertainPlant, gamma_R: float) -> StateSpace:
    pair = nominal_factor(P, gamma_R)
    return _weight_disturbance(P.at(np.zeros(P.block.S)), 0, pair.Finv, P.n_u)


def robust_weighted_plant(P: UncertainPlant, gamma_R: float) -> StateSpace:
    pair = nominal_factor(P, gamma_R)
    return _weight_disturbance(P.ss, P.n, pair.Finv, P.n_u)


def augmented_plant(P: UncertainPlant, gamma_R: float) -> AugmentedPlant:
    lin = linearize_inverse(factor_factory(P, gamma_R), P.block)
    M = assemble_M(lin)
    return build_augmented(P, M, m_block(lin).sizes)


def feasible_nominal_regret(
    P: UncertainPlant, gamma_R: float, opts: HinfOptions | None = None
) -> SynthesisResult | None:
    """Controller with ``||CL(P, K, 0) F_0^{-1}||_inf < 1`` or ``None``."""
    G = nominal_weighted_plant(P, gamma_R)
    K = hinf_synthesize(G, P.n_u, P.n_y, FEASIBLE_LEVEL, opts)
    if K is None:
        return None
    level = verify(G, K)
    return SynthesisResult(K=K, gamma_achieved=level, log=[{"gamma_R": gamma_R, "level": level}])


def _robust(G: StateSpace, block: BlockStructure, P: UncertainPlant, gamma_R: float, opts: DKOptions | None):
    opts = opts or DKOptions()
    res = dk_iteration(G, block, P.n_u, P.n_y, opts)
    res.log = [{"gamma_R": gamma_R, **h} for h in res.log]
    if res.gamma_achieved < FEASIBLE_LEVEL:
        return res
    return None


def feasible_robust_regret_fixed(
    P: UncertainPlant, gamma_R: float, opts: DKOptions | None = None
) -> SynthesisResult | None:
    """Robust regret against the nominal (``Delta = 0``) baseline."""
    if P.block.S == 0:
        return feasible_nominal_regret(P, gamma_R, (opts or DKOptions()).hinf)
    return _robust(robust_weighted_plant(P, gamma_R), P.block, P, gamma_R, opts)


def feasible_robust_regret_unc(
    P: UncertainPlant, gamma_R: float, opts: DKOptions | None = None
) -> SynthesisResult | None:
    """Robust regret against the uncertainty-dependent baseline (affine factor fit)."""
    if P.block.S == 0:
        return feasible_nominal_regret(P, gamma_R, (opts or DKOptions()).hinf)
    aug = augmented_plant(P, gamma_R)
    return _robust(aug.Phat.ss, aug.Phat.block, P, gamma_R, opts)


# ---------------------------------------------------------------- bisection


@dataclass
class BisectionResult:
    gamma: float
    result: SynthesisResult
    history: list
    monotone: bool = True


def bisect_gamma(
    feasibility: Callable[[float], SynthesisResult | None],
    lo: float,
    hi: float,
    tol: float = 1e-3,
    max_expand: int = 8,
    confirm: int = 2,
) -> BisectionResult:
    """Smallest feasible ``gamma`` in ``[lo, hi]`` within relative ``tol``.

    ``hi`` is multiplied by 10 up to ``max_expand`` times if infeasible.
    Bisection alone never contradicts itself, so ``confirm`` extra levels,
    spaced geometrically between the result and the first feasible ``hi``,
    are probed afterwards. Every evaluation is recorded; a feasible value
    below an infeasible one is reported as a non-monotone bracket.
    """
    history: list[tuple[float, bool]] = []

    def probe(g):
        try:
            r = feasibility(g)
        except Exception as exc:  # a failed factorization or synthesis counts as infeasible
            log.debug("feasibility raised at gamma=%g: %s", g, exc)
            r = None
        history.append((float(g), r is not None))
        return r

    best = probe(hi)
    expand = 0
    while best is None:
        if expand >= max_expand:
            raise UpperBoundInfeasible(f"no feasible gamma up to {hi:g}")
        lo, hi = hi, hi * 10.0
        expand += 1
        best = probe(hi)
    top = hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        r = probe(mid)
        if r is None:
            lo = mid
        else:
            hi, best = mid, r
    if top > hi * (1 + tol):
        for k in range(1, confirm + 1):
            probe(hi * (top / hi) ** (k / (confirm + 1)))
    monotone = _check_monotone(history)
    if not monotone:
        log.warning("non-monotone feasibility observed: %s", history)
    return BisectionResult(gamma=hi, result=best, history=history, monotone=monotone)


def _check_monotone(history) -> bool:
    feas = [g for g, ok in history if ok]
    infeas = [g for g, ok in history if not ok]
    return not (feas and infeas and min(feas) < max(infeas))


def nominal_hinf_level(P: UncertainPlant, opts: HinfOptions | None = None) -> float:
    """Optimal H-infinity level of the unweighted nominal ``d -> e`` problem."""
    level, _ = hinf_optimal(P.at(np.zeros(P.block.S)), P.n_u, P.n_y, opts=opts)
    return level
