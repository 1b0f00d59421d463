"""Additive regret of a fixed controller across the uncertainty box."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .baseline import RealizedPlant, baseline_freq_map, build_baseline
from .errors import DiagnosticsError, UnstableClosedLoop
from .sscore import StateSpace, UncertainPlant, closed_loop, freq_response, is_schur, sup_on_circle

log = logging.getLogger(__name__)

NOMINAL = "nominal"
UNCERTAINTY_DEPENDENT = "uncertainty_dependent"
MODES = (NOMINAL, UNCERTAINTY_DEPENDENT)
NEG_TOL = 1e-8


@dataclass
class RegretCurve:
    deltas: list
    values: list
    baseline_mode: str
    tag: str = ""
    diagnostics: list = field(default_factory=list)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass
class BoundReport:
    passed: bool
    worst_margin: float
    violations: list
    gamma_R: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "violations": self.violations,
            "gamma_R": self.gamma_R,
        }


def _hermitian_gap(CL: StateSpace, nc, theta: np.ndarray) -> np.ndarray:
    G = freq_response(CL, theta)
    T = baseline_freq_map(nc, theta)
    H = np.conj(np.swapaxes(G, 1, 2)) @ G - np.conj(np.swapaxes(T, 1, 2)) @ T
    return np.linalg.eigvalsh(H)[:, -1]


def additive_regret(
    K: StateSpace, P: UncertainPlant, deltas, mode: str = UNCERTAINTY_DEPENDENT, grid: int = 2048
) -> float:
    """``sqrt(sup_theta lambda_max(CL* CL - T_b* T_b))`` at block values ``deltas``.

    ``T_b`` is the non-causal baseline at ``Delta = 0`` (``nominal``) or at
    ``deltas`` (``uncertainty_dependent``). In the nominal mode the gap may be
    negative when the realized plant is easier than the nominal one; it is
    then reported as zero. In the uncertainty-dependent mode a gap below
    ``-1e-8`` contradicts optimality of the baseline and raises.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    CL = closed_loop(P, K, P.block.matrix(deltas))
    if not is_schur(CL.A):
        raise UnstableClosedLoop(f"closed loop unstable at delta={deltas.tolist()}")
    base_deltas = deltas if mode == UNCERTAINTY_DEPENDENT else np.zeros(P.block.S)
    nc = build_baseline(RealizedPlant.from_plant(P, base_deltas), check=False)
    sup, _ = sup_on_circle(lambda th: _hermitian_gap(CL, nc, th), grid)
    if sup < 0:
        if mode == UNCERTAINTY_DEPENDENT and sup < -NEG_TOL:
            raise DiagnosticsError(f"negative regret {sup:.3e} against the optimal baseline")
        sup = 0.0
    return float(np.sqrt(sup))


def delta_grid(S: int, n: int = 41) -> list[np.ndarray]:
    """Cartesian product of ``n`` uniform points on ``[-1, 1]`` per block."""
    if S > 3:
        log.warning("full delta grid over %d blocks has %d points", S, n**S)
    axis = np.linspace(-1.0, 1.0, n)
    return [np.array(p) for p in itertools.product(axis, repeat=S)]


def regret_curve(
    K: StateSpace,
    P: UncertainPlant,
    grid: Sequence | int = 41,
    mode: str = UNCERTAINTY_DEPENDENT,
    tag: str = "",
    freq_grid: int = 2048,
) -> RegretCurve:
    """Additive regret on a grid of block values; unstable samples give ``inf``."""
    points = delta_grid(P.block.S, grid) if isinstance(grid, int) else [np.atleast_1d(g) for g in grid]
    values, diags = [], []
    for dl in points:
        if np.any(np.abs(dl) > 1.0 + 1e-12):
            raise ValueError(f"delta {dl.tolist()} outside the unit box")
        try:
            values.append(additive_regret(K, P, dl, mode, freq_grid))
        except UnstableClosedLoop as exc:
            values.append(float("inf"))
            diags.append({"delta": dl.tolist(), "error": str(exc)})
    return RegretCurve(
        deltas=[p.tolist() for p in points], values=values, baseline_mode=mode, tag=tag, diagnostics=diags
    )


def validate_bound(curve: RegretCurve, gamma_R: float, within: float | None = None) -> BoundReport:
    """Flag samples whose regret exceeds ``gamma_R``.

    With ``within`` only samples with ``max |delta_i| <= within`` count toward
    the pass flag; every violation is listed regardless.
    """
    vals = curve.as_array()
    margins = (vals - gamma_R) / gamma_R
    violations = [d for d, v in zip(curve.deltas, vals) if not v <= gamma_R]
    if within is None:
        counted = violations
    else:
        counted = [d for d in violations if max(abs(x) for x in d) <= within]
    worst = float(np.max(margins)) if margins.size else float("-inf")
    return BoundReport(passed=not counted, worst_margin=worst, violations=violations, gamma_R=float(gamma_R))
