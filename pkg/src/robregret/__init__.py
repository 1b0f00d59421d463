"""Robust regret-optimal control against an uncertainty-dependent non-causal baseline."""

from __future__ import annotations

__version__ = "0.1.0"

from .baseline import NoncausalBaseline, RealizedPlant, baseline_at, build_baseline, noncausal_cost
from .errors import RobRegretError
from .regana import RegretCurve, additive_regret, regret_curve, validate_bound
from .riccati import CostData, check_assumptions, solve_dare
from .robsyn import (
    SynthesisResult,
    bisect_gamma,
    dk_iteration,
    feasible_nominal_regret,
    feasible_robust_regret_fixed,
    feasible_robust_regret_unc,
)
from .specfact import SpectralFactorPair, spectral_factorize
from .sscore import BlockStructure, Signal, StateSpace, UncertainPlant
from .uncapprox import assemble_M, build_augmented, linearize_inverse

__all__ = [
    "BlockStructure",
    "CostData",
    "NoncausalBaseline",
    "RealizedPlant",
    "RegretCurve",
    "RobRegretError",
    "Signal",
    "SpectralFactorPair",
    "StateSpace",
    "SynthesisResult",
    "UncertainPlant",
    "additive_regret",
    "assemble_M",
    "baseline_at",
    "bisect_gamma",
    "build_augmented",
    "build_baseline",
    "check_assumptions",
    "dk_iteration",
    "feasible_nominal_regret",
    "feasible_robust_regret_fixed",
    "feasible_robust_regret_unc",
    "linearize_inverse",
    "noncausal_cost",
    "regret_curve",
    "solve_dare",
    "spectral_factorize",
    "validate_bound",
]
