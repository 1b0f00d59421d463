"""End-to-end runs: assumption checks, the three syntheses and regret analysis."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import AnalysisOptions, ProblemConfig, SynthesisOptions
from .hinf import HinfOptions
from .regana import NOMINAL, UNCERTAINTY_DEPENDENT, RegretCurve, regret_curve, validate_bound
from .riccati import check_assumptions
from .robsyn import (
    BisectionResult,
    DKOptions,
    bisect_gamma,
    feasible_nominal_regret,
    feasible_robust_regret_fixed,
    feasible_robust_regret_unc,
    nominal_hinf_level,
)
from .sscore import StateSpace, UncertainPlant

log = logging.getLogger(__name__)

MODES = ("ar", "rob", "robunc")

# acceptance bands for the scalar example: (low, high)
BANDS = {"ar": (0.94 - 0.05, 0.94 + 0.05), "rob": (3.15 * 0.9, 3.15 * 1.25), "robunc": (3.75 * 0.9, 3.75 * 1.25)}


def dk_options(opts: SynthesisOptions) -> DKOptions:
    return DKOptions(
        max_iter=int(opts.max_dk),
        rel_improvement=float(opts.dk_rel_improvement),
        freq_grid=int(opts.freq_grid),
        hinf=HinfOptions(),
    )


def feasibility(P: UncertainPlant, mode: str, opts: SynthesisOptions):
    if mode == "ar":
        return lambda g: feasible_nominal_regret(P, g)
    dk = dk_options(opts)
    if mode == "rob":
        return lambda g: feasible_robust_regret_fixed(P, g, dk)
    if mode == "robunc":
        return lambda g: feasible_robust_regret_unc(P, g, dk)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def synthesize(P: UncertainPlant, mode: str, opts: SynthesisOptions | None = None) -> BisectionResult:
    """Minimal feasible regret level for ``mode`` by bisection."""
    opts = opts or SynthesisOptions()
    hi = opts.gamma_hi if opts.gamma_hi is not None else 10.0 * nominal_hinf_level(P)
    return bisect_gamma(feasibility(P, mode, opts), opts.gamma_lo, hi, opts.tol)


def check_plant(P: UncertainPlant, deltas) -> dict:
    """Baseline assumptions at each value in ``deltas`` (applied to every block)."""
    out = {}
    for dl in deltas:
        G = P.at(np.full(P.block.S, float(dl)))
        n_d, n_e = P.n_d, P.n_e
        rep = check_assumptions(G.A, G.B[:, n_d:], G.C[:n_e], G.D[:n_e, n_d:])
        out[f"{float(dl):.12g}"] = rep.to_dict()
    return out


def curves_csv(curves: list[RegretCurve], bounds: dict[str, float] | None = None) -> str:
    """CSV with delta columns, one regret column per curve and constant bound columns."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    bounds = bounds or {}
    n_blocks = len(curves[0].deltas[0]) if curves and curves[0].deltas else 1
    delta_cols = ["delta"] if n_blocks == 1 else [f"delta_{i + 1}" for i in range(n_blocks)]
    w.writerow(delta_cols + [c.tag for c in curves] + [f"bound_{k}" for k in bounds])
    if curves:
        for i, dl in enumerate(curves[0].deltas):
            row = [_fmt(x) for x in dl]
            row += [_fmt(c.values[i]) for c in curves]
            row += [_fmt(v) for v in bounds.values()]
            w.writerow(row)
    return buf.getvalue()


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, ".12g")


@dataclass
class BandResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class Reproduction:
    levels: dict = field(default_factory=dict)
    controllers: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    bands: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(b.passed for b in self.bands)


def run_syntheses(P: UncertainPlant, opts: SynthesisOptions) -> tuple[dict, dict, dict]:
    levels, ctrls, hist = {}, {}, {}
    for mode in MODES:
        res = synthesize(P, mode, opts)
        levels[mode] = res.gamma
        ctrls[mode] = res.result.K
        hist[mode] = {"history": res.history, "monotone": res.monotone}
        log.info("mode %s: gamma = %.6g (%d probes)", mode, res.gamma, len(res.history))
    return levels, ctrls, hist


def analyze(P: UncertainPlant, ctrls: dict[str, StateSpace], aopts: AnalysisOptions) -> dict:
    """The four curves behind the two comparisons."""
    runs = [("ar", NOMINAL), ("rob", NOMINAL), ("rob", UNCERTAINTY_DEPENDENT), ("robunc", UNCERTAINTY_DEPENDENT)]
    out = {}
    for mode, base in runs:
        out[(mode, base)] = regret_curve(
            ctrls[mode], P, aopts.delta_grid, base, tag=f"K_{mode}", freq_grid=aopts.freq_grid
        )
    return out


def evaluate_bands(levels: dict, curves: dict) -> tuple[list[BandResult], dict]:
    bands = []
    for mode in MODES:
        lo, hi = BANDS[mode]
        g = levels[mode]
        bands.append(BandResult(f"{mode} level", lo <= g <= hi, f"gamma={g:.6g} band=[{lo:.6g}, {hi:.6g}]"))
    rob_bound = validate_bound(curves[("rob", NOMINAL)], levels["rob"])
    unc_bound = validate_bound(curves[("robunc", UNCERTAINTY_DEPENDENT)], levels["robunc"], within=0.9)
    bands.append(
        BandResult("rob bound (nominal baseline)", rob_bound.passed, f"worst margin {rob_bound.worst_margin:.3e}")
    )
    bands.append(
        BandResult(
            "robunc bound (uncertainty-dependent baseline, |delta| <= 0.9)",
            unc_bound.passed,
            f"worst margin {unc_bound.worst_margin:.3e}, violations at {unc_bound.violations}",
        )
    )
    ar = curves[("ar", NOMINAL)]
    d = np.array([x[0] for x in ar.deltas])
    v = ar.as_array()
    i0 = int(np.argmin(np.abs(d)))
    shape_a = int(np.argmin(v)) == i0 and bool(np.all(np.diff(v[: i0 + 1]) <= 0)) and bool(
        np.all(np.diff(v[i0:]) >= 0)
    )
    bands.append(BandResult("ar curve minimal at 0 and increasing outward", shape_a, f"min {v.min():.6g} at {d[np.argmin(v)]:.3g}"))
    rob = curves[("rob", UNCERTAINTY_DEPENDENT)]
    unc = curves[("robunc", UNCERTAINTY_DEPENDENT)]
    rd = np.array([x[0] for x in rob.deltas])
    idx = [int(np.argmin(np.abs(rd - t))) for t in (-1.0, -0.9, 0.9, 1.0)]
    gaps = [rob.values[i] - unc.values[i] for i in idx]
    bands.append(
        BandResult(
            "robunc below rob at |delta| in {0.9, 1}",
            all(g >= 0 for g in gaps),
            "gaps " + ", ".join(f"{g:.4g}" for g in gaps),
        )
    )
    return bands, {"rob": rob_bound.to_dict(), "robunc": unc_bound.to_dict()}


def reproduce(cfg: ProblemConfig) -> Reproduction:
    P = cfg.plant()
    rep = Reproduction()
    rep.checks = check_plant(P, cfg.analysis.check_deltas)
    rep.levels, rep.controllers, rep.history = run_syntheses(P, cfg.synthesis)
    rep.curves = analyze(P, rep.controllers, cfg.analysis)
    rep.bands, rep.bounds = evaluate_bands(rep.levels, rep.curves)
    return rep
