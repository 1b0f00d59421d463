"""Command-line front end.

Exit codes: 0 success, 1 infeasible problem or failed validation,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import (
    RunReport,
    example_config,
    load_config,
    load_controller,
    save_controller,
)
from .errors import ConfigParseError, RobRegretError, UpperBoundInfeasible
from .pipeline import MODES, check_plant, curves_csv, reproduce, synthesize
from .regana import MODES as BASELINE_MODES
from .regana import regret_curve, validate_bound

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def version_stamp() -> dict:
    return {"robregret": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _apply_overrides(cfg, args):
    syn, ana = cfg.synthesis, cfg.analysis
    if getattr(args, "tol", None) is not None:
        syn = replace(syn, tol=args.tol)
    if getattr(args, "max_dk", None) is not None:
        syn = replace(syn, max_dk=args.max_dk)
    if getattr(args, "freq_grid", None) is not None:
        syn = replace(syn, freq_grid=args.freq_grid)
    if getattr(args, "delta_grid", None) is not None:
        ana = replace(ana, delta_grid=args.delta_grid)
    return replace(cfg, synthesis=syn, analysis=ana)


def _load(args):
    cfg = load_config(args.config) if args.config else example_config()
    return _apply_overrides(cfg, args)


def cmd_check(args) -> int:
    cfg = _load(args)
    P = cfg.plant()
    checks = check_plant(P, cfg.analysis.check_deltas)
    ok = all(c["ok"] for c in checks.values())
    for dl, c in checks.items():
        bad = [k for k in ("R_positive", "stabilizable", "nonsingular_shift", "full_column_rank") if not c[k]]
        print(f"delta={dl}: {'ok' if not bad else 'FAILED ' + ', '.join(bad)}")
    out = _out_dir(args)
    if out:
        RunReport(checks=checks, version=version_stamp()).save(out / "check.json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_synth(args) -> int:
    cfg = _load(args)
    P = cfg.plant()
    try:
        res = synthesize(P, args.mode, cfg.synthesis)
    except UpperBoundInfeasible as exc:
        print(f"infeasible: {exc}")
        return EXIT_FAIL
    print(f"{args.mode}: gamma = {res.gamma:.6g} after {len(res.history)} probes")
    if not res.monotone:
        print("warning: non-monotone feasibility observed")
    out = _out_dir(args)
    if out:
        save_controller(out / f"controller_{args.mode}.json", res.result.K, {"mode": args.mode, "gamma": res.gamma})
        report = RunReport(
            controllers={args.mode: {"gamma": res.gamma, "history": res.history, "log": res.result.log}},
            version=version_stamp(),
        )
        report.save(out / f"report_{args.mode}.json")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load(args)
    P = cfg.plant()
    curves, bounds, reports = [], {}, []
    for path in args.controller or []:
        K, meta = load_controller(path)
        tag = Path(path).stem
        c = regret_curve(K, P, cfg.analysis.delta_grid, args.baseline, tag=tag, freq_grid=cfg.analysis.freq_grid)
        curves.append(c)
        if "gamma" in meta:
            bounds[tag] = float(meta["gamma"])
            reports.append({"controller": tag, **validate_bound(c, bounds[tag]).to_dict()})
    text = curves_csv(curves, bounds)
    out = _out_dir(args)
    if out:
        (out / f"regret_{args.baseline}.csv").write_text(text)
        RunReport(
            curves=[{"tag": c.tag, "mode": c.baseline_mode, "deltas": c.deltas, "values": c.values} for c in curves],
            bounds=reports,
            version=version_stamp(),
        ).save(out / f"analysis_{args.baseline}.json")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = _apply_overrides(example_config(), args)
    t0 = time.perf_counter()
    rep = reproduce(cfg)
    elapsed = time.perf_counter() - t0
    for b in rep.bands:
        print(b.line())
    print(f"runtime {elapsed:.1f} s")
    out = _out_dir(args)
    if out:
        fig_nominal = [rep.curves[("ar", "nominal")], rep.curves[("rob", "nominal")]]
        fig_unc = [rep.curves[("rob", "uncertainty_dependent")], rep.curves[("robunc", "uncertainty_dependent")]]
        (out / "regret_nominal.csv").write_text(
            curves_csv(fig_nominal, {"K_ar": rep.levels["ar"], "K_rob": rep.levels["rob"]})
        )
        (out / "regret_uncertainty_dependent.csv").write_text(
            curves_csv(fig_unc, {"K_rob": rep.levels["rob"], "K_robunc": rep.levels["robunc"]})
        )
        for mode, K in rep.controllers.items():
            save_controller(out / f"controller_{mode}.json", K, {"mode": mode, "gamma": rep.levels[mode]})
        report = RunReport(
            controllers={m: {"gamma": rep.levels[m], **rep.history[m]} for m in MODES},
            curves=[
                {"tag": c.tag, "mode": c.baseline_mode, "deltas": c.deltas, "values": c.values}
                for c in rep.curves.values()
            ],
            bounds=[{"controller": k, **v} for k, v in rep.bounds.items()],
            checks=rep.checks,
            bands=[{"name": b.name, "passed": b.passed, "detail": b.detail} for b in rep.bands],
            version=version_stamp(),
        )
        report.save(out / "report.json")
        (out / "timing.json").write_text(json.dumps({"runtime_s": elapsed}) + "\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robregret", description="Robust regret-optimal controller synthesis.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="problem file (JSON); defaults to the built-in scalar example")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--delta-grid", type=int, dest="delta_grid")
        sp.add_argument("--freq-grid", type=int, dest="freq_grid", help="frequency grid of the D-step")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-dk", type=int, dest="max_dk")

    sp = sub.add_parser("check", help="check the baseline assumptions")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("synth", help="bisect the regret level for one controller type")
    common(sp)
    sp.add_argument("--mode", choices=MODES, required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("analyze", help="regret curves of saved controllers")
    common(sp)
    sp.add_argument("--controller", action="append", help="controller file; repeat for several")
    sp.add_argument("--baseline", choices=BASELINE_MODES, default="uncertainty_dependent")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("reproduce", aliases=["reproduce-paper"], help="run the full scalar example")
    common(sp, config=False)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RobRegretError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
