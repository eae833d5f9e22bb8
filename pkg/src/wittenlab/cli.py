"""Command-line entry point ``wittenlab``.

Exit codes: 0 success, 1 unexpected library error, 2 configuration error,
3 bad input, 4 empty landscape, 5 critical window, 6 degenerate data,
7 solver did not converge, 8 predicted and observed counts differ,
10 a scenario acceptance threshold failed.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys

import numpy as np

from . import scenarios
from .arrhenius import _json_safe, classify, predict_window_spectrum
from .config import Scenario, parse_config, parse_h_list
from .errors import AcceptanceFailure, InputError, WittenLabError
from .field import LevelWindow, load_field
from .pipeline import (landscape_barcode, require, result_summary, run_sweep, stability_trial, verify)
from .scenarios import Landscape
from .spectra import reports_to_csv

log = logging.getLogger("wittenlab")

PLOT_STUB = '''"""Plot stub for {label}: reads the spectral CSV written next to it."""
import csv
import math
import sys

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
rows = [r for r in csv.DictReader(open(path)) if r["bar_id"] not in ("", "kernel")]
xs = [float(r["h"]) for r in rows]
ys = [-float(r["h"]) * float(r["lambda_log"]) for r in rows]
try:
    import matplotlib.pyplot as plt
except ImportError:
    for x, y in zip(xs, ys):
        print(x, y)
else:
    plt.plot(xs, ys, "o")
    plt.xlabel("h")
    plt.ylabel("-h log(lambda)")
    plt.savefig("{label}_rates.png")
'''


# ---- helpers ---------------------------------------------------------------

def _landscape(args) -> Landscape:
    if getattr(args, "input", None):
        fld = load_field(args.input)
        return Landscape(os.path.basename(args.input), fld, None)
    name = getattr(args, "scenario", None) or "double_well_1d"
    kw = {}
    if getattr(args, "K", None) is not None:
        if not name.startswith("kwell_symmetric"):
            raise InputError("--K only applies to kwell_symmetric")
        name = f"kwell_symmetric({args.K})"
    return scenarios.build(name, **kw)


def _window(args) -> LevelWindow:
    w = getattr(args, "window", None)
    return LevelWindow.full() if not w else LevelWindow.parse(w)


def _hs(args, land: Landscape) -> tuple:
    return parse_h_list(args.h) if getattr(args, "h", None) else tuple(land.default_h)


def _degrees(args):
    d = getattr(args, "degree", None)
    return None if d is None else (d,)


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _dump(obj) -> str:
    return json.dumps(_json_safe(obj), indent=1, sort_keys=True) + "\n"


# ---- subcommands -----------------------------------------------------------

def cmd_barcode(args) -> int:
    land = _landscape(args)
    bc = landscape_barcode(land, args.field_coeff)
    _write(bc.to_json(), args.out)
    return 0


def cmd_predict(args) -> int:
    land = _landscape(args)
    bc = landscape_barcode(land, args.field_coeff)
    pred = predict_window_spectrum(classify(bc, _window(args), land.field.topology.dim))
    _write(pred.to_json(), args.out)
    return 0


def cmd_spectrum(args) -> int:
    land = _landscape(args)
    res = run_sweep(land, _hs(args, land), _window(args), _degrees(args), args.field_coeff, args.method)
    _write(reports_to_csv(res.reports), args.out)
    return 0


def cmd_prefactor(args) -> int:
    land = _landscape(args)
    if land.predictor is None:
        raise InputError(f"scenario {land.name} has no prefactor model")
    rows = []
    for h in _hs(args, land):
        m = land.predicted_prefactor(h)
        ms = m if isinstance(m, list) else [m]
        rows.append({"h": h, "lambda_log": [v.log for v in ms]})
    _write(_dump({"scenario": land.name, "model": rows}), args.out)
    return 0


def cmd_verify(args) -> int:
    land = _landscape(args)
    res = run_sweep(land, _hs(args, land), _window(args), _degrees(args), args.field_coeff, args.method)
    verdicts = verify(res)
    for v in verdicts:
        print(v.line())
    if args.out:
        _write(_dump(result_summary(res, verdicts)), args.out)
    require(verdicts)
    return 0


def cmd_stability(args) -> int:
    land = _landscape(args)
    rng = np.random.default_rng(args.seed)
    hs = parse_h_list(args.h) if args.h else None
    baseline = run_sweep(land, hs, degrees=land.degrees, coefficient_field=args.field_coeff) if hs else None
    trials = [stability_trial(land, args.amplitude, rng, hs, args.field_coeff, baseline)
              for _ in range(args.trials)]
    ok = all(t["bottleneck_pass"] and t["spectral_pass"] for t in trials)
    _write(_dump({"scenario": land.name, "seed": args.seed, "trials": trials, "pass": ok}), args.out)
    if not ok:
        raise AcceptanceFailure("stability bound violated")
    return 0


def cmd_svcheck(args) -> int:
    from .svsuite import run_suites
    report = run_suites(args.trials, args.seed)
    for name, r in report.items():
        print(f"{'PASS' if r['violations'] == 0 else 'FAIL'} {name}: "
              f"{r['violations']} violations in {r['checked']} checked trials ({r['skipped']} skipped)")
    if args.out:
        _write(_dump(report), args.out)
    if any(r["violations"] for r in report.values()):
        raise AcceptanceFailure("singular-value bound violated")
    return 0


def scenario_from_args(args) -> Scenario:
    target = args.target
    if os.path.isfile(target):
        sc = parse_config(target)
    else:
        name = target
        if args.K is not None:
            name = f"kwell_symmetric({args.K})"
        land = scenarios.build(name)
        sc = Scenario(name=name, h=tuple(land.default_h))
    updates = {}
    if args.h:
        updates["h"] = parse_h_list(args.h)
    if args.window:
        updates["window"] = LevelWindow.parse(args.window)
    if args.degree is not None:
        updates["degrees"] = (args.degree,)
    if args.field_coeff:
        updates["coefficient_field"] = args.field_coeff
    if args.out:
        updates["out_dir"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    from dataclasses import replace
    return replace(sc, **updates)


def run_scenario(sc: Scenario, timestamp: bool = True) -> tuple:
    """Run a scenario and write its four reports and the plot stub; returns (verdicts, paths)."""
    if sc.input:
        land = Landscape(os.path.basename(sc.input), load_field(sc.input), None)
    else:
        land = scenarios.build(sc.name)
    res = run_sweep(land, sc.h, sc.window, sc.degrees, sc.coefficient_field, sc.method)
    verdicts = verify(res)
    base = os.path.join(sc.out_dir, sc.label)
    paths = {"barcode": base + "_barcode.json", "prediction": base + "_prediction.json",
             "spectrum": base + "_spectrum.csv", "summary": base + "_summary.json",
             "plot": base + "_plot.py"}
    summary = result_summary(res, verdicts)
    summary["seed"] = sc.seed
    summary["h"] = list(sc.h)
    if timestamp:
        summary["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    _write(res.barcode.to_json(), paths["barcode"])
    _write(res.prediction.to_json(), paths["prediction"])
    _write(reports_to_csv(res.reports), paths["spectrum"])
    _write(_dump(summary), paths["summary"])
    _write(PLOT_STUB.format(label=sc.label, csv=os.path.basename(paths["spectrum"])), paths["plot"])
    return verdicts, paths


def cmd_run(args) -> int:
    sc = scenario_from_args(args)
    verdicts, paths = run_scenario(sc)
    for v in verdicts:
        print(v.line())
    for k, p in paths.items():
        print(f"{k}: {p}")
    require(verdicts)
    return 0


# ---- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wittenlab", description=(
        "Persistence bar codes of sampled potentials and the exponentially small "
        "spectrum of their discrete Witten Laplacians."))
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, spectral=False):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--input", help="field file (.csv or .json)")
        src.add_argument("--scenario", help="builtin scenario, e.g. 'kwell_symmetric(4)'")
        p.add_argument("--K", type=int, help="number of wells for kwell_symmetric")
        p.add_argument("--field-coeff", default="GF(2)", help="GF(p) or Q (default GF(2))")
        p.add_argument("--out", help="output path (default stdout)")
        if spectral:
            p.add_argument("--h", help="comma-separated, strictly decreasing h values")
            p.add_argument("--window", help="level window 'a,b' or 'full'")
            p.add_argument("--degree", type=int, help="restrict to the block d^(p)")
            p.add_argument("--method", default="auto", choices=("auto", "structured", "jacobi", "lanczos"))

    p = sub.add_parser("barcode", help="bar code JSON of a field")
    common(p)
    p.set_defaults(func=cmd_barcode)

    p = sub.add_parser("predict", help="predicted small spectrum in a level window")
    common(p)
    p.add_argument("--window", help="level window 'a,b' or 'full'")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("spectrum", help="spectral CSV over an h sweep")
    common(p, spectral=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("prefactor", help="prefactor model over an h sweep")
    common(p)
    p.add_argument("--h", help="comma-separated, strictly decreasing h values")
    p.set_defaults(func=cmd_prefactor)

    p = sub.add_parser("verify", help="run a sweep and check the scenario thresholds")
    common(p, spectral=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stability", help="random perturbation trials")
    common(p)
    p.add_argument("--amplitude", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", help="also check fitted rates over this h sweep")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("svcheck", help="singular-value perturbation property suites")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_svcheck)

    p = sub.add_parser("run", help="run a builtin scenario or a scenario file and write all reports")
    p.add_argument("target", help="builtin scenario name or scenario file")
    p.add_argument("--h")
    p.add_argument("--window")
    p.add_argument("--degree", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--field-coeff")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except WittenLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
