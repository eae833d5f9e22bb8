"""The end-to-end pipeline: field -> bar code -> prediction -> spectra -> fits.

The h-sweep runs in a thread pool capped by ``WITTENLAB_THREADS``; report
assembly is single-threaded and ordered by h, so outputs are deterministic.
"""
from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .arrhenius import SpectralPrediction, classify, predict_window_spectrum, _json_safe
from .errors import AcceptanceFailure, CountMismatchError, InputError
from .field import LevelWindow
from .persistence import BarCode, compute_barcode
from .prefactor import LogValue
from .scenarios import Landscape
from .spectra import (SpectralReport, build_report, match_and_fit, smallest_singular_values)
from .witten import ResolutionWarning, witten_complex

log = logging.getLogger(__name__)


def worker_count() -> int:
    raw = os.environ.get("WITTENLAB_THREADS", "")
    if not raw:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"WITTENLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise InputError("WITTENLAB_THREADS must be at least 1")
    return n


def landscape_barcode(land: Landscape, coefficient_field=None) -> BarCode:
    bc = compute_barcode(land.field, coefficient_field)
    tol = land.data.get("noise_floor")
    return bc.simplified(tol) if tol else bc


def _k_for(pred: SpectralPrediction, cls, op, p: int) -> int:
    """How many of the smallest singular values to request: the predicted
    small ones, the expected zeros of the shorter side, and one spare."""
    m, n = op.shape
    small = len(pred.small_singular[p]) if p < len(pred.small_singular) else 0
    top = op.field.topology.dim - 1
    Z = [len(z) for z in cls.Z] + [0, 0]
    if n <= m and p == 0:
        zeros = Z[0]
    elif m <= n and p == top:
        zeros = Z[p + 1]
    else:
        zeros = Z[p] + Z[p + 1]
    return min(m, n, small + zeros + 1)


def spectrum_at(land: Landscape, h: float, window: LevelWindow, degrees, pred, cls,
                method: str = "auto") -> SpectralReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        ops = witten_complex(land.field, h, None if window.is_full else window)
    svs = {}
    for p in degrees:
        op = ops[p]
        svs[p] = smallest_singular_values(op, _k_for(pred, cls, op, p), method)
    return build_report(h, svs, pred)


@dataclass
class PipelineResult:
    landscape: Landscape
    window: LevelWindow
    barcode: BarCode
    prediction: SpectralPrediction
    reports: list
    fits: dict = dc_field(default_factory=dict)
    fit_error: str = ""

    def observed_lambda_logs(self, report: SpectralReport) -> list:
        """Nonzero small eigenvalues (log), ascending."""
        return sorted(e.lambda_log for e in report.entries if e.bar_id != "kernel")

    def prefactor_table(self) -> list:
        """Per h, observed small eigenvalues next to the prefactor model."""
        rows = []
        for rep in self.reports:
            model = self.landscape.predicted_prefactor(rep.h)
            if model is None:
                continue
            models = model if isinstance(model, list) else [model]
            mlogs = sorted(m.log for m in models if m.sign)
            obs = self.observed_lambda_logs(rep)
            ratios = [math.exp(o - m) for o, m in zip(obs, mlogs)] if len(obs) == len(mlogs) else []
            rows.append({"h": rep.h, "observed_log": obs, "model_log": mlogs, "ratio": ratios})
        return rows


def run_sweep(land: Landscape, hs, window: LevelWindow | None = None, degrees=None,
              coefficient_field=None, method: str = "auto", threads: int | None = None) -> PipelineResult:
    hs = [float(h) for h in hs]
    if not hs or any(not h > 0 for h in hs):
        raise InputError("h values must be positive")
    window = LevelWindow.full() if window is None else window
    degrees = tuple(land.degrees if degrees is None else degrees)
    top = land.field.topology.dim - 1
    if any(p < 0 or p > top for p in degrees):
        raise InputError(f"degrees must lie in 0..{top}")
    bc = landscape_barcode(land, coefficient_field)
    cls = classify(bc, window, land.field.topology.dim)
    pred = predict_window_spectrum(cls)
    n = threads or worker_count()
    log.info("sweep %s over %d h values with %d workers", land.name, len(hs), n)
    if n == 1:
        reports = [spectrum_at(land, h, window, degrees, pred, cls, method) for h in hs]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            reports = list(ex.map(lambda h: spectrum_at(land, h, window, degrees, pred, cls, method), hs))
    res = PipelineResult(land, window, bc, pred, reports)
    if any(pred.small_singular[p] for p in degrees) and len(hs) >= 3:
        try:
            res.fits = match_and_fit(reports, _restrict(pred, degrees))
        except CountMismatchError as exc:
            res.fit_error = str(exc)
    return res


def _restrict(pred: SpectralPrediction, degrees) -> SpectralPrediction:
    small = tuple(pred.small_singular[p] if p in degrees else () for p in range(len(pred.small_singular)))
    return SpectralPrediction(pred.window, pred.eta_f, pred.levels, pred.zero_multiplicity,
                              pred.rates, small)


# ---- per-scenario acceptance ------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _counts_ok(res: PipelineResult) -> Verdict:
    bad = [r.h for r in res.reports if r.mismatch]
    return Verdict("counts", not bad, "counts match at every h" if not bad else f"count mismatch at h={bad}")


def _single_fit(res: PipelineResult):
    if len(res.fits) != 1:
        return None
    return next(iter(res.fits.values()))


def verify(res: PipelineResult) -> list:
    """Scenario-specific thresholds; every scenario also checks the counts."""
    out = [_counts_ok(res)]
    name = res.landscape.name.split("(")[0]
    fit = _single_fit(res)
    table = res.prefactor_table()
    if name == "double_well_1d" and fit is not None:
        out.append(Verdict("rate intercept", fit.intercept_rel_error <= 0.05,
                           f"intercept {fit.intercept:.5f} vs {fit.rate:.5f} ({100 * fit.intercept_rel_error:.2f}%)"))
        errs = [abs(r["ratio"][0] - 1) for r in table if r["ratio"]]
        mono = all(b <= a for a, b in zip(errs, errs[1:]))
        out.append(Verdict("prefactor", bool(errs) and errs[-1] <= 0.10 and mono,
                           "relative errors " + ", ".join(f"{e:.4f}" for e in errs)))
    elif name == "kwell_symmetric":
        ok, det = True, []
        for r in table:
            obs, mod = np.exp(r["observed_log"]), np.exp(r["model_log"])
            if len(obs) != len(mod) or not len(obs):
                ok = False
                det.append(f"h={r['h']}: {len(obs)} observed vs {len(mod)} predicted")
                continue
            o = obs / obs[0]
            m = mod / mod[0]
            err = float(np.max(np.abs(o / m - 1)))
            ok = ok and err <= 0.05
            det.append(f"h={r['h']}: ratios {np.round(o, 4).tolist()} (max err {err:.4f})")
        out.append(Verdict("circulant pattern", ok, "; ".join(det)))
    elif name == "piecewise_affine_1d" and fit is not None:
        last = table[-1]["ratio"][0] if table and table[-1]["ratio"] else math.nan
        out.append(Verdict("prefactor", abs(last - 1) <= 0.10,
                           f"ratio {last:.4f} at h={table[-1]['h'] if table else math.nan}"))
        out.append(Verdict("power", abs(fit.power) <= 0.10, f"fitted power {fit.power:.4f}"))
    elif name == "degenerate_min" and fit is not None:
        target = 1.25 if res.landscape.data.get("delta", 0) == 0 else 1.0
        tolp = 0.10 if target == 1.25 else 0.05
        out.append(Verdict("power", abs(fit.power - target) <= tolp, f"fitted power {fit.power:.4f} (target {target})"))
    elif name == "mexican_hat_2d" and fit is not None:
        n1 = [sum(1 for e in r.degree(1) if e.bar_id != "kernel") for r in res.reports]
        out.append(Verdict("d1 small count", all(c == 1 for c in n1), f"small values in d1: {n1}"))
        out.append(Verdict("rate intercept", abs(fit.intercept - 0.5) <= 0.08 * 0.5,
                           f"intercept {fit.intercept:.5f} vs 0.5"))
        out.append(Verdict("power", abs(fit.power - 0.5) <= 0.15, f"fitted power {fit.power:.4f}"))
    if res.fit_error:
        out.append(Verdict("fit", False, res.fit_error))
    return out


def require(verdicts: list):
    bad = [v for v in verdicts if not v.passed]
    if bad:
        raise AcceptanceFailure("; ".join(v.line() for v in bad))


def result_summary(res: PipelineResult, verdicts: list | None = None) -> dict:
    d = {
        "scenario": res.landscape.name,
        "window": [res.window.a, res.window.b],
        "fits": {str(k): v.to_dict() for k, v in res.fits.items()},
        "prefactors": res.prefactor_table(),
        "counts": [{"h": r.h, "counts": {str(p): c for p, c in r.counts.items()}} for r in res.reports],
    }
    if verdicts is not None:
        d["verdicts"] = [{"name": v.name, "passed": v.passed, "detail": v.detail} for v in verdicts]
    return _json_safe(d)


# ---- stability trials -------------------------------------------------------

def perturbed_landscape(land: Landscape, amplitude: float, rng: np.random.Generator) -> Landscape:
    from .scenarios import smooth_perturbation
    g = smooth_perturbation(land.field, amplitude, rng)
    return Landscape(f"{land.name}+perturbation", g, None, {}, None, land.default_h, land.degrees)


def stability_trial(land: Landscape, amplitude: float, rng: np.random.Generator, hs=None,
                    coefficient_field=None, baseline: PipelineResult | None = None) -> dict:
    """One perturbation trial: bar code stability, and with ``hs`` the
    spectral stability of every bar longer than 2 eps.

    The fitted rate of the partner of a surviving bar of length l must lie
    in [2l - 4 eps - tol, 2l + 4 eps + tol]. tol is the error of the fit on
    this h grid: |intercept - 2l| of the unperturbed ``baseline`` sweep, or
    the residual of the perturbed fit at the coarsest h if that is larger.
    """
    from .bottleneck import bottleneck_distance, stability_audit
    pert = perturbed_landscape(land, amplitude, rng)
    audit = stability_audit(land.field, pert.field, coefficient_field)
    out = {"amplitude": amplitude, "eps": audit["sup_diff"], "bottleneck": audit["distances"],
           "bottleneck_pass": audit["pass"], "bars": [], "spectral_pass": True}
    if not hs:
        return out
    eps = audit["sup_diff"]
    if baseline is None:
        baseline = run_sweep(land, hs, degrees=land.degrees, coefficient_field=coefficient_field, threads=1)
    Bf = baseline.barcode
    res = run_sweep(pert, hs, degrees=land.degrees, coefficient_field=coefficient_field, threads=1)
    Bg = res.barcode
    for p in land.degrees:
        ids_f = [k for k, b in enumerate(Bf.bars) if b.degree == p]
        ids_g = [k for k, b in enumerate(Bg.bars) if b.degree == p]
        _, match = bottleneck_distance(Bf, Bg, p)
        partner = {i: j for i, j in match.pairs if i is not None}
        for i, bid in enumerate(ids_f):
            bar = Bf.bars[bid]
            if not bar.finite or bar.length <= 2 * eps:
                continue
            j = partner.get(i)
            gid = ids_g[j] if j is not None else None
            fit = res.fits.get(gid)
            if fit is None:
                out["bars"].append({"degree": p, "ell": bar.length, "pass": False,
                                    "detail": res.fit_error or "no fitted partner"})
                out["spectral_pass"] = False
                continue
            base = baseline.fits.get(bid)
            tol = fit.coarse_error if base is None else max(fit.coarse_error, abs(base.intercept - 2 * bar.length))
            lo = 2 * bar.length - 4 * eps - tol
            hi = 2 * bar.length + 4 * eps + tol
            ok = lo <= fit.intercept <= hi
            out["bars"].append({"degree": p, "ell": bar.length, "rate": fit.intercept,
                                "interval": [lo, hi], "tol": tol, "pass": ok})
            out["spectral_pass"] = out["spectral_pass"] and ok
    return out
