"""End-to-end acceptance checks.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion number.
"""
import math
import time
import warnings

import numpy as np
import pytest
import sympy

from wittenlab import scenarios
from wittenlab.arrhenius import classify
from wittenlab.field import LevelWindow, critical_levels
from wittenlab.persistence import build_filtration, compute_barcode, relative_betti
from wittenlab.pipeline import require, run_sweep, stability_trial, verify
from wittenlab.prefactor import KappaSystem, MorseDatum, kappa_rates
from wittenlab.spectra import count_block, kernel_dimensions
from wittenlab.svsuite import run_suites
from wittenlab.witten import ResolutionWarning, witten_complex

pytestmark = [pytest.mark.slow, pytest.mark.filterwarnings("ignore::wittenlab.witten.ResolutionWarning")]

SWEEP = (0.2, 0.15, 0.1, 0.07, 0.05)


def crit(n, title):
    return pytest.mark.criterion(n, title)


def _timed(fn, *a, **kw):
    t = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t


@pytest.fixture(scope="module")
def double_well():
    land = scenarios.double_well_1d()
    res, dt = _timed(run_sweep, land, SWEEP)
    return res, dt


def _verdict(verdicts, name):
    return next(v for v in verdicts if v.name == name)


@crit(1, "double well: fitted rate intercept within 5% of 2*ell, under 60 s")
def test_double_well_rate(double_well):
    res, dt = double_well
    assert len(res.barcode.finite_bars()) == 1
    fit = next(iter(res.fits.values()))
    assert fit.rate == pytest.approx(2 * res.barcode.finite_bars()[0].length)
    assert fit.intercept_rel_error <= 0.05, _verdict(verify(res), "rate intercept").detail
    assert dt < 60


@crit(2, "double well prefactor within 10% at h=0.05, improving monotonically, under 60 s")
def test_double_well_prefactor(double_well):
    res, dt = double_well
    table = res.prefactor_table()
    errs = [abs(r["ratio"][0] - 1) for r in table]
    assert [r["h"] for r in table] == list(SWEEP)
    assert errs[-1] <= 0.10
    assert all(b <= a for a, b in zip(errs, errs[1:])), errs
    assert dt < 60


@crit(3, "degenerate bottom: prefactor power 1.25 +- 0.10; Morse bottom 1.00 +- 0.05")
@pytest.mark.parametrize("delta, target, tol", [(0.0, 1.25, 0.10), (0.3, 1.00, 0.05)])
def test_degenerate_minimum_power(delta, target, tol):
    res = run_sweep(scenarios.degenerate_min(delta), SWEEP)
    require(verify(res))
    fit = next(iter(res.fits.values()))
    assert abs(fit.power - target) <= tol, fit.power


def _count_case(f, window, max_degree):
    bc = compute_barcode(f)
    cls = classify(bc, window, max_degree)
    levels = classify(bc, LevelWindow.full(), max_degree).levels
    span = levels[-1] - levels[0]
    h = 0.8 * cls.eta_f
    ops = witten_complex(f, h, None if window.is_full else window)
    counts = [count_block(op, cls.eta_f, span, h) for op in ops]
    small = [c.n_small for c in counts]
    return (small, [len(cls.X[p]) for p in range(len(ops))],
            kernel_dimensions(ops, counts), [len(z) for z in cls.Z])


def _window_between(levels, values, rng):
    """A window whose ends sit strictly between consecutive levels (or outside
    the level range) and avoid every grid value."""
    levels = np.asarray(levels)
    ends = []
    for i in sorted(rng.choice(len(levels) + 1, 2, replace=False)):
        lo = levels[i - 1] if i > 0 else levels[0] - 1.0
        hi = levels[i] if i < len(levels) else levels[-1] + 1.0
        for frac in (0.37, 0.41, 0.29, 0.53):
            t = lo + frac * (hi - lo)
            if t not in values:
                break
        ends.append(t)
    return LevelWindow(*ends)


@crit(4, "counting: small singular values = #X and kernel dimensions = #Z, exact")
def test_counting_random_landscapes():
    rng = np.random.default_rng(404)
    fields = [scenarios.random_landscape_1d(rng, 512) for _ in range(20)]
    fields += [scenarios.random_separable_torus(rng, 16, pool=6) for _ in range(3)]
    cases = 0
    for f in fields:
        dim = f.topology.dim
        levels = classify(compute_barcode(f), LevelWindow.full(), dim).levels
        for w in (LevelWindow.full(), _window_between(levels, set(f.values.tolist()), rng)):
            small, X, ker, Z = _count_case(f, w, dim)
            assert small == X[:len(small)], (f.topology, w)
            assert ker == Z, (f.topology, w)
            cases += 1
    assert cases == 46


def _corpus():
    rng = np.random.default_rng(505)
    out = [(name, scenarios.build(name).field) for name in
           ("cosine", "double_well_1d", "kwell_symmetric(4)", "piecewise_affine_1d",
            "degenerate_min(0)", "degenerate_min(0.3)", "torus_flat")]
    out.append(("mexican_hat_2d(32)", scenarios.mexican_hat_2d(32).field))
    out += [(f"random_1d[{k}]", scenarios.random_landscape_1d(rng, 128)) for k in range(3)]
    out += [(f"random_torus[{k}]", scenarios.random_separable_torus(rng, 10)) for k in range(2)]
    return out


def _all_windows(levels, values):
    """One window for every pair of gaps between consecutive levels, with the
    two unbounded gaps closed off beyond the level range."""
    levels = np.asarray(levels, dtype=float)
    pts = []
    for i in range(len(levels) + 1):
        lo = levels[i - 1] if i > 0 else levels[0] - 1.0
        hi = levels[i] if i < len(levels) else levels[-1] + 1.0
        t = next(lo + fr * (hi - lo) for fr in (0.5, 0.37, 0.41, 0.29, 0.61) if lo + fr * (hi - lo) not in values)
        pts.append(t)
    return [LevelWindow(a, b) for k, a in enumerate(pts) for b in pts[k + 1:]]


@crit(5, "bar counting equals relative Betti numbers over GF(2) and Q, exact")
@pytest.mark.parametrize("coeff", ["GF(2)", "Q"])
def test_barcode_betti_oracle(coeff):
    checked = 0
    for name, f in _corpus():
        bc = compute_barcode(f, coeff)
        filt = build_filtration(f)
        for w in _all_windows(critical_levels(bc).levels, set(f.values.tolist())):
            for p in range(f.topology.dim + 1):
                assert bc.count_lonely(w, p) == relative_betti(filt, w, p, coeff), (name, w, p)
                checked += 1
    assert checked > 100


STAB_HS = (0.2, 0.15, 0.1, 0.07, 0.05)


@pytest.fixture(scope="module")
def stability_trials():
    land = scenarios.double_well_1d(512)
    baseline = run_sweep(land, STAB_HS)
    rng = np.random.default_rng(606)
    amps = rng.uniform(0.01, 0.2, size=100)
    return land, [stability_trial(land, float(a), rng, STAB_HS, baseline=baseline) for a in amps]


@crit(6, "bottleneck distance at most the sup-norm perturbation in 100 trials")
def test_bottleneck_stability(stability_trials):
    _, trials = stability_trials
    assert len(trials) == 100
    assert min(t["amplitude"] for t in trials) >= 0.01 and max(t["amplitude"] for t in trials) <= 0.2
    bad = [t for t in trials if not t["bottleneck_pass"]]
    assert not bad, bad[:3]


@crit(7, "fitted rate of each surviving bar within [2l - 4eps - tol, 2l + 4eps + tol] in 100 trials")
def test_spectral_stability(stability_trials):
    land, trials = stability_trials
    ell_min = min(b.length for b in compute_barcode(land.field).finite_bars())
    eligible = [t for t in trials if t["eps"] < ell_min / 4]
    assert len(eligible) == 100
    assert all(t["bars"] for t in eligible)
    bad = [t for t in eligible if not t["spectral_pass"]]
    assert not bad, bad[:3]


@crit(8, "four symmetric wells: small eigenvalue ratios 1:2:1 within 5%, one kernel value")
def test_four_wells():
    res = run_sweep(scenarios.kwell_symmetric(4), SWEEP)
    require(verify(res))
    for rep in res.reports:
        assert sum(e.bar_id == "kernel" for e in rep.entries) == 1
        lam = np.sort(np.exp(res.observed_lambda_logs(rep)))
        assert len(lam) == 3
        assert lam / lam[0] == pytest.approx([1.0, 1.0, 2.0], rel=0.05)


@crit(9, "piecewise-affine well: prefactor within 10% at h=0.05 and power 0.0 +- 0.1")
def test_piecewise_affine():
    res = run_sweep(scenarios.piecewise_affine_1d(), SWEEP)
    require(verify(res))
    fit = next(iter(res.fits.values()))
    last = res.prefactor_table()[-1]
    assert last["h"] == 0.05 and abs(last["ratio"][0] - 1) <= 0.10
    assert abs(fit.power) <= 0.10


@crit(10, "Mexican hat on torus(128,128): one small d1 value, rate within 8% of 1/2, power 0.5 +- 0.15")
def test_mexican_hat():
    land = scenarios.mexican_hat_2d(128)
    res, dt = _timed(run_sweep, land, land.default_h)
    require(verify(res))
    fit = next(iter(res.fits.values()))
    assert abs(fit.intercept - 0.5) <= 0.04
    assert abs(fit.power - 0.5) <= 0.15
    assert dt < 600


def _kappa_example(delta, h):
    x1, x2 = MorseDatum(0.0, (), (2.0,)), MorseDatum(0.0, (), (3.0,))
    y1, y2 = MorseDatum(1.0, (-1.5,), ()), MorseDatum(1.0, (-4.0,), ())
    return KappaSystem(((1, -1), (0, 1)), (x1, x2), (y1, y2), delta, (-1, 0), (0, 0))


@crit(11, "kappa rates: offset example within 1% as delta/h grows; 2x2 symbolic oracle to 1e-12")
@pytest.mark.parametrize("ratio", [5, 10, 20])
def test_kappa_offset_limits(ratio):
    # path: h = 0.1 fixed, delta = ratio * h
    h = 0.1
    delta = ratio * h
    lam = sorted((v.value for v in kappa_rates(_kappa_example(delta, h), h)), reverse=True)
    big = (h / math.pi) * math.sqrt(3.0 * 4.0) * math.exp(-2 * 1.0 / h)
    small = (h / math.pi) * math.sqrt(2.0 * 1.5) * math.exp(-2 * (1.0 + delta) / h)
    assert lam[0] == pytest.approx(big, rel=0.01)
    assert lam[1] == pytest.approx(small, rel=0.01)


@crit(11, "kappa rates: offset example within 1% as delta/h grows; 2x2 symbolic oracle to 1e-12")
@pytest.mark.parametrize("case", range(3))
def test_kappa_symbolic_oracle(case):
    R = sympy.Rational
    data = [
        (((2, -1), (1, 3)), (R(3, 10), R(-1, 5)), (R(17, 10), R(29, 10)), (R(11, 10), R(9, 10)),
         (R(-4, 5), R(-31, 10)), R(7, 100), (R(2, 5), R(-13, 10)), (R(2), R(1, 2)), R(13, 100)),
        (((1, 1), (1, -1)), (R(0), R(1, 4)), (R(1), R(5, 2)), (R(3, 2), R(7, 4)),
         (R(-2), R(-1, 3)), R(1, 10), (R(0), R(1)), (R(-1), R(0)), R(1, 5)),
        (((3, 0), (-2, 5)), (R(-1, 2), R(1, 3)), (R(7, 3), R(1, 7)), (R(2), R(5, 4)),
         (R(-9, 4), R(-1)), R(1, 20), (R(3), R(-2)), (R(1), R(1, 2)), R(1, 12)),
    ][case]
    kap, xv, xpos, yv, yneg, delta, lo_off, up_off, h = data
    lower = tuple(MorseDatum(float(v), (), (float(l),)) for v, l in zip(xv, xpos))
    upper = tuple(MorseDatum(float(v), (float(l),), ()) for v, l in zip(yv, yneg))
    sys = KappaSystem(kap, lower, upper, float(delta), tuple(map(float, lo_off)), tuple(map(float, up_off)))
    got = sorted((v.log for v in kappa_rates(sys, float(h))), reverse=True)

    def dscale(value, neg, pos, off):
        return neg ** R(1, 4) * pos ** R(-1, 4) * sympy.exp(-(value + delta * off) / h)

    Dl = sympy.diag(*[dscale(v, 1, l, t) for v, l, t in zip(xv, xpos, lo_off)])
    Du = sympy.diag(*[dscale(v, -l, 1, t) for v, l, t in zip(yv, yneg, up_off)])
    M = sympy.sqrt(h / sympy.pi) * Dl.inv() * sympy.Matrix(kap) * Du
    fro2 = sum(e ** 2 for e in M)
    det2 = M.det() ** 2
    disc = sympy.sqrt(fro2 ** 2 - 4 * det2)
    oracle = [sympy.log((fro2 + disc) / 2), sympy.log(2 * det2 / (fro2 + disc))]
    for g, o in zip(got, oracle):
        ov = float(o.evalf(50))
        assert abs(g - ov) <= 1e-12 * max(1.0, abs(ov))


@crit(12, "singular-value toolkit: 1000-trial suites with zero violations; multadd gap slope")
def test_svtoolkit_suites():
    report = run_suites(trials=1000, seed=0)
    for name, r in report.items():
        assert r["violations"] == 0, (name, r)
        assert r["checked"] > 0, name
    assert report["multadd_sweep"]["violations"] == 0
