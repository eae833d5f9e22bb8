"""Builtin landscapes used by the CLI and the acceptance suite.

Each builder returns a :class:`Landscape`: the sampled field plus whatever
continuum data (critical points, Hessians, slopes) the prefactor calculators
need for the comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import InputError
from .field import GridTopology, SampledField, sample
from .prefactor import (LogValue, MorseDatum, circulant_rates, degenerate_min_rate,
                        laplace_integral, mexican_hat_rate, morse_rate, piecewise_affine_rate)


@dataclass(frozen=True)
class Landscape:
    name: str
    field: SampledField
    func: Callable = dc_field(repr=False)
    data: dict = dc_field(default_factory=dict)
    predictor: Callable | None = dc_field(default=None, repr=False)
    default_h: tuple = (0.2, 0.15, 0.1, 0.07, 0.05)
    degrees: tuple = (0,)

    def predicted_prefactor(self, h: float) -> LogValue | None:
        """Prefactor model evaluated at h (None when the scenario has no model)."""
        return None if self.predictor is None else self.predictor(h)


def _critical_points_1d(F, dF, d2F, period=2 * math.pi, n=8001):
    g = np.linspace(-period / 2, period / 2, n)
    vals = dF(g)
    out = []
    for a, b, va, vb in zip(g[:-1], g[1:], vals[:-1], vals[1:]):
        if va == 0:
            out.append(float(a))
        elif va * vb < 0:
            out.append(brentq(dF, a, b, xtol=1e-14))
    return sorted(((float(F(c)), float(d2F(c)), float(c)) for c in out))


def cosine(n: int = 256) -> Landscape:
    F = np.cos
    return Landscape("cosine", sample(F, GridTopology.circle(n)), F, {}, None, (0.2, 0.1, 0.05))


def double_well_1d(n: int = 1024, scale: float = 2.0, c1: float = 0.3, c2: float = 0.2) -> Landscape:
    """Asymmetric double well scale * (cos 2t + c1 cos t + c2 sin t) on the circle."""
    F = lambda t: scale * (np.cos(2 * t) + c1 * np.cos(t) + c2 * np.sin(t))
    dF = lambda t: scale * (-2 * np.sin(2 * t) - c1 * np.sin(t) + c2 * np.cos(t))
    d2F = lambda t: scale * (-4 * np.cos(2 * t) - c1 * np.cos(t) - c2 * np.sin(t))
    crit = _critical_points_1d(F, dF, d2F)
    if len(crit) != 4:
        raise InputError("double_well_1d parameters do not give two wells")
    mins = [c for c in crit if c[1] > 0]
    maxs = [c for c in crit if c[1] < 0]
    x = max(mins)                 # the shallower minimum carries the finite bar
    y = min(maxs)                 # the lower saddle
    xd = MorseDatum(x[0], (), (x[1],))
    yd = MorseDatum(y[0], (y[1],), ())
    data = {"min": x, "saddle": y, "ell": y[0] - x[0],
            "C": math.sqrt(x[1] * abs(y[1]))}
    pred = lambda h: morse_rate(xd, yd, 1, h)
    return Landscape("double_well_1d", sample(F, GridTopology.circle(n)), F, data, pred)


def kwell_symmetric(K: int = 4, n: int = 1024) -> Landscape:
    """cos(K t): K equal wells joined cyclically through K equal saddles."""
    if K < 2:
        raise InputError("K must be at least 2")
    F = lambda t: np.cos(K * t)
    xd = MorseDatum(-1.0, (), (float(K * K),))
    yd = MorseDatum(1.0, (-float(K * K),), ())
    pred = lambda h: circulant_rates(K, xd, yd, h)
    return Landscape(f"kwell_symmetric({K})", sample(F, GridTopology.circle(n)), F,
                     {"K": K, "min": xd, "saddle": yd}, pred, (0.2, 0.15, 0.1))


def piecewise_affine_1d(n: int = 1024, values=(0.0, 1.0, -0.5, 1.5)) -> Landscape:
    """Piecewise-affine double well with kinks on the grid nodes n*k/4."""
    if n % 4:
        raise InputError("piecewise_affine_1d needs n divisible by 4")
    kx = np.arange(5) * (math.pi / 2)
    ky = np.array(list(values) + [values[0]], dtype=float)
    F = lambda t: np.interp(np.mod(t, 2 * math.pi), kx, ky)
    sl = np.diff(ky) / np.diff(kx)
    if not (ky[0] < ky[1] and ky[2] < ky[0] and ky[3] > ky[1]):
        raise InputError("values must be (min, low max, deep min, high max)")
    gap = float(ky[1] - ky[0])
    data = {"min_slopes": (float(sl[3]), float(sl[0])), "max_slopes": (float(sl[0]), float(sl[1])),
            "ell": gap}
    pred = lambda h: piecewise_affine_rate(data["min_slopes"], data["max_slopes"], gap, h)
    return Landscape("piecewise_affine_1d", sample(F, GridTopology.circle(n)), F, data, pred)


def degenerate_min(delta: float = 0.0, n: int = 1024, scale: float = 4.0, alpha: float = 0.6) -> Landscape:
    """Well with a tunable bottom at t = 0, deeper Morse well at t = pi.

    f = scale * (u^2 (1 - alpha u) + delta u) with u = 1 - cos t. The bottom
    at t = 0 is quartic for delta = 0 and quadratic (curvature scale*delta)
    for delta > 0. The two exit saddles are symmetric, so the predicted
    rate is twice the single-saddle formula.
    """
    if delta < 0:
        raise InputError("degenerate_min supports delta >= 0")
    F = lambda t: scale * ((1 - np.cos(t)) ** 2 * (1 - alpha * (1 - np.cos(t))) + delta * (1 - np.cos(t)))
    dF = lambda t: scale * np.sin(t) * (2 * (1 - np.cos(t)) - 3 * alpha * (1 - np.cos(t)) ** 2 + delta)
    crit = _critical_points_1d(F, dF, lambda t: (dF(t + 1e-5) - dF(t - 1e-5)) / 2e-5)
    maxs = [c for c in crit if c[1] < 0 and c[2] > 0]
    if not maxs:
        raise InputError("degenerate_min parameters give no barrier")
    y = maxs[0]
    d2y = float((F(y[2] + 1e-4) - 2 * F(y[2]) + F(y[2] - 1e-4)) / 1e-8)
    yd = MorseDatum(y[0], (d2y,), ())
    gap = y[0]

    def pred(h):
        I = laplace_integral(lambda t: 2 * F(t), h, (-y[2], y[2]))
        return degenerate_min_rate(yd, I, gap, h) * 2.0

    return Landscape(f"degenerate_min({delta:g})", sample(F, GridTopology.circle(n)), F,
                     {"saddle": yd, "ell": gap, "delta": delta}, pred)


def _hat_q(x):
    """x^2 near 0, flattened smoothly to zero slope at |x| = 2 (periodic in [-2, 2])."""
    a = np.abs(np.asarray(x, dtype=float))
    c, w = 1.3, 0.7
    k = math.pi / (2 * w)
    t = np.clip(a, c, 2.0)
    tail = c * c + 2 * (t * np.sin(k * (t - c)) / k + (np.cos(k * (t - c)) - 1) / k ** 2)
    return np.where(a <= c, a * a, tail)


def mexican_hat_2d(n: int = 128) -> Landscape:
    """Mexican hat (rho^2 - 1)^2 / 4 on the torus [-2, 2]^2.

    rho^2 = q(x) + q(y) equals x^2 + y^2 for max(|x|, |y|) <= 1.3, so the ring
    rho = 1 and the central maximum (value 1/4) are exact; q flattens at
    |x| = 2 to make the field periodic.
    """
    F = lambda x, y: (_hat_q(x) + _hat_q(y) - 1.0) ** 2 / 4.0
    topo = GridTopology("torus", (n, n), 4.0 / n, -2.0)
    pred = lambda h: mexican_hat_rate(h)
    return Landscape("mexican_hat_2d", sample(F, topo), F, {"ell": 0.25, "noise_floor": 1e-2}, pred,
                     (0.05, 0.04, 0.035, 0.03, 0.025), (1,))


def torus_flat(n: int = 8) -> Landscape:
    F = lambda x, y: 0.0 * x
    return Landscape("torus_flat", sample(F, GridTopology.torus(n, n)), F, {}, None, (1.0, 0.5, 0.25), (0, 1))


BUILTINS = {
    "cosine": cosine,
    "double_well_1d": double_well_1d,
    "kwell_symmetric": kwell_symmetric,
    "piecewise_affine_1d": piecewise_affine_1d,
    "degenerate_min": degenerate_min,
    "mexican_hat_2d": mexican_hat_2d,
    "torus_flat": torus_flat,
}


def parse_builtin(text: str) -> tuple:
    """``"kwell_symmetric(4)"`` -> ("kwell_symmetric", (4,)); bare names take no args."""
    text = text.strip()
    if "(" in text:
        if not text.endswith(")"):
            raise InputError(f"malformed scenario {text!r}")
        name, args = text[:-1].split("(", 1)
        vals = tuple(float(a) if any(ch in a for ch in ".eE") else int(a)
                     for a in (s.strip() for s in args.split(",")) if a)
    else:
        name, vals = text, ()
    if name not in BUILTINS:
        raise InputError(f"unknown scenario {name!r}; builtins: {', '.join(sorted(BUILTINS))}")
    return name, vals


def build(text: str, **kwargs) -> Landscape:
    name, args = parse_builtin(text)
    return BUILTINS[name](*args, **kwargs)


def random_landscape_1d(rng: np.random.Generator, n: int = 512, n_wells: int | None = None,
                        min_gap: float = 0.25, pool: int | None = None) -> SampledField:
    """Random alternating extrema on the circle joined by half-cosine arcs.

    Extremum values are drawn from ``min_gap * {0, ..., pool - 1}`` (pool
    defaults to 4 * wells), so distinct critical values differ by at least
    ``min_gap`` and the value range is below ``pool * min_gap``.
    """
    K = int(n_wells or rng.integers(2, 6))
    pool = 4 * K if pool is None else int(pool)
    if pool < 2 * K:
        raise InputError("pool must hold at least two levels per well")
    while True:
        levels = np.sort(rng.choice(np.arange(0, pool), size=2 * K, replace=False)) * min_gap
        mins = rng.permutation(levels[:K])
        maxs = rng.permutation(levels[K:])
        # a maximum must exceed both neighbouring minima: draw until it holds
        ok = all(maxs[i] > mins[i] and maxs[i] > mins[(i + 1) % K] for i in range(K))
        if ok:
            break
    cuts = np.sort(rng.choice(np.arange(1, n), size=2 * K - 1, replace=False))
    knots = np.concatenate([[0], cuts, [n]])
    vals = np.empty(2 * K + 1)
    vals[0:2 * K:2] = mins
    vals[1:2 * K:2] = maxs
    vals[2 * K] = mins[0]
    out = np.empty(n)
    for s in range(2 * K):
        a, b = knots[s], knots[s + 1]
        t = (np.arange(a, b) - a) / (b - a)
        out[a:b] = vals[s] + (vals[s + 1] - vals[s]) * (1 - np.cos(math.pi * t)) / 2
    return SampledField(GridTopology.circle(n), out)


def random_landscape_torus(rng: np.random.Generator, n: int = 16, n_modes: int = 3) -> SampledField:
    """Random low-frequency trigonometric field on a torus(n, n)."""
    topo = GridTopology.torus(n, n)
    x, y = topo.node_coords()
    f = np.zeros_like(x)
    for _ in range(n_modes):
        kx, ky = rng.integers(0, 3, size=2)
        if kx == 0 and ky == 0:
            kx = 1
        f += rng.uniform(0.5, 1.5) * np.cos(kx * x + ky * y + rng.uniform(0, 2 * math.pi))
    return SampledField(topo, f)


def random_separable_torus(rng: np.random.Generator, n: int = 16, n_wells: int = 2,
                           min_gap: float = 0.25, pool: int | None = None) -> SampledField:
    """g1(x) + g2(y) on a torus(n, n) from two random 1D landscapes.

    Critical values are sums of the 1D ones, so they stay on the lattice
    ``min_gap * Z`` and distinct levels differ by at least ``min_gap``.
    """
    g1 = random_landscape_1d(rng, n, n_wells, min_gap, pool).values
    g2 = random_landscape_1d(rng, n, n_wells, min_gap, pool).values
    return SampledField(GridTopology.torus(n, n), (g1[:, None] + g2[None, :]).ravel())


def smooth_perturbation(field: SampledField, amplitude: float, rng: np.random.Generator,
                        modes: int = 4) -> SampledField:
    """field + g with g a random low-frequency trigonometric sum, sup|g| = amplitude on the grid."""
    if not amplitude >= 0:
        raise InputError("amplitude must be non-negative")
    topo = field.topology
    coords = topo.node_coords()
    coords = coords if isinstance(coords, tuple) else (coords,)
    L = topo.extent
    g = np.zeros(topo.n_nodes)
    for _ in range(modes):
        phase = rng.uniform(0, 2 * math.pi)
        arg = phase
        for c, ext in zip(coords, L):
            arg = arg + 2 * math.pi * rng.integers(0, 4) * np.ravel(c) / ext
        g += rng.standard_normal() * np.cos(arg)
    m = float(np.max(np.abs(g)))
    if m == 0:
        g[:] = 1.0
        m = 1.0
    return field.with_values(field.values + amplitude * g / m)
