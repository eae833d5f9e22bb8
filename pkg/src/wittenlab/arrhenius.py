"""Endpoint classification of a bar code in a level window and the predicted
structure of the exponentially small spectrum."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import InputError
from .field import LevelWindow, critical_levels
from .persistence import BarCode


@dataclass(frozen=True)
class EndpointClassification:
    """Per degree p, lists of (bar id, endpoint value).

    X[p]: births of bars of degree p with both endpoints in the window.
    Y[p]: deaths of bars of degree p-1 with both endpoints in the window.
    Z[p]: lonely endpoints of degree p (the partner endpoint lies outside).
    Bar ids index ``barcode.bars``.
    """
    barcode: BarCode
    window: LevelWindow
    X: tuple
    Y: tuple
    Z: tuple
    levels: tuple
    eta_f: float

    @property
    def max_degree(self) -> int:
        return len(self.X) - 1

    def J(self, p: int) -> list:
        return list(self.X[p]) + list(self.Y[p]) + list(self.Z[p])

    def counts(self, p: int) -> dict:
        return {"X": len(self.X[p]), "Y": len(self.Y[p]), "Z": len(self.Z[p]),
                "J": len(self.X[p]) + len(self.Y[p]) + len(self.Z[p])}

    def interior_compact(self, p: int) -> list:
        """Bar ids of degree p lying inside the window (the set A_c)."""
        return [bid for bid, _ in self.X[p]]


def classify(barcode: BarCode, window: LevelWindow, max_degree: int | None = None) -> EndpointClassification:
    crit = critical_levels(barcode)
    window.require_noncritical(crit.levels)
    if max_degree is None:
        max_degree = max((b.degree for b in barcode.bars), default=0)
    D = max_degree + 1
    X = [[] for _ in range(D)]
    Y = [[] for _ in range(D)]
    Z = [[] for _ in range(D)]
    for bid, bar in enumerate(barcode.bars):
        q = bar.degree
        bi = window.contains(bar.birth)
        di = bar.finite and window.contains(bar.death)
        if bi and di:
            X[q].append((bid, bar.birth))
            Y[q + 1].append((bid, bar.death))
        elif bi:
            Z[q].append((bid, bar.birth))
        elif di:
            Z[q + 1].append((bid, bar.death))
    return EndpointClassification(barcode, window, tuple(map(tuple, X)), tuple(map(tuple, Y)),
                                  tuple(map(tuple, Z)), crit.levels, crit.eta_f)


@dataclass(frozen=True)
class PredictedRate:
    bar_id: int
    rate: float        # 2 * (death - birth)
    block: str         # "d" (from X of this degree) or "d*" (from Y, the lower block)


@dataclass(frozen=True)
class SpectralPrediction:
    window: LevelWindow
    eta_f: float
    levels: tuple
    zero_multiplicity: tuple
    rates: tuple            # rates[p]: tuple of PredictedRate for the Laplacian in degree p
    small_singular: tuple   # small_singular[p]: tuple of PredictedRate for the block d^(p)

    def small_count(self, p: int) -> int:
        return self.zero_multiplicity[p] + len(self.rates[p])

    def to_dict(self) -> dict:
        return {
            "window": [self.window.a, self.window.b],
            "eta_f": self.eta_f,
            "levels": list(self.levels),
            "degrees": [
                {"degree": p,
                 "zero_multiplicity": self.zero_multiplicity[p],
                 "rates": [{"bar_id": r.bar_id, "rate": r.rate, "block": r.block}
                           for r in self.rates[p]],
                 "small_singular_values_of_d": [{"bar_id": r.bar_id, "rate": r.rate}
                                                for r in self.small_singular[p]]}
                for p in range(len(self.rates))],
        }

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), indent=1) + "\n"


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def predict_window_spectrum(cls: EndpointClassification) -> SpectralPrediction:
    bars = cls.barcode.bars
    D = cls.max_degree + 1
    rates = [[] for _ in range(D)]
    small = [[] for _ in range(D)]
    for p in range(D):
        for bid, _ in cls.X[p]:
            r = PredictedRate(bid, 2.0 * bars[bid].length, "d")
            small[p].append(r)
            rates[p].append(r)
            if p + 1 < D:
                rates[p + 1].append(PredictedRate(bid, r.rate, "d*"))
    return SpectralPrediction(cls.window, cls.eta_f, cls.levels,
                              tuple(len(z) for z in cls.Z),
                              tuple(tuple(sorted(r, key=lambda x: (x.rate, x.bar_id))) for r in rates),
                              tuple(tuple(sorted(s, key=lambda x: (x.rate, x.bar_id))) for s in small))


@dataclass(frozen=True)
class RoughBounds:
    log_r: float
    log_R: float
    empty: bool

    @property
    def r(self) -> float:
        return math.exp(self.log_r)

    @property
    def R(self) -> float:
        return math.exp(self.log_R)

    def contains_log(self, log_lam: float) -> bool:
        return self.log_r <= log_lam <= self.log_R


def rough_bounds(prediction: SpectralPrediction, h: float) -> dict:
    """Per degree, an interval [r(h), R(h)] holding every nonzero small eigenvalue.

    R(h) = exp(-2 eta_f / h) and r(h) = exp(-2 (c_N - c_1 + eta_f) / h),
    returned in log form.
    """
    if not h > 0:
        raise InputError("h must be positive")
    eta = prediction.eta_f
    out = {}
    for p, rs in enumerate(prediction.rates):
        if not rs or math.isnan(eta):
            out[p] = RoughBounds(math.nan, math.nan, True)
            continue
        span = prediction.levels[-1] - prediction.levels[0]
        out[p] = RoughBounds(-2.0 * (span + eta) / h, -2.0 * eta / h, False)
    return out
