"""Bottleneck distance between bar codes and the stability audit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import TopologyMismatchError
from .persistence import BarCode, compute_barcode

DIAGONAL = None


@dataclass(frozen=True)
class Matching:
    """``pairs`` holds (index in B1 or None, index in B2 or None); None is the diagonal."""
    pairs: tuple
    cost: float


def _pair_cost(x, y):
    db = abs(x[0] - y[0])
    if math.isinf(x[1]) and math.isinf(y[1]):
        dd = 0.0  # |inf - inf| = 0
    else:
        dd = abs(x[1] - y[1])
    return max(db, dd)


def _feasible(P, Q, t):
    """Perfect matching of P+diag vs Q+diag using only pairs with cost <= t."""
    n1, n2 = len(P), len(Q)
    size = n1 + n2
    rows, cols = [], []
    for i, x in enumerate(P):
        for j, y in enumerate(Q):
            if _pair_cost(x, y) <= t:
                rows.append(i)
                cols.append(j)
        if (x[1] - x[0]) / 2 <= t:
            rows.append(i)
            cols.append(n2 + i)
    for j, y in enumerate(Q):
        if (y[1] - y[0]) / 2 <= t:
            rows.append(n1 + j)
            cols.append(j)
    for i in range(n1):           # diagonal-to-diagonal is free
        for j in range(n2):
            rows.append(n1 + j)
            cols.append(n2 + i)
    if size == 0:
        return True, []
    g = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    match = maximum_bipartite_matching(g, perm_type="column")
    if np.any(match < 0):
        return False, None
    pairs = []
    for r, c in enumerate(match):
        i = r if r < n1 else None
        j = c if c < n2 else None
        if i is not None or j is not None:
            pairs.append((i, j))
    return True, pairs


def _finite_bottleneck(P, Q):
    if not P and not Q:
        return 0.0, []
    cands = {0.0}
    for x in P:
        cands.add((x[1] - x[0]) / 2)
        for y in Q:
            cands.add(abs(x[0] - y[0]))
            cands.add(abs(x[1] - y[1]))
    for y in Q:
        cands.add((y[1] - y[0]) / 2)
    cands = sorted(cands)
    lo, hi = 0, len(cands) - 1
    ok, best = _feasible(P, Q, cands[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        ok, pairs = _feasible(P, Q, cands[mid])
        if ok:
            hi, best = mid, pairs
        else:
            lo = mid + 1
    if best is None:
        best = _feasible(P, Q, cands[hi])[1]
    return cands[hi], best


def bottleneck_distance(B1: BarCode, B2: BarCode, degree: int):
    """Exact bottleneck distance restricted to one degree, with a witness matching.

    Infinite bars are matched among themselves by sorted birth (optimal on a
    line); a differing count of infinite bars gives +inf.
    """
    bars1 = [b for b in B1.bars if b.degree == degree]
    bars2 = [b for b in B2.bars if b.degree == degree]
    inf1 = [(k, b) for k, b in enumerate(bars1) if not b.finite]
    inf2 = [(k, b) for k, b in enumerate(bars2) if not b.finite]
    if len(inf1) != len(inf2):
        return math.inf, Matching((), math.inf)
    inf1.sort(key=lambda kb: kb[1].birth)
    inf2.sort(key=lambda kb: kb[1].birth)
    pairs = []
    d_inf = 0.0
    for (k1, b1), (k2, b2) in zip(inf1, inf2):
        d_inf = max(d_inf, abs(b1.birth - b2.birth))
        pairs.append((k1, k2))
    fin1 = [(k, b) for k, b in enumerate(bars1) if b.finite]
    fin2 = [(k, b) for k, b in enumerate(bars2) if b.finite]
    d_fin, fpairs = _finite_bottleneck([(b.birth, b.death) for _, b in fin1],
                                       [(b.birth, b.death) for _, b in fin2])
    for i, j in fpairs:
        pairs.append((fin1[i][0] if i is not None else DIAGONAL,
                      fin2[j][0] if j is not None else DIAGONAL))
    d = max(d_inf, d_fin)
    return d, Matching(tuple(pairs), d)


def matching_cost(B1: BarCode, B2: BarCode, degree: int, matching: Matching) -> float:
    """Recompute the cost of a matching (used to check witnesses)."""
    bars1 = [b for b in B1.bars if b.degree == degree]
    bars2 = [b for b in B2.bars if b.degree == degree]
    cost = 0.0
    for i, j in matching.pairs:
        if i is not None and j is not None:
            c = _pair_cost((bars1[i].birth, bars1[i].death), (bars2[j].birth, bars2[j].death))
        elif i is not None:
            c = bars1[i].length / 2
        else:
            c = bars2[j].length / 2
        cost = max(cost, c)
    return cost


def stability_audit(f, g, coefficient_field=None) -> dict:
    """Check d_bot(B(f), B(g)) <= sup|f - g| in every degree.

    The tolerance is one candidate-cost quantum: 64 ulps of the largest
    field magnitude, which absorbs rounding in endpoint differences.
    """
    if f.topology != g.topology:
        raise TopologyMismatchError("fields live on different grids")
    sup = float(np.max(np.abs(f.values - g.values))) if f.values.size else 0.0
    scale = max(float(np.max(np.abs(f.values))), float(np.max(np.abs(g.values))), 1.0)
    tol = 64 * np.finfo(float).eps * scale
    Bf = compute_barcode(f, coefficient_field)
    Bg = compute_barcode(g, coefficient_field)
    dists = {}
    ok = True
    for p in range(f.topology.dim + 1):
        d, _ = bottleneck_distance(Bf, Bg, p)
        dists[p] = d
        ok = ok and d <= sup + tol
    return {"sup_diff": sup, "distances": dists, "tolerance": tol, "pass": bool(ok)}
