"""Randomized property suites over the checks in :mod:`wittenlab.svtoolkit`.

Each suite draws instances with ambient dimension at most 12 (well under
the cap of 64), runs one check, and counts violations among instances whose
hypotheses hold; instances with violated hypotheses are counted as skipped.
"""
from __future__ import annotations

import math

import numpy as np

from . import svtoolkit as sv


def _dims(rng, lo=2, hi=10):
    n = int(rng.integers(lo, hi + 1))
    k = int(rng.integers(1, n))
    return n, k


def _split(rng, n, angle):
    """An angle-tilted (non-orthogonal) decomposition of R^n into two parts."""
    k = int(rng.integers(1, n))
    E1 = sv.Subspace.random(n, k, rng)
    E2 = E1.complement().tilted(angle, rng)
    return E1, E2


def trial_projected(rng):
    n, k = _dims(rng)
    F = sv.Subspace.random(n, k, rng)
    E = F.tilted(rng.uniform(0, 0.45), rng)
    G = F.tilted(rng.uniform(0, 0.45), rng)
    return sv.check_projected_sv(sv.random_graded(n, n, rng), E, F, G)


def trial_bases(rng):
    m, p = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    Phi = sv.random_eps_unitary(m, m, rng.uniform(0, 0.9), rng)
    Psi = sv.random_eps_unitary(p, p, rng.uniform(0, 0.9), rng)
    return sv.check_eps_orthonormal_bases(sv.random_graded(p, m, rng), Phi, Psi)


def _block_operator(E1, E2, F1, F2, rng):
    B1 = sv.random_graded(F1.dim, E1.dim, rng, 3)
    B2 = sv.random_graded(F2.dim, E2.dim, rng, 3)
    left = np.hstack([F1.frame @ B1, F2.frame @ B2])
    return left @ np.linalg.inv(np.hstack([E1.frame, E2.frame]))


def trial_blocks(rng):
    n = int(rng.integers(2, 10))
    E1, E2 = _split(rng, n, rng.uniform(0, 0.6))
    k1 = int(rng.integers(1, n))
    F1 = sv.Subspace.random(n, k1, rng)
    F2 = F1.complement().tilted(rng.uniform(0, 0.6), rng)
    if E1.dim != F1.dim:
        # match the block shapes so that B E' lands in F'
        F1 = sv.Subspace.random(n, E1.dim, rng)
        F2 = F1.complement().tilted(rng.uniform(0, 0.6), rng)
    return sv.check_eps_orthogonal_blocks(_block_operator(E1, E2, F1, F2, rng), E1, E2, F1, F2)


def trial_split_off(rng):
    n = int(rng.integers(2, 10))
    E1, E2 = _split(rng, n, rng.uniform(0, 0.5))
    BE1 = sv.random_graded(n, E1.dim, rng, 2)
    s = np.linalg.svd(BE1, compute_uv=False)
    BE2 = sv.random_graded(n, E2.dim, rng, 2)
    BE2 *= s[-1] * 10 ** rng.uniform(-4, -1) / max(sv.opnorm(BE2), 1e-300)
    B = np.hstack([BE1, BE2]) @ np.linalg.inv(np.hstack([E1.frame, E2.frame]))
    return sv.check_split_off(B, E1, E2)


def trial_chain(rng):
    m, p = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    C = sv.random_eps_unitary(p, p, rng.uniform(0, 0.9), rng)
    A = sv.random_eps_unitary(m, m, rng.uniform(0, 0.9), rng)
    return sv.check_unitary_chain(C, sv.random_graded(p, m, rng), A)


def trial_additive(rng):
    m, p = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    B1 = sv.random_graded(p, m, rng)
    B2 = B1 + 10 ** rng.uniform(-8, -1) * rng.standard_normal((p, m))
    return sv.check_additive(B1, B2, int(rng.integers(1, min(m, p) + 1)))


def trial_factorization(rng):
    n = int(rng.integers(2, 10))
    k = int(rng.integers(1, n))
    F = sv.Subspace.random(n, k, rng)
    E = sv.Subspace.random(n, int(rng.integers(1, k + 1)), rng)
    G = F.tilted(rng.uniform(0, 0.3), rng)
    B = rng.standard_normal((n, n))
    X = F.projector @ B @ E.frame
    Y = B @ E.frame
    Xp = np.linalg.pinv(X)
    C = Y @ Xp + F.projector - X @ Xp
    return sv.check_factorization(B, E, F, G, C)


def trial_image(rng):
    """Returns True when every image-lemma identity holds."""
    m = int(rng.integers(1, 9))
    n = int(rng.integers(1, m + 1))
    A = sv.random_eps_unitary(m, n, rng.uniform(0, 0.9), rng)
    v = sv.image_lemma_values(A)
    ok = abs(v["gram_defect"] - v["abs_defect"]) <= 1e-12
    ok &= abs(v["identity_defect"] - v["abs_defect"]) <= 1e-12
    eps = v["gram_defect"] * (1 + 1e-9) + 1e-12
    ok &= (v["unitary_defect"] <= eps) == (v["gram_defect"] <= eps and v["onto"])
    H1 = sv.Subspace.random(m + 2, max(1, n // 2), rng)
    H2 = H1.complement().tilted(rng.uniform(0, 0.8), rng)
    gd, pe = sv.decomposition_gram_defect(H1, H2)
    ok &= abs(gd - pe) <= 1e-12
    return bool(ok)


def trial_triangle(rng):
    n = int(rng.integers(2, 10))
    E, F, G = (sv.Subspace.random(n, int(rng.integers(1, n + 1)), rng) for _ in range(3))
    return sv.vec_d(E, G) <= sv.vec_d(E, F) + sv.vec_d(F, G) + 1e-12


def trial_multadd(rng):
    rho = 10 ** rng.uniform(-4, -2)
    return sv.check_multadd(*sv.multadd_instance(rho, rng), rho)


SUITES = {
    "projected": trial_projected,
    "eps_orthonormal_bases": trial_bases,
    "eps_orthogonal_blocks": trial_blocks,
    "split_off": trial_split_off,
    "unitary_chain": trial_chain,
    "additive": trial_additive,
    "factorization": trial_factorization,
    "image": trial_image,
    "triangle": trial_triangle,
    "multadd": trial_multadd,
}


def run_suite(name: str, trials: int, rng: np.random.Generator) -> dict:
    fn = SUITES[name]
    checked = skipped = violations = 0
    worst = 0.0
    for _ in range(trials):
        r = fn(rng)
        if isinstance(r, bool):
            checked += 1
            violations += not r
            continue
        if not r.hypothesis_ok:
            skipped += 1
            continue
        checked += 1
        violations += not r.passed
        if isinstance(r, sv.BoundReport) and r.upper not in (0, math.inf) and r.ratios and r.lower > 0:
            worst = max(worst, r.max_log_ratio / math.log(r.upper) if r.upper > 1 else 0.0)
    return {"checked": checked, "skipped": skipped, "violations": violations,
            "worst_fraction_of_bound": worst}


def run_suites(trials: int = 1000, seed: int = 0, names=None) -> dict:
    rng = np.random.default_rng(seed)
    out = {name: run_suite(name, trials, rng) for name in (names or SUITES)}
    sweep = sv.multadd_sweep([1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4], rng)
    out["multadd_sweep"] = {"checked": len(sweep.reports), "skipped": 0,
                            "violations": int(not sweep.passed), "slope": sweep.slope,
                            "constant": sweep.constant, "next_slope": sweep.next_slope}
    return out
