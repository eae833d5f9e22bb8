"""Finite-dimensional singular-value perturbation bounds, as executable checks.

Every ``check_*`` function computes both sides of an inequality with dense
SVDs and returns a report with the observed ratios, the bound and a pass
flag. Violated hypotheses are reported (``hypothesis_ok=False``), never
raised, so property suites can skip such instances with a diagnosis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

ORTHO_TOL = 1e-12


def _svals(M) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def opnorm(M) -> float:
    s = _svals(M)
    return float(s[0]) if s.size else 0.0


@dataclass(frozen=True)
class Subspace:
    """Subspace of R^n given by an orthonormal frame (n x k)."""
    frame: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.frame, dtype=float))
        if Q.ndim != 2:
            raise InputError("frame must be a matrix")
        k = Q.shape[1]
        if k and np.linalg.norm(Q.T @ Q - np.eye(k), 2) > ORTHO_TOL * max(1, k):
            raise InputError("frame columns are not orthonormal")
        object.__setattr__(self, "frame", Q)

    @classmethod
    def span(cls, vectors, tol: float = 1e-12) -> "Subspace":
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        if V.shape[1] == 0:
            return cls(np.zeros((V.shape[0], 0)))
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        r = int(np.sum(s > tol * max(s[0], 1e-300)))
        return cls(U[:, :r])

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator) -> "Subspace":
        return cls.span(rng.standard_normal((n, k)))

    @property
    def ambient(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.T

    def complement(self) -> "Subspace":
        n, k = self.frame.shape
        if k == 0:
            return Subspace(np.eye(n))
        U, _, _ = np.linalg.svd(self.frame, full_matrices=True)
        return Subspace(U[:, k:])

    def tilted(self, angle: float, rng: np.random.Generator, toward: "Subspace | None" = None) -> "Subspace":
        """Rotate frame vectors by ``angle`` towards random directions of the
        complement, or of ``toward`` (which must be orthogonal to self)."""
        W = self.complement().frame if toward is None else toward.frame
        if W.shape[1] == 0 or self.dim == 0:
            return self
        k = min(self.dim, W.shape[1])
        Qr, _ = np.linalg.qr(rng.standard_normal((W.shape[1], k)))
        X = self.frame.copy()
        X[:, :k] = math.cos(angle) * X[:, :k] + math.sin(angle) * (W @ Qr)
        return Subspace.span(X)


def _same_ambient(*subs):
    n = subs[0].ambient
    if any(s.ambient != n for s in subs):
        raise InputError("subspaces live in different ambient dimensions")


def vec_d(E: Subspace, F: Subspace) -> float:
    """Non-symmetric distance ||Pi_E - Pi_F Pi_E||."""
    _same_ambient(E, F)
    if E.dim == 0:
        return 0.0
    R = E.frame - F.frame @ (F.frame.T @ E.frame)
    return min(1.0, opnorm(R))


def sym_d(E: Subspace, F: Subspace) -> float:
    return vec_d(E, F) + vec_d(F, E)


@dataclass(frozen=True)
class TauBudget:
    eps: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.eps)
        for x in e:
            if not 0 <= x < 1:
                raise InputError(f"tau needs every epsilon in [0, 1), got {x}")
        object.__setattr__(self, "eps", e)

    def value(self) -> float:
        return tau(*self.eps)


def tau(*eps) -> float:
    """prod (1 + e) / (1 - e); tau() = 1."""
    out = 1.0
    for e in eps:
        e = float(e)
        if not 0 <= e < 1:
            raise InputError(f"tau needs every epsilon in [0, 1), got {e}")
        out *= (1 + e) / (1 - e)
    return out


def eps_unitary_defect(A) -> float:
    """max(||A^T A - I||, ||A A^T - I||)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    return max(opnorm(A.T @ A - np.eye(n)), opnorm(A @ A.T - np.eye(m)))


@dataclass(frozen=True)
class BoundReport:
    ratios: tuple            # mu_l(reference) / mu_l(compared), zero pairs skipped
    lower: float
    upper: float
    passed: bool
    hypothesis_ok: bool = True
    diagnosis: str = ""
    eps: tuple = ()

    @property
    def max_log_ratio(self) -> float:
        return max((abs(math.log(r)) for r in self.ratios), default=0.0)


def _ratio_report(mu_a, mu_b, bound, eps, rtol=1e-10, hyp=True, diag="") -> BoundReport:
    """Compare singular values pairwise against [1/bound, bound]."""
    n = max(len(mu_a), len(mu_b))
    a = np.zeros(n); a[:len(mu_a)] = mu_a
    b = np.zeros(n); b[:len(mu_b)] = mu_b
    scale = max(a.max(initial=0.0), b.max(initial=0.0), 1e-300)
    ratios = []
    ok = True
    for x, y in zip(a, b):
        if x <= rtol * scale and y <= rtol * scale:
            continue
        if x <= rtol * scale or y <= rtol * scale:
            ok = False
            ratios.append(math.inf if y <= rtol * scale else 0.0)
            continue
        r = x / y
        ratios.append(r)
        if not (1 / bound * (1 - 1e-12) <= r <= bound * (1 + 1e-12)):
            ok = False
    return BoundReport(tuple(ratios), 1 / bound, bound, ok and hyp, hyp, diag, tuple(eps))


def check_projected_sv(B, E: Subspace, F: Subspace, G: Subspace) -> BoundReport:
    """mu_l(B) vs mu_l(Pi_G B Pi_F |_E) for B: F -> F.

    ``B`` is an ambient n x n matrix; only its compression Pi_F B Pi_F is
    used. The bound is tau(eps1^2, eps2^2)^(1/2) with eps1 = d(E,F) + d(F,E)
    and eps2 = d(F,G) + d(G,F).
    """
    _same_ambient(E, F, G)
    B = np.asarray(B, dtype=float)
    e1, e2 = sym_d(E, F), sym_d(F, G)
    if not (e1 < 1 and e2 < 1):
        return BoundReport((), 0, math.inf, False, False,
                           f"hypothesis violated: eps1={e1:.3g}, eps2={e2:.3g}", (e1, e2))
    BF = F.frame.T @ B @ F.frame
    Bt = G.frame.T @ F.frame @ BF @ F.frame.T @ E.frame
    bound = math.sqrt(tau(e1 ** 2, e2 ** 2))
    return _ratio_report(_svals(BF), _svals(Bt), bound, (e1, e2))


def check_eps_orthonormal_bases(B, Phi, Psi) -> BoundReport:
    """B: R^m -> R^p against Psi^T B Phi for eps-orthonormal bases Phi, Psi.

    eps1 = ||Phi^T Phi - I||, eps2 = ||Psi^T Psi - I||; bound tau(eps1, eps2)^(1/2).
    """
    B = np.asarray(B, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    e1 = opnorm(Phi.T @ Phi - np.eye(Phi.shape[1]))
    e2 = opnorm(Psi.T @ Psi - np.eye(Psi.shape[1]))
    total = (np.linalg.matrix_rank(Phi) == Phi.shape[0] and np.linalg.matrix_rank(Psi) == Psi.shape[0])
    if not (e1 < 1 and e2 < 1 and total):
        return BoundReport((), 0, math.inf, False, False, "frames are not eps-orthonormal bases", (e1, e2))
    return _ratio_report(_svals(B), _svals(Psi.T @ B @ Phi), math.sqrt(tau(e1, e2)), (e1, e2))


def decomposition_eps(H1: Subspace, H2: Subspace) -> float:
    """||Pi_H1 Pi_H2||, the orthogonality defect of a decomposition H1 + H2."""
    return opnorm(H1.frame.T @ H2.frame)


def check_eps_orthogonal_blocks(B, E1: Subspace, E2: Subspace, F1: Subspace, F2: Subspace) -> BoundReport:
    """B with B E' in F' and B E'' in F'' against Pi_F' B|E' (+) Pi_F'' B|E''.

    Bound tau(eps1, eps2)^(1/2) with the decomposition defects eps1, eps2.
    """
    B = np.asarray(B, dtype=float)
    e1, e2 = decomposition_eps(E1, E2), decomposition_eps(F1, F2)
    full_E = E1.dim + E2.dim == B.shape[1]
    full_F = F1.dim + F2.dim == B.shape[0]
    res = max(opnorm(B @ E1.frame - F1.projector @ B @ E1.frame),
              opnorm(B @ E2.frame - F2.projector @ B @ E2.frame)) / max(opnorm(B), 1e-300)
    hyp = e1 < 1 and e2 < 1 and full_E and full_F and res < 1e-10
    if not hyp:
        return BoundReport((), 0, math.inf, False, False,
                           f"hypothesis violated: eps=({e1:.3g},{e2:.3g}), invariance residual {res:.2e}",
                           (e1, e2))
    blocks = np.concatenate([_svals(F1.frame.T @ B @ E1.frame), _svals(F2.frame.T @ B @ E2.frame)])
    return _ratio_report(_svals(B), np.sort(blocks)[::-1], math.sqrt(tau(e1, e2)), (e1, e2))


def check_split_off(B, E1: Subspace, E2: Subspace, eps2: float | None = None) -> BoundReport:
    """B against B|E' (+) Pi_F'' B|E'' with F' = B E', F'' its complement.

    Needs nu >= ||B|E''|| / ((1 - eps1)^(1/2) eps2) where nu is the smallest
    nonzero singular value of B|E'; ``eps2`` defaults to the smallest value
    allowed. Bound tau(eps1, eps2) (no square root).
    """
    B = np.asarray(B, dtype=float)
    e1 = decomposition_eps(E1, E2)
    BE1 = B @ E1.frame
    s1 = _svals(BE1)
    nz = s1[s1 > 1e-12 * max(opnorm(B), 1e-300)]
    nu = float(nz[-1]) if nz.size else math.inf
    nb2 = opnorm(B @ E2.frame)
    need = nb2 / (math.sqrt(1 - e1) * nu) if e1 < 1 and nu < math.inf else math.inf
    e2 = need if eps2 is None else float(eps2)
    if not (e1 < 1 and 0 <= e2 < 1 and e2 >= need * (1 - 1e-12)):
        return BoundReport((), 0, math.inf, False, False,
                           f"hypothesis violated: eps1={e1:.3g}, required eps2={need:.3g}", (e1, e2))
    Fp = Subspace.span(BE1)
    Fpp = Fp.complement()
    blocks = np.concatenate([s1, _svals(Fpp.frame.T @ B @ E2.frame)])
    return _ratio_report(_svals(B), np.sort(blocks)[::-1], tau(e1, e2), (e1, e2))


@dataclass(frozen=True)
class ChainReport:
    eps1: float
    eps2: float
    ii_holds: bool
    iii: BoundReport

    @property
    def passed(self) -> bool:
        return self.ii_holds and self.iii.passed

    @property
    def hypothesis_ok(self) -> bool:
        return self.iii.hypothesis_ok


def check_unitary_chain(C, B, A) -> ChainReport:
    """eps-unitary C and A: norms of C, A and inverses within tau^(1/2), and
    mu_j(CBA) within tau(eps1, eps2)^(+-1/2) mu_j(B)."""
    e1, e2 = eps_unitary_defect(C), eps_unitary_defect(A)
    if not (e1 < 1 and e2 < 1):
        bad = BoundReport((), 0, math.inf, False, False, "not eps-unitary", (e1, e2))
        return ChainReport(e1, e2, False, bad)
    sC, sA = _svals(C), _svals(A)
    ii = (max(sC[0], 1 / sC[-1]) <= math.sqrt(tau(e1)) * (1 + 1e-12) and
          max(sA[0], 1 / sA[-1]) <= math.sqrt(tau(e2)) * (1 + 1e-12))
    rep = _ratio_report(_svals(np.asarray(C) @ B @ A), _svals(B), math.sqrt(tau(e1, e2)), (e1, e2))
    return ChainReport(e1, e2, bool(ii), rep)


def image_lemma_values(A) -> dict:
    """Quantities that the image lemma declares equivalent or equal.

    a) ||A^T A - I||, the defect of |A|, and the defect of the identity
       from the standard inner product to <., |A|^2 .> (matrix |A| in
       orthonormal coordinates) coincide.
    b) A is eps-unitary iff ||A^T A - I|| <= eps and A is onto.
    c) the columns form an eps-orthonormal basis iff the synthesis map is eps-unitary.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    G = A.T @ A
    w, V = np.linalg.eigh(G)
    absA = (V * np.sqrt(np.clip(w, 0, None))) @ V.T
    gram_defect = opnorm(G - np.eye(n))
    return {
        "gram_defect": gram_defect,
        "abs_defect": eps_unitary_defect(absA),
        "identity_defect": eps_unitary_defect(absA),
        "unitary_defect": eps_unitary_defect(A),
        "onto": bool(np.linalg.matrix_rank(A) == m),
        "total": bool(np.linalg.matrix_rank(A) == m),
    }


def decomposition_gram_defect(H1: Subspace, H2: Subspace) -> tuple[float, float]:
    """Gram defect of the union of orthonormal bases of H1 and H2, and
    ||Pi_H1 Pi_H2||; the two numbers agree."""
    _same_ambient(H1, H2)
    V = np.hstack([H1.frame, H2.frame])
    return opnorm(V.T @ V - np.eye(V.shape[1])), decomposition_eps(H1, H2)


def check_additive(B1, B2, l0: int | None = None) -> BoundReport:
    """Weyl: |mu_l(B2) - mu_l(B1)| <= ||B2 - B1|| for every l, and for
    l <= l0 the relative form mu_l(B1)(1 - e) <= mu_l(B2) <= mu_l(B1)(1 + e)
    with e = ||B2 - B1|| / mu_l0(B1) when e < 1."""
    B1 = np.asarray(B1, dtype=float)
    B2 = np.asarray(B2, dtype=float)
    if B1.shape != B2.shape:
        raise InputError("B1 and B2 must have the same shape")
    s1, s2 = _svals(B1), _svals(B2)
    d = opnorm(B2 - B1)
    slack = 1e-12 * max(s1.max(initial=0), s2.max(initial=0), 1.0)
    gaps = np.abs(s2 - s1)
    ok = bool(np.all(gaps <= d + slack))
    ratios = tuple(gaps.tolist())
    if l0 is not None and 1 <= l0 <= s1.size and s1[l0 - 1] > 0:
        e = d / s1[l0 - 1]
        if e < 1:
            for l in range(l0):
                if not (s1[l] * (1 - e) - slack <= s2[l] <= s1[l] * (1 + e) + slack):
                    ok = False
    return BoundReport(ratios, 0.0, d, ok, True, "", (d,))


@dataclass(frozen=True)
class FactorizationReport:
    residual_hypothesis: float
    residual_identity: float
    R_norm: float
    bound: float
    passed: bool
    hypothesis_ok: bool
    diagnosis: str = ""


def check_factorization(B, E: Subspace, F: Subspace, G: Subspace, C) -> FactorizationReport:
    """With B|E = C Pi_F B|E, build R so that Pi_G B|E = (I + R) Pi_F B|E
    and check ||R|| <= 2 (d(F,G) + d(G,F)) ||C|_F||.

    R = (Pi_G Pi_F + (1 - Pi_G)(1 - Pi_F) - I) + (Pi_G - Pi_G Pi_F) C.
    """
    _same_ambient(E, F, G)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    n = E.ambient
    PF, PG = F.projector, G.projector
    BE = B @ E.frame
    scale = max(opnorm(BE), 1e-300)
    res_h = opnorm(BE - C @ PF @ BE) / scale
    if res_h > 1e-10:
        return FactorizationReport(res_h, math.nan, math.nan, math.nan, False, False,
                                   f"factorization residual {res_h:.2e} too large")
    I = np.eye(n)
    R = (PG @ PF + (I - PG) @ (I - PF) - I) + (PG - PG @ PF) @ C
    res_i = opnorm(PG @ BE - (I + R) @ PF @ BE) / scale
    cn = opnorm(C @ F.frame)
    bound = 2 * sym_d(F, G) * max(cn, 1.0)
    Rn = opnorm(R @ F.frame)
    return FactorizationReport(res_h, res_i, Rn, bound, bool(Rn <= bound * (1 + 1e-12) + 1e-14 and res_i < 1e-10),
                               True)


MULTADD_SLACK = 50.0


@dataclass(frozen=True)
class MultAddReport:
    rho: float
    l0: int
    rel_gaps: tuple          # |mu_l(Pi_G B Pi_E) / mu_l(Pi_F B Pi_F) - 1|, l <= l0
    next_ratio: float        # mu_{l0+1}(Pi_G B Pi_E) / mu_l0(Pi_G B Pi_E)
    hyp_values: dict
    hypothesis_ok: bool
    passed: bool
    diagnosis: str = ""


def check_multadd(B, E1: Subspace, E2: Subspace, F: Subspace, G: Subspace, C, rho: float,
                  slack: float = MULTADD_SLACK) -> MultAddReport:
    """Multiplicative plus additive comparison with explicit constant ``slack``.

    Hypotheses checked numerically: B commutes with Pi_F, Pi_F B Pi_F has
    rank l0, B|E' = C Pi_F B|E', E' + E'' is rho-orthogonal, and both
    inequality budgets are at most ``slack * rho``.
    """
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    PF = F.projector
    E = Subspace.span(np.hstack([E1.frame, E2.frame]))
    nb = max(opnorm(B), 1e-300)
    comm = opnorm(PF @ B - B @ PF) / nb
    sF = _svals(F.frame.T @ B @ F.frame)
    l0 = int(np.sum(sF > 1e-10 * nb))
    fact = opnorm(B @ E1.frame - C @ PF @ B @ E1.frame) / nb
    dec = decomposition_eps(E1, E2)
    cn = max(opnorm(C @ F.frame), 1.0)
    dFG = sym_d(F, G)
    hyp1 = sym_d(E, F) + cn * dFG
    sGE1 = _svals(G.frame.T @ B @ E1.frame)
    l1 = int(np.sum(sGE1 > 1e-10 * nb))
    mu_l1 = sGE1[l1 - 1] if l1 else math.inf
    sGE = _svals(G.frame.T @ B @ E.frame)
    denom = max(sGE[l0 - 1] if l0 and sGE.size >= l0 else 0.0, sF[l0 - 1] if l0 else 0.0)
    hyp2 = opnorm(B @ E2.frame) * (1 / mu_l1 + (cn * dFG / denom if denom > 0 else math.inf))
    hv = {"commutation": comm, "rank": l0, "factorization": fact, "decomposition": dec,
          "hypineq1": hyp1, "hypineq2": hyp2}
    budget = slack * rho + 1e-12
    hyp_ok = (comm < 1e-10 and fact < 1e-10 and dec <= budget and
              hyp1 <= budget and hyp2 <= budget and E.dim == F.dim == G.dim)
    if not hyp_ok:
        return MultAddReport(rho, l0, (), math.nan, hv, False, False, f"hypotheses fail: {hv}")
    gaps = tuple(float(abs(sGE[l] / sF[l] - 1)) for l in range(l0))
    nxt = float(sGE[l0] / sGE[l0 - 1]) if l0 and sGE.size > l0 else 0.0
    ok = all(g <= budget for g in gaps) and nxt <= budget
    return MultAddReport(rho, l0, gaps, nxt, hv, True, bool(ok))


# ---- random instances ------------------------------------------------------

def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_eps_unitary(m: int, n: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    """m x n matrix whose singular values lie in [sqrt(1-eps), sqrt(1+eps)] (square only if m == n)."""
    k = min(m, n)
    s = np.sqrt(1 + rng.uniform(-eps, eps, size=k))
    U = random_orthogonal(m, rng)[:, :k]
    V = random_orthogonal(n, rng)[:, :k]
    return (U * s) @ V.T


def random_graded(m: int, n: int, rng: np.random.Generator, decades: float = 6.0) -> np.ndarray:
    """Random matrix with singular values spread over ``decades`` orders of magnitude."""
    k = min(m, n)
    s = 10.0 ** (-decades * np.sort(rng.uniform(0, 1, size=k)))
    U = random_orthogonal(m, rng)[:, :k]
    V = random_orthogonal(n, rng)[:, :k]
    return (U * s) @ V.T


def multadd_instance(rho: float, rng: np.random.Generator, n: int = 12, k: int = 5, l0: int = 2):
    """Block instance satisfying the multadd hypotheses at scale rho.

    B = B_F (+) B_perp commutes with Pi_F; B_F has rank l0. E' tilts the
    row space of B_F by rho into F-perp, E'' tilts the kernel of B_F by rho
    into F-perp, G tilts F by rho. C is the identity on F plus the rank-l0
    correction that makes B|E' = C Pi_F B|E' exact.
    """
    Qn = random_orthogonal(n, rng)
    F = Subspace(Qn[:, :k])
    Fp = Subspace(Qn[:, k:])
    U = random_orthogonal(k, rng)
    V = random_orthogonal(k, rng)
    s = np.concatenate([np.sort(rng.uniform(1, 2, size=l0))[::-1], np.zeros(k - l0)])
    BF = (U * s) @ V.T
    Bp = rng.standard_normal((n - k, n - k))
    Bp /= opnorm(Bp)
    B = F.frame @ BF @ F.frame.T + Fp.frame @ Bp @ Fp.frame.T
    E1 = Subspace(F.frame @ V[:, :l0]).tilted(rho, rng, toward=Fp)
    E2 = Subspace(F.frame @ V[:, l0:]).tilted(rho, rng, toward=Fp)
    G = F.tilted(rho, rng)
    X = F.projector @ B @ E1.frame
    Y = B @ E1.frame
    C = np.eye(n) + (Y - X) @ np.linalg.pinv(X)
    return B, E1, E2, F, G, C


@dataclass(frozen=True)
class MultAddSweep:
    reports: tuple
    slope: float        # log-log slope of the largest leading relative gap against rho
    constant: float     # max over the sweep of gap / rho
    next_slope: float   # log-log slope of the (l0+1) ratio against rho

    @property
    def passed(self) -> bool:
        return (all(r.passed for r in self.reports) and self.slope >= 0.8
                and self.constant <= MULTADD_SLACK)


def multadd_sweep(rhos, rng: np.random.Generator, **kw) -> MultAddSweep:
    """Run check_multadd over ``rhos`` and regress the gaps against rho.

    The leading relative gap is first order in rho (slope near 1); in these
    instances the (l0+1) ratio is second order because both E'' and G are
    tilted by rho.
    """
    rhos = np.asarray(rhos, dtype=float)
    if rhos.size < 2:
        raise InputError("a sweep needs at least two rho values")
    reps = tuple(check_multadd(*multadd_instance(float(r), rng, **kw), float(r)) for r in rhos)
    x = np.log(rhos)
    gap = np.array([max(r.rel_gaps, default=0.0) for r in reps])
    nxt = np.array([r.next_ratio for r in reps])
    slope = float(np.polyfit(x, np.log(np.maximum(gap, 1e-300)), 1)[0])
    nslope = float(np.polyfit(x, np.log(np.maximum(nxt, 1e-300)), 1)[0])
    return MultAddSweep(reps, slope, float(np.max(gap / rhos)), nslope)
