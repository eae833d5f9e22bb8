"""Smallest singular values of Witten blocks and their comparison with bar codes.

Three solvers are available:

* ``"jacobi"``: dense one-sided Jacobi SVD (compiled kernel), high relative
  accuracy for graded matrices, used up to 4000 columns on the smaller side;
* ``"lanczos"``: ARPACK's implicitly restarted Lanczos on the normal operator
  of the smaller side, for large sparse blocks; absolute accuracy only;
* ``"structured"``: one-dimensional p = 0 blocks. The Gram matrix d^T d is
  tridiagonal (or cyclic tridiagonal) per connected component. It is built
  from the field in multiprecision arithmetic, and its eigenvalues are found
  by bisection on LDL^T inertia counts. The working precision grows with
  (max f - min f) / h, so eigenvalues of size exp(-2 (max f - min f) / h)
  keep full relative accuracy.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field as dc_field

import gmpy2
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import ConvergenceError, CountMismatchError, InputError
from .witten import WittenOperator, cell_data

DENSE_LIMIT = 4000


class ConvergenceWarning(UserWarning):
    pass


# ---- dense one-sided Jacobi ---------------------------------------------

def jacobi_svd(A, compute_uv: bool = True, tol: float | None = None, max_sweeps: int = 80,
               full_output: bool = False):
    """Singular value decomposition by one-sided (Hestenes) Jacobi rotations.

    Returns ``s`` (descending) or ``(U, s, Vt)`` like :func:`numpy.linalg.svd`
    with ``full_matrices=False``; with ``full_output`` a trailing dict
    ``{"sweeps", "converged"}`` is appended.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InputError("jacobi_svd needs a matrix")
    m, n = A.shape
    if m == 0 or n == 0:
        s = np.zeros(0)
        res = (np.zeros((m, 0)), s, np.zeros((0, n))) if compute_uv else s
        return (*res, {"sweeps": 0, "converged": True}) if full_output and compute_uv else \
            ((res, {"sweeps": 0, "converged": True}) if full_output else res)
    trans = m < n
    W = np.asfortranarray(A.T if trans else A).copy(order="F")
    mm, nn = W.shape
    V = np.asfortranarray(np.eye(nn)) if compute_uv else np.zeros((0, 0), order="F")
    if tol is None:
        tol = max(mm, 16) * np.finfo(float).eps
    sweeps = kernels.jacobi_sweeps(W, V, float(tol), int(max_sweeps))
    converged = sweeps <= max_sweeps
    if not converged:
        warnings.warn(f"Jacobi SVD did not converge in {max_sweeps} sweeps", ConvergenceWarning,
                      stacklevel=2)
    s = np.sqrt(np.einsum("ij,ij->j", W, W))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    info = {"sweeps": int(min(sweeps, max_sweeps)), "converged": bool(converged)}
    if not compute_uv:
        return (s, info) if full_output else s
    V = np.asarray(V)[:, order]
    W = W[:, order]
    with np.errstate(divide="ignore", invalid="ignore"):
        U = np.where(s > 0, W / np.where(s > 0, s, 1.0), 0.0)
    # complete columns of U for zero singular values with an orthonormal basis
    zero = np.flatnonzero(s == 0)
    if zero.size:
        Q, _ = np.linalg.qr(np.hstack([U[:, s > 0], np.random.default_rng(0).standard_normal((mm, zero.size))]))
        U[:, zero] = Q[:, (s > 0).sum():(s > 0).sum() + zero.size]
    if trans:
        U, V = V, U
    out = (U, s, V.T)
    return (*out, info) if full_output else out


# ---- structured multiprecision path for 1D blocks ------------------------

@dataclass
class _Component:
    nodes: list                   # column positions in order along the component
    diag: list                    # mp diagonal of the Gram matrix
    off: list                     # mp couplings between consecutive nodes (len n-1, or n if cyclic)
    cyclic: bool


@dataclass
class StructuredGram:
    """d^T d of a one-dimensional p = 0 block, split into components."""
    components: list
    precision: int
    n: int
    lam_max: float

    def count_below(self, lam) -> int:
        """Number of eigenvalues strictly below ``lam`` (Sylvester inertia)."""
        with gmpy2.context(gmpy2.get_context(), precision=self.precision):
            x = gmpy2.mpfr(lam)
            return sum(_count_component(c, x) for c in self.components)


def _count_component(c: _Component, lam) -> int:
    D, O = c.diag, c.off
    n = len(D)
    tiny = gmpy2.mpfr(2) ** (-(gmpy2.get_context().precision + 64))
    if not c.cyclic or n <= 2:
        neg = 0
        d = D[0] - lam
        if d == 0:
            d = tiny
        neg += d < 0
        for i in range(1, n):
            d = D[i] - lam - O[i - 1] * O[i - 1] / d
            if d == 0:
                d = tiny
            neg += d < 0
        return int(neg)
    # cyclic: eliminate rows 0..n-2 keeping the spike in the last column
    neg = 0
    d = D[0] - lam
    if d == 0:
        d = tiny
    neg += d < 0
    s = O[n - 1]                    # T[0, n-1]
    corner = D[n - 1] - lam
    for i in range(1, n - 1):
        l = O[i - 1] / d
        corner -= s * s / d
        s = -l * s
        if i == n - 2:
            s += O[n - 2]
        d = D[i] - lam - l * O[i - 1]
        if d == 0:
            d = tiny
        neg += d < 0
    corner -= s * s / d
    neg += corner < 0
    return int(neg)


def structured_precision(field, h: float) -> int:
    rng = float(np.max(field.values) - np.min(field.values))
    return int(128 + math.ceil(2.9 * rng / h))


def structured_gram(op: WittenOperator) -> StructuredGram:
    """Build the multiprecision Gram matrix of a 1D d^(0) block."""
    fld = op.field
    if fld.topology.dim != 1 or op.degree != 0:
        raise InputError("the structured path handles one-dimensional d^(0) blocks only")
    cd = cell_data(fld)
    h = op.h
    prec = structured_precision(fld, h)
    col_pos = {int(c): k for k, c in enumerate(op.col_cells)}
    n = len(col_pos)
    step = fld.topology.spacing[0]
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        hh = gmpy2.mpfr(h)
        scale = hh / gmpy2.mpfr(step)
        diag = [gmpy2.mpfr(0)] * n
        links = {}
        fv = fld.values
        for e in op.row_cells:
            i, j = (int(t) for t in cd.indices[cd.indptr[e]:cd.indptr[e] + 2])
            fi, fj = gmpy2.mpfr(float(fv[i])), gmpy2.mpfr(float(fv[j]))
            half = (fj - fi) / 2
            if op.scheme == "fitted":
                a_i, a_j = -scale * gmpy2.exp(-half / hh), scale * gmpy2.exp(half / hh)
            else:
                a_i, a_j = -(hh - half) / step, (hh + half) / step
            pi, pj = col_pos.get(i), col_pos.get(j)
            if pi is not None:
                diag[pi] += a_i * a_i
            if pj is not None:
                diag[pj] += a_j * a_j
            if pi is not None and pj is not None:
                links.setdefault(pi, []).append((pj, a_i * a_j))
                links.setdefault(pj, []).append((pi, a_i * a_j))
        comps = []
        seen = np.zeros(n, dtype=bool)
        for start in range(n):
            if seen[start]:
                continue
            # find an end of the component (a node with < 2 distinct neighbours) if any
            comp_nodes = _walk_component(start, links)
            for v in comp_nodes:
                seen[v] = True
            comps.append(_make_component(comp_nodes, diag, links))
        lam_max = float(max((max(float(x) for x in c.diag) for c in comps), default=0.0))
    # Gershgorin bound on the largest eigenvalue
    return StructuredGram(comps, prec, n, 4.0 * lam_max + 1e-300)


def _neighbours(v, links):
    return sorted({u for u, _ in links.get(v, [])})


def _walk_component(start, links):
    comp = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in _neighbours(v, links):
            if u not in comp:
                comp.add(u)
                stack.append(u)
    ends = [v for v in comp if len(_neighbours(v, links)) < 2]
    first = min(ends) if ends else min(comp)
    order = [first]
    prev = None
    cur = first
    while len(order) < len(comp):
        nxt = [u for u in _neighbours(cur, links) if u != prev and u not in order[-2:]]
        nxt = [u for u in nxt if u not in order]
        cur, prev = nxt[0], cur
        order.append(cur)
    return order


def _make_component(order, diag, links):
    k = len(order)
    D = [diag[v] for v in order]

    def coupling(u, v):
        return sum((w for t, w in links.get(u, []) if t == v), gmpy2.mpfr(0))

    O = [coupling(order[i], order[i + 1]) for i in range(k - 1)]
    cyclic = k > 2 and order[0] in {t for t, _ in links.get(order[-1], [])}
    if k == 2:
        pass  # both edges of a 2-cycle are summed in coupling()
    if cyclic:
        O.append(coupling(order[-1], order[0]))
    return _Component(list(order), D, O, cyclic)


def _bisect_log(count, j, lo, hi, rtol=1e-15, max_iter=200):
    """log of the (j+1)-th smallest eigenvalue given an inertia counter."""
    for _ in range(max_iter):
        if hi - lo <= rtol * max(1.0, abs(hi) + abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        if count(gmpy2.exp(gmpy2.mpfr(mid))) > j:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _mp_tridiag_solve(D, O, lam, rhs):
    n = len(D)
    c = [None] * n
    x = [None] * n
    d = D[0] - lam
    c[0] = O[0] / d if n > 1 else None
    x[0] = rhs[0] / d
    for i in range(1, n):
        d = D[i] - lam - O[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = O[i] / d
        x[i] = (rhs[i] - O[i - 1] * x[i - 1]) / d
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x


def _mp_solve(comp: _Component, lam, rhs):
    if not comp.cyclic:
        return _mp_tridiag_solve(comp.diag, comp.off, lam, rhs)
    # Sherman-Morrison on the cyclic corner
    n = len(comp.diag)
    D = list(comp.diag)
    O = comp.off
    gamma = -(D[0] - lam)
    D[0] = D[0] - gamma
    D[-1] = D[-1] - O[-1] * O[-1] / gamma
    u = [gmpy2.mpfr(0)] * n
    u[0], u[-1] = gamma, O[-1]
    y = _mp_tridiag_solve(D, O[:-1], lam, rhs)
    q = _mp_tridiag_solve(D, O[:-1], lam, u)
    vy = y[0] + O[-1] / gamma * y[-1]
    vq = q[0] + O[-1] / gamma * q[-1]
    f = vy / (1 + vq)
    return [yi - f * qi for yi, qi in zip(y, q)]


def _structured_vector(G: StructuredGram, lam_log: float) -> np.ndarray:
    """Eigenvector for an isolated eigenvalue by multiprecision inverse iteration."""
    with gmpy2.context(gmpy2.get_context(), precision=G.precision):
        lam = gmpy2.exp(gmpy2.mpfr(lam_log)) * (1 - gmpy2.mpfr(2) ** -40)
        best = None
        for comp in G.components:
            k = len(comp.diag)
            # only components holding an eigenvalue near lam contribute
            lo = _count_component(comp, lam * (1 - gmpy2.mpfr(2) ** -20))
            hi = _count_component(comp, lam * (1 + gmpy2.mpfr(2) ** -20))
            if hi == lo:
                continue
            x = [gmpy2.mpfr(1)] * k
            for _ in range(3):
                x = _mp_solve(comp, lam, x)
                nrm = gmpy2.sqrt(sum(t * t for t in x))
                x = [t / nrm for t in x]
            best = (comp, [float(t) for t in x])
            break
    v = np.zeros(G.n)
    if best is not None:
        comp, x = best
        v[comp.nodes] = x
    return v


# ---- results and dispatch ------------------------------------------------

@dataclass(frozen=True)
class SingularValues:
    """Smallest singular values of a block, ascending, plus provenance.

    ``vectors`` (if requested) holds unit eigenvectors of the normal operator
    on ``side`` ("col": right singular vectors; "row": left ones).
    """
    sigma: np.ndarray
    log_sigma: np.ndarray
    method: str
    converged: bool
    sigma_max: float
    n_rows: int
    n_cols: int
    vectors: np.ndarray | None = None
    side: str = "col"
    gram: object = dc_field(default=None, repr=False, compare=False)

    @property
    def min_dim(self) -> int:
        return min(self.n_rows, self.n_cols)


def choose_method(op: WittenOperator) -> str:
    m, n = op.shape
    if op.field.topology.dim == 1 and op.degree == 0:
        return "structured"
    if min(m, n) <= DENSE_LIMIT:
        return "jacobi"
    return "lanczos"


def smallest_singular_values(op, k: int | None = None, method: str = "auto",
                             vectors: bool = False, tol: float = 1e-13,
                             max_iter: int | None = None) -> SingularValues:
    """The ``k`` smallest singular values (all of them when ``k`` is None).

    ``op`` may be a WittenOperator or a plain matrix (dense or sparse); the
    structured path needs a WittenOperator.
    """
    if isinstance(op, WittenOperator):
        M = op.matrix
        meth = choose_method(op) if method == "auto" else method
    else:
        M = op
        m_, n_ = M.shape
        meth = ("jacobi" if min(m_, n_) <= DENSE_LIMIT else "lanczos") if method == "auto" else method
    m, n = M.shape
    q = min(m, n)
    if k is None:
        k = q
    if not 0 <= k <= q:
        raise InputError(f"k={k} exceeds the smaller dimension {q}")
    if meth == "jacobi":
        A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        if vectors:
            U, s, Vt, info = jacobi_svd(A, compute_uv=True, full_output=True)
        else:
            s, info = jacobi_svd(A, compute_uv=False, full_output=True)
        smax = float(s[0]) if s.size else 0.0
        idx = np.arange(q)[::-1][:k]
        sig = s[idx]
        vec = None
        if vectors:
            vec = Vt.T[:, idx]
        with np.errstate(divide="ignore"):
            return SingularValues(sig, np.log(sig), "jacobi", info["converged"], smax, m, n, vec, "col")
    if meth == "lanczos":
        return _lanczos(M, k, vectors, tol, max_iter,
                        op if isinstance(op, WittenOperator) else None)
    if meth == "structured":
        if not isinstance(op, WittenOperator):
            raise InputError("the structured path needs a WittenOperator")
        return _structured(op, k, vectors)
    raise InputError(f"unknown method {meth!r}")


def _structured(op: WittenOperator, k: int, vectors: bool) -> SingularValues:
    G = structured_gram(op)
    m, n = op.shape
    q = min(m, n)
    # noise floor of an exact zero eigenvalue at this precision
    floor_log = math.log(G.lam_max) - (G.precision - 32) * math.log(2)
    n_zero = G.count_below(math.exp(floor_log)) if floor_log > -740 else \
        G.count_below(gmpy2.exp(gmpy2.mpfr(floor_log)))
    # a tall block (more edges than nodes) has no extra zeros; a wide block
    # (interval windows) has n - q structural zeros in d^T d that are not
    # singular values
    extra = n - q
    logs = []
    hi = math.log(G.lam_max)
    for j in range(extra, extra + k):
        if j < n_zero:
            logs.append(-math.inf)
            continue
        logs.append(_bisect_log(G.count_below, j, floor_log, hi))
    log_sig = 0.5 * np.array(logs)
    vec = None
    if vectors:
        vec = np.column_stack([_structured_vector(G, 2 * ls) if np.isfinite(ls) else
                               _kernel_vector(op) for ls in log_sig]) if k else np.zeros((n, 0))
    return SingularValues(np.exp(log_sig), log_sig, "structured", True,
                          math.sqrt(G.lam_max / 4.0), m, n, vec, "col", G)


def _kernel_vector(op: WittenOperator) -> np.ndarray:
    A = op.matrix.toarray()
    _, _, Vt = np.linalg.svd(A)
    return Vt[-1]


def known_kernel_vectors(op: WittenOperator, side: str) -> np.ndarray:
    """Exact kernel vectors of the normal operator on ``side`` for closed grids.

    For the fitted scheme on a full periodic grid, exp(-f/h) spans the
    kernel of d^(0) and exp(+m/h) (m = face means) the kernel of the
    transpose of the top block. Returns an (n, j) array, j possibly 0.
    """
    fld = op.field
    m, n = op.shape
    if op.scheme != "fitted" or op.domain is not None or not fld.topology.periodic:
        return np.zeros((n if side == "col" else m, 0))
    cd = cell_data(fld)
    vecs = []
    if side == "col" and op.degree == 0:
        v = -cd.means[op.col_cells] / op.h
        vecs.append(np.exp(v - v.max()))
    if side == "row" and op.degree == fld.topology.dim - 1:
        v = cd.means[op.row_cells] / op.h
        vecs.append(np.exp(v - v.max()))
    if not vecs:
        return np.zeros((n if side == "col" else m, 0))
    Q, _ = np.linalg.qr(np.column_stack(vecs))
    return Q


def _lanczos(M, k: int, vectors: bool, tol: float, max_iter, op=None) -> SingularValues:
    M = sp.csr_matrix(M)
    m, n = M.shape
    side = "col" if n <= m else "row"
    N = (M.T @ M) if side == "col" else (M @ M.T)
    N = ((N + N.T) * 0.5).tocsr()
    dim = N.shape[0]
    # Gershgorin bound on the top of the spectrum
    lam_top = float(np.max(np.abs(N).sum(axis=1))) if dim else 0.0
    smax_est = math.sqrt(lam_top)
    if k == 0:
        return SingularValues(np.zeros(0), np.zeros(0), "lanczos", True, smax_est, m, n, None, side)
    W = known_kernel_vectors(op, side) if op is not None else np.zeros((dim, 0))
    nk = min(W.shape[1], k)
    kk = k - nk
    converged = True
    if kk == 0:
        ev, V = np.zeros(0), np.zeros((dim, 0))
    elif dim <= 2 * kk + 2 + W.shape[1]:
        ev, V = np.linalg.eigh(N.toarray() + lam_top * (W @ W.T))
        ev, V = ev[:kk], V[:, :kk]
    else:
        # known kernel directions are shifted to the top of the spectrum so
        # that Lanczos only has to resolve the remaining small eigenvalues
        shift = lam_top
        A = spla.LinearOperator((dim, dim), dtype=float,
                                matvec=lambda x: N @ x + shift * (W @ (W.T @ x)))
        ncv = min(dim - 1, max(4 * kk + 20, 80))
        v0 = np.ones(dim) / math.sqrt(dim)
        v0 -= W @ (W.T @ v0)
        try:
            ev, V = spla.eigsh(A, k=kk, which="SA", tol=tol, ncv=ncv,
                               maxiter=max_iter or 50 * dim, v0=v0)
        except spla.ArpackNoConvergence as exc:
            ev, V = exc.eigenvalues, exc.eigenvectors
            converged = False
            warnings.warn(f"Lanczos returned {ev.size} of {kk} values", ConvergenceWarning, stacklevel=3)
    ev = np.concatenate([np.zeros(nk), ev])
    V = np.hstack([W[:, :nk], V])
    order = np.argsort(ev, kind="stable")
    ev, V = ev[order], V[:, order]
    sig = np.sqrt(np.clip(ev, 0.0, None))
    with np.errstate(divide="ignore"):
        return SingularValues(sig, np.log(sig), "lanczos", converged, smax_est, m, n,
                              V if vectors else None, side)


# ---- thresholds and counting ---------------------------------------------

def counting_threshold(eta_f: float, h: float) -> float:
    """sigma below exp(-2 eta_f / h) counts as exponentially small."""
    return math.exp(-2.0 * eta_f / h)


def kernel_threshold(sigma_max: float, span: float, eta_f: float, h: float,
                     structured: bool = False, f_range: float | None = None) -> float:
    """sigma below this value is treated as an exact zero.

    The double-precision paths use max(1e-12 sigma_max, exp(-(2 span + 10 eta_f)/h)).
    The structured path resolves far smaller values, so its floor is
    1e-10 sigma_max exp(-f_range / h) instead of 1e-12 sigma_max.
    """
    eta = 0.0 if not math.isfinite(eta_f) else eta_f
    rate = -(2.0 * span + 10.0 * eta) / h
    if structured:
        fr = span if f_range is None else f_range
        return math.exp(max(rate, math.log(1e-10 * sigma_max) - fr / h))
    return max(1e-12 * sigma_max, math.exp(max(rate, -745.0)))


@dataclass(frozen=True)
class BlockCount:
    degree: int
    n_small: int        # thresholds: kernel < sigma < counting
    n_kernel_sv: int    # singular values (of the min(m, n) list) below the kernel threshold
    rank: int
    n_rows: int
    n_cols: int
    sigma_thr: float
    kernel_thr: float


def count_block(op: WittenOperator, eta_f: float, span: float, h: float | None = None,
                method: str = "auto") -> BlockCount:
    """Count small nonzero singular values of a block and its numerical rank."""
    h = op.h if h is None else h
    m, n = op.shape
    q = min(m, n)
    meth = choose_method(op) if method == "auto" else method
    thr = counting_threshold(eta_f, h) if math.isfinite(eta_f) else 0.0
    if meth == "structured":
        G = structured_gram(op)
        smax = math.sqrt(G.lam_max / 4.0)
        rng = float(np.ptp(op.field.values))
        ker = kernel_threshold(smax, span, eta_f, h, True, rng)
        with gmpy2.context(gmpy2.get_context(), precision=G.precision):
            n_ker_gram = G.count_below(gmpy2.mpfr(ker) ** 2)
            n_thr_gram = G.count_below(gmpy2.mpfr(max(thr, ker)) ** 2)
        # zeros of d^T d beyond the min-dimension list are structural
        extra = n - q
        n_ker_sv = max(n_ker_gram - extra, 0)
        return BlockCount(op.degree, n_thr_gram - n_ker_gram, q - n_ker_sv, q - n_ker_sv, m, n, thr, ker)
    sv = smallest_singular_values(op, None, meth)
    ker = kernel_threshold(sv.sigma_max, span, eta_f, h)
    n_ker = int(np.sum(sv.sigma < ker))
    n_thr = int(np.sum(sv.sigma < max(thr, ker)))
    return BlockCount(op.degree, n_thr - n_ker, n_ker, q - n_ker, m, n, thr, ker)


def kernel_dimensions(ops: list, counts: list) -> list:
    """dim ker Delta^(p) = n_p - rank d^(p) - rank d^(p-1) for p = 0..len(ops)."""
    dims = [ops[0].shape[1]] + [op.shape[0] for op in ops]
    ranks = [c.rank for c in counts]
    out = []
    for p in range(len(dims)):
        r_up = ranks[p] if p < len(ranks) else 0
        r_dn = ranks[p - 1] if p >= 1 else 0
        out.append(int(dims[p] - r_up - r_dn))
    return out


# ---- reports and fits ----------------------------------------------------

@dataclass(frozen=True)
class SpectralEntry:
    degree: int
    sigma: float
    lambda_log: float          # log(sigma^2)
    bar_id: object             # int, "kernel" or None
    predicted_rate: float
    residual: float            # -h log(lambda) - predicted_rate


@dataclass(frozen=True)
class SpectralReport:
    h: float
    entries: tuple
    counts: dict               # degree -> {"predicted": n, "observed": n}
    mismatch: bool

    def degree(self, p: int) -> list:
        return [e for e in self.entries if e.degree == p]

    def bar_lambda_log(self, bar_id: int) -> float:
        for e in self.entries:
            if e.bar_id == bar_id:
                return e.lambda_log
        raise KeyError(bar_id)


def build_report(h: float, svs: dict, prediction, span: float | None = None) -> SpectralReport:
    """Label the small singular values of each block with bar ids.

    ``svs`` maps degree p to a :class:`SingularValues` of d^(p). Values below
    the kernel threshold are labelled "kernel"; values below the counting
    threshold are matched to the predicted bars of degree p, the smallest
    singular value to the longest bar.
    """
    levels = prediction.levels
    span = (levels[-1] - levels[0]) if span is None else span
    eta = prediction.eta_f
    entries = []
    counts = {}
    mismatch = False
    for p, sv in sorted(svs.items()):
        structured = sv.method == "structured"
        fr = None
        if structured and sv.gram is not None:
            fr = span
        ker = kernel_threshold(sv.sigma_max, span, eta, h, structured, fr)
        thr = counting_threshold(eta, h) if math.isfinite(eta) else ker
        small = [(s, ls) for s, ls in zip(sv.sigma, sv.log_sigma) if s < thr]
        preds = list(prediction.small_singular[p]) if p < len(prediction.small_singular) else []
        preds.sort(key=lambda r: (-r.rate, r.bar_id))
        nonzero = [(s, ls) for s, ls in small if not s < ker]
        for s, ls in small:
            if s < ker:
                entries.append(SpectralEntry(p, float(s), float(2 * ls), "kernel", math.inf, math.nan))
        for i, (s, ls) in enumerate(nonzero):
            if i < len(preds):
                r = preds[i]
                entries.append(SpectralEntry(p, float(s), float(2 * ls), r.bar_id, r.rate,
                                             float(-h * 2 * ls - r.rate)))
            else:
                entries.append(SpectralEntry(p, float(s), float(2 * ls), None, math.nan, math.nan))
        counts[p] = {"predicted": len(preds), "observed": len(nonzero)}
        if len(preds) != len(nonzero):
            mismatch = True
    return SpectralReport(float(h), tuple(entries), counts, mismatch)


@dataclass(frozen=True)
class RateFit:
    """Fits of -h log(lambda) = intercept + slope h and log(lambda e^{rate/h}) = c + power log h."""
    rate: float
    hs: tuple
    lambda_logs: tuple
    intercept: float
    slope: float
    power: float
    log_constant: float
    coarse_error: float        # |-h log lambda - intercept| at the coarsest h

    @property
    def intercept_rel_error(self) -> float:
        return abs(self.intercept - self.rate) / self.rate if self.rate else math.inf

    @property
    def prefactors(self) -> np.ndarray:
        h = np.asarray(self.hs)
        return np.exp(np.asarray(self.lambda_logs) + self.rate / h)

    def to_dict(self) -> dict:
        return {"rate": self.rate, "hs": list(self.hs), "lambda_logs": list(self.lambda_logs),
                "intercept": self.intercept, "slope": self.slope, "power": self.power,
                "log_constant": self.log_constant, "coarse_error": self.coarse_error,
                "intercept_rel_error": self.intercept_rel_error}


def fit_rate(hs, lambda_logs, rate: float) -> RateFit:
    """Affine fit of -h log(lambda) against h and power fit of the prefactor.

    ``rate`` is the predicted Arrhenius exponent 2 * (bar length).
    """
    h = np.asarray(hs, dtype=float)
    ll = np.asarray(lambda_logs, dtype=float)
    if h.size < 3:
        raise InputError("need at least three h values to fit")
    if not np.all(np.isfinite(ll)):
        raise InputError("cannot fit zero eigenvalues")
    y = -h * ll
    slope, intercept = np.polyfit(h, y, 1)
    power, logc = np.polyfit(np.log(h), ll + rate / h, 1)
    k = int(np.argmax(h))
    return RateFit(float(rate), tuple(h.tolist()), tuple(ll.tolist()), float(intercept),
                   float(slope), float(power), float(logc), float(abs(y[k] - intercept)))


def match_and_fit(reports: list, prediction) -> dict:
    """Per predicted bar, fit the h-sweep of its matched eigenvalue.

    Raises CountMismatchError if any report's counts disagree with the
    prediction; the error carries the per-h count table.
    """
    if len(reports) < 3:
        raise InputError("match_and_fit needs at least three h values")
    bad = {r.h: r.counts for r in reports if r.mismatch}
    if bad:
        raise CountMismatchError(f"predicted and observed small-value counts differ: {bad}")
    out = {}
    for p, preds in enumerate(prediction.small_singular):
        for r in preds:
            hs, lls = [], []
            for rep in reports:
                hs.append(rep.h)
                lls.append(rep.bar_lambda_log(r.bar_id))
            out[r.bar_id] = fit_rate(hs, lls, r.rate)
    return out


def reports_to_csv(reports: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "degree", "sigma", "lambda_log", "bar_id", "predicted_rate", "residual"])
    for rep in reports:
        for e in rep.entries:
            w.writerow([repr(rep.h), e.degree, repr(e.sigma), repr(e.lambda_log),
                        "" if e.bar_id is None else e.bar_id, repr(e.predicted_rate), repr(e.residual)])
    return buf.getvalue()


def fits_to_json(fits: dict) -> str:
    from .arrhenius import _json_safe
    return json.dumps(_json_safe({str(k): v.to_dict() for k, v in fits.items()}), indent=1) + "\n"
