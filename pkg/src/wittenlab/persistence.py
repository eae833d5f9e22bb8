"""Sublevel persistent homology of sampled fields on cubical grids.

Cells carry lower-star values (max over their vertices) and are ordered by
(value, dimension, cell index). Cell indices: vertices first (flat node
order), then edges, then faces. On a torus with n = Nx*Ny nodes the x-edge
from node k = i + Nx*j to its +x neighbour has index n + k, the y-edge to the
+y neighbour has index 2n + k, and the face with lower-left corner k has
index 3n + k.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .coefficients import get_field
from .errors import CriticalWindowError, InputError
from .field import LevelWindow, SampledField


@dataclass(frozen=True)
class Bar:
    degree: int
    birth: float
    death: float  # math.inf for an infinite bar

    @property
    def finite(self) -> bool:
        return math.isfinite(self.death)

    @property
    def length(self) -> float:
        return self.death - self.birth

    def key(self):
        return (self.degree, self.birth, self.death)


@dataclass(frozen=True)
class BarCode:
    bars: tuple
    coefficient_field: str = "GF(2)"
    source_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(sorted(self.bars, key=Bar.key)))

    def __len__(self):
        return len(self.bars)

    def degree(self, p: int) -> list:
        return [b for b in self.bars if b.degree == p]

    def finite_bars(self) -> list:
        return [b for b in self.bars if b.finite]

    def infinite_counts(self, max_degree: int) -> list:
        return [sum(1 for b in self.bars if b.degree == p and not b.finite)
                for p in range(max_degree + 1)]

    def multiset(self) -> list:
        return [b.key() for b in self.bars]

    def count_lonely(self, window: LevelWindow, p: int) -> int:
        """Endpoints of degree p in (a, b) whose partner endpoint lies outside.

        Births of degree-p bars and deaths of degree-(p-1) bars both carry
        degree p; this count equals the relative Betti number of the window.
        """
        n = 0
        for bar in self.bars:
            bi = window.contains(bar.birth)
            di = math.isfinite(bar.death) and window.contains(bar.death)
            if bar.degree == p and bi and not di:
                n += 1
            if bar.degree == p - 1 and di and not bi:
                n += 1
        return n

    def simplified(self, tol: float) -> "BarCode":
        """Drop finite bars shorter than ``tol`` and snap nearby endpoints together.

        Endpoint values are grouped by single linkage at distance ``tol`` and
        each group is replaced by its smallest value. Sampling a smooth
        landscape with a degenerate critical set (a ring of minima, say)
        yields clouds of grid-size bars; this recovers the bars of the
        underlying landscape. Every endpoint moves by at most the spread of
        its group, which bounds the bottleneck distance to the original.
        """
        if not tol > 0:
            raise InputError("tol must be positive")
        keep = [b for b in self.bars if not (b.finite and b.length < tol)]
        vals = sorted({v for b in keep for v in (b.birth, b.death) if math.isfinite(v)})
        snap = {}
        start = None
        prev = None
        for v in vals:
            if prev is None or v - prev >= tol:
                start = v
            snap[v] = start
            prev = v
        out = []
        for b in keep:
            birth = snap[b.birth]
            death = snap[b.death] if b.finite else math.inf
            if death > birth:
                out.append(Bar(b.degree, birth, death))
        return BarCode(tuple(out), self.coefficient_field, self.source_hash)

    def to_json(self) -> str:
        rows = [{"degree": b.degree, "birth": b.birth,
                 "death": b.death if b.finite else "inf"} for b in self.bars]
        return json.dumps(rows, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str, coefficient_field="GF(2)") -> "BarCode":
        try:
            rows = json.loads(text)
            bars = [Bar(int(r["degree"]), float(r["birth"]),
                        math.inf if r["death"] == "inf" else float(r["death"])) for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad bar code JSON: {exc}") from None
        return cls(tuple(bars), coefficient_field)


@dataclass(frozen=True, eq=False)
class CubicalFiltration:
    """Lower-star cubical complex of a sampled field.

    ``bnd_indptr/bnd_indices/bnd_signs`` hold the boundary of every cell in
    cell-index space (CSC layout). ``order`` lists cell indices in filtration
    order and ``position`` is its inverse.
    """
    dims: np.ndarray
    values: np.ndarray
    bnd_indptr: np.ndarray
    bnd_indices: np.ndarray
    bnd_signs: np.ndarray
    order: np.ndarray
    position: np.ndarray
    source_hash: str = ""
    top_dim: int = 1

    @property
    def n_cells(self) -> int:
        return int(self.dims.size)

    def boundary(self, cell: int):
        s, e = self.bnd_indptr[cell], self.bnd_indptr[cell + 1]
        return self.bnd_indices[s:e], self.bnd_signs[s:e]

    def sorted_values(self) -> np.ndarray:
        return self.values[self.order]

    def check_chain_property(self, coeff=None) -> bool:
        """Verify that the boundary of a boundary vanishes."""
        K = get_field(coeff)
        for c in range(self.n_cells):
            acc = {}
            rows, signs = self.boundary(c)
            for r, s in zip(rows, signs):
                rr, ss = self.boundary(int(r))
                for q, t in zip(rr, ss):
                    acc[int(q)] = K.add(acc.get(int(q), K.coerce(0)), K.coerce(int(s) * int(t)))
            if any(v != 0 for v in acc.values()):
                return False
        return True


def cell_complex(topology):
    """Cell dimensions and signed boundaries of the grid's cubical complex."""
    if topology.dim == 1:
        n = topology.shape[0]
        ne = n if topology.periodic else n - 1
        k = np.arange(ne)
        tail, head = k, (k + 1) % n
        dims = np.concatenate([np.zeros(n, int), np.ones(ne, int)])
        counts = np.concatenate([np.zeros(n, np.int64), np.full(ne, 2, np.int64)])
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        indices = np.empty(2 * ne, np.int64)
        signs = np.empty(2 * ne, np.int64)
        indices[0::2], indices[1::2] = tail, head
        signs[0::2], signs[1::2] = -1, 1
        return dims, indptr, indices, signs, [(tail, head)]
    nx, ny = topology.shape
    n = nx * ny
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i, j = i.ravel(), j.ravel()
    k = i + nx * j
    kx = (i + 1) % nx + nx * j        # +x neighbour
    ky = i + nx * ((j + 1) % ny)      # +y neighbour
    dims = np.concatenate([np.zeros(n, int), np.ones(2 * n, int), np.full(n, 2)])
    counts = np.concatenate([np.zeros(n, np.int64), np.full(2 * n, 2, np.int64), np.full(n, 4, np.int64)])
    indptr = np.concatenate([[0], np.cumsum(counts)])
    ex = np.stack([k, kx], 1)
    ey = np.stack([k, ky], 1)
    # face boundary: ex(k) + ey(kx) - ex(ky) - ey(k), edges offset by n / 2n
    faces = np.stack([n + k, 2 * n + kx, n + ky, 2 * n + k], 1)
    indices = np.concatenate([ex.ravel(), ey.ravel(), faces.ravel()])
    esign = np.tile([-1, 1], 2 * n)
    fsign = np.tile([1, 1, -1, -1], n)
    signs = np.concatenate([esign, fsign]).astype(np.int64)
    return dims, indptr, indices.astype(np.int64), signs, [(k, kx), (k, ky)]


def build_filtration(field: SampledField) -> CubicalFiltration:
    topo = field.topology
    dims, indptr, indices, signs, _ = cell_complex(topo)
    n = topo.n_nodes
    values = np.empty(dims.size)
    values[:n] = field.values
    # lower-star: a cell takes the max of its vertices; edges first, then faces
    for d in range(1, topo.dim + 1):
        cells = np.flatnonzero(dims == d)
        for c in cells:
            values[c] = values[indices[indptr[c]:indptr[c + 1]]].max()
    order = np.lexsort((np.arange(dims.size), dims, values))
    position = np.empty_like(order)
    position[order] = np.arange(order.size)
    return CubicalFiltration(dims, values, indptr, indices, signs, order, position,
                             field.digest(), topo.dim)


def _reduce_generic(filt: CubicalFiltration, K):
    """Column reduction over an arbitrary field; returns low[] in position space."""
    m = filt.n_cells
    low = np.full(m, -1, dtype=np.int64)
    owner = {}
    cols = {}
    for j in range(m):
        c = int(filt.order[j])
        rows, signs = filt.boundary(c)
        col = {}
        for r, s in zip(rows, signs):
            col[int(filt.position[r])] = K.coerce(int(s))
        while col:
            piv = max(col)
            k = owner.get(piv)
            if k is None:
                break
            other = cols[k]
            factor = K.neg(K.mul(col[piv], K.inv(other[piv])))
            for r, v in other.items():
                nv = K.add(col.get(r, K.coerce(0)), K.mul(factor, v))
                if nv == 0:
                    col.pop(r, None)
                else:
                    col[r] = nv
        if col:
            piv = max(col)
            owner[piv] = j
            low[j] = piv
            cols[j] = col
    return low


def gf2_columns(filt: CubicalFiltration) -> tuple:
    """Boundary columns in filtration-position space, rows sorted: (indptr, indices, ncols)."""
    m = filt.n_cells
    counts = np.diff(filt.bnd_indptr)[filt.order]
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = np.empty(indptr[-1], dtype=np.int64)
    for j in range(m):
        c = filt.order[j]
        rows = filt.position[filt.bnd_indices[filt.bnd_indptr[c]:filt.bnd_indptr[c + 1]]]
        indices[indptr[j]:indptr[j + 1]] = np.sort(rows)
    return indptr, indices, m


def reduce_boundary(filt: CubicalFiltration, coefficient_field=None) -> np.ndarray:
    K = get_field(coefficient_field)
    if getattr(K, "p", None) == 2:
        return np.asarray(kernels.reduce_gf2(*gf2_columns(filt)))
    return _reduce_generic(filt, K)


def barcode(filt: CubicalFiltration, coefficient_field=None) -> BarCode:
    K = get_field(coefficient_field)
    low = reduce_boundary(filt, K)
    m = filt.n_cells
    vals = filt.values[filt.order]
    dims = filt.dims[filt.order]
    paired = np.zeros(m, dtype=bool)
    bars = []
    for j in np.flatnonzero(low >= 0):
        i = int(low[j])
        paired[i] = paired[j] = True
        if vals[i] < vals[j]:
            bars.append(Bar(int(dims[i]), float(vals[i]), float(vals[j])))
    for j in np.flatnonzero(~paired):
        bars.append(Bar(int(dims[j]), float(vals[j]), math.inf))
    return BarCode(tuple(bars), K.tag, filt.source_hash)


def compute_barcode(field: SampledField, coefficient_field=None) -> BarCode:
    return barcode(build_filtration(field), coefficient_field)


# ---- independent oracle -------------------------------------------------

def _rank(columns, K) -> int:
    """Rank of a sparse matrix given as a list of {row: coeff} dicts.

    Gaussian elimination pivoting on the smallest row index of each column,
    deliberately unlike the max-row pivot rule of the persistence reduction.
    """
    pivots = {}
    rank = 0
    for col in columns:
        col = {r: v for r, v in col.items() if v != 0}
        while col:
            piv = min(col)
            other = pivots.get(piv)
            if other is None:
                inv = K.inv(col[piv])
                pivots[piv] = {r: K.mul(v, inv) for r, v in col.items()}
                rank += 1
                break
            factor = K.neg(col[piv])
            for r, v in other.items():
                nv = K.add(col.get(r, K.coerce(0)), K.mul(factor, v))
                if nv == 0:
                    col.pop(r, None)
                else:
                    col[r] = nv
    return rank


def relative_betti(filt: CubicalFiltration, window: LevelWindow, degree: int,
                   coefficient_field=None) -> int:
    """Betti number of the pair of sublevel complexes {value < b}, {value < a}.

    Computed from ranks of the relative boundary maps, independently of the
    persistence pairing.
    """
    K = get_field(coefficient_field)
    node_vals = set(filt.values[filt.dims == 0].tolist())
    if window.a in node_vals or window.b in node_vals:
        raise CriticalWindowError(f"window {window} touches a grid value")
    vals = filt.values
    rel = (vals < window.b) & ~(vals < window.a)
    p = int(degree)
    if p < 0 or p > filt.top_dim:
        return 0
    cells_p = np.flatnonzero(rel & (filt.dims == p))

    def boundary_cols(d):
        cols = []
        for c in np.flatnonzero(rel & (filt.dims == d)):
            rows, signs = filt.boundary(int(c))
            col = {}
            for r, s in zip(rows, signs):
                if rel[r]:
                    col[int(r)] = K.add(col.get(int(r), K.coerce(0)), K.coerce(int(s)))
            cols.append(col)
        return cols

    rank_p = _rank(boundary_cols(p), K) if p > 0 else 0
    rank_p1 = _rank(boundary_cols(p + 1), K) if p + 1 <= filt.top_dim else 0
    return int(cells_p.size - rank_p - rank_p1)
