"""Grid topologies, sampled potentials, level windows and critical levels.

Node ordering is row-major with axis 0 fastest: on a torus the node (i, j)
has flat index ``i + Nx * j``.
"""
from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import CriticalWindowError, EmptyLandscapeError, InputError, NonFiniteFieldError

KINDS = ("circle", "interval", "torus")


@dataclass(frozen=True)
class GridTopology:
    """A uniform grid: ``circle(N)``, ``interval(N)`` or ``torus(Nx, Ny)``.

    ``origin`` is the coordinate of node 0 along each axis. Periodic axes
    have extent ``N * spacing``; an interval of N nodes spans
    ``(N - 1) * spacing`` and carries the boundary tags ``left``/``right``.
    """
    kind: str
    shape: tuple
    spacing: tuple
    origin: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown topology kind {self.kind!r}")
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        dim = 2 if self.kind == "torus" else 1
        if len(shape) != dim:
            raise InputError(f"{self.kind} needs {dim} axis size(s), got {shape}")
        # N >= 2 keeps a valid cell complex on periodic axes; intervals need
        # at least one edge.
        if any(n < 2 for n in shape):
            raise InputError(f"grid sizes must be >= 2, got {shape}")
        spacing = tuple(float(s) for s in np.broadcast_to(np.atleast_1d(self.spacing), (dim,)))
        if any(not (s > 0 and math.isfinite(s)) for s in spacing):
            raise InputError(f"spacing must be positive and finite, got {spacing}")
        origin = (0.0,) * dim if self.origin is None else tuple(
            float(o) for o in np.broadcast_to(np.atleast_1d(self.origin), (dim,)))
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def circle(cls, n, spacing=None, origin=0.0):
        return cls("circle", (n,), 2 * math.pi / n if spacing is None else spacing, origin)

    @classmethod
    def interval(cls, n, lo=0.0, hi=1.0):
        return cls("interval", (n,), (hi - lo) / (n - 1), lo)

    @classmethod
    def torus(cls, nx, ny, spacing=None, origin=0.0):
        if spacing is None:
            spacing = (2 * math.pi / nx, 2 * math.pi / ny)
        return cls("torus", (nx, ny), spacing, origin)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def periodic(self) -> bool:
        return self.kind != "interval"

    @property
    def extent(self) -> tuple:
        if self.periodic:
            return tuple(n * s for n, s in zip(self.shape, self.spacing))
        return ((self.shape[0] - 1) * self.spacing[0],)

    def axis_coords(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def node_coords(self):
        """Coordinates of every node in flat order (one array per axis)."""
        if self.dim == 1:
            return (self.axis_coords(0),)
        xs, ys = self.axis_coords(0), self.axis_coords(1)
        X, Y = np.meshgrid(xs, ys, indexing="xy")  # shape (Ny, Nx): axis 0 fastest when raveled
        return X.ravel(), Y.ravel()

    def boundary_tags(self) -> dict:
        """Boundary node tags of an interval (empty for periodic grids)."""
        if self.kind == "interval":
            return {"left": 0, "right": self.shape[0] - 1}
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shape": list(self.shape),
                "spacing": list(self.spacing), "origin": list(self.origin)}


_SAFE_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "sinh",
                 "cosh", "arctan", "arctan2", "minimum", "maximum", "where", "pi",
                 "sign", "clip", "hypot", "floor", "mod")
}


def _compile_expr(expr: str) -> Callable:
    code = compile(expr, "<field expression>", "eval")
    for name in code.co_names:
        if name not in _SAFE_NAMES and name not in ("x", "y", "theta", "r"):
            raise InputError(f"name {name!r} is not allowed in a field expression")

    def fn(*coords):
        env = dict(_SAFE_NAMES)
        env["x"] = env["theta"] = coords[0]
        if len(coords) > 1:
            env["y"] = coords[1]
            env["r"] = np.hypot(coords[0], coords[1])
        else:
            env["r"] = np.abs(coords[0])
        return eval(code, {"__builtins__": {}}, env)

    return fn


@dataclass(frozen=True, eq=False)
class SampledField:
    topology: GridTopology
    values: np.ndarray
    _lip: list = dc_field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.topology.n_nodes:
            raise InputError(f"expected {self.topology.n_nodes} values, got {v.size}")
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            raise NonFiniteFieldError(f"non-finite value at node {int(bad[0])}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def as_grid(self) -> np.ndarray:
        """Values as an array indexed ``[i, j]`` (1D: ``[i]``)."""
        if self.topology.dim == 1:
            return self.values
        nx, ny = self.topology.shape
        return self.values.reshape(ny, nx).T

    @property
    def lipschitz_bound(self) -> float:
        """Max over adjacent node pairs of |difference| / spacing (cached)."""
        if not self._lip:
            g = self.as_grid()
            best = 0.0
            for axis in range(self.topology.dim):
                d = np.diff(g, axis=axis)
                if self.topology.periodic:
                    first = np.take(g, [0], axis=axis)
                    last = np.take(g, [-1], axis=axis)
                    d = np.concatenate([d, first - last], axis=axis)
                if d.size:
                    best = max(best, float(np.abs(d).max()) / self.topology.spacing[axis])
            self._lip.append(best)
        return self._lip[0]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.topology.to_dict(), sort_keys=True).encode())
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()[:16]

    def shifted(self, c: float) -> "SampledField":
        return SampledField(self.topology, self.values + c)

    def with_values(self, values) -> "SampledField":
        return SampledField(self.topology, values)


def sample(expr, topology: GridTopology) -> SampledField:
    """Evaluate ``expr`` at every node.

    ``expr`` is a callable taking the coordinate arrays, a numpy expression
    string in the variables ``x`` (alias ``theta``), ``y`` and ``r``, or a
    constant.
    """
    coords = topology.node_coords()
    if isinstance(expr, str):
        fn = _compile_expr(expr)
    elif callable(expr):
        fn = expr
    else:
        const = float(expr)

        def fn(*c):
            return np.full_like(c[0], const, dtype=float)
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(fn(*coords), dtype=float), coords[0].shape).copy()
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        k = int(bad[0])
        where = ", ".join(f"{c[k]!r}" for c in coords)
        raise NonFiniteFieldError(f"expression is not finite at node {k} (coordinates {where})")
    return SampledField(topology, vals)


@dataclass(frozen=True)
class LevelWindow:
    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if math.isnan(a) or math.isnan(b) or not a < b:
            raise InputError(f"window needs a < b, got ({a}, {b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def full(cls):
        return cls()

    @classmethod
    def parse(cls, text: str) -> "LevelWindow":
        if str(text).strip().lower() == "full":
            return cls.full()
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 2:
            raise InputError(f"window must be 'a,b' or 'full', got {text!r}")
        return cls(float(parts[0]), float(parts[1]))

    @property
    def is_full(self) -> bool:
        return self.a == -math.inf and self.b == math.inf

    def contains(self, t: float) -> bool:
        return self.a < t < self.b

    def require_noncritical(self, levels: Sequence[float]):
        for t in levels:
            if t == self.a or t == self.b:
                raise CriticalWindowError(f"window endpoint {t!r} is a critical level")

    def __str__(self):
        return f"({self.a}, {self.b})"


@dataclass(frozen=True)
class CriticalLevels:
    levels: tuple
    eta_f: float  # nan when only one level exists
    single_level: bool

    @property
    def span(self) -> float:
        return self.levels[-1] - self.levels[0]


LEVEL_ULPS = 64


def critical_levels(barcode) -> CriticalLevels:
    """Sorted distinct finite bar endpoints and eta_f = min gap / 4.

    Endpoints closer than LEVEL_ULPS ulps of the largest magnitude are one
    level: symmetric critical points sample to values that differ only by
    rounding.
    """
    pts = set()
    for bar in barcode.bars:
        pts.add(bar.birth)
        if math.isfinite(bar.death):
            pts.add(bar.death)
    if not pts:
        raise EmptyLandscapeError("bar code has no endpoints")
    raw = sorted(pts)
    tol = LEVEL_ULPS * np.finfo(float).eps * max(1.0, max(abs(v) for v in raw))
    merged = [raw[0]]
    for v in raw[1:]:
        if v - merged[-1] > tol:
            merged.append(v)
    levels = tuple(merged)
    if len(levels) == 1:
        return CriticalLevels(levels, math.nan, True)
    gap = min(b - a for a, b in zip(levels[:-1], levels[1:]))
    return CriticalLevels(levels, gap / 4.0, False)


def brute_force_extrema(field: SampledField) -> tuple:
    """Strict local minima and maxima values of a 1D field by neighbour scan."""
    v = field.values
    n = v.size
    out = set()
    for i in range(n):
        nbrs = []
        if field.topology.periodic:
            nbrs = [v[(i - 1) % n], v[(i + 1) % n]]
        else:
            if i > 0:
                nbrs.append(v[i - 1])
            if i < n - 1:
                nbrs.append(v[i + 1])
        if all(v[i] < w for w in nbrs) or all(v[i] > w for w in nbrs):
            out.add(float(v[i]))
    return tuple(sorted(out))


# ---- I/O -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _pair(vals) -> str:
    vals = list(vals)
    if len(vals) == 1 or all(v == vals[0] for v in vals):
        return _fmt(vals[0])
    return ":".join(_fmt(v) for v in vals)


def _unpair(text: str, dim: int) -> tuple:
    parts = [float(p) for p in text.split(":")]
    if len(parts) == 1:
        parts = parts * dim
    if len(parts) != dim:
        raise InputError(f"expected {dim} components in {text!r}")
    return tuple(parts)


def field_to_csv(field: SampledField) -> str:
    t = field.topology
    head = ["topology", t.kind] + [str(n) for n in t.shape] + [_pair(t.spacing)]
    if any(o != 0.0 for o in t.origin):
        head.append(_pair(t.origin))
    buf = io.StringIO()
    buf.write(",".join(head) + "\n")
    for v in field.values:
        buf.write(_fmt(v) + "\n")
    return buf.getvalue()


def field_from_csv(text: str) -> SampledField:
    lines = text.splitlines()
    if not lines:
        raise InputError("empty field file")
    head = [h.strip() for h in lines[0].split(",")]
    if len(head) < 4 or head[0] != "topology":
        raise InputError("first line must be 'topology,kind,N[,Ny],spacing'")
    kind = head[1]
    dim = 2 if kind == "torus" else 1
    try:
        shape = tuple(int(x) for x in head[2:2 + dim])
        rest = head[2 + dim:]
        spacing = _unpair(rest[0], dim)
        origin = _unpair(rest[1], dim) if len(rest) > 1 else None
    except (ValueError, IndexError) as exc:
        raise InputError(f"bad field header {lines[0]!r}: {exc}") from None
    topo = GridTopology(kind, shape, spacing, origin)
    body = [ln for ln in lines[1:] if ln.strip()]
    try:
        vals = [float(ln) for ln in body]
    except ValueError as exc:
        raise InputError(f"bad value line: {exc}") from None
    return SampledField(topo, vals)


def field_to_json(field: SampledField) -> str:
    doc = {"topology": field.topology.to_dict(), "values": [float(v) for v in field.values]}
    return json.dumps(doc, indent=None, separators=(",", ":")) + "\n"


def field_from_json(text: str) -> SampledField:
    try:
        doc = json.loads(text)
        t = doc["topology"]
        topo = GridTopology(t["kind"], tuple(t["shape"]), tuple(t["spacing"]),
                            tuple(t.get("origin", (0.0,) * len(t["shape"]))))
        return SampledField(topo, doc["values"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"bad field JSON: {exc}") from None


def load_field(path) -> SampledField:
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        return field_from_json(text)
    return field_from_csv(text)


def save_field(field: SampledField, path):
    text = field_to_json(field) if str(path).endswith(".json") else field_to_csv(field)
    with open(path, "w") as fh:
        fh.write(text)
