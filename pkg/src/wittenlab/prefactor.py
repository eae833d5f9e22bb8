"""Eyring-Kramers prefactor calculators for the small Witten eigenvalues.

Every estimate is returned as a :class:`LogValue` so that factors such as
exp(-2 * 100 / 1e-3) stay representable; ``.value`` gives the raw float
(which may underflow to 0).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .errors import DegenerateDataError, InputError


@dataclass(frozen=True)
class LogValue:
    """A real number stored as sign * exp(log)."""
    log: float
    sign: int = 1

    @classmethod
    def of(cls, x: float) -> "LogValue":
        if x == 0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log)
        except OverflowError:
            return self.sign * math.inf

    def __mul__(self, other):
        o = other if isinstance(other, LogValue) else LogValue.of(other)
        return LogValue(self.log + o.log, self.sign * o.sign)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = other if isinstance(other, LogValue) else LogValue.of(other)
        if o.sign == 0:
            raise ZeroDivisionError("division by a zero LogValue")
        return LogValue(self.log - o.log, self.sign * o.sign)

    def ratio(self, other) -> float:
        """self / other as a plain float (assumes a representable ratio)."""
        return (self / other).value

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class MorseDatum:
    """A non-degenerate critical point: value, index and Hessian eigenvalues."""
    value: float
    negative: tuple = ()
    positive: tuple = ()

    def __post_init__(self):
        neg = tuple(float(v) for v in self.negative)
        pos = tuple(float(v) for v in self.positive)
        for v in neg + pos:
            if v == 0:
                raise DegenerateDataError(
                    "zero Hessian eigenvalue: use degenerate_min_rate with a Laplace integral")
        if any(v > 0 for v in neg) or any(v < 0 for v in pos):
            raise InputError("negative/positive Hessian eigenvalues have the wrong sign")
        object.__setattr__(self, "negative", neg)
        object.__setattr__(self, "positive", pos)

    @property
    def index(self) -> int:
        return len(self.negative)

    @property
    def dim(self) -> int:
        return len(self.negative) + len(self.positive)

    def log_abs_det(self) -> float:
        return sum(math.log(abs(v)) for v in self.negative + self.positive)

    def log_neg(self) -> float:
        return sum(math.log(abs(v)) for v in self.negative)

    def log_pos(self) -> float:
        return sum(math.log(v) for v in self.positive)


def _check_h(h):
    if not h > 0:
        raise InputError(f"h must be positive, got {h}")


def morse_rate(x: MorseDatum, y: MorseDatum, kappa2, h: float) -> LogValue:
    """Leading term kappa^2 (h/pi) |prod neg(y)| / |prod neg(x)| |det x|^1/2 / |det y|^1/2 e^{-2(y-x)/h}."""
    _check_h(h)
    if y.index != x.index + 1:
        raise InputError(f"index of y must be index of x plus one ({x.index}, {y.index})")
    if x.dim != y.dim:
        raise InputError("x and y live in different dimensions")
    if not y.value > x.value:
        raise InputError("need y.value > x.value")
    if not float(kappa2) > 0:
        raise InputError("kappa^2 must be positive")
    lg = (math.log(float(kappa2)) + math.log(h / math.pi) + y.log_neg() - x.log_neg()
          + 0.5 * x.log_abs_det() - 0.5 * y.log_abs_det() - 2.0 * (y.value - x.value) / h)
    return LogValue(lg)


# ---- Laplace integrals --------------------------------------------------

def _argmin_1d(phi, lo, hi):
    a = lo if math.isfinite(lo) else -50.0
    b = hi if math.isfinite(hi) else 50.0
    xs = np.linspace(a, b, 4001)
    with np.errstate(all="ignore"):
        ys = np.asarray([phi(t) for t in xs], dtype=float)
    ys = np.where(np.isfinite(ys), ys, np.inf)
    k = int(np.argmin(ys))
    lo_k, hi_k = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
    if hi_k > lo_k:
        res = optimize.minimize_scalar(phi, bounds=(lo_k, hi_k), method="bounded",
                                       options={"xatol": 1e-12})
        if res.fun <= ys[k]:
            return float(res.x), float(res.fun), xs, ys
    return float(xs[k]), float(ys[k]), xs, ys


def log_laplace_integral(phi: Callable, h: float, domain=(-math.inf, math.inf),
                         rtol: float = 1e-8) -> float:
    """log of the integral over ``domain`` of exp(-phi(x)/h).

    The integrand is shifted by its minimum and the domain is split at every
    grid-local minimum, with breakpoints at multiples of sqrt(h) around each,
    before adaptive Gauss-Kronrod quadrature (QUADPACK).
    """
    _check_h(h)
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise InputError("empty integration domain")
    x0, m, xs, ys = _argmin_1d(phi, lo, hi)

    def g(t):
        v = phi(t)
        return math.exp(-(v - m) / h) if math.isfinite(v) else 0.0

    # breakpoints: local minima of the coarse scan and a sqrt(h) ladder around x0
    pts = {x0}
    loc = np.flatnonzero((ys[1:-1] <= ys[:-2]) & (ys[1:-1] <= ys[2:])) + 1
    for k in loc:
        if ys[k] - m < 60 * h:
            pts.add(float(xs[k]))
    s = math.sqrt(h)
    for c in list(pts):
        for j in (1, 2, 4, 8, 16, 32):
            pts.add(c - j * s)
            pts.add(c + j * s)
    pts = sorted(p for p in pts if lo < p < hi)
    edges = [lo] + pts + [hi]
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(g, a, b, epsabs=0.0, epsrel=rtol * 0.1, limit=400)
        total += val
        err += e
    if not total > 0 or not math.isfinite(total):
        raise DegenerateDataError("Laplace integral is zero or did not converge")
    if err > rtol * total * 10:
        raise DegenerateDataError(f"Laplace integral nonconvergent (error {err:.2e} of {total:.2e})")
    return math.log(total) - m / h


def laplace_integral(phi: Callable, h: float, domain=(-math.inf, math.inf), rtol: float = 1e-8) -> float:
    """Integral over ``domain`` of exp(-phi(x)/h) (may underflow; see log_laplace_integral)."""
    return math.exp(log_laplace_integral(phi, h, domain, rtol))


def quartic_family_integral(delta: float, h: float, rtol: float = 1e-10) -> float:
    """I(delta, h): integral over R of exp(-(x^4/4 - delta x^2/2 + [delta>0] delta^2/4)/h).

    For delta > 0 the potential is a symmetric double well with minima 0.
    """
    d = float(delta)
    shift = d * d / 4 if d > 0 else 0.0
    return laplace_integral(lambda x: x ** 4 / 4 - d * x * x / 2 + shift, h, rtol=rtol)


def quartic_family_constant(delta: float) -> float:
    """C_delta with I(delta, h) ~ C_delta h^{1/2} (delta != 0), or C with I(0, h) = C h^{1/4}."""
    d = float(delta)
    if d > 0:
        return 2.0 * math.sqrt(math.pi / d)     # two wells of curvature 2 delta
    if d < 0:
        return math.sqrt(2.0 * math.pi / -d)    # one well of curvature |delta|
    return 4 ** 0.25 * special.gamma(0.25) / 2.0


def degenerate_min_rate(saddle: MorseDatum, basin_integral, gap: float, h: float) -> LogValue:
    """h |lambda_1(y)| / (pi |det Hess y|^1/2) e^{-2 gap/h} / ((pi h)^{-d/2} basin_integral).

    ``basin_integral`` is the integral of exp(-2 (f - min)/h) over the basin,
    as a float or a LogValue.
    """
    _check_h(h)
    if saddle.index != 1:
        raise InputError("saddle must have index 1")
    I = basin_integral if isinstance(basin_integral, LogValue) else LogValue.of(float(basin_integral))
    if I.sign <= 0:
        raise DegenerateDataError("basin integral must be positive")
    d = saddle.dim
    lg = (math.log(h / math.pi) + saddle.log_neg() - 0.5 * saddle.log_abs_det()
          - 2.0 * gap / h - (-0.5 * d * math.log(math.pi * h) + I.log))
    return LogValue(lg)


def harmonic_mean(s: float, t: float) -> float:
    return 2.0 * s * t / (s + t)


def piecewise_affine_rate(min_slopes: Sequence[float], max_slopes: Sequence[float],
                          gap: float, h: float) -> LogValue:
    """H[|f'(y+0)|, f'(y-0)] H[f'(x+0), |f'(x-0)|] e^{-2 gap / h} (no power of h).

    ``min_slopes`` = (f'(x-0), f'(x+0)) at the minimum, ``max_slopes`` =
    (f'(y-0), f'(y+0)) at the maximum.
    """
    _check_h(h)
    xm, xp = (float(v) for v in min_slopes)
    ym, yp = (float(v) for v in max_slopes)
    if 0.0 in (xm, xp, ym, yp):
        raise DegenerateDataError("zero slope: constant pieces are not covered by this rule")
    if not (xm < 0 < xp and ym > 0 > yp):
        raise InputError("slopes must be (-,+) at the minimum and (+,-) at the maximum")
    pref = harmonic_mean(abs(yp), ym) * harmonic_mean(xp, abs(xm))
    return LogValue(math.log(pref) - 2.0 * gap / h)


def as1d_rate(f: Callable, x_min: float, y_max: float, omega0, omega1, h: float,
              rtol: float = 1e-9) -> LogValue:
    """One-dimensional capacity formula for the small eigenvalue of a well.

    1 / [(h^-1 int_{omega1} e^{2 f/h}) (h^-1 int_{omega0} e^{-2 f/h})], where
    omega0 is a neighbourhood of the minimum and omega1 of the maximum. Both
    integrals are shifted by the extreme values, giving
    e^{-2 (f(y) - f(x)) / h} / [...].
    """
    fx, fy = f(x_min), f(y_max)
    log_i0 = log_laplace_integral(lambda t: 2.0 * (f(t) - fx), h, omega0, rtol)
    log_i1 = log_laplace_integral(lambda t: -2.0 * (f(t) - fy), h, omega1, rtol)
    return LogValue(-2.0 * (fy - fx) / h - (log_i0 - math.log(h)) - (log_i1 - math.log(h)))


# ---- kappa systems ------------------------------------------------------

@dataclass(frozen=True)
class KappaSystem:
    """Integer matrix kappa (K x K', rows = index-p points, columns = index-(p+1)
    points) with the Morse data at both levels. Offsets are added to the
    critical values: lower value_k = c + delta * lower_offsets[k]."""
    kappa: tuple
    lower: tuple
    upper: tuple
    delta: float = 0.0
    lower_offsets: tuple = None
    upper_offsets: tuple = None

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=object)
        if k.ndim != 2:
            raise InputError("kappa must be a matrix")
        K, Kp = k.shape
        if len(self.lower) != K or len(self.upper) != Kp:
            raise InputError(f"kappa is {K}x{Kp} but got {len(self.lower)} lower and "
                             f"{len(self.upper)} upper points")
        p = self.lower[0].index if self.lower else 0
        if any(x.index != p for x in self.lower) or any(y.index != p + 1 for y in self.upper):
            raise InputError("lower points must share index p and upper points index p+1")
        for name, n in (("lower_offsets", K), ("upper_offsets", Kp)):
            v = getattr(self, name)
            v = (0.0,) * n if v is None else tuple(float(t) for t in v)
            if len(v) != n:
                raise InputError(f"{name} has the wrong length")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "kappa", tuple(tuple(int(v) for v in row) for row in self.kappa))

    @property
    def shape(self):
        return len(self.lower), len(self.upper)

    def rank(self) -> int:
        rows = [[Fraction(v) for v in row] for row in self.kappa]
        rank = 0
        ncol = len(rows[0]) if rows else 0
        for c in range(ncol):
            piv = next((r for r in range(rank, len(rows)) if rows[r][c] != 0), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            for r in range(len(rows)):
                if r != rank and rows[r][c] != 0:
                    f = rows[r][c] / rows[rank][c]
                    rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
            rank += 1
        return rank

    def log_diagonals(self, h: float):
        """log of the diagonal entries of D^(p) and D^(p+1)."""
        lo = [0.25 * x.log_neg() - 0.25 * x.log_pos() - (x.value + self.delta * t) / h
              for x, t in zip(self.lower, self.lower_offsets)]
        up = [0.25 * y.log_neg() - 0.25 * y.log_pos() - (y.value + self.delta * t) / h
              for y, t in zip(self.upper, self.upper_offsets)]
        return np.array(lo), np.array(up)


def kappa_singular_values(sys: KappaSystem, h: float) -> list:
    """Singular values (as LogValues, descending) of (h/pi)^1/2 (D^(p))^-1 kappa D^(p+1).

    Rank-deficient directions are returned as exact zeros.
    """
    from .spectra import jacobi_svd
    _check_h(h)
    K, Kp = sys.shape
    lo, up = sys.log_diagonals(h)
    kap = np.array(sys.kappa, dtype=float)
    logs = -lo[:, None] + up[None, :]
    with np.errstate(divide="ignore"):
        logs = np.where(kap != 0, logs + np.log(np.abs(kap)), -np.inf)
    shift = float(np.max(logs[np.isfinite(logs)])) if np.isfinite(logs).any() else 0.0
    M = np.sign(kap) * np.exp(logs - shift)
    # Jacobi acts on columns; put the index with the strongest grading on columns.
    s = jacobi_svd(M.T if K >= Kp else M, compute_uv=False)
    s = np.sort(s)[::-1]
    r = sys.rank()
    out = []
    for k in range(min(K, Kp)):
        if k < r and s[k] > 0:
            out.append(LogValue(math.log(s[k]) + shift + 0.5 * math.log(h / math.pi)))
        else:
            out.append(LogValue(-math.inf, 0))
    return out


def kappa_rates(sys: KappaSystem, h: float) -> list:
    """Eigenvalue estimates: squares of :func:`kappa_singular_values` (descending)."""
    return [LogValue(2 * v.log, 1) if v.sign else LogValue(-math.inf, 0)
            for v in kappa_singular_values(sys, h)]


def circulant_kappa(K: int) -> list:
    """The K x K cyclic difference matrix: 1 on the diagonal, -1 to the right, wrapping."""
    if K < 2:
        raise InputError("K must be at least 2")
    M = [[0] * K for _ in range(K)]
    for i in range(K):
        M[i][i] = 1
        M[i][(i + 1) % K] = -1
    return M


def circulant_singular_values(K: int) -> list:
    """|1 - omega^k| for k = 1..K with omega = exp(2 pi i / K) (the last is 0)."""
    if K < 2:
        raise InputError("K must be at least 2")
    return [abs(1 - cmath.exp(2j * math.pi * k / K)) if k % K else 0.0 for k in range(1, K + 1)]


def circulant_rates(K: int, minimum: MorseDatum, saddle: MorseDatum, h: float) -> list:
    """Eigenvalues for K symmetric wells joined cyclically through K equal saddles.

    Value k (k = 1..K) is (h/pi) (|det Hess x|^1/2 |lambda_1(y)| / |det Hess y|^1/2)
    |1 - omega^k|^2 exp(-2 (y - x) / h); the k = K entry is an exact zero.
    """
    _check_h(h)
    if minimum.index != 0 or saddle.index != 1:
        raise InputError("need an index-0 minimum and an index-1 saddle")
    base = morse_rate(minimum, saddle, 1, h)
    out = []
    for s in circulant_singular_values(K):
        out.append(base * (s * s) if s > 0 else LogValue(-math.inf, 0))
    return out


# ---- critical submanifolds --------------------------------------------------

def critical_submanifold_rate(saddle: MorseDatum, p: int, kappa: float, mprime_integral,
                              basin_integral, gap: float, h: float) -> LogValue:
    """Small eigenvalue attached to a bar born on a critical submanifold M'.

    (h/pi) |lambda_1..lambda_{p+1}(y)|^1/2 / |lambda_{p+2}..lambda_d(y)|^1/2
    * (pi h)^-p (kappa * mprime_integral)^2 / ((pi h)^{-d/2} basin_integral)
    * exp(-2 gap / h), where ``mprime_integral`` is the integral of
    exp(2 delta phi / h) over M' and ``basin_integral`` the integral of
    exp(-2 (f - delta chi phi) / h) around M' (floats or LogValues).
    """
    _check_h(h)
    if saddle.index != p + 1:
        raise InputError("the upper point must have index p + 1")
    Im = mprime_integral if isinstance(mprime_integral, LogValue) else LogValue.of(float(mprime_integral))
    Ib = basin_integral if isinstance(basin_integral, LogValue) else LogValue.of(float(basin_integral))
    if Ib.sign <= 0 or Im.sign == 0 or kappa == 0:
        raise DegenerateDataError("zero integral or zero kappa")
    d = saddle.dim
    lg = (math.log(h / math.pi) + 0.5 * saddle.log_neg() - 0.5 * saddle.log_pos()
          - p * math.log(math.pi * h) + 2 * (math.log(abs(kappa)) + Im.log)
          - (-0.5 * d * math.log(math.pi * h) + Ib.log) - 2.0 * gap / h)
    return LogValue(lg)


def mexican_hat_rate(h: float, delta: float = 0.0) -> LogValue:
    """The hat r^4/4 - r^2/2 + 1/4 in the plane, optionally tilted along the ring
    by delta * (1 + cos theta); integrals evaluated by quadrature."""
    y = MorseDatum(0.25, (-1.0, -1.0), ())
    if delta == 0:
        Im = LogValue.of(2 * math.pi)
        # basin integral in polar coordinates: 2 pi int r exp(-2 f(r)/h) dr
        lr = log_laplace_integral(lambda r: 2 * (r * r - 1) ** 2 / 4 - h * math.log(max(r, 1e-300)),
                                  h, (0.0, 4.0))
        Ib = LogValue(math.log(2 * math.pi) + lr)
    else:
        phi = lambda t: -1.0 - math.cos(t)
        Im = LogValue(log_laplace_integral(lambda t: -2 * delta * phi(t), h, (0.0, 2 * math.pi)))
        lr = log_laplace_integral(lambda r: 2 * (r * r - 1) ** 2 / 4 - h * math.log(max(r, 1e-300)),
                                  h, (0.0, 4.0))
        lt = log_laplace_integral(lambda t: -2 * delta * phi(t), h, (0.0, 2 * math.pi))
        Ib = LogValue(lr + lt)  # separated variables with the ring metric d theta^2
    return critical_submanifold_rate(y, 1, 1.0, Im, Ib, 0.25, h)
