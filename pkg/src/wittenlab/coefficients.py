"""Coefficient fields: GF(p) on Python ints and the rationals on Fraction."""
from fractions import Fraction

from .errors import InputError


class PrimeField:
    def __init__(self, p: int):
        p = int(p)
        if p < 2 or any(p % q == 0 for q in range(2, int(p ** 0.5) + 1)):
            raise InputError(f"{p} is not prime")
        self.p = p
        self.tag = f"GF({p})"

    def coerce(self, x):
        return int(x) % self.p

    def inv(self, x):
        return pow(int(x), -1, self.p)

    def add(self, x, y):
        return (x + y) % self.p

    def mul(self, x, y):
        return (x * y) % self.p

    def neg(self, x):
        return (-x) % self.p


class Rationals:
    tag = "Q"
    p = 0

    def coerce(self, x):
        return Fraction(x)

    def inv(self, x):
        return 1 / Fraction(x)

    def add(self, x, y):
        return x + y

    def mul(self, x, y):
        return x * y

    def neg(self, x):
        return -x


def get_field(spec):
    """Accepts 2, 3, 'GF(3)', 'Q', 'rationals', a field object or None (GF(2))."""
    if spec is None:
        return PrimeField(2)
    if isinstance(spec, (PrimeField, Rationals)):
        return spec
    s = str(spec).strip()
    if s.lower() in ("q", "rationals", "rational", "0"):
        return Rationals()
    if s.upper().startswith("GF(") and s.endswith(")"):
        s = s[3:-1]
    try:
        return PrimeField(int(s))
    except ValueError:
        raise InputError(f"unknown coefficient field {spec!r}") from None
