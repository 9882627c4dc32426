"""Exact arithmetic in a real quadratic field Q(sqrt d).

Only what the rational digit maps need: affine maps with rational
coefficients, reciprocals, floor and comparison against rationals.  That
is enough to iterate the Gauss map, Lüroth and base-q maps on numbers like
sqrt(2) - 1 without any rounding.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational

__all__ = ["QuadraticSurd", "surd", "parse_number"]


def _squarefree_split(d: int) -> tuple[int, int]:
    """Return (k, r) with d = k**2 * r and r squarefree."""
    k, r = 1, d
    f = 2
    while f * f <= r:
        while r % (f * f) == 0:
            r //= f * f
            k *= f
        f += 1
    return k, r


def _sign(a: int, b: int, d: int) -> int:
    """Sign of a + b*sqrt(d) for d > 1 squarefree."""
    if b == 0:
        return (a > 0) - (a < 0)
    if a >= 0 and b >= 0:
        return 1
    if a <= 0 and b <= 0:
        return -1
    lhs, rhs = a * a, b * b * d
    if a > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


def surd(a, b, d: int, c=1):
    """Build (a + b*sqrt(d)) / c, collapsing to a Fraction when rational."""
    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    if d < 0:
        raise ValueError("only real quadratic fields are supported")
    k, r = _squarefree_split(int(d))
    b *= k
    if b == 0 or r == 1:
        return (a + b) / c if r == 1 else a / c
    if c == 0:
        raise ZeroDivisionError("division by zero")
    L = math.lcm(a.denominator, b.denominator)
    cl = c * L
    # (aL + bL sqrt d) / (cL), then clear the denominator of cL
    A, B, C = int(a * L) * cl.denominator, int(b * L) * cl.denominator, cl.numerator
    if C < 0:
        A, B, C = -A, -B, -C
    return QuadraticSurd._raw(A, B, r, C)


class QuadraticSurd:
    """The real number (a + b*sqrt(d)) / c with integers a, b, c and b != 0."""

    __slots__ = ("a", "b", "d", "c")

    @classmethod
    def _raw(cls, a: int, b: int, d: int, c: int) -> "QuadraticSurd":
        g = math.gcd(math.gcd(a, b), c)
        self = object.__new__(cls)
        self.a, self.b, self.d, self.c = a // g, b // g, d, c // g
        return self

    def __repr__(self) -> str:
        return f"QuadraticSurd(({self.a} + {self.b}*sqrt({self.d}))/{self.c})"

    def __str__(self) -> str:
        sign = "+" if self.b > 0 else "-"
        body = f"{self.a}{sign}{abs(self.b)}*sqrt({self.d})"
        return f"({body})/{self.c}" if self.c != 1 else body

    def __hash__(self) -> int:
        return hash((self.a, self.b, self.d, self.c))

    # --- arithmetic with rationals -------------------------------------------------

    def _affine(self, mul: Fraction, add: Fraction):
        # mul * self + add
        return surd(Fraction(self.a, self.c) * mul + add, Fraction(self.b, self.c) * mul, self.d)

    def __add__(self, other):
        if isinstance(other, QuadraticSurd):
            self._same_field(other)
            return surd(Fraction(self.a, self.c) + Fraction(other.a, other.c),
                        Fraction(self.b, self.c) + Fraction(other.b, other.c), self.d)
        if isinstance(other, (int, Rational)):
            return self._affine(Fraction(1), Fraction(other))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd._raw(-self.a, -self.b, self.d, self.c)

    def __sub__(self, other):
        if isinstance(other, (int, Rational, QuadraticSurd)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Rational)):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, QuadraticSurd):
            self._same_field(other)
            a1, b1, a2, b2 = self.a, self.b, other.a, other.b
            return surd(a1 * a2 + b1 * b2 * self.d, a1 * b2 + a2 * b1, self.d, self.c * other.c)
        if isinstance(other, (int, Rational)):
            return self._affine(Fraction(other), Fraction(0))
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self):
        # c / (a + b sqrt d) = c (a - b sqrt d) / (a^2 - b^2 d)
        den = self.a * self.a - self.b * self.b * self.d
        return surd(self.c * self.a, -self.c * self.b, self.d, den)

    def __truediv__(self, other):
        if isinstance(other, QuadraticSurd):
            return self * other.reciprocal()
        if isinstance(other, (int, Rational)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self._affine(1 / Fraction(other), Fraction(0))
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Rational)):
            return self.reciprocal() * Fraction(other)
        return NotImplemented

    # --- order ---------------------------------------------------------------------

    def _same_field(self, other: "QuadraticSurd") -> None:
        if other.d != self.d:
            raise ValueError("mixing different quadratic fields is not supported")

    def _cmp(self, other) -> int:
        if isinstance(other, QuadraticSurd):
            self._same_field(other)
            diff = self - other
            return 0 if not isinstance(diff, QuadraticSurd) and diff == 0 else (
                diff._cmp(0) if isinstance(diff, QuadraticSurd) else (diff > 0) - (diff < 0))
        if isinstance(other, float):
            other = Fraction(other)
        if not isinstance(other, (int, Rational)):
            return NotImplemented
        q = Fraction(other)
        # (a + b sqrt d)/c - p/r  ~  r*a - p*c + r*b sqrt d   (c, r > 0)
        return _sign(q.denominator * self.a - q.numerator * self.c, q.denominator * self.b, self.d)

    def __lt__(self, other):
        r = self._cmp(other)
        return r if r is NotImplemented else r < 0

    def __le__(self, other):
        r = self._cmp(other)
        return r if r is NotImplemented else r <= 0

    def __gt__(self, other):
        r = self._cmp(other)
        return r if r is NotImplemented else r > 0

    def __ge__(self, other):
        r = self._cmp(other)
        return r if r is NotImplemented else r >= 0

    def __eq__(self, other):
        if isinstance(other, QuadraticSurd):
            return (self.a, self.b, self.d, self.c) == (other.a, other.b, other.d, other.c)
        if isinstance(other, (int, Rational, float)):
            return False  # irrational by construction
        return NotImplemented

    def __floor__(self) -> int:
        k = math.floor(float(self))
        while self < k:
            k -= 1
        while self >= k + 1:
            k += 1
        return k

    def __float__(self) -> float:
        # 64 extra bits through an integer square root keep the result correctly rounded
        shift = 64
        root = math.isqrt(self.d << (2 * shift))
        return float(Fraction(self.a * (1 << shift) + self.b * root, self.c << shift))


_SURD_RE = re.compile(
    r"""^\(?\s*(?P<a>[+-]?\d+(?:/\d+)?)?\s*
        (?P<sign>[+-])?\s*(?:(?P<b>\d+)\s*\*?\s*)?sqrt\(?(?P<d>\d+)\)?\s*
        (?P<tail>[+-]\s*\d+(?:/\d+)?)?\s*\)?\s*(?:/\s*(?P<c>\d+))?$""",
    re.VERBOSE,
)


def parse_number(text: str):
    """Parse "p/q", a decimal, or a quadratic surd such as "sqrt2-1" exactly.

    Decimals are read as exact rationals ("0.125" is 1/8), never via float.
    """
    s = text.strip().replace(" ", "")
    try:
        return Fraction(s)
    except ValueError:
        pass
    m = _SURD_RE.match(s)
    if not m:
        raise ValueError(f"cannot parse number {text!r}")
    a = Fraction(m.group("a") or 0) + Fraction(m.group("tail") or 0)
    b = Fraction(m.group("b") or 1)
    if m.group("sign") == "-":
        b = -b
    c = int(m.group("c") or 1)
    return surd(a, b, int(m.group("d")), c)
