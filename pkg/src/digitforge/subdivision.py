"""Nested subdivision schemes and digit expansions.

Five concrete families are provided:

* ``BaseQ(q)``           -- base-q expansion on [0, 1)
* ``GLS(lengths, signs)`` -- generalized Lüroth series (finite alphabet)
* ``Luroth()``           -- the original Lüroth series, digits 2, 3, ...
* ``PseudoGoldenBeta(m)`` -- beta-expansion for the root of z^m - ... - z - 1
* ``ContinuedFraction()`` -- regular continued fractions via the Gauss map

Rational schemes work in exact ``Fraction`` arithmetic (inputs may also be
``QuadraticSurd``); the pseudo golden mean scheme works in a private 128-bit
mpmath context.  Cells are open intervals.  Digit extraction follows the
half-open cylinders of each dynamical system; ``strict=True`` additionally
rejects points that sit on an endpoint of some visited cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any, Iterable, Sequence

import mpmath
import numpy as np

from .errors import (
    EmptyCellError,
    EndpointError,
    InvalidParameterError,
    UnknownDigitError,
    UnsupportedSchemeError,
)
from .surd import QuadraticSurd

__all__ = [
    "Interval",
    "DigitPmf",
    "Scheme",
    "BaseQ",
    "GLS",
    "Luroth",
    "PseudoGoldenBeta",
    "ContinuedFraction",
    "cell",
    "children",
    "words",
    "digits_of",
    "remainder",
    "approximation_errors",
    "pmf_first_level",
    "float_digits",
    "beta_digits",
    "scheme_from_config",
    "parse_scheme",
]

HIGH_PRECISION_BITS = 128


@dataclass(frozen=True)
class Interval:
    """Open interval (left, left + length)."""

    left: Any
    length: Any

    @property
    def right(self):
        return self.left + self.length

    def contains(self, x) -> bool:
        return self.left < x < self.left + self.length

    def __iter__(self):
        return iter((self.left, self.length))


@dataclass(frozen=True)
class DigitPmf:
    """Truncated PMF over digits; ``tail`` is the mass not enumerated."""

    probs: dict
    tail: Any = 0

    def __getitem__(self, k):
        return self.probs[k]


def _frac(x) -> Fraction | QuadraticSurd:
    if isinstance(x, (QuadraticSurd, Fraction)):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if hasattr(x, "_mpf_"):
        man, exp = mpmath.mpf(x).man_exp
        return Fraction(int(man)) * (Fraction(2) ** int(exp))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"unsupported number type {type(x).__name__}")


class Scheme:
    """Base class for nested-subdivision generators.

    Subclasses are immutable after construction.  ``memory`` is how many
    following digits decide whether a digit word can be extended (0 when
    every branch of the map is onto).
    """

    kind: str = ""
    countable: bool = False
    exact: bool = True
    memory: int = 0
    first_digit: int = 0

    # -- identity -----------------------------------------------------------------
    def to_config(self) -> dict:
        raise NotImplementedError

    def _key(self):
        return json.dumps(self.to_config(), sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, Scheme) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"{type(self).__name__}({self.to_config()})"

    # -- alphabet ---------------------------------------------------------------------
    def alphabet(self, max_digits: int | None = None) -> list[int]:
        raise NotImplementedError

    def is_digit(self, k) -> bool:
        raise NotImplementedError

    def check_prefix(self, prefix: Iterable[int]) -> tuple[int, ...]:
        prefix = tuple(prefix)
        for k in prefix:
            if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not self.is_digit(k):
                raise UnknownDigitError(f"{k!r} is not a digit of {self!r}")
        return tuple(int(k) for k in prefix)

    # -- numbers ----------------------------------------------------------------------
    @property
    def root(self) -> Interval:
        return Interval(self.coerce(0), self.coerce(1))

    def coerce(self, x):
        return _frac(x)

    def zero(self):
        return self.coerce(0)

    # -- geometry -------------------------------------------------------------------
    def cell(self, prefix: Sequence[int]) -> Interval:
        raise NotImplementedError

    def length(self, prefix: Sequence[int]):
        return self.cell(prefix).length

    def step(self, x):
        """One step of the digit map: return (digit, T(x)).

        Raises EndpointError when x is outside the half-open domain.
        """
        raise NotImplementedError

    # -- float helpers (vectorised; used by samplers and diagnostics) -------------------
    def float_step(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def inverse_branch_float(self, k, y):
        """Return (T_k^{-1}(y), |d T_k^{-1}/dy|, valid) elementwise."""
        raise NotImplementedError


# ---------------------------------------------------------------------------------------
# Generalized Lüroth series and base q


class GLS(Scheme):
    """Generalized Lüroth series on [0, 1) with a finite alphabet.

    Interval k has length ``lengths[k]``; intervals are laid out left to
    right in digit order.  ``signs[k]`` is the sign of the slope of T_k.
    """

    kind = "gls"

    def __init__(self, lengths: Sequence, signs: Sequence[int] | None = None):
        lengths = [Fraction(v) for v in lengths]
        if not lengths or any(v <= 0 for v in lengths):
            raise InvalidParameterError("GLS lengths must be positive")
        if sum(lengths) != 1:
            raise InvalidParameterError("GLS lengths must sum to the root length 1")
        signs = [1] * len(lengths) if signs is None else [int(t) for t in signs]
        if len(signs) != len(lengths) or any(t not in (1, -1) for t in signs):
            raise InvalidParameterError("GLS signs must be +1 or -1, one per interval")
        self.lengths = tuple(lengths)
        self.signs = tuple(signs)
        lefts, acc = [], Fraction(0)
        for v in lengths:
            lefts.append(acc)
            acc += v
        self.lefts = tuple(lefts)
        self._lefts_f = np.array([float(a) for a in lefts])
        self._lengths_f = np.array([float(v) for v in lengths])
        self._signs_a = np.array(signs)

    def to_config(self) -> dict:
        return {
            "kind": "gls",
            "lengths": [f"{v.numerator}/{v.denominator}" for v in self.lengths],
            "signs": list(self.signs),
        }

    def alphabet(self, max_digits=None):
        return list(range(len(self.lengths)))

    def is_digit(self, k):
        return 0 <= k < len(self.lengths)

    def orientation(self, prefix) -> int:
        """Product of the slope signs along ``prefix`` (+1: children keep order)."""
        sgn = 1
        for k in prefix:
            sgn *= self.signs[k]
        return sgn

    def cell(self, prefix):
        prefix = self.check_prefix(prefix)
        a, ell, sgn = Fraction(0), Fraction(1), 1
        for k in prefix:
            rel = self.lefts[k] if sgn > 0 else 1 - self.lefts[k] - self.lengths[k]
            a += ell * rel
            ell *= self.lengths[k]
            sgn *= self.signs[k]
        return Interval(a, ell)

    def length(self, prefix):
        prefix = self.check_prefix(prefix)
        ell = Fraction(1)
        for k in prefix:
            ell *= self.lengths[k]
        return ell

    def step(self, x):
        if not 0 <= x < 1:
            raise EndpointError(f"{x} left the domain [0, 1)")
        for k, (a, ell, t) in enumerate(zip(self.lefts, self.lengths, self.signs)):
            inside = (a <= x < a + ell) if t > 0 else (a < x <= a + ell)
            if inside:
                y = (x - a) / ell if t > 0 else (a + ell - x) / ell
                return k, y
        raise EndpointError(f"{x} is an endpoint not covered by any half-open branch")

    def float_step(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self._lefts_f, x, side="right") - 1
        k = np.clip(k, 0, len(self.lengths) - 1)
        a, ell, t = self._lefts_f[k], self._lengths_f[k], self._signs_a[k]
        y = np.where(t > 0, (x - a) / ell, (a + ell - x) / ell)
        return k, y

    def inverse_branch_float(self, k, y):
        k = np.asarray(k, dtype=int)
        y = np.asarray(y, dtype=float)
        a, ell, t = self._lefts_f[k], self._lengths_f[k], self._signs_a[k]
        pre = np.where(t > 0, a + ell * y, a + ell * (1 - y))
        return pre, ell * np.ones_like(y), np.ones(np.broadcast(k, y).shape, dtype=bool)


class BaseQ(GLS):
    """Base-q expansion: digits 0..q-1, cells of length q^-n."""

    kind = "base_q"

    def __init__(self, q: int):
        if isinstance(q, bool) or int(q) != q or q < 2:
            raise InvalidParameterError("base q must be an integer >= 2")
        self.q = int(q)
        super().__init__([Fraction(1, self.q)] * self.q)

    def to_config(self):
        return {"kind": "base_q", "q": self.q}

    def cell(self, prefix):
        prefix = self.check_prefix(prefix)
        num = 0
        for k in prefix:
            num = num * self.q + k
        den = self.q ** len(prefix)
        return Interval(Fraction(num, den), Fraction(1, den))

    def length(self, prefix):
        prefix = self.check_prefix(prefix)
        return Fraction(1, self.q ** len(prefix))

    def step(self, x):
        if not 0 <= x < 1:
            raise EndpointError(f"{x} left the domain [0, 1)")
        y = x * self.q
        k = math.floor(y)
        return k, y - k

    def float_step(self, x):
        y = np.asarray(x, dtype=float) * self.q
        k = np.clip(np.floor(y), 0, self.q - 1).astype(int)
        return k, y - k

    def inverse_branch_float(self, k, y):
        k = np.asarray(k, dtype=float)
        y = np.asarray(y, dtype=float)
        pre = (y + k) / self.q
        return pre, np.full(pre.shape, 1.0 / self.q), np.ones(pre.shape, dtype=bool)


class Luroth(Scheme):
    """Original Lüroth series on (0, 1): digit k on [1/k, 1/(k-1)), k >= 2."""

    kind = "luroth"
    countable = True
    first_digit = 2

    def to_config(self):
        return {"kind": "luroth"}

    def alphabet(self, max_digits=None):
        if max_digits is None:
            raise InvalidParameterError("countable alphabet: max_digits is required")
        return list(range(2, 2 + max_digits))

    def is_digit(self, k):
        return k >= 2

    def cell(self, prefix):
        prefix = self.check_prefix(prefix)
        a, ell = Fraction(0), Fraction(1)
        for k in prefix:
            a += ell / k
            ell /= k * (k - 1)
        return Interval(a, ell)

    def length(self, prefix):
        prefix = self.check_prefix(prefix)
        ell = Fraction(1)
        for k in prefix:
            ell /= k * (k - 1)
        return ell

    def step(self, x):
        if not 0 < x < 1:
            raise EndpointError(f"{x} left the domain (0, 1)")
        k = -math.floor(-(1 / x))  # ceil(1/x): x in [1/k, 1/(k-1))
        return k, k * (k - 1) * x - k + 1

    def float_step(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            k = np.maximum(np.ceil(1.0 / x), 2)
        k = np.where(np.isfinite(k), k, 2).astype(np.int64)
        return k, k * (k - 1) * x - k + 1

    def inverse_branch_float(self, k, y):
        k = np.asarray(k, dtype=float)
        y = np.asarray(y, dtype=float)
        w = 1.0 / (k * (k - 1))
        pre = (y + k - 1) * w
        return pre, w * np.ones_like(pre), np.ones(pre.shape, dtype=bool)


class ContinuedFraction(Scheme):
    """Regular continued fractions on (0, 1] generated by the Gauss map."""

    kind = "continued_fraction"
    countable = True
    first_digit = 1

    def to_config(self):
        return {"kind": "continued_fraction"}

    def alphabet(self, max_digits=None):
        if max_digits is None:
            raise InvalidParameterError("countable alphabet: max_digits is required")
        return list(range(1, 1 + max_digits))

    def is_digit(self, k):
        return k >= 1

    @staticmethod
    def convergents(prefix) -> tuple[int, int, int, int]:
        """Return (p_n, q_n, p_{n-1}, q_{n-1}) for [0; x_1, ..., x_n]."""
        p_prev, p = 1, 0
        q_prev, q = 0, 1
        for k in prefix:
            p_prev, p = p, k * p + p_prev
            q_prev, q = q, k * q + q_prev
        return p, q, p_prev, q_prev

    def cell(self, prefix):
        prefix = self.check_prefix(prefix)
        p, q, pp, qp = self.convergents(prefix)
        end_a = Fraction(p, q)                  # [0; x_1..x_n]
        end_b = Fraction(p + pp, q + qp)        # [0; x_1..x_n + 1]
        left = end_a if len(prefix) % 2 == 0 else end_b
        return Interval(left, Fraction(1, q * (q + qp)))

    def length(self, prefix):
        prefix = self.check_prefix(prefix)
        _, q, _, qp = self.convergents(prefix)
        return Fraction(1, q * (q + qp))

    def step(self, x):
        if not 0 < x <= 1:
            raise EndpointError(f"{x} left the domain (0, 1]")
        y = 1 / x
        k = math.floor(y)
        return k, y - k

    def float_step(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            y = 1.0 / x
        k = np.floor(y)
        k = np.where(np.isfinite(k), np.maximum(k, 1), 1).astype(np.int64)
        return k, np.where(np.isfinite(y), y - k, 0.0)

    def inverse_branch_float(self, k, y):
        k = np.asarray(k, dtype=float)
        y = np.asarray(y, dtype=float)
        z = 1.0 / (k + y)
        return z, z * z, np.ones(z.shape, dtype=bool)


# ---------------------------------------------------------------------------------------
# Pseudo golden mean beta-expansion


def _pseudo_golden_root(ctx, m: int):
    """Positive root of z^m - z^(m-1) - ... - 1 in (1, 2), validated by a sign change."""

    def poly(z):
        return z**m - sum(z**j for j in range(m))

    lo, hi = ctx.mpf(1), ctx.mpf(2)
    if not (poly(lo) < 0 < poly(hi)):
        raise InvalidParameterError("root is not bracketed in (1, 2)")
    for _ in range(ctx.prec + 8):
        mid = (lo + hi) / 2
        if poly(mid) < 0:
            lo = mid
        else:
            hi = mid
    beta = (lo + hi) / 2
    eps = ctx.ldexp(1, -ctx.prec + 8)
    if not (poly(beta - eps) < 0 < poly(beta + eps)):
        raise ArithmeticError("failed to validate the pseudo golden mean")
    return beta


class PseudoGoldenBeta(Scheme):
    """Beta-expansion with beta the pseudo golden mean of order m >= 2.

    Digits are 0/1 and admissible words have at most s = m - 1 consecutive
    ones.  Cylinder lengths use the closed-form table; arithmetic is done in
    a private high-precision mpmath context.
    """

    kind = "pseudo_golden"
    exact = False

    def __init__(self, m: int, precision: int = HIGH_PRECISION_BITS):
        if isinstance(m, bool) or int(m) != m or m < 2:
            raise InvalidParameterError("pseudo golden order m must be an integer >= 2")
        if precision < 80:
            raise InvalidParameterError("working precision must be at least 80 bits")
        self.m = int(m)
        self.s = self.m - 1
        self.memory = self.s
        self.ctx = mpmath.MPContext()
        self.ctx.prec = precision
        self.beta = _pseudo_golden_root(self.ctx, self.m)
        self.beta_f = float(self.beta)
        ctx, b = self.ctx, self.beta
        # g[i] = beta^i - sum_{j<i} beta^j: image length of a cylinder ending in 0 1^i
        self._g = [b**i - sum((b**j for j in range(i)), ctx.mpf(0)) for i in range(self.s + 1)]
        self._inv_pow = [ctx.mpf(1)]
        self.tol = ctx.ldexp(1, -precision + 16)

    def to_config(self):
        return {"kind": "pseudo_golden", "m": self.m}

    def alphabet(self, max_digits=None):
        return [0, 1]

    def is_digit(self, k):
        return k in (0, 1)

    def coerce(self, x):
        ctx = self.ctx
        if hasattr(x, "_mpf_"):
            return ctx.mpf(x)
        if isinstance(x, QuadraticSurd):
            return (ctx.mpf(x.a) + ctx.mpf(x.b) * ctx.sqrt(x.d)) / x.c
        if isinstance(x, float):
            return ctx.mpf(x)
        f = _frac(x)
        return ctx.mpf(f.numerator) / f.denominator

    def inv_beta_power(self, n: int):
        while len(self._inv_pow) <= n:
            self._inv_pow.append(self._inv_pow[-1] / self.beta)
        return self._inv_pow[n]

    def image_factor(self, prefix) -> Any:
        """beta^n * length: the length of T^n applied to the cylinder."""
        run = 0
        for k in prefix:
            run = run + 1 if k == 1 else 0
            if run > self.s:
                return self.ctx.mpf(0)
        return self._g[run]

    def length(self, prefix):
        prefix = self.check_prefix(prefix)
        return self.image_factor(prefix) * self.inv_beta_power(len(prefix))

    def cell(self, prefix):
        prefix = self.check_prefix(prefix)
        ell = self.image_factor(prefix) * self.inv_beta_power(len(prefix))
        left = self.ctx.mpf(0)
        for i, k in enumerate(prefix, start=1):
            if k:
                left += self.inv_beta_power(i)
        return Interval(left, ell)

    def step(self, x):
        x = self.coerce(x)
        if not 0 <= x < 1:
            raise EndpointError(f"{x} left the domain [0, 1)")
        y = self.beta * x
        k = int(self.ctx.floor(y))
        return k, y - k

    def float_step(self, x):
        y = np.asarray(x, dtype=float) * self.beta_f
        k = np.clip(np.floor(y), 0, 1).astype(int)
        return k, y - k

    def inverse_branch_float(self, k, y):
        k = np.asarray(k, dtype=float)
        y = np.asarray(y, dtype=float)
        pre = (y + k) / self.beta_f
        valid = (y + k) < self.beta_f
        return pre, np.full(pre.shape, 1.0 / self.beta_f), valid


# ---------------------------------------------------------------------------------------
# Operations


def cell(scheme: Scheme, prefix: Sequence[int] = ()) -> Interval:
    """Left endpoint and length of I_{prefix}; length 0 for inadmissible words."""
    return scheme.cell(tuple(prefix))


def children(scheme: Scheme, prefix: Sequence[int] = (), max_digits: int | None = None):
    """Positive-length children of a cell as (digit, Interval), in digit order.

    Countable alphabets are truncated to the first ``max_digits`` digits.
    """
    prefix = scheme.check_prefix(prefix)
    if scheme.length(prefix) <= 0:
        raise EmptyCellError(f"cell {prefix} has zero length")
    if scheme.countable and max_digits is None:
        raise InvalidParameterError("countable alphabet: max_digits is required")
    out = []
    for k in scheme.alphabet(max_digits):
        c = scheme.cell(prefix + (k,))
        if c.length > 0:
            out.append((k, c))
    return out


def words(scheme: Scheme, n: int, max_digits: int | None = None, prefix: Sequence[int] = ()):
    """All positive-length extensions of ``prefix`` by ``n`` digits, in digit order.

    Returns a list of (word, Interval).  Countable alphabets are truncated to
    ``max_digits`` digits per level.
    """
    if scheme.countable and max_digits is None:
        raise InvalidParameterError("countable alphabet: max_digits is required")
    alpha = scheme.alphabet(max_digits)
    level = [tuple(scheme.check_prefix(prefix))]
    if scheme.length(level[0]) <= 0:
        return []
    for _ in range(n):
        level = [w + (k,) for w in level for k in alpha if scheme.length(w + (k,)) > 0]
    return [(w, scheme.cell(w)) for w in level]


def _strict_check(scheme: Scheme, x, digits) -> None:
    exact = scheme.exact
    for i in range(len(digits) + 1):
        a, ell = scheme.cell(digits[:i])
        lo, hi = x - a, a + ell - x
        if exact:
            bad = not (lo > 0 and hi > 0)
        else:
            bad = not (lo > scheme.tol and hi > scheme.tol)
        if bad:
            raise EndpointError(f"point lies on an endpoint of cell {tuple(digits[:i])}")


def digits_of(scheme: Scheme, x, n: int, strict: bool = False) -> tuple[int, ...]:
    """First ``n`` digits of x.

    With ``strict=False`` the half-open cylinder convention of the digit map
    decides points of the endpoint set; an EndpointError is raised only if
    the orbit leaves the domain.  With ``strict=True`` any point on a cell
    endpoint at levels 0..n raises EndpointError.
    """
    if n < 0:
        raise InvalidParameterError("n must be non-negative")
    y = scheme.coerce(x)
    out = []
    for _ in range(n):
        k, y = scheme.step(y)
        out.append(k)
    out = tuple(out)
    if strict:
        _strict_check(scheme, scheme.coerce(x), out)
    return out


def remainder(scheme: Scheme, x, n: int, strict: bool = False):
    """The n-th scaled remainder T^n(x)."""
    if n < 0:
        raise InvalidParameterError("n must be non-negative")
    y = scheme.coerce(x)
    digits = []
    for _ in range(n):
        k, y = scheme.step(y)
        digits.append(k)
    if strict:
        _strict_check(scheme, scheme.coerce(x), tuple(digits))
    return y


def approximation_errors(scheme: Scheme, x, n: int):
    """Return (e_n, u_n): the error of x ~ a_{x_1..x_n} and its relative version."""
    if n < 1:
        raise InvalidParameterError("n must be positive")
    xs = scheme.coerce(x)
    a, ell = scheme.cell(digits_of(scheme, xs, n))
    e = xs - a
    u = e / ell
    if not 0 < u < 1:
        raise EndpointError("point lies on an endpoint of its level-n cell")
    return e, u


def pmf_first_level(scheme: Scheme, max_digits: int = 1000) -> DigitPmf:
    """k -> l_k / l_root, with the un-enumerated tail mass for countable alphabets."""
    root_len = scheme.root.length
    probs = {k: scheme.length((k,)) / root_len for k in scheme.alphabet(max_digits)}
    tail = 1 - sum(probs.values()) if scheme.countable else 0
    return DigitPmf(probs, tail)


def float_digits(scheme: Scheme, x, n: int) -> np.ndarray:
    """Digits of an array of floats, shape (len(x), n).

    Double precision is adequate for the first dozen or so digits of points
    that are not pathologically close to cell endpoints.
    """
    y = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((y.shape[0], n), dtype=np.int64)
    for j in range(n):
        k, y = scheme.float_step(y)
        out[:, j] = k
    return out


def beta_digits(beta, x, n: int, precision: int = HIGH_PRECISION_BITS) -> tuple[int, ...]:
    """Greedy beta-expansion digits floor(beta T^{i-1} x) for an arbitrary beta > 1.

    Cylinder lengths for general beta are not provided.
    """
    ctx = mpmath.MPContext()
    ctx.prec = precision
    b = ctx.mpf(beta) if not isinstance(beta, Fraction) else ctx.mpf(beta.numerator) / beta.denominator
    if b <= 1:
        raise InvalidParameterError("beta must exceed 1")
    y = ctx.mpf(x) if not isinstance(x, Fraction) else ctx.mpf(x.numerator) / x.denominator
    if not 0 <= y < 1:
        raise EndpointError("x must lie in [0, 1)")
    out = []
    for _ in range(n):
        y = b * y
        k = int(ctx.floor(y))
        out.append(k)
        y -= k
    return tuple(out)


# ---------------------------------------------------------------------------------------
# Configuration


def scheme_from_config(cfg: dict) -> Scheme:
    kind = cfg.get("kind")
    if kind == "base_q":
        return BaseQ(int(cfg["q"]))
    if kind == "gls":
        return GLS([Fraction(v) for v in cfg["lengths"]], cfg.get("signs"))
    if kind == "luroth":
        return Luroth()
    if kind == "pseudo_golden":
        return PseudoGoldenBeta(int(cfg["m"]))
    if kind == "continued_fraction":
        return ContinuedFraction()
    raise UnsupportedSchemeError(f"unknown scheme kind {kind!r}")


def parse_scheme(text: str) -> Scheme:
    """Parse a CLI scheme string: JSON, or ``base_q:10``, ``pseudo_golden:2``,
    ``luroth``, ``continued_fraction`` (alias ``cf``), ``gls:1/3,2/3:+,-``."""
    text = text.strip()
    if text.startswith("{"):
        return scheme_from_config(json.loads(text))
    name, _, rest = text.partition(":")
    name = name.lower()
    if name in ("base_q", "base", "q"):
        return BaseQ(int(rest))
    if name in ("pseudo_golden", "golden", "beta"):
        return PseudoGoldenBeta(int(rest) if rest else 2)
    if name == "luroth":
        return Luroth()
    if name in ("continued_fraction", "cf"):
        return ContinuedFraction()
    if name == "gls":
        lengths, _, signs = rest.partition(":")
        sign_list = None
        if signs:
            sign_list = [1 if t.strip() in ("+", "+1", "1") else -1 for t in signs.split(",")]
        return GLS([Fraction(v) for v in lengths.split(",")], sign_list)
    raise UnsupportedSchemeError(f"unknown scheme {text!r}")
