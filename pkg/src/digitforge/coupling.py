"""Coupling of a random point X with its number of sufficient digits N.

Given a density f on the root interval, i_{x1..xn} is the infimum of f over
the cell I_{x1..xn} and c = i - i_parent.  (X, N) has joint density c with
respect to Lebesgue x counting measure; S = (X_1..X_N) are the sufficient
digits and U = (X - a_S) / l_S is uniform and independent of S.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConditioningOnNullError,
    DepthCapError,
    EndpointError,
    InvalidParameterError,
    UndefinedConditionalError,
    UnsupportedDepthError,
)
from .streams import as_stream
from .subdivision import DigitPmf, Scheme, scheme_from_config, words

__all__ = [
    "Truncated",
    "CellInfimum",
    "CouplingDraw",
    "CouplingBatch",
    "Density",
    "PiecewiseDensity",
    "MonotoneDensity",
    "uniform_density",
    "gauss_density",
    "cell_infimum",
    "pmf_S",
    "cdf_N",
    "cdf_N_given_X",
    "sample_coupled",
    "sample_coupled_batch",
    "residual_law",
    "extend_digits",
    "density_from_config",
    "parse_density",
]

DEFAULT_DEPTH_CAP = 10**6


@dataclass(frozen=True)
class Truncated:
    """A value computed from a truncated enumeration; the truth lies in [value, value + tail]."""

    value: Any
    tail: Any = 0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class CellInfimum:
    prefix: tuple
    i: Any
    c: Any


@dataclass(frozen=True)
class CouplingDraw:
    x: float
    n: int
    s: tuple
    u: float
    e: float
    l: Any  # noqa: E741  exact cell length l_S


# ---------------------------------------------------------------------------------------
# Densities


class Density:
    scheme: Scheme
    kind = ""

    def pdf(self, x):
        raise NotImplementedError

    def pdf_float(self, x):
        raise NotImplementedError

    def infimum(self, prefix: Sequence[int]):
        raise NotImplementedError

    def cell_mass(self, prefix: Sequence[int]):
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


def _num_config(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return float(v)


class PiecewiseDensity(Density):
    """Density constant on each depth-``depth`` cell.

    ``values`` is a dict word -> value or a sequence aligned with the
    positive-length depth-d words in digit order.  Values may be exact
    (Fraction) or floats.  Depth >= 1 needs a finite alphabet.
    """

    kind = "piecewise"

    def __init__(self, scheme: Scheme, depth: int, values):
        if depth < 0:
            raise InvalidParameterError("depth must be non-negative")
        if depth > 0 and scheme.countable:
            raise UnsupportedDepthError("piecewise densities of depth >= 1 need a finite alphabet")
        self.scheme = scheme
        self.depth = int(depth)
        cells = words(scheme, self.depth)
        self.words = [w for w, _ in cells]
        self.cells = {w: c for w, c in cells}
        if isinstance(values, dict):
            vals = {tuple(k): v for k, v in values.items()}
            missing = [w for w in self.words if w not in vals]
            if missing:
                raise InvalidParameterError(f"no density value for cells {missing[:3]}")
        else:
            values = list(values)
            if len(values) != len(self.words):
                raise InvalidParameterError(
                    f"expected {len(self.words)} values for depth {depth}, got {len(values)}")
            vals = dict(zip(self.words, values))
        self.values = {w: (Fraction(v) if isinstance(v, (int, str)) else v) for w, v in
                       ((w, vals[w]) for w in self.words)}
        if any(v < 0 for v in self.values.values()):
            raise InvalidParameterError("density values must be non-negative")
        total = sum(self.values[w] * self.cells[w].length for w in self.words)
        exact = scheme.exact and all(isinstance(v, Fraction) for v in self.values.values())
        if (exact and total != 1) or (not exact and abs(float(total) - 1) > 1e-12):
            raise InvalidParameterError(f"density integrates to {float(total)!r}, not 1")
        self.exact = exact
        # minima over descendants for shallower prefixes
        self._inf = dict(self.values)
        layer = dict(self.values)
        for _ in range(self.depth):
            up = {}
            for w, v in layer.items():
                up[w[:-1]] = v if w[:-1] not in up else min(up[w[:-1]], v)
            self._inf.update(up)
            layer = up
        self._table = None

    def to_config(self):
        return {
            "kind": "piecewise",
            "scheme": self.scheme.to_config(),
            "depth": self.depth,
            "values": [_num_config(self.values[w]) for w in self.words],
        }

    def value(self, word):
        return self.values.get(tuple(word[: self.depth]), 0)

    def pdf(self, x):
        from .subdivision import digits_of

        return self.value(digits_of(self.scheme, x, self.depth))

    def pdf_float(self, x):
        from .subdivision import float_digits

        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.depth == 0:
            return np.full(x.shape, float(self.values[()]))
        d = float_digits(self.scheme, x, self.depth)
        lookup = {w: float(v) for w, v in self.values.items()}
        return np.array([lookup.get(tuple(row), 0.0) for row in d])

    def infimum(self, prefix):
        prefix = self.scheme.check_prefix(prefix)
        if self.scheme.length(prefix) <= 0:
            return 0
        if len(prefix) >= self.depth:
            return self.values[prefix[: self.depth]]
        return self._inf[prefix]

    def cell_mass(self, prefix):
        prefix = self.scheme.check_prefix(prefix)
        if len(prefix) >= self.depth:
            return self.value(prefix) * self.scheme.length(prefix)
        return sum(self.values[w] * self.cells[w].length for w in self.words if w[: len(prefix)] == prefix)

    def table(self):
        """Float lookup tables for vectorised sampling, cells sorted by left endpoint."""
        if self._table is None:
            sc = self.scheme
            order = sorted(range(len(self.words)), key=lambda j: self.cells[self.words[j]].left)
            ws = [self.words[j] for j in order]
            mass = np.array([float(self.values[w] * self.cells[w].length) for w in ws])
            cum = np.cumsum(mass)
            cum /= cum[-1]
            d = self.depth
            inf_chain = np.array([[float(self.infimum(w[:n])) for n in range(d + 1)] for w in ws])
            offset = np.zeros((len(ws), d + 1))
            ratio = np.zeros((len(ws), d + 1))
            lengths = {}
            for j, w in enumerate(ws):
                a_w, l_w = self.cells[w]
                for n in range(d + 1):
                    a_s, l_s = sc.cell(w[:n])
                    lengths[w[:n]] = l_s
                    offset[j, n] = float((a_w - a_s) / l_s)
                    ratio[j, n] = float(l_w / l_s)
            self._table = {
                "words": ws,
                "left": np.array([float(self.cells[w].left) for w in ws]),
                "length": np.array([float(self.cells[w].length) for w in ws]),
                "value": np.array([float(self.values[w]) for w in ws]),
                "mass": mass / mass.sum(),
                "cum": cum,
                "inf": inf_chain,
                "offset": offset,
                "ratio": ratio,
                "lengths": lengths,
            }
        return self._table


class MonotoneDensity(Density):
    """Closed-form density that is monotone on every level-1 cell.

    ``direction`` is "decreasing"/"increasing" or a callable digit ->
    direction; infima then sit at cell endpoints.  The caller is responsible
    for the monotonicity claim.  ``root_infimum`` is required when the
    direction changes between level-1 cells.
    """

    kind = "monotone"

    def __init__(self, scheme: Scheme, pdf: Callable, cdf: Callable, direction="decreasing",
                 root_infimum=None, name: str = "monotone", inverse_cdf: Callable | None = None):
        self.scheme = scheme
        self._pdf = pdf
        self._cdf = cdf
        self._dir = direction if callable(direction) else (lambda k, d=direction: d)
        if not callable(direction) and direction not in ("decreasing", "increasing"):
            raise InvalidParameterError("direction must be 'decreasing' or 'increasing'")
        if root_infimum is None:
            if callable(direction):
                raise InvalidParameterError("root_infimum is required for mixed directions")
            root = scheme.root
            end = root.right if direction == "decreasing" else root.left
            root_infimum = float(pdf(float(end)))
        self.root_infimum = float(root_infimum)
        self.name = name
        self._inverse_cdf = inverse_cdf

    def to_config(self):
        return {"kind": self.name}

    def pdf(self, x):
        return float(self._pdf(float(x)))

    def pdf_float(self, x):
        return np.asarray(self._pdf(np.asarray(x, dtype=float)), dtype=float)

    def infimum(self, prefix):
        prefix = self.scheme.check_prefix(prefix)
        if not prefix:
            return self.root_infimum
        c = self.scheme.cell(prefix)
        if c.length <= 0:
            return 0.0
        end = c.right if self._dir(prefix[0]) == "decreasing" else c.left
        return float(self._pdf(float(end)))

    def cell_mass(self, prefix):
        c = self.scheme.cell(prefix)
        return float(self._cdf(float(c.right))) - float(self._cdf(float(c.left)))

    def inverse_cdf(self, u: float) -> float:
        if self._inverse_cdf is not None:
            return float(self._inverse_cdf(u))
        root = self.scheme.root
        lo, hi = float(root.left), float(root.right)
        c0 = float(self._cdf(lo))
        return brentq(lambda x: float(self._cdf(x)) - c0 - u, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def uniform_density(scheme: Scheme) -> PiecewiseDensity:
    length = scheme.root.length
    return PiecewiseDensity(scheme, 0, {(): 1 / length})


def gauss_density() -> MonotoneDensity:
    """The Gauss-map invariant density 1 / ((1 + x) ln 2) on the continued fraction scheme."""
    from .subdivision import ContinuedFraction

    ln2 = math.log(2.0)
    return MonotoneDensity(
        ContinuedFraction(),
        pdf=lambda x: 1.0 / ((1.0 + x) * ln2),
        cdf=lambda x: np.log1p(x) / ln2,
        direction="decreasing",
        root_infimum=1.0 / (2.0 * ln2),
        name="gauss",
    )


# ---------------------------------------------------------------------------------------
# Exact laws


def cell_infimum(density: Density, prefix: Sequence[int] = ()) -> CellInfimum:
    prefix = density.scheme.check_prefix(prefix)
    i = density.infimum(prefix)
    c = i - density.infimum(prefix[:-1]) if prefix else i
    return CellInfimum(prefix, i, c)


def pmf_S(density: Density, prefix: Sequence[int] = ()):
    """P(S = prefix) = c_prefix * l_prefix."""
    ci = cell_infimum(density, prefix)
    return ci.c * density.scheme.length(ci.prefix)


def cdf_N(density: Density, n: int, max_digits: int = 60) -> Truncated:
    """P(N <= n) as a sum of i * l over the level-n cells.

    For countable alphabets the sum runs over digits <= cutoff at every
    level; ``tail`` is the density mass of the cells left out, which bounds
    the missing part of the sum.
    """
    if n < 0:
        raise InvalidParameterError("n must be non-negative")
    sc = density.scheme
    if isinstance(density, PiecewiseDensity) and n >= density.depth:
        return Truncated(Fraction(1) if density.exact else 1.0, 0)
    cells = words(sc, n, max_digits if sc.countable else None)
    total = sum(density.infimum(w) * c.length for w, c in cells)
    if not sc.countable:
        return Truncated(total, 0)
    covered = sum(float(density.cell_mass(w)) for w, _ in cells)
    return Truncated(float(total), max(0.0, 1.0 - covered))


def cdf_N_given_X(density: Density, x, n: int):
    """P(N <= n | X = x) = i_{x1..xn} / f(x)."""
    from .subdivision import digits_of

    fx = density.pdf(x)
    if fx <= 0:
        raise UndefinedConditionalError("f(x) = 0: the conditional law of N is undefined")
    return density.infimum(digits_of(density.scheme, x, n)) / fx


def residual_law(scheme: Scheme, prefix: Sequence[int], m: int, max_digits: int | None = None) -> DigitPmf:
    """Law of the next m digits given S = prefix: l_{prefix+suffix} / l_prefix."""
    prefix = scheme.check_prefix(prefix)
    if m < 1:
        raise InvalidParameterError("m must be positive")
    base = scheme.length(prefix)
    if base <= 0:
        raise ConditioningOnNullError(f"cell {prefix} has zero length")
    if scheme.countable and max_digits is None:
        max_digits = 100
    probs = {w[len(prefix):]: c.length / base for w, c in words(scheme, m, max_digits, prefix)}
    tail = 1 - sum(probs.values()) if scheme.countable else 0
    return DigitPmf(probs, tail)


# ---------------------------------------------------------------------------------------
# Sampling


def extend_digits(scheme: Scheme, prefix: Sequence[int], target: int, stream) -> tuple[int, ...]:
    """Extend ``prefix`` to ``target`` digits by the scheme's conditional digit law.

    One uniform per new digit, mapped through the generalized inverse of the
    CDF over digits in ascending order.
    """
    stream = as_stream(stream)
    w = tuple(prefix)
    while len(w) < target:
        base = scheme.length(w)
        v = stream.next()
        acc = 0.0
        k = scheme.first_digit
        last = None
        while True:
            if not scheme.countable and not scheme.is_digit(k):
                k = last  # rounding left the total just below 1
                break
            p = float(scheme.length(w + (k,)) / base)
            if p > 0:
                last = k
                acc += p
                if v <= acc:
                    break
            k += 1
        w = w + (k,)
    return w


@dataclass
class CouplingBatch:
    """Vectorised coupled draws; ``cell`` indexes ``words`` (the depth-d cell of X)."""

    x: np.ndarray
    n: np.ndarray
    u: np.ndarray
    e: np.ndarray
    l: np.ndarray  # noqa: E741
    cell: np.ndarray
    words: list

    def __len__(self):
        return self.x.shape[0]

    def s(self, j: int) -> tuple:
        return self.words[self.cell[j]][: self.n[j]]

    def draws(self):
        for j in range(len(self)):
            yield CouplingDraw(float(self.x[j]), int(self.n[j]), self.s(j), float(self.u[j]),
                               float(self.e[j]), float(self.l[j]))


def _piecewise_from_uniforms(density: PiecewiseDensity, u1, u2):
    t = density.table()
    j = np.searchsorted(t["cum"], u1, side="right")
    j = np.minimum(j, len(t["words"]) - 1)
    prev = np.where(j > 0, t["cum"][np.maximum(j - 1, 0)], 0.0)
    width = t["cum"][j] - prev
    v = np.clip((u1 - prev) / width, 0.0, np.nextafter(1.0, 0.0))
    x = t["left"][j] + t["length"][j] * v
    w = u2 * t["value"][j]
    # N = first level whose infimum reaches W; at the density's depth it equals f(X) > W
    n = np.argmax(t["inf"][j] >= w[:, None], axis=1)
    u = t["offset"][j, n] + t["ratio"][j, n] * v
    return j, n, x, u


def sample_coupled_batch(density: Density, rng, size: int, depth_cap: int = DEFAULT_DEPTH_CAP) -> CouplingBatch:
    """``size`` coupled draws; uses the same uniforms, in the same order, as repeated sample_coupled."""
    stream = as_stream(rng)
    if not isinstance(density, PiecewiseDensity):
        draws = [sample_coupled(density, stream, depth_cap) for _ in range(size)]
        ws = [d.s for d in draws]
        return CouplingBatch(
            np.array([d.x for d in draws]), np.array([d.n for d in draws]),
            np.array([d.u for d in draws]), np.array([d.e for d in draws]),
            np.array([float(d.l) for d in draws]), np.arange(size), ws)
    uu = stream.take(2 * size).reshape(size, 2)
    j, n, x, u = _piecewise_from_uniforms(density, uu[:, 0], uu[:, 1])
    t = density.table()
    ws = t["words"]
    len_by = {}
    l = np.empty(size)
    for idx in range(size):
        key = (j[idx], n[idx])
        if key not in len_by:
            len_by[key] = float(t["lengths"][ws[j[idx]][: n[idx]]])
        l[idx] = len_by[key]
    return CouplingBatch(x, n, u, u * l, l, j, ws)


def sample_coupled(density: Density, rng, depth_cap: int = DEFAULT_DEPTH_CAP) -> CouplingDraw:
    """One draw of (X, N, S, U, E, L).

    X ~ f by inverse CDF from the first uniform; W = V f(X) with the second
    uniform V; N = min{n : i_{X_1..X_n} >= W}.
    """
    stream = as_stream(rng)
    sc = density.scheme
    u1, u2 = stream.next(), stream.next()
    if isinstance(density, PiecewiseDensity):
        j, n, x, u = _piecewise_from_uniforms(density, np.array([u1]), np.array([u2]))
        t = density.table()
        s = t["words"][j[0]][: n[0]]
        l_s = t["lengths"][s]
        return CouplingDraw(float(x[0]), int(n[0]), s, float(u[0]), float(u[0]) * float(l_s), l_s)
    x = density.inverse_cdf(u1)
    xq = sc.coerce(Fraction(x))
    w = u2 * density.pdf(x)
    y = xq
    s: list[int] = []
    while w > density.infimum(s):
        if len(s) >= depth_cap:
            raise DepthCapError(f"N exceeded the depth cap {depth_cap}")
        try:
            k, y = sc.step(y)
        except EndpointError as exc:
            raise EndpointError("X sits on a cell endpoint before N was reached") from exc
        s.append(k)
    a_s, l_s = sc.cell(s)
    e = xq - a_s
    return CouplingDraw(float(x), len(s), tuple(s), float(e / l_s), float(e), l_s)


# ---------------------------------------------------------------------------------------
# Configuration


def density_from_config(cfg: dict, scheme: Scheme | None = None) -> Density:
    kind = cfg.get("kind")
    if kind == "gauss":
        return gauss_density()
    if "scheme" in cfg:
        scheme = scheme_from_config(cfg["scheme"])
    if scheme is None:
        raise InvalidParameterError("density config needs a scheme")
    if kind == "uniform":
        return uniform_density(scheme)
    if kind == "piecewise":
        vals = [Fraction(v) if isinstance(v, str) else v for v in cfg["values"]]
        return PiecewiseDensity(scheme, int(cfg["depth"]), vals)
    raise InvalidParameterError(f"unknown density kind {kind!r}")


def parse_density(text: str, scheme: Scheme | None = None) -> Density:
    """Parse ``uniform``, ``gauss``, ``piecewise:d:v1,v2,...`` or a JSON config.

    The ``invariant`` density needs the Markov chain and is resolved by the CLI.
    """
    text = text.strip()
    if text.startswith("{"):
        return density_from_config(json.loads(text), scheme)
    name, _, rest = text.partition(":")
    if name == "scheme":
        raise InvalidParameterError("use a JSON config to embed a scheme")
    if name == "piecewise":
        depth, _, vals = rest.partition(":")
        return density_from_config({"kind": "piecewise", "depth": int(depth), "values": vals.split(",")}, scheme)
    return density_from_config({"kind": name}, scheme)
