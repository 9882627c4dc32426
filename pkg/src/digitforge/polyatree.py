"""Mixture of finite Pólya trees on a binary subdivision scheme.

Y_{w0} ~ Beta(alpha_{w0}, alpha_{w1}) independently for every internal node
w of the tree of depth D, with Y_{w1} = 1 - Y_{w0}.  Given a realization,
X is drawn by picking N from pmf_N, walking N digits down the tree with the
Y probabilities, then placing X uniformly in the reached cell.  The density
of X is therefore sum_n P(N = n) * prob(x_1..x_n) / l_{x_1..x_n}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .coupling import PiecewiseDensity
from .errors import InvalidParameterError, UnsupportedSchemeError
from .streams import UniformStream, as_stream
from .subdivision import Scheme, scheme_from_config

__all__ = [
    "PolyaParams",
    "PolyaRealization",
    "sample_realization",
    "random_density",
    "sample_x",
    "sample_x_batch",
    "prior_predictive_mean_density",
]


def _node(w) -> int:
    # heap index of a binary word: 2^len - 1 + value of the bits
    v = 0
    for b in w:
        v = 2 * v + b
    return (1 << len(w)) - 1 + v


def _word(j: int) -> tuple:
    n = (j + 1).bit_length() - 1
    v = j + 1 - (1 << n)
    return tuple((v >> (n - 1 - i)) & 1 for i in range(n))


@dataclass(frozen=True)
class PolyaParams:
    """Parameters of a finite Pólya-tree mixture.

    ``alphas`` maps a parent word w to the pair (alpha_{w0}, alpha_{w1});
    words not listed use ``default_alpha`` (one pair, or one pair per level).
    Children with zero length have their alpha forced to 0.
    """

    scheme: Scheme
    depth: int
    pmf_n: tuple
    alphas: dict = field(default_factory=dict)
    default_alpha: tuple = (1.0, 1.0)

    def __post_init__(self):
        if self.scheme.countable or self.scheme.alphabet() != [0, 1]:
            raise UnsupportedSchemeError("Pólya trees need a binary scheme")
        if self.depth < 0:
            raise InvalidParameterError("depth cap must be non-negative")
        p = np.asarray(self.pmf_n, dtype=float)
        if p.shape != (self.depth + 1,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise InvalidParameterError("pmf_n must be a PMF on 0..depth")
        object.__setattr__(self, "pmf_n", tuple(float(v) for v in p))
        for w in self.internal_nodes():
            a0, a1 = self.alpha(w)
            if a0 < 0 or a1 < 0 or a0 + a1 <= 0:
                raise InvalidParameterError(f"invalid alphas at {w}: {(a0, a1)}")

    def _raw_alpha(self, w):
        if tuple(w) in self.alphas:
            return tuple(float(a) for a in self.alphas[tuple(w)])
        d = self.default_alpha
        if len(d) and isinstance(d[0], (tuple, list)):
            return tuple(float(a) for a in d[min(len(w), len(d) - 1)])
        return (float(d[0]), float(d[1]))

    def alpha(self, w) -> tuple:
        """(alpha_{w0}, alpha_{w1}) after forcing zero-length children to 0."""
        a0, a1 = self._raw_alpha(w)
        if self.scheme.length(tuple(w) + (0,)) <= 0:
            a0 = 0.0
        if self.scheme.length(tuple(w) + (1,)) <= 0:
            a1 = 0.0
        return a0, a1

    def internal_nodes(self):
        """Positive-length words of length < depth, breadth first."""
        level = [()]
        out = []
        for _ in range(self.depth):
            out.extend(level)
            level = [w + (k,) for w in level for k in (0, 1) if self.scheme.length(w + (k,)) > 0]
        return out

    def to_json(self) -> str:
        return json.dumps({
            "scheme": self.scheme.to_config(),
            "depth": self.depth,
            "pmf_n": list(self.pmf_n),
            "alphas": {"".join(map(str, w)): list(a) for w, a in self.alphas.items()},
            "default_alpha": [list(a) for a in self.default_alpha]
            if self.default_alpha and isinstance(self.default_alpha[0], (tuple, list))
            else list(self.default_alpha),
        })

    @classmethod
    def from_json(cls, text: str) -> "PolyaParams":
        cfg = json.loads(text)
        alphas = {tuple(int(c) for c in k): tuple(v) for k, v in cfg.get("alphas", {}).items()}
        d = cfg.get("default_alpha", [1.0, 1.0])
        d = tuple(tuple(a) for a in d) if d and isinstance(d[0], list) else tuple(d)
        return cls(scheme_from_config(cfg["scheme"]), int(cfg["depth"]), tuple(cfg["pmf_n"]), alphas, d)


@dataclass(frozen=True)
class PolyaRealization:
    """y[w] = probability of child 0 below node w (heap-indexed array, NaN where unused)."""

    depth: int
    y_array: np.ndarray

    @property
    def y(self) -> dict:
        return {_word(j): float(v) for j, v in enumerate(self.y_array) if not np.isnan(v)}

    def to_json(self) -> str:
        return json.dumps({"depth": self.depth, "y": {"".join(map(str, w)): v for w, v in self.y.items()}})


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, UniformStream):
        return rng.rng
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(rng), 0])))


def sample_realization(params: PolyaParams, rng) -> PolyaRealization:
    """Independent Beta splits at every internal node; degenerate alphas give 0 or 1."""
    gen = _generator(rng)
    y = np.full((1 << params.depth) - 1, np.nan)
    for w in params.internal_nodes():
        a0, a1 = params.alpha(w)
        if a0 == 0:
            v = 0.0
        elif a1 == 0:
            v = 1.0
        else:
            v = gen.beta(a0, a1)
        y[_node(w)] = v
    return PolyaRealization(params.depth, y)


def _leaf_tables(params: PolyaParams):
    sc, D = params.scheme, params.depth
    total = (1 << (D + 1)) - 1
    left = np.zeros(total)
    length = np.zeros(total)
    for j in range(total):
        c = sc.cell(_word(j))
        left[j], length[j] = float(c.left), float(c.length)
    return left, length


def _prefix_probs(real: PolyaRealization, depth: int) -> np.ndarray:
    total = (1 << (depth + 1)) - 1
    prob = np.zeros(total)
    prob[0] = 1.0
    for j in range((1 << depth) - 1):
        y = real.y_array[j]
        if np.isnan(y) or prob[j] == 0:
            continue
        prob[2 * j + 1] = prob[j] * y
        prob[2 * j + 2] = prob[j] * (1 - y)
    return prob


def random_density(params: PolyaParams, real: PolyaRealization) -> PiecewiseDensity:
    """Piecewise-constant density of depth D of X given the realization."""
    D = params.depth
    prob = _prefix_probs(real, D)
    _, length = _leaf_tables(params)
    dens = np.divide(prob, length, out=np.zeros_like(prob), where=length > 0)
    values = {}
    for j in range((1 << D) - 1, (1 << (D + 1)) - 1):
        if length[j] <= 0:
            continue
        w = _word(j)
        values[w] = float(sum(params.pmf_n[n] * dens[_node(w[:n])] for n in range(D + 1)))
    return PiecewiseDensity(params.scheme, D, values)


def sample_x_batch(params: PolyaParams, real: PolyaRealization, rng, size: int):
    """Vectorised draws: returns (x, n, node) arrays; node is the heap index of S."""
    stream = as_stream(rng)
    D = params.depth
    u = stream.take(size * (D + 2)).reshape(size, D + 2)
    cum = np.cumsum(params.pmf_n)
    cum[-1] = 1.0
    n = np.minimum(np.searchsorted(cum, u[:, 0], side="left"), D)
    node = np.zeros(size, dtype=np.int64)
    for level in range(D):
        active = n > level
        y = real.y_array[node[active]]
        go_right = u[active, 1 + level] > y
        node[active] = 2 * node[active] + 1 + go_right
    left, length = _leaf_tables(params)
    x = left[node] + length[node] * u[:, D + 1]
    return x, n, node


def sample_x(params: PolyaParams, real: PolyaRealization, rng):
    """One draw (x, n, s)."""
    x, n, node = sample_x_batch(params, real, rng, 1)
    return float(x[0]), int(n[0]), _word(int(node[0]))


def prior_predictive_mean_density(params: PolyaParams, draws: int, rng) -> PiecewiseDensity:
    """Cell-wise average of random_density over independent realizations."""
    if draws < 1:
        raise InvalidParameterError("draws must be positive")
    gen = _generator(rng)
    acc = None
    for _ in range(draws):
        f = random_density(params, sample_realization(params, gen))
        vals = np.array([float(f.values[w]) for w in f.words])
        acc = vals if acc is None else acc + vals
    mean = acc / draws
    # renormalize away round-off so the constructor's 1e-12 check holds
    lengths = np.array([float(params.scheme.length(w)) for w in f.words])
    mean = mean / float(np.dot(mean, lengths))
    return PiecewiseDensity(params.scheme, params.depth, dict(zip(f.words, mean.tolist())))

