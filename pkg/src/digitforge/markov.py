"""The residual-digit Markov chain of order s.

When l_{x1..xn} / l_{x1..x(n-1)} depends only on the trailing s+1 digits,
the s-blocks of residual digits form a Markov chain on
Omega = {s-words with positive length} with transition probabilities
p_{x1..x(s+1)} = l_{x1..x(s+1)} / l_{x1..xs}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .coupling import PiecewiseDensity
from .errors import (
    ConditioningOnNullError,
    InvalidParameterError,
    NoUniqueInvariantError,
    UnsupportedSchemeError,
)
from .subdivision import Scheme, words

__all__ = [
    "ResidualChain",
    "StatePmf",
    "ErgodicityReport",
    "build_chain",
    "chain_from_matrix",
    "verify_markov_order",
    "minimal_markov_order",
    "invariant_pmf",
    "f_inv_density",
    "initial_distribution",
    "is_uniformly_ergodic",
    "tv_to_invariant",
    "aperiodicity_sufficient",
]


@dataclass(frozen=True)
class ResidualChain:
    s: int
    omega: tuple
    P: np.ndarray
    scheme: Scheme | None = None
    P_exact: tuple | None = field(default=None, repr=False)

    @property
    def index(self) -> dict:
        return {w: j for j, w in enumerate(self.omega)}

    def to_json(self, pi=None, digits: int = 17) -> str:
        out = {
            "s": self.s,
            "omega": [list(w) for w in self.omega],
            "P": [[float(f"{v:.{digits}g}") for v in row] for row in self.P],
        }
        if self.scheme is not None:
            out["scheme"] = self.scheme.to_config()
        if pi is not None:
            out["pi_inv"] = [float(f"{v:.{digits}g}") for v in pi.weights]
        return json.dumps(out)


@dataclass(frozen=True)
class StatePmf:
    omega: tuple
    weights: np.ndarray

    def __getitem__(self, w):
        return self.weights[self.omega.index(tuple(w))]

    def as_dict(self) -> dict:
        return dict(zip(self.omega, self.weights.tolist()))


class ErgodicityReport(tuple):
    """(ergodic, alpha, beta) plus the TV curve used for the fit."""

    def __new__(cls, ergodic, alpha, beta, tv=(), irreducible=False, period=0):
        self = super().__new__(cls, (ergodic, alpha, beta))
        self.tv = tuple(tv)
        self.irreducible = irreducible
        self.period = period
        return self

    ergodic = property(lambda self: self[0])
    alpha = property(lambda self: self[1])
    beta = property(lambda self: self[2])


def build_chain(scheme: Scheme, s: int) -> ResidualChain:
    """Transition matrix from length ratios of the first s+1 digits."""
    if scheme.countable:
        raise UnsupportedSchemeError(
            f"{scheme!r} has infinitely many positive-length s-words; no finite-order chain exists")
    if s < 1:
        raise InvalidParameterError("order s must be positive")
    omega = tuple(w for w, _ in words(scheme, s))
    idx = {w: j for j, w in enumerate(omega)}
    exact = [[0] * len(omega) for _ in omega]
    for w in omega:
        lw = scheme.length(w)
        for k in scheme.alphabet():
            lk = scheme.length(w + (k,))
            if lk > 0:
                exact[idx[w]][idx[w[1:] + (k,)]] = lk / lw
    P = np.array([[float(v) for v in row] for row in exact])
    return ResidualChain(s, omega, P, scheme, tuple(tuple(r) for r in exact))


def chain_from_matrix(P, omega: Sequence | None = None, s: int = 1) -> ResidualChain:
    """Wrap an arbitrary row-stochastic matrix (for diagnostics and tests)."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidParameterError("P must be square")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
        raise InvalidParameterError("P must be row-stochastic")
    omega = tuple((j,) for j in range(P.shape[0])) if omega is None else tuple(tuple(w) for w in omega)
    return ResidualChain(s, omega, P)


def _ratio_groups(scheme: Scheme, s: int, depth: int, max_digits: int):
    groups: dict = {}
    level = [()]
    alpha = scheme.alphabet(max_digits if scheme.countable else None)
    lengths = {(): scheme.length(())}
    for n in range(1, depth + 1):
        nxt = []
        for w in level:
            lw = lengths[w]
            for k in alpha:
                v = w + (k,)
                lv = scheme.length(v)
                if n >= s + 1:
                    groups.setdefault(v[-(s + 1):], []).append(lv / lw)
                if lv > 0:
                    lengths[v] = lv
                    nxt.append(v)
        level = nxt
    return groups


def verify_markov_order(scheme: Scheme, s: int, depth: int, max_digits: int = 4) -> bool:
    """True iff l_w / l_{w minus last digit} depends only on the last s+1 digits of w,
    for every word w of length <= depth with a positive-length parent.

    Countable alphabets are checked on digits <= ``max_digits``.
    """
    if s < 0:
        raise InvalidParameterError("s must be non-negative")
    groups = _ratio_groups(scheme, s, depth, max_digits)
    for vals in groups.values():
        first = vals[0]
        for v in vals[1:]:
            if scheme.exact:
                if v != first:
                    return False
            elif abs(v - first) > 1e-10 * max(1.0, abs(first)):
                return False
    return True


def minimal_markov_order(scheme: Scheme, depth: int = 8, max_s: int = 4) -> int | None:
    """Smallest s <= max_s passing verify_markov_order (a diagnostic, not a proof)."""
    for s in range(max_s + 1):
        if verify_markov_order(scheme, s, max(depth, s + 2)):
            return s
    return None


def aperiodicity_sufficient(scheme: Scheme, s: int) -> bool:
    """The sufficient condition: every word of length 2s and 2s+1 has positive length."""
    if scheme.countable:
        raise UnsupportedSchemeError("only finite alphabets")
    q = len(scheme.alphabet())
    return len(words(scheme, 2 * s)) == q ** (2 * s) and len(words(scheme, 2 * s + 1)) == q ** (2 * s + 1)


def _strongly_connected(P: np.ndarray) -> bool:
    n, _ = connected_components(P > 0, directed=True, connection="strong")
    return n == 1


def _period(P: np.ndarray) -> int:
    adj = P > 0
    order, _ = breadth_first_order(adj, 0, directed=True, return_predecessors=True)
    level = np.full(P.shape[0], -1)
    level[0] = 0
    for u in order:
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
    g = 0
    for u, v in zip(*np.nonzero(adj)):
        if level[u] >= 0 and level[v] >= 0:
            g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g


def _power_iteration(P: np.ndarray, steps: int = 10_000) -> np.ndarray:
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    # lazy version so periodic chains still converge
    Q = 0.5 * (P + np.eye(P.shape[0]))
    for _ in range(steps):
        nxt = pi @ Q
        if np.max(np.abs(nxt - pi)) < 1e-17:
            pi = nxt
            break
        pi = nxt
    return pi / pi.sum()


def invariant_pmf(chain: ResidualChain, cond_limit: float = 1e12) -> StatePmf:
    """Unique pi with pi P = pi; one balance equation is replaced by sum(pi) = 1."""
    P = chain.P
    if not _strongly_connected(P):
        raise NoUniqueInvariantError("transition matrix is reducible")
    m = P.shape[0]
    A = P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    if np.linalg.cond(A) > cond_limit:
        pi = _power_iteration(P)
    else:
        pi = np.linalg.solve(A, b)
        pi = pi + np.linalg.solve(A, b - A @ pi)  # one refinement step
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return StatePmf(chain.omega, pi)


def f_inv_density(chain: ResidualChain, pi: StatePmf | None = None) -> PiecewiseDensity:
    """Piecewise density of depth s with value pi(w) / l_w on cell w."""
    if chain.scheme is None:
        raise InvalidParameterError("chain has no scheme")
    pi = invariant_pmf(chain) if pi is None else pi
    sc = chain.scheme
    values = {w: float(p) / float(sc.length(w)) for w, p in zip(pi.omega, pi.weights)}
    return PiecewiseDensity(sc, chain.s, values)


def initial_distribution(chain: ResidualChain, prefix: Sequence[int]) -> dict:
    """Law of (R_1..R_s) given S = prefix, as a dict over Omega.

    With n = len(prefix) >= s the law is the chain started from the last s
    digits of the prefix; with n < s the first s - n residual digits come
    from length ratios and the rest from transitions.
    """
    sc = chain.scheme
    prefix = sc.check_prefix(prefix)
    base = sc.length(prefix)
    if base <= 0:
        raise ConditioningOnNullError(f"cell {prefix} has zero length")
    s, n = chain.s, len(prefix)
    idx = chain.index
    P = chain.P_exact if chain.P_exact is not None else chain.P
    out = {}
    for y in chain.omega:
        if n >= s:
            state, p = prefix[n - s:], 1
            for k in y:
                nxt = state[1:] + (k,)
                if state not in idx or nxt not in idx:
                    p = 0
                    break
                p = p * P[idx[state]][idx[nxt]]
                state = nxt
        else:
            head = prefix + y[: s - n]
            p = sc.length(head) / base
            state = head
            for k in y[s - n:]:
                nxt = state[1:] + (k,)
                if p == 0 or nxt not in idx:
                    p = 0
                    break
                p = p * P[idx[state]][idx[nxt]]
                state = nxt
        out[y] = p
    return out


def tv_to_invariant(chain: ResidualChain, pi: StatePmf, i: int) -> float:
    """max_z 1/2 sum_w |P^i(z, w) - pi(w)|."""
    if i < 1:
        raise InvalidParameterError("i must be at least 1")
    Pi = np.linalg.matrix_power(chain.P, i)
    return float(0.5 * np.max(np.abs(Pi - pi.weights[None, :]).sum(axis=1)))


def is_uniformly_ergodic(chain: ResidualChain, horizon: int = 50) -> ErgodicityReport:
    """Irreducibility + aperiodicity, and an empirical (alpha, beta) certificate.

    beta is the largest (TV_i / TV_1)^(1/(i-1)) over the horizon and
    alpha = TV_1 / beta, so TV_i <= alpha beta^i holds on every tested i.
    This is a numerical certificate on i = 1..horizon, not a proof.
    """
    P = chain.P
    irreducible = _strongly_connected(P)
    period = _period(P) if irreducible else 0
    if not irreducible or period != 1:
        return ErgodicityReport(False, math.nan, math.nan, (), irreducible, period)
    pi = invariant_pmf(chain)
    tv, Pi = [], np.eye(P.shape[0])
    for _ in range(horizon):
        Pi = Pi @ P
        tv.append(float(0.5 * np.max(np.abs(Pi - pi.weights[None, :]).sum(axis=1))))
    floor = 1e-14
    if tv[0] <= floor:
        return ErgodicityReport(True, 0.0, 0.0, tv, True, 1)
    ratios = [(tv[i - 1] / tv[0]) ** (1.0 / (i - 1)) for i in range(2, horizon + 1) if tv[i - 1] > floor]
    beta = max(ratios, default=0.0)
    if beta <= 0.0 or beta >= 1.0:
        eig = np.sort(np.abs(np.linalg.eigvals(P)))[::-1]
        beta = min(max(float(eig[1]) + 1e-9, 1e-12), 1 - 1e-12)
        alpha = max(t / beta**i for i, t in enumerate(tv, start=1))
    else:
        alpha = tv[0] / beta
    ok = all(t <= alpha * beta**i * (1 + 1e-9) + floor for i, t in enumerate(tv, start=1))
    return ErgodicityReport(bool(ok and beta < 1), float(alpha), float(beta), tv, True, 1)

