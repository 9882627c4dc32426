"""Wilson's read-once perfect sampler on the residual chain.

All chains started from the states of Omega are driven by one stream of
uniforms through the inverse-CDF update; blocks of b = t + s - 1 uniforms
are read once, left to right.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Any

import numpy as np

from .coupling import CouplingDraw, Density, extend_digits, sample_coupled
from .errors import (
    BudgetExceededError,
    InfeasibleExactError,
    InvalidParameterError,
    ModeMismatchError,
)
from .markov import ResidualChain
from .streams import as_stream

__all__ = [
    "BlockRecord",
    "PerfectDraw",
    "Estimate",
    "SrsTable",
    "srs_update",
    "gen_block",
    "epsilon_t",
    "read_once",
    "choose_t",
    "perfect_remainder_sample",
]

DEFAULT_BLOCK_BUDGET = 10**7


class SrsTable:
    """Per-state cumulative thresholds and successor states for the update.

    Digits are tried in ascending order; the last cumulative value is forced
    to 1 so round-off can never leave a gap.
    """

    def __init__(self, chain: ResidualChain):
        self.chain = chain
        self.omega = chain.omega
        idx = chain.index
        self.cum: list[list[float]] = []
        self.cum_exact: list[list[Any]] = []
        self.succ: list[list[int]] = []
        P = chain.P_exact if chain.P_exact is not None else chain.P
        for z in self.omega:
            row = P[idx[z]]
            nxt = sorted(
                (w for w in self.omega if w[:-1] == z[1:] and row[idx[w]] > 0),
                key=lambda w: w[-1],
            )
            acc, cum, cum_x = 0, [], []
            for w in nxt:
                acc = acc + row[idx[w]]
                cum_x.append(acc)
                cum.append(float(acc))
            cum[-1] = 1.0
            cum_x[-1] = 1
            self.cum.append(cum)
            self.cum_exact.append(cum_x)
            self.succ.append([idx[w] for w in nxt])

    def update(self, j: int, v: float) -> int:
        c = self.cum[j]
        return self.succ[j][min(bisect_left(c, v), len(c) - 1)]


def _table(chain: ResidualChain) -> SrsTable:
    tab = getattr(chain, "_srs_cache", None)
    if tab is None:
        tab = SrsTable(chain)
        object.__setattr__(chain, "_srs_cache", tab)
    return tab


def srs_update(chain: ResidualChain, state, v: float):
    """Shift ``state`` and append F^-(v | state), the generalized inverse CDF."""
    if not 0 < v < 1:
        raise InvalidParameterError("v must lie in (0, 1)")
    tab = _table(chain)
    j = chain.index[tuple(state)]
    return chain.omega[tab.update(j, v)]


@dataclass(frozen=True)
class BlockRecord:
    t: int
    b: int
    uniforms: tuple
    outputs: dict
    coalesced: bool
    common_output: tuple | None = None


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float = 0.0
    mode: str = "exact"
    n: int = 0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class PerfectDraw:
    coupling: CouplingDraw
    m1: int
    m2: int
    m: int
    k: int
    stationary_state: tuple
    epsilon_t: float | None
    digits: tuple  # X_1 .. X_{max(N,s)+M} plus any continuation digits
    t: int


def _check_t(chain: ResidualChain, t: int) -> int:
    if int(t) != t or t < chain.s:
        raise InvalidParameterError(f"block parameter t must be an integer >= s = {chain.s}")
    return t + chain.s - 1


def _run_block(tab: SrsTable, vs) -> list[int]:
    out = []
    for j in range(len(tab.omega)):
        for v in vs:
            j = tab.update(j, v)
        out.append(j)
    return out


def gen_block(chain: ResidualChain, t: int, rng) -> BlockRecord:
    """Draw b uniforms and push every state of Omega through them."""
    b = _check_t(chain, t)
    stream = as_stream(rng)
    tab = _table(chain)
    vs = tuple(stream.next() for _ in range(b))
    out = _run_block(tab, vs)
    first = out[0]
    coal = all(o == first for o in out)
    outputs = {z: chain.omega[o] for z, o in zip(chain.omega, out)}
    return BlockRecord(t, b, vs, outputs, coal, chain.omega[first] if coal else None)


def _epsilon_exact(chain: ResidualChain, b: int, max_maps: int, max_work: float) -> float:
    tab = _table(chain)
    thresholds = sorted({c for row in tab.cum_exact for c in row} | {0, 1})
    intervals = [(lo, hi) for lo, hi in zip(thresholds[:-1], thresholds[1:]) if hi > lo]
    # successor of every state on each threshold interval (lo, hi]
    step = []
    for lo, hi in intervals:
        row = []
        for j, cx in enumerate(tab.cum_exact):
            pos = next(i for i, c in enumerate(cx) if c >= hi)
            row.append(tab.succ[j][pos])
        step.append((hi - lo, row))
    maps = {tuple(range(len(tab.omega))): 1}
    for _ in range(b):
        if len(maps) * len(step) * len(tab.omega) > max_work:
            raise InfeasibleExactError("exact coalescence probability is too expensive; use monte_carlo mode")
        nxt: dict = {}
        for mp, p in maps.items():
            for w, row in step:
                key = tuple(row[j] for j in mp)
                nxt[key] = nxt.get(key, 0) + p * w
        maps = nxt
        if len(maps) > max_maps:
            raise InfeasibleExactError("too many partial state maps; use monte_carlo mode")
    return float(sum(p for mp, p in maps.items() if len(set(mp)) == 1))


def _coalesce_many(chain: ResidualChain, vs: np.ndarray) -> np.ndarray:
    """Vectorised coalescence indicator for blocks given as rows of ``vs``."""
    tab = _table(chain)
    width = max(len(c) for c in tab.cum)
    cum = np.full((len(tab.omega), width), 2.0)
    succ = np.zeros((len(tab.omega), width), dtype=np.int64)
    for j, (c, s) in enumerate(zip(tab.cum, tab.succ)):
        cum[j, : len(c)] = c
        succ[j, : len(s)] = s
    nblk = vs.shape[0]
    states = np.tile(np.arange(len(tab.omega)), (nblk, 1))
    for col in range(vs.shape[1]):
        pos = np.argmax(cum[states] >= vs[:, col][:, None, None], axis=2)
        states = succ[states, pos]
    return np.all(states == states[:, :1], axis=1)


def epsilon_t(chain: ResidualChain, t: int, mode: str = "exact", n_blocks: int = 100_000, rng=None,
              max_maps: int = 200_000, max_work: float = 5e7) -> Estimate:
    """Probability that a block of length b = t + s - 1 is coalescent.

    ``exact`` integrates over the threshold partition of each uniform;
    ``monte_carlo`` averages simulated blocks and reports a 95% half-width.
    """
    b = _check_t(chain, t)
    if mode == "exact":
        return Estimate(_epsilon_exact(chain, b, max_maps, max_work), 0.0, "exact", 0)
    if mode not in ("monte_carlo", "mc"):
        raise ModeMismatchError(f"unknown mode {mode!r}")
    stream = as_stream(rng)
    hits = 0
    done = 0
    while done < n_blocks:
        k = min(20_000, n_blocks - done)
        hits += int(_coalesce_many(chain, stream.take(k * b).reshape(k, b)).sum())
        done += k
    p = hits / n_blocks
    return Estimate(p, 1.96 * math.sqrt(max(p * (1 - p), 0.0) / n_blocks), "monte_carlo", n_blocks)


def read_once(chain: ResidualChain, t: int, rng, budget: int = DEFAULT_BLOCK_BUDGET):
    """Steps (A)-(C): return (output state, M1, M2)."""
    b = _check_t(chain, t)
    stream = as_stream(rng)
    tab = _table(chain)
    used = 0
    m1 = 0
    while True:
        if used >= budget:
            raise BudgetExceededError(f"no coalescent block within {budget} blocks")
        out = _run_block(tab, stream.take(b))
        used += 1
        m1 += 1
        if min(out) == max(out):
            state = out[0]
            break
    m2 = 0
    while True:
        if used >= budget:
            raise BudgetExceededError(f"no second coalescent block within {budget} blocks")
        out = _run_block(tab, stream.take(b))
        used += 1
        m2 += 1
        if min(out) == max(out):
            break
        state = out[state]
    return chain.omega[state], m1, m2


def choose_t(chain: ResidualChain, rng, probe_blocks: int = 10_000, threshold: float = 0.05, span: int = 8) -> int:
    """Smallest t in s..s+span whose Monte Carlo coalescence rate reaches ``threshold``."""
    stream = as_stream(rng)
    for t in range(chain.s, chain.s + span + 1):
        if epsilon_t(chain, t, "monte_carlo", probe_blocks, stream).value >= threshold:
            return t
    raise InvalidParameterError(f"no t <= s + {span} has estimated coalescence rate >= {threshold}")


def perfect_remainder_sample(density: Density, chain: ResidualChain, t: int, rng,
                             continuation: str = "stream", budget: int = DEFAULT_BLOCK_BUDGET,
                             epsilon: float | None = None) -> PerfectDraw:
    """Coupled draw of X ~ f with the stationarity time K.

    (S, N) come from the coupled sampler; digits are extended to max(N, s)
    by the scheme's conditional digit law; the chain started from the last
    s digits is then driven by read-once blocks from the same stream.  The
    window X_{K+1..K+s} is the read-once output.  X is finally placed
    uniformly in the cell of the generated digits.

    ``continuation="stream"`` keeps the literal construction: the digits of
    the second coalescent block are part of X (X ~ f exactly, but the digit
    right after the window is biased by the coalescence event).
    ``continuation="fresh"`` stops at the window and places X uniformly in
    the window's cell, so the digits after K are a stationary chain.
    """
    if continuation not in ("stream", "fresh"):
        raise ModeMismatchError("continuation must be 'stream' or 'fresh'")
    sc = chain.scheme
    if density.scheme != sc:
        raise ModeMismatchError("density and chain live on different schemes")
    b = _check_t(chain, t)
    stream = as_stream(rng)
    tab = _table(chain)
    s = chain.s

    first = sample_coupled(density, stream)
    n = first.n
    w = extend_digits(sc, first.s, max(n, s), stream)
    digits = list(w)
    cur = chain.index[tuple(w[len(w) - s:])]

    def block():
        vs = stream.take(b)
        out = _run_block(tab, vs)
        return vs, out

    used, m1 = 0, 0
    while True:
        if used >= budget:
            raise BudgetExceededError(f"no coalescent block within {budget} blocks")
        vs, out = block()
        used += 1
        m1 += 1
        for v in vs:
            cur = tab.update(cur, v)
            digits.append(chain.omega[cur][-1])
        if min(out) == max(out):
            break
    m2 = 0
    while True:
        if used >= budget:
            raise BudgetExceededError(f"no second coalescent block within {budget} blocks")
        vs, out = block()
        used += 1
        m2 += 1
        if min(out) == max(out):
            break
        for v in vs:
            cur = tab.update(cur, v)
            digits.append(chain.omega[cur][-1])
    window = chain.omega[cur]
    m = b * (m1 + m2 - 1)
    k = max(n, s) + m - s
    assert tuple(digits[k:k + s]) == window
    if continuation == "stream":
        for v in vs:
            cur = tab.update(cur, v)
            digits.append(chain.omega[cur][-1])
    word = tuple(digits)
    v_last = stream.next()
    a_w, l_w = sc.cell(word)
    a_s, l_s = sc.cell(first.s)
    u = float((a_w - a_s) / l_s) + float(l_w / l_s) * v_last
    x = float(a_w) + float(l_w) * v_last
    draw = CouplingDraw(x, n, first.s, u, u * float(l_s), l_s)
    return PerfectDraw(draw, m1, m2, m, k, window, epsilon, word, t)

