"""Verification tools: remainder pushforward densities, total variation over
cells, coupling-inequality checks and goodness-of-fit statistics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, stats

from .coupling import Density, sample_coupled_batch
from .errors import (
    EmptySampleError,
    InvalidParameterError,
    ModeMismatchError,
    SupportMismatchError,
)
from .streams import as_stream
from .subdivision import Scheme, float_digits, words

__all__ = [
    "PushforwardResult",
    "TvReport",
    "ChiSquareResult",
    "pushforward_density",
    "reference_masses",
    "empirical_tv_cells",
    "empirical_tv_words",
    "tv_half_width",
    "check_coupling_inequality",
    "ks_uniform",
    "ks_critical",
    "chi_square",
    "serial_chi_square",
]


@dataclass(frozen=True)
class PushforwardResult:
    value: np.ndarray
    tail_bound: float
    corrected: bool = False
    warning: str | None = None


@dataclass(frozen=True)
class TvReport:
    n: int
    tv_empirical: float
    bound: float
    sample_size: int
    half_width: float
    depth: int

    @property
    def passed(self) -> bool:
        return self.tv_empirical <= self.bound + 3 * self.half_width


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


# ---------------------------------------------------------------------------------------
# Pushforward of a density under T^n


def _branch_sum(density: Density, scheme: Scheme, y, n: int, digits: Sequence[int]):
    """Sum over words of length n of f(psi_w(y)) |psi_w'(y)|."""
    acc = np.zeros_like(y)
    stack = [(y, np.ones_like(y), np.ones(y.shape, dtype=bool), 0)]
    while stack:
        z, d, ok, level = stack.pop()
        if level == n:
            acc += np.where(ok, density.pdf_float(np.where(ok, z, 0.5)) * d, 0.0)
            continue
        for k in digits:
            pre, dd, valid = scheme.inverse_branch_float(k, z)
            stack.append((pre, d * dd, ok & valid, level + 1))
    return acc


def pushforward_density(density: Density, n: int, x, max_terms: int = 10_000,
                        tail_correction: bool = True, tolerance: float = 1e-6) -> PushforwardResult:
    """Density of T^n(X) for X ~ f, evaluated at the points ``x``.

    Finite alphabets are summed exactly.  For countable alphabets the branch
    sum is cut after ``max_terms`` digits per level (``max_terms ** (1/n)``
    when n > 1).  ``tail_bound`` bounds the omitted terms by
    sup f * sum_{k > cutoff} sup |psi_k'|.  When n == 1 the omitted tail is
    added back as the integral of the summand over k >= cutoff + 1/2
    (midpoint Euler-Maclaurin), leaving an O(cutoff^-3) error.
    """
    if n < 1:
        raise InvalidParameterError("n must be positive")
    sc = density.scheme
    y = np.atleast_1d(np.asarray(x, dtype=float))
    if not sc.countable:
        return PushforwardResult(_branch_sum(density, sc, y, n, sc.alphabet()), 0.0)
    cutoff = max_terms if n == 1 else max(1, int(max_terms ** (1.0 / n)))
    digits = sc.alphabet(cutoff)
    value = _branch_sum(density, sc, y, n, digits)
    k0 = digits[-1]
    lo, hi = float(sc.root.left), float(sc.root.right)
    # sup f over the closed root, endpoints nudged inside the domain
    grid = np.linspace(lo + 1e-12, hi - 1e-12, 257)
    fmax = float(np.max(density.pdf_float(grid)))
    sup_d = lambda k: float(np.max(sc.inverse_branch_float(k, np.array([0.0, 1.0 - 1e-12]))[1]))
    tail_deriv, _ = integrate.quad(sup_d, k0, np.inf, limit=200)
    tail_bound = fmax * tail_deriv * max(1, n)
    corrected = False
    if n == 1 and tail_correction:
        extra = np.empty_like(y)
        for j, yy in enumerate(y):
            def g(k, yy=yy):
                pre, d, ok = sc.inverse_branch_float(k, yy)
                return float(np.ravel(density.pdf_float(pre))[0] * d) if ok else 0.0
            extra[j], _ = integrate.quad(g, k0 + 0.5, np.inf, limit=200, epsabs=1e-13, epsrel=1e-10)
        value = value + extra
        corrected = True
    warning = None
    if not corrected and tail_bound > tolerance:
        warning = f"truncated tail may contribute up to {tail_bound:.3g}"
    return PushforwardResult(value, tail_bound, corrected, warning)


# ---------------------------------------------------------------------------------------
# Total variation over cells


def reference_masses(reference, depth: int, max_digits: int | None = None) -> dict:
    """Cell masses of a reference law at ``depth`` for finite alphabets.

    ``reference`` is a Density or a Scheme (meaning its first-order invariant
    law, cells weighted by relative length).
    """
    if isinstance(reference, Scheme):
        sc = reference
        root = sc.root.length
        return {w: float(c.length / root) for w, c in words(sc, depth, max_digits)}
    sc = reference.scheme
    return {w: float(reference.cell_mass(w)) for w, _ in words(sc, depth, max_digits)}


def empirical_tv_words(sample_words: Iterable[tuple], masses, depth: int | None = None) -> float:
    """Half-L1 distance between word frequencies and reference masses.

    ``masses`` may be a dict or a callable word -> mass; reference mass on
    words never observed counts fully.
    """
    counts = Counter(tuple(w) if depth is None else tuple(w[:depth]) for w in sample_words)
    total = sum(counts.values())
    if total == 0:
        raise EmptySampleError("no samples")
    get = masses.get if isinstance(masses, dict) else masses
    seen_mass = 0.0
    diff = 0.0
    for w, c in counts.items():
        m = float(get(w) or 0.0)
        seen_mass += m
        diff += abs(c / total - m)
    diff += max(0.0, 1.0 - seen_mass)
    return min(1.0, 0.5 * diff)


def empirical_tv_cells(samples, reference, depth: int = 4) -> float:
    """Half-L1 distance over depth-d cells between samples and a reference law.

    A lower bound on the total variation distance.  ``reference`` is a
    Density, or a Scheme standing for its length-proportional law.
    """
    xs = np.asarray(samples, dtype=float)
    if xs.size == 0:
        raise EmptySampleError("no samples")
    sc = reference if isinstance(reference, Scheme) else reference.scheme
    d = float_digits(sc, xs, depth)
    sample_words = [tuple(r) for r in d.tolist()]
    if sc.countable:
        if isinstance(reference, Scheme):
            root = sc.root.length
            return empirical_tv_words(sample_words, lambda w: float(sc.length(w) / root))
        return empirical_tv_words(sample_words, lambda w: float(reference.cell_mass(w)))
    return empirical_tv_words(sample_words, reference_masses(reference, depth))


def tv_half_width(masses: Iterable[float], n: int, p_bound: float | None = None) -> float:
    """Monte Carlo half-width: 1.96 sqrt(b(1-b)/n) + 1/2 sum sqrt(m(1-m)/n)."""
    m = np.asarray(list(masses), dtype=float)
    hw = 0.5 * float(np.sum(np.sqrt(m * (1 - m) / n)))
    if p_bound is not None:
        hw += 1.96 * math.sqrt(p_bound * (1 - p_bound) / n)
    return hw


def check_coupling_inequality(density: Density, sampler: str, n_values: Sequence[int], draws: int, rng,
                              depth: int = 4, chain=None, t: int | None = None) -> list[TvReport]:
    """Estimate TV(law of T^n X, invariant law) over depth-d cells and pair it
    with the empirical P(N > n) (``coupled``) or P(K > n) (``perfect``)."""
    from .markov import build_chain, f_inv_density, minimal_markov_order, verify_markov_order
    from .readonce import perfect_remainder_sample

    sc = density.scheme
    stream = as_stream(rng)
    nmax = max(n_values)
    if sampler == "coupled":
        if sc.countable or not verify_markov_order(sc, 0, max(2, depth)):
            raise ModeMismatchError("coupled mode needs a scheme with independent digits (s = 0)")
        batch = sample_coupled_batch(density, stream, draws)
        xs, times = batch.x, batch.n
        masses = reference_masses(sc, depth)
        digits = float_digits(sc, xs, nmax + depth)
    elif sampler == "perfect":
        if chain is None:
            s = minimal_markov_order(sc)
            if not s:
                raise ModeMismatchError("no finite-order residual chain for this scheme")
            chain = build_chain(sc, s)
        from .readonce import choose_t

        t = choose_t(chain, stream) if t is None else t
        ds = [perfect_remainder_sample(density, chain, t, stream) for _ in range(draws)]
        times = np.array([d.k for d in ds])
        need = nmax + depth
        rows = []
        for d in ds:
            w = d.digits
            if len(w) < need:
                w = w + tuple(float_digits(sc, [d.coupling.x], need)[0][len(w):])
            rows.append(w[:need])
        digits = np.array(rows)
        masses = reference_masses(f_inv_density(chain), depth)
    else:
        raise ModeMismatchError(f"unknown sampler {sampler!r}")
    reports = []
    for n in n_values:
        bound = float(np.mean(times > n))
        ws = [tuple(r) for r in digits[:, n:n + depth].tolist()]
        tv = empirical_tv_words(ws, masses)
        hw = tv_half_width(masses.values(), draws, bound)
        reports.append(TvReport(int(n), tv, bound, draws, hw, depth))
    return reports


# ---------------------------------------------------------------------------------------
# Goodness of fit


def ks_uniform(samples) -> float:
    """One-sample Kolmogorov-Smirnov statistic against Unif(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise EmptySampleError("no samples")
    if x[0] <= 0 or x[-1] >= 1:
        raise InvalidParameterError("KS samples must lie in (0, 1)")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def ks_critical(n: int, level: float = 0.01) -> float:
    """Asymptotic KS critical value c(level)/sqrt(n); c(0.01) = 1.63."""
    c = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}.get(level)
    if c is None:
        c = math.sqrt(-0.5 * math.log(level / 2))
    return c / math.sqrt(n)


def _pool(exp: np.ndarray, obs: np.ndarray, min_expected: float):
    order = np.argsort(exp)
    exp, obs = exp[order], obs[order]
    e_out, o_out = [], []
    e_acc = o_acc = 0.0
    for e, o in zip(exp, obs):
        e_acc += e
        o_acc += o
        if e_acc >= min_expected:
            e_out.append(e_acc)
            o_out.append(o_acc)
            e_acc = o_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if e_out:
            e_out[-1] += e_acc
            o_out[-1] += o_acc
        else:
            e_out.append(e_acc)
            o_out.append(o_acc)
    return np.array(e_out), np.array(o_out)


def chi_square(expected, counts, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson goodness-of-fit; categories with small expected counts are pooled.

    ``expected`` is a PMF (dict or array), ``counts`` observed counts with the
    same keys / shape.
    """
    if isinstance(expected, dict):
        if not isinstance(counts, dict):
            raise SupportMismatchError("expected and counts must both be dicts or arrays")
        extra = [k for k, c in counts.items() if c and expected.get(k, 0) <= 0]
        if extra:
            raise SupportMismatchError(f"observations outside the support: {extra[:3]}")
        keys = [k for k, p in expected.items() if p > 0]
        p = np.array([float(expected[k]) for k in keys])
        o = np.array([float(counts.get(k, 0)) for k in keys])
    else:
        p = np.asarray(expected, dtype=float)
        o = np.asarray(counts, dtype=float)
        if p.shape != o.shape:
            raise SupportMismatchError("expected and counts have different shapes")
        if np.any((p <= 0) & (o > 0)):
            raise SupportMismatchError("observations outside the support")
        keep = p > 0
        p, o = p[keep], o[keep]
    total = o.sum()
    if total <= 0:
        raise EmptySampleError("no observations")
    e, o = _pool(p / p.sum() * total, o, min_expected)
    if e.size < 2:
        return ChiSquareResult(0.0, 0, 1.0)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = e.size - 1
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)))


def serial_chi_square(digits, pmf: dict, min_expected: float = 5.0) -> ChiSquareResult:
    """Chi-square of non-overlapping digit pairs against the product law pmf x pmf."""
    d = list(digits)
    pairs = Counter(zip(d[0:len(d) - 1:2], d[1::2]))
    expected = {(a, b): float(pa) * float(pb) for a, pa in pmf.items() for b, pb in pmf.items()}
    return chi_square(expected, dict(pairs), min_expected)

