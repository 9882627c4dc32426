"""End-to-end acceptance checks at desk scale.

Each check returns a CriterionResult; ``run_acceptance`` filters them by
suite tag (golden, cf, base10, core, all).  Seeds are fixed so a run is
reproducible; ``scale`` shrinks sample sizes for smoke runs.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .coupling import PiecewiseDensity, cdf_N, gauss_density, sample_coupled_batch
from .markov import build_chain, f_inv_density, invariant_pmf, verify_markov_order
from .polyatree import PolyaParams, random_density, sample_realization, sample_x_batch
from .readonce import epsilon_t, read_once
from .streams import UniformStream
from .subdivision import BaseQ, ContinuedFraction, PseudoGoldenBeta, float_digits, words
from .verify import (
    check_coupling_inequality,
    chi_square,
    empirical_tv_cells,
    ks_critical,
    ks_uniform,
    pushforward_density,
    serial_chi_square,
)

__all__ = ["CriterionResult", "CRITERIA", "run_acceptance", "golden_brute_force_length"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def _n(base: int, scale: float, floor: int = 1000) -> int:
    return max(floor, int(base * scale))


# ---------------------------------------------------------------------------------------


def c01_golden_invariant(seed: int, scale: float) -> CriterionResult:
    g = PseudoGoldenBeta(2)
    b = g.beta
    chain = build_chain(g, 1)
    pi = invariant_pmf(chain)
    want = [float(b * b / (1 + b * b)), float(1 / (1 + b * b))]
    err_pi = float(np.max(np.abs(pi.weights - want)))
    f = f_inv_density(chain, pi)
    want_f = [float((1 + 2 * b) / (2 + b)), float((1 + b) / (2 + b))]
    err_f = max(abs(float(f.values[(0,)]) - want_f[0]), abs(float(f.values[(1,)]) - want_f[1]))
    ok = err_pi <= 1e-12 and err_f <= 1e-12
    return CriterionResult(1, "golden-mean invariant PMF and f_inv", ok,
                           f"pi={pi.weights.round(7).tolist()} |err|={err_pi:.1e}; f_inv |err|={err_f:.1e}",
                           {"pi": pi.weights.tolist(), "err_pi": err_pi, "err_f": err_f})


def c02_readonce_constants(seed: int, scale: float) -> CriterionResult:
    g = PseudoGoldenBeta(2)
    chain = build_chain(g, 1)
    exact = float(epsilon_t(chain, 1, "exact"))
    err_exact = abs(exact - float(1 / g.beta))
    nb = _n(100_000, scale)
    mc = epsilon_t(chain, 1, "monte_carlo", nb, UniformStream(seed, 21)).value
    stream = UniformStream(seed, 22)
    runs = _n(100_000, scale)
    total = 0
    for _ in range(runs):
        _, m1, m2 = read_once(chain, 1, stream)
        total += m1 + m2
    mean = total / runs
    ok = err_exact <= 1e-12 and abs(mc - 0.6180339887) <= 0.01 and abs(mean - (math.sqrt(5) + 1)) <= 0.05
    return CriterionResult(2, "read-once constants", ok,
                           f"exact eps1={exact:.10f} (err {err_exact:.1e}); MC eps1={mc:.4f}; mean M1+M2={mean:.4f}",
                           {"eps_exact": exact, "eps_mc": mc, "mean_m": mean})


def c03_perfect_law(seed: int, scale: float) -> CriterionResult:
    out = {}
    ok = True
    for m, t in ((2, 1), (3, 2)):
        chain = build_chain(PseudoGoldenBeta(m), m - 1)
        pi = invariant_pmf(chain)
        stream = UniformStream(seed, 30 + m)
        runs = _n(100_000, scale)
        counts = Counter(read_once(chain, t, stream)[0] for _ in range(runs))
        res = chi_square(pi.as_dict(), dict(counts))
        out[f"m={m}"] = res.p_value
        ok &= res.p_value > 0.01
    return CriterionResult(3, "read-once output law", ok,
                           "chi-square p: " + ", ".join(f"{k} p={v:.3f}" for k, v in out.items()), out)


def c04_two_step_exact(seed: int, scale: float) -> CriterionResult:
    d = PiecewiseDensity(BaseQ(2), 1, [Fraction(3, 2), Fraction(1, 2)])
    p0, p1 = cdf_N(d, 0).value, cdf_N(d, 1).value
    size = _n(100_000, scale)
    b = sample_coupled_batch(d, UniformStream(seed, 40), size)
    f0 = float(np.mean(b.n == 0))
    f1 = float(np.mean(b.n == 1))
    ok = p0 == Fraction(1, 2) and p1 == 1 and abs(f0 - 0.5) <= 0.01 and abs(f1 - 0.5) <= 0.01
    return CriterionResult(4, "exact law of N (base 2)", ok,
                           f"P(N<=0)={p0}, P(N<=1)={p1}; empirical P(N=0)={f0:.4f}, P(N=1)={f1:.4f}",
                           {"f0": f0, "f1": f1})


def _su_densities():
    g = PseudoGoldenBeta(2)
    gw = [w for w, _ in words(g, 2)]
    # golden depth-2 density: weights 1, 2, 3 on the admissible cells, normalised
    raw = {w: float(k + 1) for k, w in enumerate(gw)}
    z = sum(raw[w] * float(g.length(w)) for w in gw)
    return [
        ("base2 (3/2,1/2)", PiecewiseDensity(BaseQ(2), 1, [Fraction(3, 2), Fraction(1, 2)])),
        ("base3 depth2", PiecewiseDensity(BaseQ(3), 2, [Fraction(9 * v, 75) for v in (2, 7, 13, 4, 9, 11, 6, 8, 15)])),
        ("golden depth2", PiecewiseDensity(g, 2, {w: raw[w] / z for w in gw})),
    ]


def c05_su_uniformity(seed: int, scale: float) -> CriterionResult:
    size = _n(100_000, scale)
    ok = True
    parts = []
    worst = 0.0
    for j, (name, dens) in enumerate(_su_densities()):
        b = sample_coupled_batch(dens, UniformStream(seed, 50 + j), size)
        ratio = ks_uniform(b.u) / ks_critical(size)
        worst = max(worst, ratio)
        keys = [b.s(i) for i in range(size)]
        strata = Counter(keys)
        ids = {s: k for k, s in enumerate(strata)}
        label = np.array([ids[s] for s in keys])
        for s, _ in strata.most_common(5):
            mask = label == ids[s]
            r = ks_uniform(b.u[mask]) / ks_critical(int(mask.sum()))
            worst = max(worst, r)
            ok &= r < 1
        ok &= ratio < 1
        parts.append(f"{name}: {len(strata)} strata")
    return CriterionResult(5, "S independent of uniform U", ok,
                           f"max KS/critical={worst:.3f}; " + "; ".join(parts), {"worst_ratio": worst})


def c06_residual_independence(seed: int, scale: float) -> CriterionResult:
    sc = BaseQ(3)
    dens = [PiecewiseDensity(sc, 1, [Fraction(4, 5), Fraction(7, 5), Fraction(4, 5)]),
            PiecewiseDensity(sc, 1, [Fraction(6, 5), Fraction(6, 5), Fraction(3, 5)])]
    size = _n(300_000, scale)
    laws = []
    matched = []
    for j, d in enumerate(dens):
        b = sample_coupled_batch(d, UniformStream(seed, 60 + j), size)
        keep = b.n == 0  # match on S = empty prefix
        digs = float_digits(sc, b.x[keep], 3)
        matched.append(int(keep.sum()))
        c = Counter(map(tuple, digs.tolist()))
        laws.append({w: v / keep.sum() for w, v in c.items()})
    cells = set(laws[0]) | set(laws[1])
    tv = 0.5 * sum(abs(laws[0].get(w, 0.0) - laws[1].get(w, 0.0)) for w in cells)
    ok = tv <= 0.02 and min(matched) >= 10_000
    return CriterionResult(6, "residual law does not depend on f", ok,
                           f"TV={tv:.4f} over 27 cells, matched draws {matched}", {"tv": tv, "matched": matched})


def c07_iid_residuals(seed: int, scale: float) -> CriterionResult:
    sc = BaseQ(10)
    dens = PiecewiseDensity(sc, 1, [Fraction(3, 2) if k % 2 == 0 else Fraction(1, 2) for k in range(10)])
    per = 5
    draws = _n(100_000, scale) // per
    b = sample_coupled_batch(dens, UniformStream(seed, 70), draws)
    digs = float_digits(sc, b.x, 1 + per)
    stream = np.concatenate([digs[i, b.n[i]:b.n[i] + per] for i in range(draws)])
    counts = np.bincount(stream, minlength=10)
    marg = chi_square(np.full(10, 0.1), counts)
    pair = serial_chi_square(stream.tolist(), {k: 0.1 for k in range(10)})
    ok = marg.p_value > 0.01 and pair.p_value > 0.01
    return CriterionResult(7, "IID uniform residual digits (base 10)", ok,
                           f"{stream.size} digits; marginal p={marg.p_value:.3f}, pair p={pair.p_value:.3f}",
                           {"p_marginal": marg.p_value, "p_pairs": pair.p_value})


def c08_coupling_inequalities(seed: int, scale: float) -> CriterionResult:
    size = _n(100_000, scale)
    d2 = PiecewiseDensity(BaseQ(2), 1, [Fraction(3, 2), Fraction(1, 2)])
    rep1 = check_coupling_inequality(d2, "coupled", [0, 1, 2, 4], size, UniformStream(seed, 80))
    g = PseudoGoldenBeta(2)
    chain = build_chain(g, 1)
    fg = PiecewiseDensity(g, 1, {(0,): 0.5 * float(g.beta), (1,): 0.5 / float(g.length((1,)))})
    rep2 = check_coupling_inequality(fg, "perfect", [1, 2, 4, 8, 16], size, UniformStream(seed, 81),
                                     chain=chain, t=1)
    ok = all(r.passed for r in rep1 + rep2)
    fmt = lambda rs: ", ".join(f"n={r.n}: {r.tv_empirical:.4f}<={r.bound:.4f}+3*{r.half_width:.4f}" for r in rs)
    return CriterionResult(8, "coupling inequalities", ok, f"N: {fmt(rep1)} | K: {fmt(rep2)}",
                           {"coupled": [r.__dict__ for r in rep1], "perfect": [r.__dict__ for r in rep2]})


def golden_brute_force_length(m: int, word):
    """Cylinder length by intersecting preimages of T(x) = beta x mod 1 (interval arithmetic)."""
    g = PseudoGoldenBeta(m)
    b = g.beta
    ctx = g.ctx
    lo, hi = ctx.mpf(0), ctx.mpf(1)
    for k in reversed(word):
        lo, hi = (lo + k) / b, (hi + k) / b
        lo = max(lo, k / b)
        hi = min(hi, (k + 1) / b, ctx.mpf(1))
        if hi <= lo:
            return ctx.mpf(0)
    return hi - lo


def c09_exact_oracles(seed: int, scale: float) -> CriterionResult:
    cf = ContinuedFraction()
    cf_bad = 0
    cf_count = 0
    for n in range(1, 5):
        for w in itertools.product(range(1, 5), repeat=n):
            # endpoints [0; w] and [0; w_1..w_n + 1] by backward evaluation
            def value(ws):
                v = Fraction(0)
                for k in reversed(ws):
                    v = 1 / (k + v)
                return v
            e1, e2 = value(w), value(w[:-1] + (w[-1] + 1,))
            cf_count += 1
            cf_bad += abs(e1 - e2) != cf.length(w)
    worst = 0.0
    for m in (2, 3):
        g = PseudoGoldenBeta(m)
        for n in range(1, 13):
            for w in itertools.product((0, 1), repeat=n):
                worst = max(worst, float(abs(g.length(w) - golden_brute_force_length(m, w))))
    ok = cf_bad == 0 and worst <= 1e-10
    return CriterionResult(9, "exact-arithmetic length oracles", ok,
                           f"CF mismatches {cf_bad}/{cf_count}; pseudo-golden max |err|={worst:.1e}",
                           {"cf_bad": cf_bad, "golden_err": worst})


def c10_gauss_invariance(seed: int, scale: float) -> CriterionResult:
    g = gauss_density()
    xs = (np.arange(1000) + 0.5) / 1000
    res = pushforward_density(g, 1, xs, max_terms=10_000)
    err = float(np.max(np.abs(res.value - g.pdf_float(xs))))
    orders = [verify_markov_order(ContinuedFraction(), s, 6) for s in range(4)]
    ok = err <= 1e-6 and not any(orders)
    return CriterionResult(10, "Gauss density invariance", ok,
                           f"max |f^[1]-f_G|={err:.1e} (truncation tail {res.tail_bound:.1e}, corrected); "
                           f"Markov order s<=3: {orders}", {"err": err})


def c11_invariant_start(seed: int, scale: float) -> CriterionResult:
    g = PseudoGoldenBeta(2)
    f = f_inv_density(build_chain(g, 1))
    size = _n(100_000, scale)
    b = sample_coupled_batch(f, UniformStream(seed, 110), size)
    nmax = int(b.n.max())
    return CriterionResult(11, "N <= s under f_inv", nmax <= 1, f"max N={nmax} over {size} draws", {"max_n": nmax})


def c12_polya(seed: int, scale: float) -> CriterionResult:
    size = _n(100_000, scale)
    params = PolyaParams(BaseQ(2), 4, (0.1, 0.2, 0.2, 0.2, 0.3), default_alpha=(2.0, 3.0))
    real = sample_realization(params, np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 120]))))
    f = random_density(params, real)
    integral = sum(float(v) * float(f.cells[w].length) for w, v in f.values.items())
    x, _, _ = sample_x_batch(params, real, UniformStream(seed, 121), size)
    tv = empirical_tv_cells(x, f, 4)
    p0 = PolyaParams(BaseQ(2), 4, (1.0, 0, 0, 0, 0))
    x0, _, _ = sample_x_batch(p0, sample_realization(p0, seed), UniformStream(seed, 122), size)
    ks = ks_uniform(x0) / ks_critical(size)
    ok = abs(integral - 1) <= 1e-12 and tv <= 0.01 and ks < 1
    return CriterionResult(12, "Pólya-tree mixture", ok,
                           f"integral-1={integral - 1:.1e}; TV={tv:.4f}; delta0 KS/critical={ks:.3f}",
                           {"integral": integral, "tv": tv, "ks_ratio": ks})


CRITERIA: list[tuple[Callable, tuple]] = [
    (c01_golden_invariant, ("golden",)),
    (c02_readonce_constants, ("golden",)),
    (c03_perfect_law, ("golden",)),
    (c04_two_step_exact, ("core",)),
    (c05_su_uniformity, ("core",)),
    (c06_residual_independence, ("core",)),
    (c07_iid_residuals, ("base10",)),
    (c08_coupling_inequalities, ("core", "golden")),
    (c09_exact_oracles, ("cf", "golden")),
    (c10_gauss_invariance, ("cf",)),
    (c11_invariant_start, ("golden",)),
    (c12_polya, ("core",)),
]

SUITES = ("all", "golden", "cf", "base10", "core")


def run_acceptance(suite: str = "all", seed: int = 20240601, scale: float = 1.0,
                   only: list[int] | None = None, echo: Callable | None = None) -> list[CriterionResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    out = []
    for j, (fn, tags) in enumerate(CRITERIA, start=1):
        if suite != "all" and suite not in tags:
            continue
        if only and j not in only:
            continue
        t0 = time.perf_counter()
        res = fn(seed, scale)
        res.seconds = time.perf_counter() - t0
        out.append(res)
        if echo is not None:
            echo(res.line())
    return out

