from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from digitforge.coupling import uniform_density
from digitforge.errors import (
    BudgetExceededError,
    InfeasibleExactError,
    InvalidParameterError,
    ModeMismatchError,
)
from digitforge.markov import build_chain, f_inv_density, invariant_pmf
from digitforge.readonce import (
    choose_t,
    epsilon_t,
    gen_block,
    perfect_remainder_sample,
    read_once,
    srs_update,
)
from digitforge.streams import UniformStream
from digitforge.subdivision import BaseQ, PseudoGoldenBeta, digits_of

PHI = (1 + 5 ** 0.5) / 2


@pytest.fixture(scope="module")
def chain3():
    return build_chain(PseudoGoldenBeta(3), 2)


def test_exact_epsilon_golden(golden_chain):
    assert abs(epsilon_t(golden_chain, 1).value - 1 / PHI) < 1e-12


def test_epsilon_increases_with_t(golden_chain, chain3):
    for ch in (golden_chain, chain3):
        eps = [epsilon_t(ch, t).value for t in range(ch.s, ch.s + 4)]
        assert all(a < b for a, b in zip(eps, eps[1:]))


def test_monte_carlo_epsilon_agrees(chain3):
    exact = epsilon_t(chain3, 2).value
    mc = epsilon_t(chain3, 2, "monte_carlo", 40_000, UniformStream(3))
    assert abs(mc.value - exact) < 4 * mc.half_width


def test_iid_chain_always_coalesces():
    assert epsilon_t(build_chain(BaseQ(3), 1), 1).value == pytest.approx(1.0)


def test_exact_epsilon_budget(chain3):
    with pytest.raises(InfeasibleExactError):
        epsilon_t(chain3, 6, max_maps=2)


def test_bad_arguments(golden_chain):
    with pytest.raises(InvalidParameterError):
        epsilon_t(golden_chain, 0)
    with pytest.raises(InvalidParameterError):
        srs_update(golden_chain, (0,), 1.0)
    with pytest.raises(ModeMismatchError):
        epsilon_t(golden_chain, 1, mode="bogus")
    with pytest.raises(ModeMismatchError):
        perfect_remainder_sample(uniform_density(BaseQ(2)), golden_chain, 1, UniformStream(0))


def test_budget_exceeded(golden_chain):
    with pytest.raises(BudgetExceededError):
        read_once(golden_chain, 1, UniformStream(0), budget=0)


def test_srs_update_frequencies(chain3):
    g = np.random.default_rng(4)
    z = (1, 0)
    nxt = [srs_update(chain3, z, v) for v in g.random(20_000)]
    i = chain3.index[z]
    for w in chain3.omega:
        p = chain3.P[i, chain3.index[w]]
        assert abs(np.mean([n == w for n in nxt]) - p) < 0.015


def test_gen_block(golden_chain):
    blk = gen_block(golden_chain, 2, UniformStream(5))
    assert blk.b == 2 and len(blk.uniforms) == 2
    assert blk.coalesced == (len(set(blk.outputs.values())) == 1)


def test_read_once_law_and_block_counts(golden_chain):
    st_ = UniformStream(6)
    runs = [read_once(golden_chain, 1, st_) for _ in range(20_000)]
    pi = invariant_pmf(golden_chain).weights
    counts = np.array([sum(r[0] == w for r in runs) for w in golden_chain.omega])
    assert stats.chisquare(counts, pi * len(runs)).pvalue > 0.001
    m = np.array([r[1] + r[2] for r in runs])
    # each count is geometric with success probability 1/phi
    assert abs(m.mean() - (5 ** 0.5 + 1)) < 0.05


def test_choose_t(golden_chain):
    assert choose_t(golden_chain, UniformStream(7), probe_blocks=2000) == 1


def test_perfect_draw_bookkeeping(chain3):
    f = f_inv_density(chain3)
    st_ = UniformStream(8)
    for _ in range(300):
        d = perfect_remainder_sample(f, chain3, 2, st_)
        assert d.m == (2 + 1) * (d.m1 + d.m2 - 1)
        assert d.k == max(d.coupling.n, 2) + d.m - 2
        assert d.digits[d.k:d.k + 2] == d.stationary_state
        a, ell = chain3.scheme.cell(d.digits)
        assert float(a) <= d.coupling.x <= float(a + ell)


def test_stream_continuation_keeps_law_of_X(golden_chain):
    f = f_inv_density(golden_chain)
    st_ = UniformStream(9)
    draws = [perfect_remainder_sample(f, golden_chain, 1, st_) for _ in range(8000)]
    x = np.array([d.coupling.x for d in draws])
    cut = 1 / PHI
    assert abs(np.mean(x < cut) - float(f.cell_mass((0,)))) < 0.02
    assert stats.kstest([d.coupling.u for d in draws], "uniform").pvalue > 0.001


def test_stream_continuation_biases_digit_after_window(golden_chain):
    # A single-uniform block coalesces only when state 0 also moves to 0,
    # so the digit right after the window is always 0 in stream mode.
    f = f_inv_density(golden_chain)
    st_ = UniformStream(10)
    after = [d.digits[d.k + 1] for d in (perfect_remainder_sample(f, golden_chain, 1, st_) for _ in range(500))]
    assert set(after) == {0}


def test_fresh_continuation_is_stationary_after_K(golden_chain):
    f = f_inv_density(golden_chain)
    st_ = UniformStream(11)
    draws = [perfect_remainder_sample(f, golden_chain, 1, st_, continuation="fresh") for _ in range(8000)]
    pi0 = invariant_pmf(golden_chain).weights[0]
    sc = golden_chain.scheme
    # read the digits of X itself past the stored window
    digs = np.array([digits_of(sc, Fraction(d.coupling.x), d.k + 3)[d.k:] for d in draws if d.k < 30])
    for off in range(3):
        assert abs(np.mean(digs[:, off] == 0) - pi0) < 0.02
