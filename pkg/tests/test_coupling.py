import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from digitforge.coupling import (
    PiecewiseDensity,
    cdf_N,
    cdf_N_given_X,
    cell_infimum,
    extend_digits,
    gauss_density,
    parse_density,
    pmf_S,
    residual_law,
    sample_coupled,
    sample_coupled_batch,
    uniform_density,
)
from digitforge.errors import (
    ConditioningOnNullError,
    DepthCapError,
    InvalidParameterError,
    UndefinedConditionalError,
)
from digitforge.streams import UniformStream
from digitforge.subdivision import BaseQ, ContinuedFraction, Luroth, words

F = Fraction


@pytest.fixture
def two_step():
    return PiecewiseDensity(BaseQ(2), 1, [F(3, 2), F(1, 2)])


def test_infima_two_step(two_step):
    assert cell_infimum(two_step, ()).i == F(1, 2)
    ci = cell_infimum(two_step, (0,))
    assert (ci.i, ci.c) == (F(3, 2), F(1))
    assert pmf_S(two_step, ()) == F(1, 2)
    assert pmf_S(two_step, (0,)) == F(1, 2)
    assert pmf_S(two_step, (1,)) == 0


def test_cdf_N_two_step(two_step):
    assert cdf_N(two_step, 0).value == F(1, 2)
    assert cdf_N(two_step, 1).value == 1


def test_empirical_N_two_step(two_step):
    b = sample_coupled_batch(two_step, UniformStream(1), 20_000)
    assert abs(np.mean(b.n == 0) - 0.5) < 0.015
    assert b.n.max() == 1
    # N = 1 only happens in the cell where f is large
    assert np.all(b.x[b.n == 1] < 0.5)


def test_uniform_density_gives_N_zero():
    b = sample_coupled_batch(uniform_density(BaseQ(3)), UniformStream(2), 5000)
    assert np.all(b.n == 0)
    assert np.allclose(b.u, b.x)


def test_gauss_root_infimum():
    g = gauss_density()
    assert abs(float(cell_infimum(g).i) - 1 / (2 * math.log(2))) < 1e-15
    # Gauss measure of (1/2, 1) is 1 - log2(3/2)
    assert abs(float(g.cell_mass((1,))) - (1 - math.log2(1.5))) < 1e-14


def test_gauss_cdf_N_increasing_with_small_tail():
    g = gauss_density()
    vals = [cdf_N(g, n, max_digits=200) for n in range(3)]
    assert float(vals[0].value) == pytest.approx(1 / (2 * math.log(2)))
    assert vals[0].value < vals[1].value < vals[2].value <= 1
    assert vals[1].tail < 0.02


def test_conditional_N_undefined_where_f_vanishes():
    f = PiecewiseDensity(BaseQ(2), 1, [F(2), F(0)])
    with pytest.raises(UndefinedConditionalError):
        cdf_N_given_X(f, F(3, 4), 1)
    assert cdf_N_given_X(f, F(1, 4), 0) == 0
    assert cdf_N_given_X(f, F(1, 4), 1) == 1


def test_residual_law_is_length_ratio():
    law = residual_law(Luroth(), (2,), 1, max_digits=30)
    assert law.probs[(2,)] == F(1, 2)
    assert law.probs[(3,)] == F(1, 6)
    assert sum(law.probs.values()) + law.tail == 1


def test_residual_law_null_cell(golden):
    with pytest.raises(ConditioningOnNullError):
        residual_law(golden, (1, 1), 1)


def test_normalization_enforced():
    with pytest.raises(InvalidParameterError):
        PiecewiseDensity(BaseQ(2), 1, [F(1), F(2)])
    with pytest.raises(InvalidParameterError):
        parse_density("piecewise:1:1,2", BaseQ(2))


def test_parse_density():
    f = parse_density("piecewise:1:3/2,1/2", BaseQ(2))
    assert f.value((0,)) == F(3, 2)
    assert parse_density("gauss").scheme == ContinuedFraction()


def test_batch_matches_scalar_draws(two_step):
    b = sample_coupled_batch(two_step, UniformStream(5), 50)
    st_ = UniformStream(5)
    for d_batch in b.draws():
        d = sample_coupled(two_step, st_)
        assert d.x == d_batch.x and d.n == d_batch.n and d.s == d_batch.s


def test_draw_is_consistent(two_step):
    for d in sample_coupled_batch(two_step, UniformStream(6), 200).draws():
        a, ell = two_step.scheme.cell(d.s)
        assert a <= d.x <= a + ell
        assert d.u == pytest.approx((d.x - float(a)) / float(ell), abs=1e-12)
        assert d.e == pytest.approx(d.u * float(ell), abs=1e-15)


def test_gauss_draws_and_depth_cap():
    g = gauss_density()
    st_ = UniformStream(7)
    ns = [sample_coupled(g, st_).n for _ in range(300)]
    assert 0.6 < np.mean(np.array(ns) == 0) < 0.85
    with pytest.raises(DepthCapError):
        for _ in range(50):
            sample_coupled(g, st_, depth_cap=0)


def test_U_uniform_and_independent_of_S():
    f = PiecewiseDensity(BaseQ(3), 1, [F(1, 2), F(2), F(1, 2)])
    b = sample_coupled_batch(f, UniformStream(8), 30_000)
    assert stats.kstest(b.u, "uniform").pvalue > 0.001
    s = np.array(["".join(map(str, b.s(j))) for j in range(len(b))])
    for key in set(s):
        mask = s == key
        if mask.sum() > 500:
            assert stats.kstest(b.u[mask], "uniform").pvalue > 0.001


def test_extend_digits_follows_length_ratios(golden):
    st_ = UniformStream(9)
    after_one = [extend_digits(golden, (1,), 2, st_)[1] for _ in range(200)]
    assert set(after_one) == {0}
    after_zero = [extend_digits(golden, (0,), 2, st_)[1] for _ in range(4000)]
    assert abs(np.mean(np.array(after_zero) == 0) - 0.6180339887) < 0.03


# exact identities over random step densities on a ternary grid
vals3 = st.lists(st.integers(0, 9), min_size=9, max_size=9).filter(lambda v: sum(v) > 0)


@given(vals3)
@settings(max_examples=40, deadline=None)
def test_pmf_S_sums_to_one_and_matches_cdf_N(v):
    tot = sum(v)
    f = PiecewiseDensity(BaseQ(3), 2, [F(9 * k, tot) for k in v])
    total = 0
    for n in range(3):
        level = sum(pmf_S(f, w) for w, _ in words(f.scheme, n))
        total += level
        assert total == cdf_N(f, n).value
    assert total == 1


@given(vals3)
@settings(max_examples=40, deadline=None)
def test_infimum_is_monotone_along_prefixes(v):
    tot = sum(v)
    f = PiecewiseDensity(BaseQ(3), 2, [F(9 * k, tot) for k in v])
    for w in product(range(3), repeat=2):
        assert f.infimum(()) <= f.infimum(w[:1]) <= f.infimum(w) == f.value(w)
