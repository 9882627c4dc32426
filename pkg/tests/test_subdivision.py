from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from digitforge.errors import (
    EmptyCellError,
    EndpointError,
    InvalidParameterError,
    UnknownDigitError,
)
from digitforge.subdivision import (
    GLS,
    BaseQ,
    ContinuedFraction,
    Luroth,
    PseudoGoldenBeta,
    approximation_errors,
    children,
    digits_of,
    float_digits,
    parse_scheme,
    pmf_first_level,
    remainder,
    scheme_from_config,
    words,
)
from digitforge.surd import parse_number

unit = st.fractions(min_value=0, max_value=1, max_denominator=10**6).filter(lambda x: 0 < x < 1)


def cf_value(digits, tail):
    # backward evaluation of [0; a1, ..., an + tail]
    v = Fraction(0)
    for j, a in enumerate(reversed(digits)):
        v = 1 / (a + (tail if j == 0 else 0) + v)
    return v


def luroth_left(digits):
    # Lüroth series with a zero tail
    x, scale = Fraction(0), Fraction(1)
    for a in digits:
        x += scale / a
        scale /= a * (a - 1)
    return x


def golden_cylinder(m, word, dps=60):
    # preimages of [0, 1) intersected with the branch domains
    ctx = mpmath.MPContext()
    ctx.dps = dps
    beta = ctx.findroot(lambda z: z ** m - sum(z ** j for j in range(m)), 1.9)
    lo, hi = ctx.mpf(0), ctx.mpf(1)
    for k in reversed(word):
        lo, hi = (lo + k) / beta, (hi + k) / beta
        lo, hi = max(lo, ctx.mpf(k) / beta), min(hi, min(ctx.mpf(k + 1) / beta, ctx.mpf(1)))
        if hi <= lo:
            return 0.0
    return float(hi - lo)


# -- examples -------------------------------------------------------------------------


def test_base10_digits_of_eighth():
    assert digits_of(BaseQ(10), Fraction(1, 8), 3) == (1, 2, 5)
    a, ell = BaseQ(10).cell((1, 2, 5))
    assert (a, ell) == (Fraction(1, 8), Fraction(1, 1000))


def test_base10_eighth_is_endpoint_in_strict_mode():
    with pytest.raises(EndpointError):
        digits_of(BaseQ(10), Fraction(1, 8), 3, strict=True)


def test_approximation_errors_base10():
    e, u = approximation_errors(BaseQ(10), Fraction(1251, 10000), 3)
    assert e == Fraction(1, 10000) and u == Fraction(1, 10)


def test_approximation_errors_rejects_endpoint():
    with pytest.raises(EndpointError):
        approximation_errors(BaseQ(10), Fraction(1, 8), 3)


def test_cf_cell_example():
    a, ell = ContinuedFraction().cell((2, 2))
    assert (a, ell) == (Fraction(2, 5), Fraction(1, 35))


def test_cf_sqrt2_minus_1():
    x = parse_number("sqrt2-1")
    assert digits_of(ContinuedFraction(), x, 6) == (2,) * 6
    assert remainder(ContinuedFraction(), x, 4) == x


def test_luroth_seven_tenths():
    assert digits_of(Luroth(), Fraction(7, 10), 2) == (2, 3)


def test_golden_forbidden_word_has_zero_length(golden):
    assert golden.length((1, 1)) == 0
    with pytest.raises(EmptyCellError):
        children(golden, (1, 1))


def test_unknown_digit():
    with pytest.raises(UnknownDigitError):
        BaseQ(3).cell((3,))
    with pytest.raises(UnknownDigitError):
        Luroth().cell((1,))


def test_countable_alphabet_needs_cap():
    with pytest.raises(InvalidParameterError):
        children(ContinuedFraction())
    assert len(children(ContinuedFraction(), max_digits=5)) == 5


def test_bad_gls():
    with pytest.raises(InvalidParameterError):
        GLS([Fraction(1, 2), Fraction(1, 3)])


def test_luroth_first_level_pmf():
    pmf = pmf_first_level(Luroth(), max_digits=50)
    assert pmf.probs[2] == Fraction(1, 2)
    assert sum(pmf.probs.values()) + pmf.tail == 1


# -- exact oracles --------------------------------------------------------------------


def test_cf_lengths_match_backward_evaluation():
    cf = ContinuedFraction()
    for n in range(1, 5):
        for w in product(range(1, 5), repeat=n):
            a, ell = cf.cell(w)
            ends = sorted([cf_value(w, 0), cf_value(w, 1)])
            assert a == ends[0]
            assert ell == ends[1] - ends[0]
            _, q, _, qp = ContinuedFraction.convergents(w)
            assert 1 / ell == q * (q + qp)


def test_luroth_left_endpoint_matches_series():
    lu = Luroth()
    for w in product(range(2, 6), repeat=3):
        a, ell = lu.cell(w)
        assert a == luroth_left(w)
        expected = Fraction(1)
        for k in w:
            expected /= k * (k - 1)
        assert ell == expected


@pytest.mark.parametrize("m", [2, 3])
def test_golden_lengths_match_brute_force(m):
    sc = PseudoGoldenBeta(m)
    for n in range(1, 9):
        for w in product((0, 1), repeat=n):
            assert abs(float(sc.length(w)) - golden_cylinder(m, w)) < 1e-12


def test_golden_beta_value(golden):
    assert abs(float(golden.beta) - (1 + 5 ** 0.5) / 2) < 1e-15


# -- properties -----------------------------------------------------------------------

schemes = st.sampled_from([
    BaseQ(2), BaseQ(3), BaseQ(10), Luroth(), ContinuedFraction(),
    GLS([Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)], [1, -1, 1]),
])


@given(schemes, unit, st.integers(1, 8))
def test_point_lies_in_its_nested_cells(sc, x, n):
    try:
        d = digits_of(sc, x, n)
    except EndpointError:
        assume(False)
    prev = sc.root
    for i in range(1, n + 1):
        c = sc.cell(d[:i])
        assert prev.left <= c.left and c.right <= prev.right
        assert c.left <= x <= c.right
        prev = c


@given(schemes, st.integers(0, 3), st.data())
@settings(max_examples=40)
def test_children_partition_parent(sc, n, data):
    prefix = ()
    for _ in range(n):
        kids = children(sc, prefix, max_digits=6)
        prefix = prefix + (data.draw(st.sampled_from([k for k, _ in kids])),)
    parent = sc.cell(prefix)
    if sc.countable:
        # first 400 children, the rest is a tail of mass < parent / 400
        kids = children(sc, prefix, max_digits=400)
        total = sum(c.length for _, c in kids)
        assert total <= parent.length
        assert parent.length - total <= parent.length / 100
    else:
        assert sum(c.length for _, c in children(sc, prefix)) == parent.length


@given(st.integers(2, 4), st.floats(0.001, 0.999))
@settings(max_examples=30, deadline=None)
def test_golden_runs_of_ones_bounded(m, xf):
    sc = PseudoGoldenBeta(m)
    d = digits_of(sc, Fraction(xf), 30)
    assert "1" * m not in "".join(map(str, d))


@given(st.integers(2, 3), st.integers(1, 10))
@settings(max_examples=15, deadline=None)
def test_golden_level_lengths_sum_to_one(m, n):
    sc = PseudoGoldenBeta(m)
    assert abs(sum(float(c.length) for _, c in words(sc, n)) - 1) < 1e-12


@given(schemes, st.lists(st.floats(0.01, 0.99), min_size=1, max_size=20))
def test_float_digits_agree_with_exact(sc, xs):
    arr = float_digits(sc, np.array(xs), 3)
    for row, x in zip(arr, xs):
        try:
            exact = digits_of(sc, Fraction(x), 3)
        except EndpointError:
            continue
        # floats can disagree only right next to a cell endpoint
        if tuple(int(v) for v in row) != exact:
            c = sc.cell(exact[: next(i for i in range(3) if row[i] != exact[i]) + 1])
            assert min(abs(x - float(c.left)), abs(x - float(c.right))) < 1e-9


@pytest.mark.parametrize("text", ["base_q:10", "pseudo_golden:3", "luroth", "cf", "gls:1/3,2/3:+,-"])
def test_parse_scheme_roundtrip(text):
    sc = parse_scheme(text)
    assert scheme_from_config(sc.to_config()) == sc
