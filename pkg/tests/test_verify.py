import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from digitforge.coupling import PiecewiseDensity, gauss_density, uniform_density
from digitforge.errors import EmptySampleError, InvalidParameterError, SupportMismatchError
from digitforge.markov import f_inv_density
from digitforge.streams import UniformStream
from digitforge.subdivision import BaseQ
from digitforge.verify import (
    check_coupling_inequality,
    chi_square,
    empirical_tv_cells,
    ks_critical,
    ks_uniform,
    pushforward_density,
    reference_masses,
    serial_chi_square,
    tv_half_width,
)

GRID = np.linspace(0.005, 0.995, 100)


def gauss_pdf(x):
    return 1 / (math.log(2) * (1 + x))


def test_gauss_is_invariant_with_tail_correction():
    res = pushforward_density(gauss_density(), 1, GRID)
    assert res.corrected
    assert np.max(np.abs(res.value - gauss_pdf(GRID))) < 1e-6


def test_truncated_gauss_sum_misses_the_tail():
    res = pushforward_density(gauss_density(), 1, GRID, tail_correction=False)
    err = np.max(np.abs(res.value - gauss_pdf(GRID)))
    assert err > 1e-5
    assert err <= res.tail_bound


def test_uniform_base2_pushforward():
    res = pushforward_density(uniform_density(BaseQ(2)), 3, GRID)
    assert np.allclose(res.value, 1.0)


@pytest.mark.parametrize("n", [1, 3])
def test_f_inv_is_shift_invariant(golden_chain, n):
    f = f_inv_density(golden_chain)
    res = pushforward_density(f, n, GRID)
    assert np.max(np.abs(res.value - f.pdf_float(GRID))) < 1e-10


def test_pushforward_moves_non_invariant_density():
    f = PiecewiseDensity(BaseQ(2), 2, [2, 1, 0.5, 0.5])
    res = pushforward_density(f, 1, np.array([0.1, 0.9]))
    # T pulls cells 00 and 10 together: (2 + 0.5) / 2
    assert res.value[0] == pytest.approx(1.25)
    assert res.value[1] == pytest.approx(0.75)


@given(st.lists(st.floats(1e-6, 1 - 1e-6), min_size=1, max_size=200))
@settings(max_examples=60)
def test_ks_matches_scipy(xs):
    assert ks_uniform(xs) == pytest.approx(stats.kstest(xs, "uniform").statistic, abs=1e-12)


def test_ks_errors_and_critical():
    with pytest.raises(InvalidParameterError):
        ks_uniform([0.0, 0.5])
    with pytest.raises(EmptySampleError):
        ks_uniform([])
    assert ks_critical(10_000) == pytest.approx(0.0163)


def test_chi_square_matches_scipy():
    p = np.array([0.2, 0.3, 0.5])
    obs = np.array([190, 320, 490])
    ours = chi_square(p, obs)
    ref = stats.chisquare(obs, p * obs.sum())
    assert ours.statistic == pytest.approx(ref.statistic)
    assert ours.p_value == pytest.approx(ref.pvalue)
    assert ours.dof == 2


def test_chi_square_pools_small_cells():
    p = np.array([0.97, 0.01, 0.01, 0.01])
    # expected counts 291, 3, 3, 3 pool into two cells
    res = chi_square(p, np.array([290, 4, 3, 3]))
    assert res.dof == 1


def test_chi_square_support_mismatch():
    with pytest.raises(SupportMismatchError):
        chi_square({0: 1.0}, {0: 5, 1: 1})


def test_serial_chi_square():
    g = np.random.default_rng(1)
    iid = g.integers(0, 3, 30_000)
    pmf = {k: 1 / 3 for k in range(3)}
    assert serial_chi_square(iid, pmf).p_value > 0.001
    cyclic = np.tile([0, 1, 2], 10_000)
    assert serial_chi_square(cyclic, pmf).p_value < 1e-6


def test_reference_masses_sum_to_one(golden_chain):
    m = reference_masses(f_inv_density(golden_chain), 4)
    assert sum(m.values()) == pytest.approx(1.0)
    assert reference_masses(BaseQ(3), 2)[(0, 1)] == pytest.approx(1 / 9)


def test_empirical_tv_cells():
    g = np.random.default_rng(2)
    x = g.random(50_000)
    assert empirical_tv_cells(x, BaseQ(2), depth=3) < 0.01
    assert empirical_tv_cells(x / 2, BaseQ(2), depth=1) == pytest.approx(0.5)


def test_tv_half_width_formula():
    hw = tv_half_width([0.25, 0.75], 100, 0.5)
    expected = 0.5 * 2 * math.sqrt(0.25 * 0.75 / 100) + 1.96 * math.sqrt(0.25 / 100)
    assert hw == pytest.approx(expected)


def test_coupling_inequalities_hold():
    f = PiecewiseDensity(BaseQ(2), 2, [2, 1, 0.5, 0.5])
    for r in check_coupling_inequality(f, "coupled", [0, 1, 2], 20_000, UniformStream(3), depth=3):
        assert r.passed
    # beyond the density's depth the shift is exactly uniform
    assert r.bound == 0


def test_perfect_coupling_inequality(golden_chain):
    l0 = float(golden_chain.scheme.length((0,)))
    f = PiecewiseDensity(golden_chain.scheme, 1, {(0,): 0.5, (1,): (1 - 0.5 * l0) / (1 - l0)})
    reps = check_coupling_inequality(f, "perfect", [1, 4], 3000, UniformStream(4), depth=3, chain=golden_chain, t=1)
    assert all(r.passed for r in reps)
