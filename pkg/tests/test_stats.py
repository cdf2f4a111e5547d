import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rrglab.errors import SparseCells
from rrglab.oracle import enumerate_regular
from rrglab.samplers import SeededStream, batch_regular
from rrglab.stats import (chi2_sf, chi2_sf_reference, chi_square, chi_square_independence,
                          chi_square_law, chi_square_uniform, empirical_tv, empirical_tv_to_law, jackknife,
                          ks_uniform, poisson_fit, wilson_interval)
from rrglab.suite import run_calibration


@given(st.floats(0.01, 400), st.integers(1, 200))
def test_chi2_tail_matches_reference(x, dof):
    a, b = chi2_sf(x, dof), chi2_sf_reference(x, dof)
    assert abs(a - b) <= 1e-9 * max(1.0, b) or abs(a - b) < 1e-12


def test_chi_square_extremes():
    r = chi_square_uniform([10] * 10)
    assert r.statistic == 0 and r.p_value == pytest.approx(1.0)
    r = chi_square([100] + [0] * 9, [1] * 10, min_expected=1)
    assert r.p_value < 1e-6


def test_chi_square_sparse():
    with pytest.raises(SparseCells):
        chi_square_uniform([1, 2, 0])


def test_chi_square_law_outside_support():
    r = chi_square_law({"a": 50, "b": 50, "z": 1}, {"a": 0.5, "b": 0.5})
    assert r.p_value == 0.0


def test_poisson_fit_cases():
    gen = np.random.default_rng(4)
    ok = poisson_fit(Counter(gen.poisson(0.5, 10_000).tolist()), 0.5)
    assert ok.p_value > 1e-3
    bad = poisson_fit({0: 10_000}, 6.0)
    assert bad.p_value < 1e-6


def test_independence():
    r = chi_square_independence([[50, 50], [50, 50]])
    assert r.statistic == 0
    assert chi_square_independence([[100, 0], [0, 100]]).p_value < 1e-6


def test_wilson():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 10)[0] == pytest.approx(0.0, abs=1e-15)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_empirical_tv_cases():
    h = {"a": 3, "b": 7}
    assert empirical_tv(h, h).value == 0
    assert empirical_tv({"a": 5}, {"b": 5}).value == 1
    assert empirical_tv_to_law({"a": 1, "b": 1}, {"a": 0.5, "b": 0.5}).value == 0


@given(st.lists(st.integers(0, 50), min_size=2, max_size=8), st.lists(st.integers(0, 50), min_size=2, max_size=8))
def test_empirical_tv_in_unit_interval(a, b):
    if sum(a) == 0 or sum(b) == 0:
        return
    v = empirical_tv(dict(enumerate(a)), dict(enumerate(b))).value
    assert 0 <= v <= 1 + 1e-12


def test_empirical_tv_below_bias_for_same_law():
    # two 10^6-draw histograms of mu_3 on 8 vertices
    gen = SeededStream(21).generator()
    a = Counter(batch_regular(8, 3, 1_000_000, gen).tolist())
    b = Counter(batch_regular(8, 3, 1_000_000, gen).tolist())
    tv = empirical_tv(a, b)
    assert tv.support <= len(enumerate_regular(8, 3))
    assert tv.value < tv.bias_bound


def test_jackknife_mean_se():
    gen = np.random.default_rng(2)
    x = gen.normal(size=20_000)
    blocks = list(x.reshape(20, -1))
    val, se = jackknife(blocks, lambda bs: float(np.concatenate(bs).mean()))
    assert val == pytest.approx(x.mean())
    assert se == pytest.approx(1 / math.sqrt(20_000), rel=0.5)


def test_ks_uniform():
    gen = np.random.default_rng(3)
    assert ks_uniform(gen.random(5000)) < 0.03
    assert ks_uniform(gen.random(5000) ** 3) > 0.1


def test_calibration_suite():
    res = run_calibration(seed=5)
    assert res["ks_chi_square"] < 0.02
    assert res["poisson_pass_rate"] >= 0.99
    assert all(res["checks"].values())
