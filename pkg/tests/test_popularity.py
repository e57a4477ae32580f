import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topn_predictability.popularity import c_ratios, fit_zipf, rank_frequencies


def test_rank_frequencies_sorted_with_code_ties():
    prof = rank_frequencies(np.array([2, 0, 2, 1, 1, 3]))
    assert prof.freqs.tolist() == [2, 2, 1, 1]
    assert prof.items.tolist() == [1, 2, 0, 3]
    assert prof.total == 6


def test_exact_power_law_is_recovered():
    freqs = np.round(1e6 * np.arange(1, 2001, dtype=float) ** -0.6)
    assert fit_zipf(freqs) == pytest.approx(0.6, abs=1e-3)


def test_fit_only_uses_leading_ranks():
    head = 1e6 * np.arange(1, 101, dtype=float) ** -0.8
    tail = np.full(5000, head[-1])
    assert fit_zipf(np.concatenate([head, tail]), max_rank=100) == pytest.approx(0.8, abs=1e-9)


def test_flat_profile_gives_zero_exponent():
    assert fit_zipf(np.full(50, 7.0)) == pytest.approx(0.0, abs=1e-12)


def test_negative_exponent_is_reported_not_clamped(caplog):
    xi = fit_zipf(np.array([1.0, 2.0, 4.0, 8.0]))
    assert xi < 0
    assert "negative" in caplog.text


def test_fit_needs_three_ranks():
    with pytest.raises(ValueError):
        fit_zipf(np.array([5.0, 3.0]))


def test_c_ratios():
    c = c_ratios(np.array([10.0, 5.0, 2.0, 1.0]), 3)
    assert c.tolist() == [1.0, 0.5, 0.2]
    with pytest.raises(ValueError):
        c_ratios(np.array([10.0, 5.0]), 3)


def test_with_fit_attaches_results():
    items = np.repeat(np.arange(20), np.arange(20, 0, -1))
    prof = rank_frequencies(items).with_fit(r=5)
    assert len(prof.c) == 5 and prof.c[0] == 1.0
    assert prof.xi > 0 and not prof.xi_negative


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=500))
def test_ratios_are_non_increasing_and_in_unit_interval(items):
    prof = rank_frequencies(np.array(items))
    c = c_ratios(prof, len(prof.freqs))
    assert c[0] == 1.0
    assert np.all(np.diff(c) <= 0) and np.all(c > 0)
    assert prof.total == len(items)


def test_exponent_one_recovered():
    freqs = 1e7 * np.arange(1, 1001, dtype=float) ** -1.0
    assert fit_zipf(freqs) == pytest.approx(1.0, abs=1e-3)


def test_c10_of_exact_law():
    freqs = np.arange(1, 21, dtype=float) ** -0.6
    assert c_ratios(freqs, 10)[-1] == pytest.approx(0.251, abs=1e-3)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(1.0, 1e6), min_size=3, max_size=50),
    st.floats(1e-3, 1e3),
)
def test_scale_invariance(freqs, k):
    freqs = np.sort(np.asarray(freqs))[::-1]
    np.testing.assert_allclose(c_ratios(freqs * k, 3), c_ratios(freqs, 3), rtol=1e-12)
    assert fit_zipf(freqs * k) == pytest.approx(fit_zipf(freqs), abs=1e-9)
