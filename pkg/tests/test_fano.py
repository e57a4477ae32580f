import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topn_predictability.fano import (
    BoundResult,
    FanoProblem,
    FeasibilityError,
    feasible_interval,
    sf_derivative,
    sf_eval,
    sf_solve,
    solve_classic,
    solve_naive_topn,
    solve_ranks,
    topn_from_pi1,
    with_correction,
    zipf_ratios,
)

# reference roots computed once with mpmath (40 digits, Anderson root finder)
ORACLE_ROOTS = [
    (5.0, 10000, (1.0,), 0.690852873872576),
    (2.0, 100, (1.0,), 0.80552311471036557),
    (5.0, 10000, tuple(zipf_ratios(0.6, 10)), 0.19618296675207096),
    (3.5, 1000, (1.0, 0.7, 0.6, 0.5), 0.31234501111874786),
]


def shannon_bits(probs):
    probs = np.asarray(probs, dtype=float)
    probs = probs[probs > 0]
    return float(-np.sum(probs * np.log2(probs)))


def explicit_distribution(M, c, pi1):
    heads = [ci * pi1 for ci in c]
    rest = 1.0 - sum(heads)
    return heads + [rest / (M - len(c))] * (M - len(c))


@pytest.mark.parametrize("S, M, c, expected", ORACLE_ROOTS)
def test_solve_matches_reference_roots(S, M, c, expected):
    res = sf_solve(FanoProblem(S, M, c))
    assert res.pi1 == pytest.approx(expected, abs=1e-9)
    assert not res.clamped
    assert res.residual < 1e-8


def test_classic_is_rank_one():
    assert solve_classic(5.0, 10000) == sf_solve(FanoProblem(5.0, 10000, (1.0,))).pi1


def test_classic_bound_for_uniform_entropy():
    # entropy of the uniform distribution gives the uniform accuracy
    res = sf_solve(FanoProblem(math.log2(64), 64, (1.0,)))
    assert res.pi1 == pytest.approx(1 / 64, abs=1e-9)
    assert res.clamped


def test_zero_entropy_clamps_to_certainty():
    res = sf_solve(FanoProblem(0.0, 50, (1.0,)))
    assert res.pi1 == 1.0 and res.clamped
    assert res.topn == (1.0,)


def test_entropy_above_maximum_clamps_low():
    p = FanoProblem(20.0, 1000, tuple(zipf_ratios(0.6, 5)))
    res = sf_solve(p)
    assert res.clamped
    assert res.pi1 == pytest.approx(feasible_interval(p)[0])


def test_low_entropy_with_heads_clamps_high():
    c = tuple(zipf_ratios(0.6, 10))
    p = FanoProblem(0.1, 1000, c)
    res = sf_solve(p)
    assert res.clamped
    assert res.pi1 == pytest.approx(1 / sum(c))
    assert res.topn[-1] == pytest.approx(1.0)


def test_feasible_interval_endpoints():
    c = (1.0, 0.5, 0.25)
    lo, hi = feasible_interval(FanoProblem(1.0, 100, c))
    assert hi == pytest.approx(1 / 1.75)
    # at lo the smallest head equals the tail level
    tail = (1 - 1.75 * lo) / 97
    assert 0.25 * lo == pytest.approx(tail)


def test_eval_outside_domain_raises():
    p = FanoProblem(1.0, 100, (1.0, 0.5))
    lo, hi = feasible_interval(p)
    with pytest.raises(FeasibilityError) as err:
        sf_eval(p, hi * 1.01)
    assert err.value.constraint == "tail_mass"
    with pytest.raises(FeasibilityError) as err:
        sf_eval(p, lo * 0.9)
    assert err.value.constraint == "tail_order"


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(S=-1.0, M=10, c=(1.0,)),
        dict(S=1.0, M=1, c=(1.0,)),
        dict(S=1.0, M=3, c=(1.0, 0.5, 0.2)),
        dict(S=1.0, M=10, c=(0.5,)),
        dict(S=1.0, M=10, c=(1.0, 1.2)),
        dict(S=1.0, M=10, c=()),
    ],
)
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        FanoProblem(**kwargs)


def test_zipf_ratios():
    np.testing.assert_allclose(zipf_ratios(1.0, 4), [1, 1 / 2, 1 / 3, 1 / 4])
    assert zipf_ratios(0.0, 3).tolist() == [1.0, 1.0, 1.0]


def test_topn_scaling_and_cap():
    assert topn_from_pi1(0.2, (1.0, 0.7, 0.6, 0.5)) == pytest.approx((0.2, 0.34, 0.46, 0.56))
    assert topn_from_pi1(0.6, (1.0, 1.0)) == (0.6, 1.0)


def test_naive_topn_barely_moves():
    a = solve_naive_topn(5.0, 10000, 1)
    b = solve_naive_topn(5.0, 10000, 10)
    assert a == solve_classic(5.0, 10000)
    # reference value from the mpmath root with M - 9 candidates
    assert b == pytest.approx(0.69082507252848868, abs=1e-9)
    assert abs(a - b) < 1e-3


def test_naive_topn_validation():
    with pytest.raises(ValueError):
        solve_naive_topn(1.0, 10, 10)
    with pytest.raises(ValueError):
        solve_naive_topn(1.0, 10, -1)


def test_solve_ranks_skips_tailless_ranks():
    out = solve_ranks(1.0, 4, zipf_ratios(0.6, 5))
    assert sorted(out) == [1, 2, 3]


def test_with_correction_keeps_original():
    res = sf_solve(FanoProblem(5.0, 10000, tuple(zipf_ratios(0.6, 10))))
    corr = with_correction(res, 1.0)
    assert corr.pi1 == pytest.approx(res.pi1 / 2)
    assert corr.original is res
    assert all(np.diff(corr.topn) >= 0) and max(corr.topn) <= 1
    assert with_correction(res, -0.9).pi1 == 1.0
    with pytest.raises(ValueError):
        with_correction(res, -1.0)


# properties

xis = st.floats(0.4, 1.0)
ranks = st.integers(1, 10)
sizes = st.integers(12, 100_000)
fractions = st.floats(0.001, 0.999)


@settings(max_examples=300, deadline=None)
@given(xi=xis, r=ranks, M=sizes, u=fractions)
def test_round_trip_recovers_pi1(xi, r, M, u):
    c = tuple(zipf_ratios(xi, r))
    lo, hi = feasible_interval(FanoProblem(1.0, M, c))
    x = lo + u * (hi - lo)
    S = sf_eval(FanoProblem(1.0, M, c), x)
    assert sf_solve(FanoProblem(S, M, c)).pi1 == pytest.approx(x, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(xi=xis, r=ranks, M=st.integers(12, 50), u=st.floats(0.0, 1.0))
def test_eval_is_shannon_entropy_of_surrogate(xi, r, M, u):
    c = tuple(zipf_ratios(xi, r))
    p = FanoProblem(1.0, M, c)
    lo, hi = feasible_interval(p)
    x = lo + u * (hi - lo)
    dist = explicit_distribution(M, c, x)
    assert sf_eval(p, x) == pytest.approx(shannon_bits(dist), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(xi=xis, r=ranks, M=sizes)
def test_eval_decreasing_and_concave(xi, r, M):
    p = FanoProblem(1.0, M, tuple(zipf_ratios(xi, r)))
    lo, hi = feasible_interval(p)
    xs = np.linspace(lo, hi, 201)
    ys = np.array([sf_eval(p, x) for x in xs])
    assert np.all(np.diff(ys) < 0)
    h = xs[1] - xs[0]
    second = (ys[2:] - 2 * ys[1:-1] + ys[:-2]) / h**2
    assert np.all(second <= 1e-9 * np.maximum(1.0, np.abs(ys[1:-1]).max() / h**2))


@settings(max_examples=200, deadline=None)
@given(xi=xis, r=ranks, M=sizes, u=st.floats(0.05, 0.95))
def test_derivative_matches_central_difference(xi, r, M, u):
    p = FanoProblem(1.0, M, tuple(zipf_ratios(xi, r)))
    lo, hi = feasible_interval(p)
    x = lo + u * (hi - lo)
    h = 1e-6 * (hi - lo)
    numeric = (sf_eval(p, x + h) - sf_eval(p, x - h)) / (2 * h)
    assert sf_derivative(p, x) == pytest.approx(numeric, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(xi=xis, M=sizes, S=st.floats(0.0, 17.0))
def test_higher_rank_never_raises_bound(xi, M, S):
    c = zipf_ratios(xi, 10)
    out = solve_ranks(S, M, c)
    for r in sorted(out)[1:]:
        lo = feasible_interval(FanoProblem(S, M, tuple(c[:r])))[0]
        if out[r].clamped and out[r].pi1 == lo:
            # S above this surrogate's maximum entropy: no ordering is implied
            continue
        assert out[r].pi1 <= out[r - 1].pi1 + 1e-12


def test_clamped_low_endpoints_rise_with_rank():
    out = solve_ranks(4.0, 12, zipf_ratios(1.0, 10))
    assert out[10].clamped and out[10].pi1 > out[9].pi1


@settings(max_examples=200, deadline=None)
@given(xi=xis, r=ranks, M=sizes, S=st.floats(0.0, 20.0))
def test_result_invariants(xi, r, M, S):
    c = tuple(zipf_ratios(xi, r))
    res = sf_solve(FanoProblem(S, M, c))
    assert isinstance(res, BoundResult)
    lo, hi = feasible_interval(FanoProblem(S, M, c))
    assert lo * (1 - 1e-12) <= res.pi1 <= hi * (1 + 1e-12)
    assert 0 < res.pi1 <= 1
    assert all(np.diff(res.topn) >= 0) and res.topn[-1] <= 1.0
    if not res.clamped:
        assert res.residual < 1e-6
