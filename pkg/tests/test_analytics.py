import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

import oracles
from urq import (
    DomainError,
    ParameterError,
    SimilarSignal,
    Sparse,
    TheoremParams,
    UnionOfSubspaces,
    UnitBall,
    VacuousBoundError,
    ball_pair_failure_bound,
    consistency_bounds,
    consistency_prob_series,
    corollary_distance,
    covering_log,
    norm_tail,
    plan_rate,
    rate_overhead,
    required_rate,
    theorem_failure_bound,
    triangle_consistency,
    triangle_consistency_multibit,
)

# -- triangle laws ---------------------------------------------------------


@pytest.mark.parametrize("l,expected", [(0, 1), (1, 0), (1.5, 0.5), (2, 1), (0.25, 0.75), (3.75, 0.75)])
def test_triangle_examples(l, expected):
    assert triangle_consistency(l, 1.0) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("l,bits,expected", [(0, 3, 1), (4, 3, 0), (1.5, 1, 0.5), (7.5, 3, 0.5),
                                             (8, 3, 1), (1, 3, 0), (7, 3, 0), (3, 2, 0), (4, 2, 1), (2, 2, 0)])
def test_triangle_multibit_examples(l, bits, expected):
    assert triangle_consistency_multibit(l, 1.0, bits) == pytest.approx(expected, abs=1e-15)


@given(st.floats(0, 100), st.floats(0.01, 10), st.integers(1, 5))
def test_triangle_matches_piecewise_oracle(l, delta, bits):
    assert triangle_consistency_multibit(l, delta, bits) == pytest.approx(oracles.triangle(l, delta, bits), abs=1e-9)


@given(st.floats(0, 100), st.floats(0.01, 10))
def test_multibit_reduces_to_binary(l, delta):
    assert triangle_consistency_multibit(l, delta, 1) == triangle_consistency(l, delta)


def test_triangle_period_mean_is_half():
    val, _ = integrate.quad(lambda l: triangle_consistency(l, 1.0), 0, 2, points=[1.0])
    assert val / 2 == pytest.approx(0.5, abs=1e-14)


def test_triangle_rejects_negative():
    with pytest.raises(DomainError):
        triangle_consistency(-0.1, 1.0)
    with pytest.raises(DomainError):
        triangle_consistency(0.1, 0.0)


# -- consistency series ----------------------------------------------------


def test_series_at_zero_is_one():
    assert consistency_prob_series(0, 1, 1) == 1.0


def test_series_far_is_half():
    assert consistency_prob_series(10, 1, 1) == pytest.approx(0.5, abs=1e-12)


def test_series_rejects_negative():
    with pytest.raises(DomainError):
        consistency_prob_series(-1e-3, 1, 1)


@pytest.mark.parametrize("d", np.linspace(0.1, 10, 100))
def test_series_equals_quadrature(d):
    assert abs(consistency_prob_series(d, 1.0, 1.0) - oracles.quad_consistency(d, 1.0, 1.0)) <= 1e-8


@pytest.mark.parametrize("d", [1e-300, 1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.05])
def test_series_small_d_equals_quadrature(d):
    assert abs(consistency_prob_series(d, 1.0, 1.0) - oracles.quad_consistency(d, 1.0, 1.0)) <= 1e-12


@pytest.mark.parametrize("d", [2e-3, 0.01, 0.05, 0.2, 0.3, 0.5, 2.0])
def test_series_equals_high_precision_sum(d):
    assert consistency_prob_series(d, 1.0, 1.0) == pytest.approx(float(oracles.mp_series(d, 1.0, 1.0)), abs=1e-14)


@pytest.mark.parametrize("bits", [2, 3, 4])
@pytest.mark.parametrize("d", [0.05, 0.4, 1.5, 4.0, 9.0])
def test_multibit_series_equals_quadrature(d, bits):
    assert abs(consistency_prob_series(d, 1.0, 1.0, bits=bits) - oracles.quad_consistency(d, 1.0, 1.0, bits)) <= 1e-8


def test_multibit_limit_is_one_over_levels():
    assert consistency_prob_series(200.0, 1.0, 1.0, bits=3) == pytest.approx(1 / 8, abs=1e-12)


def test_series_limits():
    assert consistency_prob_series(1e-12, 1, 1) == pytest.approx(1.0, abs=1e-11)
    assert consistency_prob_series(1e3, 1, 1) == 0.5


def test_series_monotone_in_d():
    vals = [consistency_prob_series(d, 1, 1) for d in np.linspace(0, 6, 400)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


# -- bounds ----------------------------------------------------------------


def test_bounds_at_zero():
    b = consistency_bounds(0, 1, 1)
    assert (b.exact_series, b.upper, b.lower_linear) == (1, 1, 1)
    assert b.lower_first_term == pytest.approx(0.5 + 4 / math.pi**2, abs=1e-15)


def test_lower_linear_example():
    b = consistency_bounds(0.5, 1, 1)
    assert b.lower_linear == pytest.approx(1 - math.sqrt(2 / math.pi) * 0.5, abs=1e-15)
    assert b.lower_linear == pytest.approx(0.6011, abs=5e-5)


@given(st.floats(0, 20), st.floats(0.05, 5), st.floats(0.05, 5))
def test_bound_sandwich(d, sigma, delta):
    b = consistency_bounds(d, sigma, delta)
    tol = 1e-12
    assert b.lower_first_term <= b.exact_series + tol
    assert b.exact_series <= b.upper + tol
    assert b.lower_linear <= b.exact_series + tol
    assert 0.5 - tol <= b.lower_first_term and b.upper <= 1 + tol


def test_bound_sandwich_grid():
    for d in np.linspace(0, 5, 50):
        b = consistency_bounds(d, 1, 1)
        assert b.lower_first_term <= b.exact_series + 1e-12 <= b.upper + 2e-12


def test_lower_linear_leaves_unit_interval_for_large_d():
    # the linear bound is valid but not confined to [1/2, 1]
    assert consistency_bounds(2.0, 1, 1).lower_linear < 0.5


# -- norm tail and the ball bound -----------------------------------------


@pytest.mark.parametrize("c_p", [0.5, 1.0, 2.0, 3.0])
def test_norm_tail_chi2_closed_form(c_p):
    assert norm_tail(2, 1.0, c_p) == pytest.approx(math.exp(-c_p**2 / 2), rel=1e-12)


def test_norm_tail_scalar_gaussian():
    assert norm_tail(1, 1.0, 1.96) == pytest.approx(math.erfc(1.96 / math.sqrt(2)), rel=1e-12)
    assert norm_tail(1, 1.0, 1.96) == pytest.approx(0.05, abs=1e-3)


@pytest.mark.parametrize("K", [1, 2, 3, 8, 10, 32])
@pytest.mark.parametrize("ratio", [0.5, 1, 2, 4])
def test_norm_tail_matches_mpmath(K, ratio):
    assert norm_tail(K, 0.7, 0.7 * ratio) == pytest.approx(oracles.chi_tail(K, 0.7, 0.7 * ratio), rel=1e-12)


@pytest.mark.parametrize("args", [(0, 1, 1), (2, 0, 1), (2, 1, 0), (2, 1, -1)])
def test_norm_tail_domain(args):
    with pytest.raises(DomainError):
        norm_tail(*args)


def test_ball_bound_zero_radius():
    d, sigma, delta, K = 0.7, 1.0, 1.0, 4
    expected = consistency_prob_series(d, sigma, delta) + norm_tail(K, sigma, 2.0)
    assert ball_pair_failure_bound(d, 0.0, 2.0, sigma, delta, K) == pytest.approx(expected, abs=1e-15)


def test_ball_bound_clamped_at_zero_distance():
    assert ball_pair_failure_bound(0.0, 0.01, 2.0, 1.0, 1.0, 3) == 1.0


def test_ball_bound_term_sum():
    s = 1 / math.sqrt(8)
    P = oracles.mp_series(1.0, s, s)
    tail = oracles.chi_tail(8, s, 2.0)
    expected = float(P) + 2 * 2.0 * 0.01 / s + tail
    assert ball_pair_failure_bound(1.0, 0.01, 2.0, s, s, 8) == pytest.approx(expected, abs=1e-14)


def test_ball_bound_precondition():
    with pytest.raises(ParameterError):
        ball_pair_failure_bound(1.0, 0.25, 2.0, 1.0, 1.0, 2)


# -- theorem parameters ----------------------------------------------------


def test_concrete_instance():
    p = TheoremParams.concrete(9)
    assert p.c_o == 60.0
    assert p.c_r == 0.75
    assert p.r1 == pytest.approx(0.2, abs=1e-16) and p.r2 == 1.0
    assert all(t >= 0 for t in p.c_r_terms)
    assert p.c_r_terms_sum <= 0.75
    pair, width, tail = p.c_r_terms
    assert pair == pytest.approx(0.5 + 0.5 * math.exp(-math.pi**2 / 2), abs=1e-15)
    assert tail == pytest.approx(oracles.chi_tail(9, 1 / 3, 2.0), rel=1e-12)


def test_declared_decay_base_must_cover_terms():
    with pytest.raises(ParameterError):
        TheoremParams(9, 2.0, 0.2, 1.0, declared_c_r=0.65)


def test_computed_decay_base_without_declaration():
    p = TheoremParams(9, 2.0, 0.2, 1.0)
    assert p.c_r == p.c_r_terms_sum
    assert 0.5 < p.c_r < 0.75


def test_theorem_bound_example():
    p = TheoremParams.concrete(9)
    b = theorem_failure_bound(p, 2000, 0.5)
    expected = oracles.mp_log_failure(9, 0.5, 2000, 60, 0.75)
    assert b.log_value == pytest.approx(float(expected), rel=1e-13)
    assert b.value == pytest.approx(float(mpmath.exp(expected)), rel=1e-12)
    assert (b.c_o, b.c_r) == (60.0, 0.75)


def test_theorem_bound_log_round_trip():
    p = TheoremParams.concrete(9)
    for M in (10, 500, 3000):
        b = theorem_failure_bound(p, M, 0.3)
        if b.value > 0 and math.isfinite(b.value):
            assert math.log(b.value) == pytest.approx(b.log_value, rel=1e-12)


def test_theorem_bound_non_increasing_in_M():
    p = TheoremParams.concrete(9)
    vals = [theorem_failure_bound(p, M, 0.5).log_value for M in range(0, 4000, 100)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_theorem_bound_vacuous():
    p = TheoremParams(2, c_p=0.5, r1=0.4, r2=1.0)
    assert p.c_r >= 1
    with pytest.raises(VacuousBoundError):
        theorem_failure_bound(p, 10, 0.5)


def test_theorem_bound_diameter():
    with pytest.raises(DomainError):
        theorem_failure_bound(TheoremParams.concrete(9), 10, 2.5)


# -- corollary and rates ---------------------------------------------------


def test_corollary_halving_increment():
    K, c_r = 9, 0.75
    step = 2 * K * math.log(2) / math.log(1 / c_r)
    d0 = corollary_distance(K, 100, 1e-3, 60, c_r)
    assert corollary_distance(K, 100 + step, 1e-3, 60, c_r) == pytest.approx(d0 / 2, rel=1e-13)


def test_corollary_step_of_2K():
    a = corollary_distance(9, 1800, 1e-3, 60, 0.75)
    b = corollary_distance(9, 1782, 1e-3, 60, 0.75)
    assert a / b == pytest.approx(0.75, rel=1e-13)


def test_corollary_high_precision():
    v = corollary_distance(9, 1800, 1e-3, 60, 0.75)
    assert v == pytest.approx(float(oracles.mp_corollary(9, 1800, 1e-3, 60, 0.75)), rel=1e-13)


@pytest.mark.parametrize("args", [(9, 10, 0, 60, 0.75), (9, 10, 1, 60, 0.75), (9, 10, 0.1, 60, 0.5),
                                  (9, 10, 0.1, 60, 1.0), (9, 10, 0.1, -1, 0.75)])
def test_corollary_domain(args):
    with pytest.raises(DomainError):
        corollary_distance(*args)


def test_rate_overhead():
    assert rate_overhead(0.75) == pytest.approx(4.8188416793064, abs=1e-12)
    assert round(rate_overhead(0.75), 2) == 4.82
    assert rate_overhead(0.5 + 1e-12) == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(DomainError):
        rate_overhead(0.5)


def test_required_rate_cross_check():
    B, K, P0 = 8, 9, 1e-3
    M = required_rate(B, K, P0, 60, 0.75)
    target = 2.0 ** (-(B - 1)) * math.sqrt(K)
    assert corollary_distance(K, M, P0, 60, 0.75) <= target * (1 + 1e-12)
    assert corollary_distance(K, M - 1, P0, 60, 0.75) > target


# -- covering numbers and planning -----------------------------------------


def test_covering_examples():
    assert covering_log(UnitBall(4), 3.0) == 0.0
    assert covering_log(Sparse(100, 5), 0.1) == pytest.approx(oracles.log_binom(100, 5) + 5 * math.log(30), rel=1e-13)
    assert covering_log(SimilarSignal(np.zeros(4), 0.5), 0.1) == pytest.approx(4 * math.log(15), rel=1e-14)
    assert covering_log(UnionOfSubspaces(10, 2, 7), 0.5) == pytest.approx(math.log(7) + 2 * math.log(6), rel=1e-14)


def test_covering_large_binomial_is_finite():
    v = covering_log(Sparse(10**6, 1000), 0.01)
    assert math.isfinite(v)
    assert v == pytest.approx(oracles.log_binom(10**6, 1000) + 1000 * math.log(300), rel=1e-12)


def test_covering_domain():
    with pytest.raises(DomainError):
        covering_log(UnitBall(2), 0.0)


def test_plan_halving_P0():
    p = TheoremParams.concrete(9)
    a = plan_rate(UnitBall(9), 0.25, 1e-3, p)
    b = plan_rate(UnitBall(9), 0.25, 5e-4, p)
    exact = math.log(2) / math.log(4 / 3)
    assert b.required_M - a.required_M in (math.floor(exact), math.ceil(exact))


def test_plan_matches_theorem_bound():
    p = TheoremParams.concrete(9)
    plan = plan_rate(UnitBall(9), 0.25, 1e-3, p)
    assert theorem_failure_bound(p, plan.required_M, 0.25).value <= 1e-3
    assert theorem_failure_bound(p, plan.required_M - 1, 0.25).value > 1e-3


def test_plan_monotone():
    p = TheoremParams.concrete(9)
    Ms = [plan_rate(UnitBall(9), d, 1e-3, p).required_M for d in (1.0, 0.5, 0.25, 0.1, 0.01)]
    assert Ms == sorted(Ms)
    Ms = [plan_rate(UnitBall(9), 0.25, P0, p).required_M for P0 in (0.5, 0.1, 1e-3, 1e-9)]
    assert Ms == sorted(Ms)
    Ms = [plan_rate(Sparse(N, 4), 0.25, 1e-3, TheoremParams.concrete(N)).required_M for N in (16, 64, 256, 1024)]
    assert Ms == sorted(Ms)


def test_sparse_plan_scales_like_K_log_N():
    # increments per doubling of N approach a constant times K once N >> K
    K = 4
    Ms = [plan_rate(Sparse(N, K), 0.1, 1e-3, TheoremParams.concrete(N)).required_M for N in 2 ** np.arange(8, 16)]
    inc = np.diff(Ms)
    per_doubling = 3 * K * math.log(2) / math.log(4 / 3)
    assert np.all(np.abs(inc - per_doubling) <= 2)


def test_similar_signal_reduces_to_unit_ball():
    p = TheoremParams.concrete(4)
    ball = plan_rate(UnitBall(4), 0.1, 1e-3, p)
    sim = plan_rate(SimilarSignal(np.zeros(4), 1.0), 0.1, 1e-3, p)
    assert sim.covering_log == pytest.approx(ball.covering_log, rel=1e-14)
    assert sim.required_M == ball.required_M
    near = plan_rate(SimilarSignal(np.zeros(4), 2.0), 0.1, 1e-3, p)
    assert near.covering_log == pytest.approx(ball.covering_log + 4 * math.log(2), rel=1e-14)


def test_plan_required_M_at_least_one():
    plan = plan_rate(UnitBall(1), 1.0, 0.99, TheoremParams(1, declared_c_r=0.99))
    assert plan.required_M >= 1


def test_upper_bound_gap_maximum():
    # largest upper - exact gap at sigma = delta = 1, located by a 40-digit search
    gaps = [consistency_bounds(d, 1, 1).upper - consistency_bounds(d, 1, 1).exact_series
            for d in np.linspace(0, 3, 3001)]
    assert max(gaps) == pytest.approx(0.0700416, abs=1e-6)
    assert int(np.argmax(gaps)) in range(193, 198)
