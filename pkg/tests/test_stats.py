"""Tests for the from-scratch t-test and ANOVA.

The tail probability is cross-checked against an independent oracle: the
regularized incomplete beta function evaluated by a Lentz continued fraction,
which is an entirely different route to the t CDF than the quadrature the
implementation uses.
"""
import math
import random

import pytest

from mergeplan.stats import (
    AnovaResult,
    DegenerateDataError,
    one_way_anova,
    student_t_test,
    t_tail,
)


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's continued fraction for the incomplete beta function.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def _incbeta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - math.exp(
        math.lgamma(a + b) - math.lgamma(b) - math.lgamma(a)
        + b * math.log(1.0 - x) + a * math.log(x)
    ) * _betacf(b, a, 1.0 - x) / b


def t_tail_oracle(t: float, df: float) -> float:
    """P(T >= t) via the incomplete beta identity."""
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    return 0.5 * _incbeta(df / 2.0, 0.5, x)


class TestTailIntegration:
    def test_matches_incomplete_beta_oracle(self):
        for df in (2, 3, 5, 10, 30, 100, 306):
            for t in (0.1, 0.5, 1.0, 2.0, 3.5, 5.0):
                assert t_tail(t, float(df)) == pytest.approx(
                    t_tail_oracle(t, float(df)), abs=1e-9)

    def test_zero_is_half(self):
        assert t_tail(0.0, 10.0) == 0.5

    def test_monotone_in_t(self):
        values = [t_tail(t, 7.0) for t in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            t_tail(-1.0, 5.0)
        with pytest.raises(ValueError):
            t_tail(1.0, 0.5)


class TestStudentT:
    def test_identical_samples(self):
        result = student_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert result.t == 0.0
        assert result.p == 1.0
        assert result.df == 4.0

    def test_clear_shift_is_significant(self):
        result = student_t_test([1.0, 2.0, 3.0], [11.0, 12.0, 13.0])
        assert result.p < 0.001
        assert result.t < 0

    def test_swap_negates_t_keeps_p(self):
        rng = random.Random(4)
        a = [rng.gauss(0, 1) for _ in range(12)]
        b = [rng.gauss(0.7, 1) for _ in range(9)]
        fwd = student_t_test(a, b)
        rev = student_t_test(b, a)
        assert fwd.t == -rev.t
        assert fwd.p == rev.p

    def test_shift_invariance(self):
        rng = random.Random(5)
        a = [rng.gauss(0, 1) for _ in range(10)]
        b = [rng.gauss(1, 2) for _ in range(10)]
        base = student_t_test(a, b)
        shifted = student_t_test([x + 100.0 for x in a], [x + 100.0 for x in b])
        assert shifted.t == pytest.approx(base.t, abs=1e-9)
        assert shifted.p == pytest.approx(base.p, abs=1e-9)

    def test_zero_variance_distinct_means(self):
        result = student_t_test([2.0, 2.0], [3.0, 3.0])
        assert math.isinf(result.t) and result.t < 0
        assert result.p == 0.0

    def test_zero_variance_equal_means(self):
        result = student_t_test([2.0, 2.0], [2.0, 2.0])
        assert result.t == 0.0 and result.p == 1.0

    def test_small_samples_rejected(self):
        with pytest.raises(ValueError):
            student_t_test([1.0], [1.0, 2.0])


class TestAnova:
    def test_df_structure_for_six_groups_of_308(self):
        rng = random.Random(6)
        sizes = [52, 52, 51, 51, 51, 51]
        assert sum(sizes) == 308
        groups = [[rng.gauss(i, 1.0) for _ in range(n)]
                  for i, n in enumerate(sizes)]
        result = one_way_anova(groups)
        assert (result.df_between, result.df_within) == (5, 302)

    def test_two_groups_f_equals_t_squared(self):
        rng = random.Random(7)
        for _ in range(25):
            a = [rng.gauss(0, 1) for _ in range(rng.randrange(3, 15))]
            b = [rng.gauss(0.5, 1.5) for _ in range(rng.randrange(3, 15))]
            f = one_way_anova([a, b]).F
            t = student_t_test(a, b).t
            assert f == pytest.approx(t * t, abs=1e-9 * max(1.0, t * t))

    def test_identical_constant_groups_degenerate(self):
        with pytest.raises(DegenerateDataError):
            one_way_anova([[5.0, 5.0], [5.0, 5.0, 5.0]])

    def test_zero_within_variance_infinite_f(self):
        result = one_way_anova([[1.0, 1.0], [2.0, 2.0]])
        assert math.isinf(result.F)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            one_way_anova([[1.0, 2.0]])
        with pytest.raises(ValueError):
            one_way_anova([[1.0], []])
        with pytest.raises(ValueError):
            one_way_anova([[1.0], [2.0]])  # n == k

    def test_known_value(self):
        # classic hand-checkable case: three groups with clear separation
        groups = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]
        result = one_way_anova(groups)
        # SS_between = 3*(2-5)^2 + 3*(5-5)^2 + 3*(8-5)^2 = 54, df 2
        # SS_within = 2 + 2 + 2 = 6, df 6 -> F = 27 / 1 = 27
        assert result == AnovaResult(F=27.0, df_between=2, df_within=6)
