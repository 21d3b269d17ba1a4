"""Significance tests computed from scratch.

Unpaired pooled-variance Student's t-test (two-sided p from adaptive-Simpson
integration of the t density tail) and one-way ANOVA. Pure Python on plain
sequences: the point of having these in-tree is that the batch harness's
comparisons do not depend on an external stats stack, and the tail integral
can be cross-checked against an independent implementation in the tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df_between: int
    df_within: int


class DegenerateDataError(ValueError):
    """All groups are a single identical constant: F is 0/0."""


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def _sum_sq_dev(xs: list[float], m: float) -> float:
    return sum((x - m) ** 2 for x in xs)


def t_density(x: float, df: float) -> float:
    """Student's t probability density."""
    log_c = math.lgamma((df + 1.0) / 2.0) - math.lgamma(df / 2.0) \
        - 0.5 * math.log(df * math.pi)
    return math.exp(log_c) * (1.0 + x * x / df) ** (-(df + 1.0) / 2.0)


def _adaptive_simpson(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = (a + m) / 2.0
    rm = (m + b) / 2.0
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_adaptive_simpson(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + _adaptive_simpson(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1))


def t_tail(t: float, df: float, tol: float = 1e-13) -> float:
    """P(T >= t) for Student's t, by numerical integration.

    The tail [t, inf) is mapped onto u in [0, 1] via x = t + u/(1-u) and the
    transformed integrand is integrated with adaptive Simpson quadrature.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if df < 1:
        raise ValueError("df must be at least 1")
    if t == 0.0:
        return 0.5

    def integrand(u: float) -> float:
        if u >= 1.0:
            # pdf(x) * dx/du ~ const * (1-u)^(df-1) as u -> 1.
            return t_density(0.0, df) * df ** ((df + 1.0) / 2.0) if df == 1.0 else 0.0
        w = 1.0 - u
        x = t + u / w
        return t_density(x, df) / (w * w)

    a, b = 0.0, 1.0
    fa, fb = integrand(a), integrand(b)
    m = 0.5
    fm = integrand(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adaptive_simpson(integrand, a, fa, b, fb, m, fm, whole, tol, 60)


def student_t_test(a, b) -> TTestResult:
    """Unpaired pooled-variance Student's t-test, two-sided.

    Degenerate zero-variance inputs give t = 0, p = 1 when the means are
    also equal, and a signed infinite t with p = 0 otherwise.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two values")
    na, nb = len(a), len(b)
    ma, mb = _mean(a), _mean(b)
    df = na + nb - 2
    pooled = (_sum_sq_dev(a, ma) + _sum_sq_dev(b, mb)) / df
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    if se == 0.0:
        if ma == mb:
            return TTestResult(t=0.0, df=float(df), p=1.0)
        return TTestResult(t=math.copysign(math.inf, ma - mb), df=float(df), p=0.0)
    t = (ma - mb) / se
    p = 2.0 * t_tail(abs(t), float(df))
    if p > 1.0:
        p = 1.0
    return TTestResult(t=t, df=float(df), p=p)


def one_way_anova(groups) -> AnovaResult:
    """Classic between/within mean-square ratio.

    Zero within-group variance yields an explicit infinite F; if the between
    variance is also zero (every observation identical) the statistic is 0/0
    and DegenerateDataError is raised.
    """
    groups = [[float(x) for x in g] for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(len(g) < 1 for g in groups):
        raise ValueError("every group needs at least one value")
    k = len(groups)
    n = sum(len(g) for g in groups)
    if n <= k:
        raise ValueError("need more observations than groups")
    grand = sum(sum(g) for g in groups) / n
    means = [_mean(g) for g in groups]
    ss_between = sum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ss_within = sum(_sum_sq_dev(g, m) for g, m in zip(groups, means))
    df_between = k - 1
    df_within = n - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            raise DegenerateDataError(
                "all observations identical: F is 0/0")
        return AnovaResult(F=math.inf, df_between=df_between, df_within=df_within)
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    return AnovaResult(F=ms_between / ms_within, df_between=df_between,
                       df_within=df_within)
