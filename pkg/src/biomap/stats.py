"""Descriptive statistics and one-way ANOVA with an incomplete-beta p-value."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import BiomapError


class EmptyGroup(BiomapError):
    pass


class DegenerateVariance(BiomapError):
    pass


@dataclass
class Summary:
    n: int
    mean: float
    maximum: float
    minimum: float
    variance: float
    time: float = 0.0

    def as_row(self) -> dict:
        return {"n": self.n, "mean": self.mean, "maximum": self.maximum,
                "minimum": self.minimum, "variance": self.variance, "time": self.time}


def describe(values: Sequence[float], time: float = 0.0) -> Summary:
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyGroup("no values")
    n = len(vals)
    mean = math.fsum(vals) / n
    var = math.fsum((v - mean) ** 2 for v in vals) / n
    return Summary(n, mean, max(vals), min(vals), var, time)


def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 3e-16) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, df1: float, df2: float) -> float:
    """Survival function of the F distribution, P(F > f)."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


@dataclass
class AnovaResult:
    factor: str
    levels: list
    group_means: list[float]
    group_sizes: list[int]
    ss_between: float
    ss_within: float
    df_between: int
    df_within: int
    f: float
    p_value: float

    def as_row(self) -> dict:
        return {"factor": self.factor, "ss_between": self.ss_between, "ss_within": self.ss_within,
                "df_between": self.df_between, "df_within": self.df_within,
                "F": self.f, "p_value": self.p_value}


def anova_oneway(groups: Mapping | Sequence[Sequence[float]], factor: str = "") -> AnovaResult:
    """Classical one-way ANOVA, F = (SSB / dfB) / (SSW / dfW).

    ``groups`` maps level -> values (or is a plain list of value lists).
    Raises DegenerateVariance when the within-group sum of squares is zero.
    """
    if not isinstance(groups, Mapping):
        groups = {i: g for i, g in enumerate(groups)}
    levels = list(groups)
    data = [[float(v) for v in groups[k]] for k in levels]
    if len(data) < 2:
        raise EmptyGroup("need at least two groups")
    if any(not g for g in data):
        raise EmptyGroup("empty group")
    n_total = sum(len(g) for g in data)
    df_b, df_w = len(data) - 1, n_total - len(data)
    if df_w < 1:
        raise DegenerateVariance("no residual degrees of freedom")
    grand = math.fsum(v for g in data for v in g) / n_total
    means = [math.fsum(g) / len(g) for g in data]
    ssb = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(data, means))
    ssw = math.fsum((v - m) ** 2 for g, m in zip(data, means) for v in g)
    if ssw == 0.0:
        raise DegenerateVariance(f"zero within-group variance for factor {factor or '?'}")
    f = (ssb / df_b) / (ssw / df_w)
    return AnovaResult(factor, levels, means, [len(g) for g in data], ssb, ssw, df_b, df_w, f,
                       f_sf(f, df_b, df_w))
