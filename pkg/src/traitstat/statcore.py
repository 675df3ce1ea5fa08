"""Streaming summaries, special functions and the t / F / chi-square distributions.

Everything here is self-contained (``math`` only).  The incomplete beta and
gamma functions are evaluated with modified Lentz continued fractions; the
upper tails are also available in log space so that p-values far below the
double-precision underflow limit still rank correctly (the tree grower
compares them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "DomainError",
    "Summary",
    "AnovaResult",
    "welford_summary",
    "reg_inc_beta",
    "log_reg_inc_beta",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "t_cdf",
    "two_sided_p",
    "f_cdf",
    "f_sf",
    "log_f_sf",
    "chisq_cdf",
    "chisq_sf",
    "oneway_anova",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 200_000


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Summary:
    """Count, mean and sum of squared deviations of a sample.

    ``mean`` is NaN for an empty summary.  Two summaries combine with
    :meth:`merge` (Chan et al. pairwise update), which is associative up to
    rounding.
    """

    n: int = 0
    mean: float = math.nan
    m2: float = 0.0

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n >= 2 else math.nan

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance) if self.n >= 2 else math.nan

    @property
    def total(self) -> float:
        return self.n * self.mean if self.n else 0.0

    def merge(self, other: "Summary") -> "Summary":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Summary(n, mean, max(m2, 0.0))

    @classmethod
    def combine(cls, parts: Iterable["Summary"]) -> "Summary":
        out = cls()
        for part in parts:
            out = out.merge(part)
        return out


def welford_summary(values: Iterable[float]) -> Summary:
    """Single-pass mean / sum of squared deviations."""
    n = 0
    mean = 0.0
    m2 = 0.0
    for x in values:
        x = float(x)
        n += 1
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)
    if n == 0:
        return Summary()
    return Summary(n, mean, max(m2, 0.0))


# ---------------------------------------------------------------------------
# incomplete beta
# ---------------------------------------------------------------------------


def _lbeta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(x: float, a: float, b: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def _check_beta_args(x: float, a: float, b: float) -> None:
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"incomplete beta needs a > 0 and b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete beta needs 0 <= x <= 1, got x={x}")


def _log_ibeta(x: float, y: float, a: float, b: float) -> float:
    """log I_x(a, b) with ``y = 1 - x`` supplied separately to avoid cancellation."""
    if x <= 0.0:
        return -math.inf
    if y <= 0.0:
        return 0.0
    log_front = a * math.log(x) + b * math.log(y) - _lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return log_front + math.log(_betacf(x, a, b)) - math.log(a)
    tail = math.exp(log_front + math.log(_betacf(y, b, a)) - math.log(b))
    return math.log1p(-tail) if tail < 1.0 else -math.inf


def _ibeta(x: float, y: float, a: float, b: float) -> float:
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(y) - _lbeta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        value = math.exp(log_front) * _betacf(x, a, b) / a
    else:
        value = 1.0 - math.exp(log_front) * _betacf(y, b, a) / b
    return min(1.0, max(0.0, value))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    _check_beta_args(x, a, b)
    return _ibeta(x, 1.0 - x, a, b)


def log_reg_inc_beta(x: float, a: float, b: float) -> float:
    _check_beta_args(x, a, b)
    return _log_ibeta(x, 1.0 - x, a, b)


# ---------------------------------------------------------------------------
# incomplete gamma
# ---------------------------------------------------------------------------


def _gamma_series(a: float, x: float) -> float:
    ap = a
    total = 1.0 / a
    term = total
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a: float, x: float) -> None:
    if not a > 0 or math.isinf(a):
        raise DomainError(f"incomplete gamma needs a > 0, got a={a}")
    if not x >= 0:
        raise DomainError(f"incomplete gamma needs x >= 0, got x={x}")


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cf(a, x))


def reg_upper_gamma(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cf(a, x))


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


def _check_df(*dfs: float) -> None:
    for df in dfs:
        if not df > 0 or math.isinf(df):
            raise DomainError(f"degrees of freedom must be positive and finite, got {df}")


def t_cdf(t: float, df: float) -> float:
    """Student-t CDF with ``df`` degrees of freedom."""
    _check_df(df)
    if math.isnan(t):
        raise DomainError("t is NaN")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    t2 = t * t
    tail = 0.5 * _ibeta(df / (df + t2), t2 / (df + t2), 0.5 * df, 0.5)
    return 1.0 - tail if t > 0 else tail


def two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|); equals ``2 * (1 - t_cdf(abs(t), df))`` without the cancellation."""
    _check_df(df)
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return _ibeta(df / (df + t2), t2 / (df + t2), 0.5 * df, 0.5)


def _f_args(f: float, d1: float, d2: float) -> None:
    _check_df(d1, d2)
    if math.isnan(f) or f < 0:
        raise DomainError(f"F statistic must be >= 0, got {f}")


def f_cdf(f: float, d1: float, d2: float) -> float:
    """CDF of the F(d1, d2) distribution."""
    _f_args(f, d1, d2)
    if math.isinf(f):
        return 1.0
    u = d1 * f
    return _ibeta(u / (u + d2), d2 / (u + d2), 0.5 * d1, 0.5 * d2)


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail 1 - f_cdf, computed directly."""
    _f_args(f, d1, d2)
    if math.isinf(f):
        return 0.0
    u = d1 * f
    return _ibeta(d2 / (u + d2), u / (u + d2), 0.5 * d2, 0.5 * d1)


def log_f_sf(f: float, d1: float, d2: float) -> float:
    _f_args(f, d1, d2)
    if math.isinf(f):
        return -math.inf
    u = d1 * f
    return _log_ibeta(d2 / (u + d2), u / (u + d2), 0.5 * d2, 0.5 * d1)


def chisq_cdf(x: float, k: float) -> float:
    """Chi-square CDF with ``k`` degrees of freedom."""
    _check_df(k)
    if math.isnan(x) or x < 0:
        raise DomainError(f"chi-square argument must be >= 0, got {x}")
    return reg_lower_gamma(0.5 * k, 0.5 * x)


def chisq_sf(x: float, k: float) -> float:
    _check_df(k)
    if math.isnan(x) or x < 0:
        raise DomainError(f"chi-square argument must be >= 0, got {x}")
    return reg_upper_gamma(0.5 * k, 0.5 * x)


# ---------------------------------------------------------------------------
# one-way ANOVA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnovaResult:
    f: float
    p: float
    df_between: int
    df_within: int
    log_p: float = 0.0
    degenerate: bool = False


def oneway_anova(groups: Sequence[Summary]) -> AnovaResult:
    """One-way ANOVA F-test from per-group summaries.

    Empty groups are ignored.  When the within-group variance is zero the
    test is degenerate: equal means give F = 0, p = 1; unequal means give
    F = inf, p = 0 and ``degenerate=True``.
    """
    groups = [g for g in groups if g.n > 0]
    k = len(groups)
    total_n = sum(g.n for g in groups)
    if k < 2:
        raise ValueError("oneway_anova needs at least two non-empty groups")
    if total_n <= k:
        raise ValueError(f"oneway_anova needs more observations ({total_n}) than groups ({k})")
    pooled = Summary.combine(groups)
    ssw = sum(g.m2 for g in groups)
    ssb = sum(g.n * (g.mean - pooled.mean) ** 2 for g in groups)
    df_b = k - 1
    df_w = total_n - k
    # guard against rounding noise when every group mean is identical
    scale = max(abs(g.mean) for g in groups) + 1.0
    if ssb <= (1e-13 * scale) ** 2 * total_n:
        ssb = 0.0
    if ssw <= 0.0:
        if ssb == 0.0:
            return AnovaResult(0.0, 1.0, df_b, df_w, 0.0, degenerate=False)
        return AnovaResult(math.inf, 0.0, df_b, df_w, -math.inf, degenerate=True)
    f = (ssb / df_b) / (ssw / df_w)
    log_p = log_f_sf(f, df_b, df_w)
    return AnovaResult(f, math.exp(log_p), df_b, df_w, log_p)
