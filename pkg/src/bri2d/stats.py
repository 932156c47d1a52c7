"""Statistical gates: KS tests, Wilson intervals, chi-square uniformity and
log-log slopes.  Tests are pass/fail gates against fixed critical values;
p-values are only reported as hints.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

# asymptotic Kolmogorov critical values c(level), threshold = c / sqrt(n)
KS_CRITICAL = {0.1: 1.224, 0.05: 1.358, 0.01: 1.628}


class StatsError(ValueError):
    pass


@dataclass
class TestReport:
    statistic: float
    threshold: float
    n: int
    passed: bool
    p_hint: float
    name: str = ""

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


TestReport.__test__ = False  # not a pytest class


def kolmogorov_sf(x: float, terms: int = 10) -> float:
    """Asymptotic Kolmogorov survival function, series truncated at
    ``terms`` terms."""
    if x <= 0:
        return 1.0
    if x < 0.2:
        return 1.0
    s = 0.0
    for k in range(1, terms + 1):
        s += (-1) ** (k - 1) * math.exp(-2.0 * k * k * x * x)
    return float(min(1.0, max(0.0, 2.0 * s)))


def _critical(level: float) -> float:
    try:
        return KS_CRITICAL[level]
    except KeyError:
        raise StatsError(f"unsupported KS level {level}; use one of {sorted(KS_CRITICAL)}")


def ks_statistic(data: Sequence[float], cdf: Callable) -> float:
    x = np.sort(np.asarray(data, dtype=float))
    n = len(x)
    if n == 0:
        raise StatsError("empty data")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def ks_one_sample(data: Sequence[float], cdf: Callable, level: float = 0.01,
                  name: str = "") -> TestReport:
    """Sup-distance between the empirical CDF of ``data`` and ``cdf``."""
    d = ks_statistic(data, cdf)
    n = len(data)
    thr = _critical(level) / math.sqrt(n)
    return TestReport(d, thr, n, d < thr, kolmogorov_sf(math.sqrt(n) * d), name)


def ks_two_sample(a: Sequence[float], b: Sequence[float], level: float = 0.01,
                  name: str = "") -> TestReport:
    x = np.sort(np.asarray(a, dtype=float))
    y = np.sort(np.asarray(b, dtype=float))
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise StatsError("empty data")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / n
    fy = np.searchsorted(y, grid, side="right") / m
    d = float(np.max(np.abs(fx - fy)))
    en = math.sqrt(n * m / (n + m))
    thr = _critical(level) / en
    return TestReport(d, thr, n + m, d < thr, kolmogorov_sf(en * d), name)


def ks_statistic_gate(data, cdf, threshold: float, name: str = "") -> TestReport:
    """KS statistic compared with an explicit absolute threshold."""
    d = ks_statistic(data, cdf)
    n = len(data)
    return TestReport(d, threshold, n, d < threshold, kolmogorov_sf(math.sqrt(n) * d), name)


def _z(level: float) -> float:
    from scipy.stats import norm
    return float(norm.ppf(0.5 + level / 2.0))


def wilson_ci(k: int, n: int, level: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if n < 1 or k < 0 or k > n:
        raise StatsError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    z = _z(level)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def chi_square_uniform(values: Sequence[float], low: float, high: float,
                       bins: int, level: float = 0.01, name: str = "") -> TestReport:
    """Pearson chi-square test that ``values`` are uniform on [low, high)."""
    from scipy.stats import chi2
    counts, _ = np.histogram(values, bins=bins, range=(low, high))
    n = int(counts.sum())
    if n == 0:
        raise StatsError("empty data")
    expected = n / bins
    stat = float(np.sum((counts - expected) ** 2) / expected)
    thr = float(chi2.ppf(1 - level, bins - 1))
    return TestReport(stat, thr, n, stat < thr, float(chi2.sf(stat, bins - 1)), name)


def loglog_slope(points: Sequence) -> tuple:
    """Least-squares slope of ln y against ln x, with its standard error."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise StatsError("need at least 3 points")
    if np.any(pts <= 0):
        raise StatsError("log-log fit needs positive values")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    n = len(lx)
    xm = lx.mean()
    sxx = np.sum((lx - xm) ** 2)
    slope = float(np.sum((lx - xm) * (ly - ly.mean())) / sxx)
    resid = ly - (ly.mean() + slope * (lx - xm))
    s2 = float(np.sum(resid ** 2) / (n - 2))
    return slope, math.sqrt(s2 / sxx)


def z_two_proportions(k1: int, n1: int, k2: int, n2: int) -> float:
    """Two-sided p-value of the pooled two-proportion z-test."""
    from scipy.stats import norm
    p = (k1 + k2) / (n1 + n2)
    se = math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    if se == 0:
        return 1.0
    z = (k1 / n1 - k2 / n2) / se
    return float(2 * norm.sf(abs(z)))


def exp1_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-np.maximum(x, 0)), 0.0)
