"""Descriptive statistics and the two paired significance tests reported by
the experiment harness.

The t distribution's tail probability is evaluated through the regularized
incomplete beta function (continued fraction, absolute error below 1e-8);
the signed-rank test uses the normal approximation with midranks, tie
correction and a continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PairedSample:
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __init__(self, a: Sequence[float], b: Sequence[float]):
        a = tuple(float(x) for x in a)
        b = tuple(float(x) for x in b)
        if len(a) != len(b):
            raise ValueError("paired sample arms must have equal length")
        if len(a) < 2:
            raise ValueError("paired sample needs at least 2 pairs")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def differences(self) -> np.ndarray:
        return np.asarray(self.a) - np.asarray(self.b)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    degenerate: bool = False


@dataclass(frozen=True)
class WilcoxonResult:
    z: float
    p: float
    n: int
    degenerate: bool = False


def mean_sd(xs: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and Bessel-corrected (n-1) standard deviation."""
    xs = np.asarray(xs, dtype=np.float64)
    n = xs.size
    if n < 2:
        raise ValueError("mean_sd needs at least 2 values")
    mean = float(xs.mean())
    sd = math.sqrt(float(np.sum((xs - mean) ** 2)) / (n - 1))
    return mean, sd


def _betacf(a: float, b: float, x: float) -> float:
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def _betai(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: int) -> float:
    """P(|T_df| >= |t|) via the incomplete beta identity."""
    if df < 1:
        raise ValueError("df must be >= 1")
    return _betai(0.5 * df, 0.5, df / (df + t * t))


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def paired_t_test(s: PairedSample) -> TTestResult:
    """Two-sided paired t test on differences a - b."""
    d = s.differences()
    n = d.size
    mean, sd = mean_sd(d)
    if sd == 0.0:
        return TTestResult(0.0, float("nan"), n - 1, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, t_two_sided_p(t, n - 1), n - 1)


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def wilcoxon_signed_rank(s: PairedSample) -> WilcoxonResult:
    """Two-sided signed-rank test on differences a - b (zeros dropped).

    z is signed like the rank-sum excess, so positive z means a tends to
    exceed b; p uses the normal approximation with continuity correction.
    """
    d = s.differences()
    nz = d[d != 0.0]
    n = nz.size
    if n == 0:
        return WilcoxonResult(0.0, float("nan"), 0, degenerate=True)
    ranks = _midranks(np.abs(nz))
    w_plus = float(ranks[nz > 0.0].sum())
    mu_w = n * (n + 1) / 4.0
    var_w = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(nz), return_counts=True)
    var_w -= float(np.sum(counts.astype(np.float64) ** 3 - counts)) / 48.0
    if var_w <= 0.0:
        return WilcoxonResult(0.0, float("nan"), n, degenerate=True)
    sigma = math.sqrt(var_w)
    excess = w_plus - mu_w
    if excess > 0.0:
        z = (excess - 0.5) / sigma
    elif excess < 0.0:
        z = (excess + 0.5) / sigma
    else:
        z = 0.0
    return WilcoxonResult(z, normal_two_sided_p(z), n)
