"""Time-weighted monitor statistics with Student-t half lengths."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .engine import MonitorLog

CONFIDENCE_LEVELS = (0.90, 0.95, 0.99)
STATS_COLUMNS = ("Name", "Count", "Avg", "90% Half Length", "95% Half Length",
                 "99% Half Length", "SSD", "Variance", "Std")


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c if abs(1.0 + aa / c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c if abs(1.0 + aa / c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    x = df / (df + t * t)
    tail = 0.5 * betainc_reg(df / 2.0, 0.5, x)
    return 1.0 - tail if t >= 0 else tail


def t_quantile(p: float, df: int) -> float:
    """Inverse Student-t CDF for 0.5 < p < 1 by bisection on ``t_cdf``."""
    if not 0.5 < p < 1.0:
        raise ValueError(f"p must lie in (0.5, 1), got {p}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def table_quantile(p: float, df: int) -> float:
    """Quantile as printed in a three-decimal t table (what the reference tool used)."""
    return round(t_quantile(p, df), 3)


@dataclass(frozen=True)
class TimedStats:
    name: str
    count: int
    avg: float
    ssd: float
    variance: float
    std: float
    half_length_90: Optional[float]
    half_length_95: Optional[float]
    half_length_99: Optional[float]
    total_time: float

    def row(self) -> str:
        def f(x):
            return "n/a" if x is None else f"{x:.6f}"
        cells = [self.name, str(self.count), f(self.avg), f(self.half_length_90),
                 f(self.half_length_95), f(self.half_length_99), f(self.ssd),
                 f(self.variance), f(self.std)]
        return "\t".join(cells)

    def as_dict(self) -> dict:
        return {"name": self.name, "count": self.count, "avg": self.avg,
                "half_length_90": self.half_length_90, "half_length_95": self.half_length_95,
                "half_length_99": self.half_length_99, "ssd": self.ssd,
                "variance": self.variance, "std": self.std, "total_time": self.total_time}


def stats_header() -> str:
    return "\t".join(STATS_COLUMNS)


def step_integrals(log: MonitorLog):
    """(value, duration) pieces of the step function in ``log``."""
    pieces = []
    samples = log.samples
    for i, (_, t, v) in enumerate(samples):
        end = samples[i + 1][1] if i + 1 < len(samples) else log.total_time
        pieces.append((v, max(0.0, end - t)))
    return pieces


def timed_stats(log: MonitorLog, count: Optional[int] = None) -> TimedStats:
    """Time-weighted mean and squared deviation over [0, T].

    ``count`` defaults to the number of samples; the half lengths use it both
    as sample size and (minus one) as degrees of freedom.
    """
    T = float(log.total_time)
    if T <= 1:
        raise ValueError(f"total model time must exceed 1, got {T}")
    n = len(log.samples) if count is None else count
    if n < 1:
        raise ValueError("monitor has no samples")
    pieces = step_integrals(log)
    avg = sum(v * d for v, d in pieces) / T
    ssd = sum((v - avg) ** 2 * d for v, d in pieces)
    variance = ssd / (T - 1)
    std = math.sqrt(variance)
    if n < 2:
        hls = (None, None, None)
    else:
        hls = tuple(table_quantile((1 + p) / 2, n - 1) * std / math.sqrt(n)
                    for p in CONFIDENCE_LEVELS)
    return TimedStats(log.name, n, avg, ssd, variance, std, *hls, total_time=T)
