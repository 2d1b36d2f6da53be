"""Log returns, leave-one-out normalization and distribution moments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateError, DomainError, LengthError


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    horizon: int = 1


@dataclass(frozen=True)
class NormalizedReturns:
    values: np.ndarray
    source_mean: float
    sigma_series: np.ndarray


@dataclass(frozen=True)
class Moments:
    mean: float
    std: float
    skewness: float
    kurtosis: float  # Pearson: 3 for a Gaussian

    def as_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "skewness": self.skewness, "kurtosis": self.kurtosis}


def log_returns(prices, dt: int = 1) -> ReturnSeries:
    """``out[t] = ln p[t+dt] - ln p[t]``."""
    p = np.asarray(prices, dtype=float)
    if dt < 1:
        raise LengthError(f"horizon must be >= 1, got {dt}")
    if len(p) < dt + 1:
        raise LengthError(f"need at least {dt + 1} prices for horizon {dt}, got {len(p)}")
    if not np.all(p > 0):
        bad = int(np.argmin(p > 0))
        raise DomainError(f"non-positive price {p[bad]!r} at index {bad}")
    lp = np.log(p)
    return ReturnSeries(lp[dt:] - lp[:-dt], dt)


def returns_from_log_prices(log_prices, dt: int = 1) -> ReturnSeries:
    """Returns across gapped log prices.

    Only pairs of days that are both quoted and ``dt`` apart in the index are
    used; returns spanning a gap are dropped rather than mixing horizons.
    """
    lp = np.asarray(log_prices, dtype=float)
    if len(lp) < dt + 1:
        raise LengthError(f"need at least {dt + 1} prices, got {len(lp)}")
    r = lp[dt:] - lp[:-dt]
    return ReturnSeries(r[np.isfinite(r)], dt)


def normalize_returns(R) -> NormalizedReturns:
    """Center by the full-sample mean, scale by a leave-one-out deviation.

    For each t the deviation uses every other observation with divisor T-2:
    sigma(t)**2 = (S - (R[t] - mean)**2) / (T - 2), S the total sum of squares.
    """
    x = np.asarray(getattr(R, "values", R), dtype=float)
    T = len(x)
    if T < 3:
        raise LengthError(f"normalization needs at least 3 returns, got {T}")
    mean = float(np.mean(x))
    dev = x - mean
    sq = dev * dev
    total = float(np.sum(sq))
    loo = total - sq
    floor = T * float(np.max(np.abs(x))) ** 2 * 1e-28
    if total <= floor or np.any(loo <= total * 1e-14):
        raise DegenerateError("leave-one-out variance vanishes (series is constant apart from one point)")
    sigma = np.sqrt(loo / (T - 2))
    return NormalizedReturns(dev / sigma, mean, sigma)


def moments(sample) -> Moments:
    """Population moments (divisor n); kurtosis is m4 / sigma**4."""
    x = np.asarray(sample, dtype=float)
    n = len(x)
    if n < 4:
        raise LengthError(f"moments need at least 4 values, got {n}")
    mu = float(np.mean(x))
    d = x - mu
    m2 = float(np.mean(d * d))
    if m2 == 0 or m2 <= (mu * mu) * 1e-28:
        raise DegenerateError("sample is constant")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return Moments(float(mu), float(np.sqrt(m2)), float(m3 / m2**1.5), float(m4 / (m2 * m2)))


def group_skewness(skewness: Mapping[str, float], classes: Mapping[str, str | None],
                   order: Sequence[str] = ("developed", "emerging", "frontier")) -> dict:
    """Mean and population standard deviation of skewness per market class.

    Classes with no members map to ``None`` rather than to zeros.
    """
    groups: dict[str, list[float]] = {k: [] for k in order}
    for code, s in skewness.items():
        cls = classes.get(code)
        if cls is None:
            continue
        groups.setdefault(cls, []).append(s)
    out = {}
    for cls, vals in groups.items():
        if not vals:
            out[cls] = None
            continue
        v = np.asarray(vals)
        out[cls] = {"mean": float(np.mean(v)), "sd": float(np.std(v)), "n": len(v)}
    return out
