"""Detrended fluctuation analysis and the variance-ratio statistic.

DFA here is applied to the log-price path itself, which already plays the
role of the integrated profile: no further cumulative sum is taken.  A random
walk therefore scores 0.5 and a stationary (bounded) path scores near 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _stats
from .errors import DegenerateError, LagError, LengthError

MIN_WINDOW = 4


@dataclass(frozen=True)
class DfaResult:
    window_sizes: np.ndarray
    fluctuation: np.ndarray
    exponent: float
    fit_r2: float


@dataclass(frozen=True)
class VrResult:
    lag: int
    vr: float
    mean_r: float
    var_r: float


def default_windows(n: int, count: int = 12, smallest: int = 10) -> np.ndarray:
    """``count`` log-spaced integer window sizes in [smallest, n/4]."""
    largest = n // 4
    if largest < smallest:
        raise LengthError(f"profile of length {n} too short for windows >= {smallest}")
    w = np.unique(np.round(np.geomspace(smallest, largest, count)).astype(int))
    return w


def _detrended_sq_residuals(segments: np.ndarray) -> np.ndarray:
    """Sum of squared residuals after a least-squares line, per row."""
    s = segments.shape[1]
    t = np.arange(s, dtype=float)
    tc = t - t.mean()
    ybar = segments.mean(axis=1, keepdims=True)
    yc = segments - ybar
    slope = (yc @ tc) / (tc @ tc)
    resid = yc - slope[:, None] * tc[None, :]
    return np.einsum("ij,ij->i", resid, resid)


def dfa(profile, window_sizes=None) -> DfaResult:
    """First-order DFA on ``profile`` used directly as the integrated series.

    For each window size s the profile is cut into floor(N/s) windows from the
    start and as many from the end; F(s) is the RMS residual over all of them.
    The exponent is the least-squares slope of ln F(s) against ln s.
    """
    y = np.asarray(profile, dtype=float)
    n = len(y)
    if not np.all(np.isfinite(y)):
        raise DegenerateError("profile contains missing or non-finite values")
    w = default_windows(n) if window_sizes is None else np.asarray(sorted(set(int(s) for s in window_sizes)))
    if len(w) < 2:
        raise LengthError("need at least two window sizes")
    if w[0] < MIN_WINDOW:
        raise LengthError(f"window sizes must be >= {MIN_WINDOW}")
    if n < 4 * w[-1]:
        raise LengthError(f"profile length {n} < 4 x largest window {w[-1]}")
    scale = float(np.max(np.abs(y - y.mean()))) or 1.0
    F = np.empty(len(w))
    for k, s in enumerate(w):
        m = n // s
        fwd = y[: m * s].reshape(m, s)
        bwd = y[n - m * s:].reshape(m, s)
        ss = _detrended_sq_residuals(np.vstack([fwd, bwd]))
        F[k] = np.sqrt(ss.sum() / (2 * m * s))
    # A line is annihilated by the detrending up to rounding noise.
    if np.any(F <= scale * 1e-12):
        bad = int(w[np.argmax(F <= scale * 1e-12)])
        raise DegenerateError(f"detrended fluctuation vanishes at s={bad} (profile is linear)")
    _, slope, r2 = _stats.line_fit(np.log(w.astype(float)), np.log(F))
    return DfaResult(w, F, slope, r2)


def variance_ratio(R, lag: int = 10) -> VrResult:
    """Variance ratio of lag-l sums to l single-step variances.

    VR(l) = sum_{k=l}^{T} (sum_{t=k-l}^{k-1} R_t - l*mu)**2
            / [var * l * (T - l + 1) * (1 - l/T)]

    with R indexed 0..T-1 (so there are T-l+1 full windows) and mu, var the
    population mean and variance of R.
    """
    x = np.asarray(getattr(R, "values", R), dtype=float)
    T = len(x)
    l = int(lag)
    if l < 2 or l > T / 2:
        raise LagError(f"lag must satisfy 2 <= l <= T/2 (T={T}), got {lag}")
    mu = float(np.mean(x))
    d = x - mu
    var = float(np.mean(d * d))
    if var <= float(np.max(np.abs(x))) ** 2 * 1e-28 or var == 0:
        raise DegenerateError("return series is constant")
    c = np.concatenate([[0.0], np.cumsum(d)])
    window = c[l:] - c[:-l]  # T - l + 1 centered lag-l sums
    num = float(window @ window)
    den = var * l * (T - l + 1) * (1 - l / T)
    return VrResult(l, num / den, mu, var)
