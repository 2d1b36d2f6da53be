"""Shared least-squares and correlation helpers."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import DegenerateError

P_FLOOR = np.finfo(float).tiny


def pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Pearson coefficient and two-sided t-test p-value with n-2 degrees of freedom."""
    n = len(x)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateError("zero variance in correlation input")
    rho = float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))
    if abs(rho) == 1.0:
        return rho, P_FLOOR
    t = rho * np.sqrt((n - 2) / (1 - rho * rho))
    p = float(2 * stats.t.sf(abs(t), n - 2))
    return rho, max(p, P_FLOOR)


def line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares ``y = a + b x``; returns (intercept, slope, r2)."""
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise DegenerateError("zero variance in regressor")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dy = y - y.mean()
    sst = float(dy @ dy)
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    return intercept, slope, min(max(r2, 0.0), 1.0)
