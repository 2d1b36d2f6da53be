"""Power-law tails: empirical CCDFs, continuous MLE fits, cutoff selection.

Positive tails are fitted on ``{r : r > 0}`` and negative tails on
``{-r : r < 0}``.  The CCDF exponent is always ``alpha = gamma - 1`` where
``gamma`` is the exponent of the density.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _stats
from .errors import DivergentExponentError, DomainError, LengthError, SparsityError

MIN_TAIL = 50
MIN_SCAN_SAMPLES = 100
MAX_CANDIDATES = 500
STABLE_BOUNDARY = 2.0  # CCDF exponents at or below this lie in the Levy-stable regime


@dataclass(frozen=True)
class CCDF:
    x: np.ndarray
    pc: np.ndarray


@dataclass(frozen=True)
class TailFit:
    side: str
    x_min: float
    gamma: float
    alpha: float
    n_tail: int
    ks: float
    stderr: float

    @property
    def levy_stable(self) -> bool:
        return self.alpha <= STABLE_BOUNDARY

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class KurtosisExponentFit:
    A: float
    beta: float
    rho: float
    p: float
    n: int

    def predict(self, gamma):
        return np.exp((np.asarray(gamma, dtype=float) / self.A) ** (-self.beta))


def tail_samples(r, side: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if side == "positive":
        return r[r > 0]
    if side == "negative":
        return -r[r < 0]
    raise ValueError(f"side must be 'positive' or 'negative', got {side!r}")


def empirical_ccdf(samples) -> CCDF:
    """Fraction of samples >= x at each distinct sample value."""
    x = np.sort(np.asarray(samples, dtype=float))
    if len(x) == 0:
        raise LengthError("CCDF of an empty sample")
    values, first = np.unique(x, return_index=True)
    return CCDF(values, (len(x) - first) / len(x))


def _ks_sorted(tail: np.ndarray, x_min: float, alpha: float) -> float:
    """Sup distance between the empirical tail CCDF and (x/x_min)**-alpha.

    ``tail`` is sorted ascending.  Both sides of every step are checked.
    """
    m = len(tail)
    model = (tail / x_min) ** (-alpha)
    j = np.arange(m)
    at = (m - j) / m
    above = (m - j - 1) / m
    return float(max(np.max(np.abs(at - model)), np.max(np.abs(above - model))))


def _fit_sorted(tail: np.ndarray, x_min: float, side: str, log_sum: float | None = None) -> TailFit:
    n = len(tail)
    if log_sum is None:
        log_sum = float(np.sum(np.log(tail / x_min)))
    if not log_sum > 0:
        raise DivergentExponentError(f"all {n} tail samples equal x_min={x_min}; exponent diverges")
    gamma = 1.0 + n / log_sum
    alpha = gamma - 1.0
    ks = _ks_sorted(tail, x_min, alpha)
    return TailFit(side, float(x_min), gamma, alpha, n, ks, alpha / np.sqrt(n))


def fit_tail_mle(samples, x_min: float, *, min_tail: int = MIN_TAIL, side: str = "positive") -> TailFit:
    """Continuous power-law MLE above a fixed cutoff.

    gamma = 1 + n / sum(ln(x_i / x_min)) over x_i >= x_min.
    """
    if not x_min > 0:
        raise DomainError(f"x_min must be positive, got {x_min}")
    x = np.asarray(samples, dtype=float)
    tail = np.sort(x[x >= x_min])
    if len(tail) < min_tail:
        raise SparsityError(f"{len(tail)} samples >= x_min={x_min}, need {min_tail}")
    return _fit_sorted(tail, x_min, side)


def _candidates(distinct: np.ndarray, limit: int) -> np.ndarray:
    if len(distinct) <= limit:
        return distinct
    pick = np.unique(np.round(np.linspace(0, len(distinct) - 1, limit)).astype(int))
    return distinct[pick]


def scan_xmin(samples, *, min_tail: int = MIN_TAIL, max_candidates: int = MAX_CANDIDATES,
              side: str = "positive") -> list[TailFit]:
    """MLE fit at every admissible cutoff candidate, in ascending cutoff order."""
    x = np.sort(np.asarray(samples, dtype=float))
    x = x[x > 0]
    n = len(x)
    if n < max(MIN_SCAN_SAMPLES, min_tail):
        raise SparsityError(f"cutoff scan needs at least {max(MIN_SCAN_SAMPLES, min_tail)} positive samples, got {n}")
    # Admissible cutoffs leave at least min_tail samples at or above them.
    distinct = np.unique(x[: n - min_tail + 1])
    logs = np.log(x)
    suffix = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    fits = []
    for xm in _candidates(distinct, max_candidates):
        i = int(np.searchsorted(x, xm, side="left"))
        m = n - i
        log_sum = float(suffix[i] - m * np.log(xm))
        if not log_sum > 0:
            continue
        fits.append(_fit_sorted(x[i:], float(xm), side, log_sum))
    if not fits:
        raise SparsityError("no cutoff candidate leaves a fittable tail")
    return fits


def select_xmin(samples, *, min_tail: int = MIN_TAIL, max_candidates: int = MAX_CANDIDATES,
                side: str = "positive") -> tuple[float, TailFit]:
    """Cutoff minimizing the KS distance (first candidate wins ties)."""
    fits = scan_xmin(samples, min_tail=min_tail, max_candidates=max_candidates, side=side)
    best = min(range(len(fits)), key=lambda k: (fits[k].ks, k))
    return fits[best].x_min, fits[best]


def fit_tail(r, side: str, *, method: str = "ks", quantile: float = 0.9,
             min_tail: int = MIN_TAIL) -> TailFit:
    """Fit one side of a return sample.

    ``method="ks"`` scans cutoffs; ``method="quantile"`` fixes the cutoff at the
    given quantile of the side's magnitudes.
    """
    s = tail_samples(r, side)
    if method == "ks":
        return select_xmin(s, min_tail=min_tail, side=side)[1]
    if method == "quantile":
        if len(s) == 0:
            raise SparsityError(f"no {side} samples")
        return fit_tail_mle(s, float(np.quantile(s, quantile)), min_tail=min_tail, side=side)
    raise ValueError(f"unknown cutoff method {method!r}")


def _median(v: np.ndarray) -> float:
    # np.median averages the two middle values for even counts.
    return float(np.median(v))


def tail_exponent_summary(fits: Iterable[TailFit], bins: int = 10) -> dict:
    """Median, quartiles and histogram of gamma, per side."""
    by_side: dict[str, list[float]] = {}
    for f in fits:
        by_side.setdefault(f.side, []).append(f.gamma)
    if not by_side:
        raise LengthError("no tail fits to summarize")
    out = {}
    for side in sorted(by_side):
        g = np.asarray(by_side[side])
        counts, edges = np.histogram(g, bins=bins)
        out[side] = {
            "n": len(g),
            "median": _median(g),
            "q1": float(np.quantile(g, 0.25)),
            "q3": float(np.quantile(g, 0.75)),
            "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
        }
    return out


def fit_kurtosis_exponent_relation(gammas: Sequence[float], kurtosis: Sequence[float],
                                   codes: Sequence[str] | None = None) -> KurtosisExponentFit:
    """Fit kurtosis = exp[(gamma / A)**-beta] by least squares in log-log-log space.

    Regress y = ln(ln kurtosis) on x = ln gamma: slope = -beta and
    intercept = beta * ln A.
    """
    g = np.asarray(gammas, dtype=float)
    k = np.asarray(kurtosis, dtype=float)
    if g.shape != k.shape:
        raise LengthError("gamma and kurtosis lists differ in length")
    if len(g) < 3:
        raise LengthError(f"need at least 3 pairs, got {len(g)}")
    codes = list(codes) if codes is not None else [str(i) for i in range(len(g))]
    for c, gi, ki in zip(codes, g, k):
        if not ki > 1:
            raise DomainError(f"{c}: kurtosis {ki} <= 1, log(log) undefined")
        if not gi > 0:
            raise DomainError(f"{c}: exponent {gi} <= 0")
    x = np.log(g)
    y = np.log(np.log(k))
    intercept, slope, _ = _stats.line_fit(x, y)
    beta = -slope
    if beta == 0:
        raise DomainError("flat relation: scale A is undefined when beta = 0")
    rho, p = _stats.pearson(x, y)
    return KurtosisExponentFit(float(np.exp(intercept / beta)), float(beta), rho, p, len(g))
