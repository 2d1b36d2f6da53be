"""Binned return distributions and Jensen-Shannon based distances.

Natural logarithms throughout, so JS divergence lies in [0, ln 2] and the
similarity distance sqrt(JS) in [0, sqrt(ln 2)].
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateError, IncompatibleHistogramError, UndefinedDivergenceError

log = logging.getLogger(__name__)

DEFAULT_BINS = 1000
LN2 = float(np.log(2.0))


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray


@dataclass(frozen=True)
class DistanceMatrix:
    codes: list[str]
    d: np.ndarray
    excluded: list[str] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["code", *self.codes])
            for c, row in zip(self.codes, self.d):
                w.writerow([c, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path) -> "DistanceMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        codes = rows[0][1:]
        d = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float).reshape(len(codes), len(codes))
        if [r[0] for r in rows[1:]] != codes:
            raise DegenerateError("distance matrix row and column labels differ")
        return cls(codes, d)


def _histogram(x: np.ndarray, edges: np.ndarray) -> Histogram:
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges, counts / counts.sum())


def shared_edges(samples: Sequence[np.ndarray], bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-width edges spanning the pooled range of all samples."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    lo = min(float(np.min(s)) for s in samples)
    hi = max(float(np.max(s)) for s in samples)
    if not hi > lo:
        raise DegenerateError("pooled samples have zero range")
    return np.linspace(lo, hi, bins + 1)


def shared_histograms(r1, r2, bins: int = DEFAULT_BINS) -> tuple[Histogram, Histogram]:
    a = np.asarray(r1, dtype=float)
    b = np.asarray(r2, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise DegenerateError("empty sample")
    edges = shared_edges([a, b], bins)
    return _histogram(a, edges), _histogram(b, edges)


def _check_edges(p: Histogram, q: Histogram) -> None:
    if p.edges.shape != q.edges.shape or not np.array_equal(p.edges, q.edges):
        raise IncompatibleHistogramError("histograms do not share bin edges")


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    nz = p > 0
    if np.any(q[nz] == 0):
        raise UndefinedDivergenceError("KL divergence undefined: q vanishes where p has mass")
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def kl_divergence(p: Histogram, q: Histogram) -> float:
    """sum p ln(p/q), with 0 ln(0/q) = 0."""
    _check_edges(p, q)
    return _kl(np.asarray(p.mass, float), np.asarray(q.mass, float))


def _js(p: np.ndarray, q: np.ndarray) -> float:
    m = 0.5 * (p + q)
    js = 0.5 * _kl(p, m) + 0.5 * _kl(q, m)
    return min(max(js, 0.0), LN2)


def js_divergence(p: Histogram, q: Histogram) -> float:
    """Jensen-Shannon divergence against the midpoint mixture."""
    _check_edges(p, q)
    return _js(np.asarray(p.mass, float), np.asarray(q.mass, float))


def similarity_distance(r1, r2, bins: int = DEFAULT_BINS) -> float:
    p, q = shared_histograms(r1, r2, bins)
    return float(np.sqrt(js_divergence(p, q)))


def distance_matrix(returns: Mapping[str, np.ndarray], bins: int = DEFAULT_BINS,
                    binning: str = "pair") -> DistanceMatrix:
    """Pairwise similarity distances between currencies.

    ``binning="pair"`` pools the range of each pair separately;
    ``binning="global"`` uses one set of edges spanning every currency.
    Constant series are excluded with a warning.
    """
    samples = {c: np.asarray(v, dtype=float) for c, v in returns.items()}
    excluded = [c for c, v in samples.items() if len(v) == 0 or np.ptp(v) == 0]
    if excluded:
        log.warning("excluding degenerate currencies from distance matrix: %s", ", ".join(excluded))
    codes = [c for c in samples if c not in excluded]
    if len(codes) < 2:
        raise DegenerateError("need at least two usable currencies for a distance matrix")
    n = len(codes)
    d = np.zeros((n, n))
    if binning == "global":
        edges = shared_edges([samples[c] for c in codes], bins)
        hist = [_histogram(samples[c], edges).mass for c in codes]
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = np.sqrt(_js(hist[i], hist[j]))
    elif binning == "pair":
        for i in range(n):
            for j in range(i + 1, n):
                p, q = shared_histograms(samples[codes[i]], samples[codes[j]], bins)
                d[i, j] = d[j, i] = np.sqrt(_js(p.mass, q.mass))
    else:
        raise ValueError(f"unknown binning mode {binning!r}")
    return DistanceMatrix(codes, d, excluded)
