"""Macroeconomic indicators and the cross-sectional fits of kurtosis on them."""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from . import _stats
from .errors import CoverageError, DegenerateError, DomainError, LengthError, ParseError, SingularDesignError

log = logging.getLogger(__name__)

PRODUCT_SLOTS = 777  # SITC four-digit product classes
DEFAULT_YEARS = range(1995, 2013)


@dataclass
class MacroRecord:
    code: str
    g_annual: dict[int, float] = field(default_factory=dict)
    exports_annual: dict[int, list[float]] = field(default_factory=dict)
    g_mean: float | None = None
    theil_mean: float | None = None


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    prefactor: float
    r2: float
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegressionFit:
    b0: float
    b1: float
    b2: float
    r2: float
    p: float
    n: int
    residuals: np.ndarray = field(repr=False, compare=False, default=None)

    def as_dict(self) -> dict:
        return {"b0": self.b0, "b1": self.b1, "b2": self.b2, "r2": self.r2, "p": self.p, "n": self.n}


def theil_index(exports: Sequence[float], M: int | None = PRODUCT_SLOTS) -> float:
    """(1/M) sum (x_i/xbar) ln(x_i/xbar) with xbar = sum(x)/M.

    ``exports`` lists the nonzero (or all) product values; unlisted slots up to
    ``M`` count as zero exports.  ``M=None`` uses the number of listed products.
    """
    x = np.asarray(exports, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("export values must be finite and non-negative")
    if M is None:
        x = x[x > 0]
        M = len(x)
    if M < 1:
        raise DomainError("M must be at least 1")
    if len(x) > M:
        raise DomainError(f"{len(x)} export values for only {M} product slots")
    total = float(x.sum())
    if total <= 0:
        raise DegenerateError("all exports are zero")
    s = x[x > 0] / (total / M)
    return float(np.sum(s * np.log(s)) / M)


def mean_indicator(annual: Mapping[int, float], years=DEFAULT_YEARS, label: str = "") -> float:
    """Arithmetic mean over the years present in ``years``; gaps are skipped."""
    years = list(years)
    present = [y for y in years if y in annual and annual[y] is not None and np.isfinite(annual[y])]
    if not present:
        raise CoverageError(f"{label or 'indicator'}: no data in {years[0]}-{years[-1]}")
    missing = len(years) - len(present)
    if missing:
        log.warning("%s: %d of %d years missing, averaging the rest", label or "indicator", missing, len(years))
    return float(np.mean([annual[y] for y in present]))


def _positive_logs(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    bad = np.flatnonzero(~(a > 0))
    if len(bad):
        raise DomainError(f"{name}[{bad[0]}] = {a[bad[0]]} is not positive")
    return np.log(a)


def log_pearson(x, y) -> CorrelationResult:
    """Pearson correlation of (ln x, ln y) with a two-sided t-test p-value."""
    lx, ly = _positive_logs(x, "x"), _positive_logs(y, "y")
    if len(lx) != len(ly):
        raise LengthError("x and y differ in length")
    if len(lx) < 3:
        raise LengthError(f"need at least 3 pairs, got {len(lx)}")
    rho, p = _stats.pearson(lx, ly)
    return CorrelationResult(rho, p, len(lx))


def loglog_power_fit(x, y) -> PowerFit:
    """y ~ prefactor * x**exponent by least squares on logs."""
    lx, ly = _positive_logs(x, "x"), _positive_logs(y, "y")
    if len(lx) != len(ly):
        raise LengthError("x and y differ in length")
    if len(lx) < 3:
        raise LengthError(f"need at least 3 pairs, got {len(lx)}")
    a, b, r2 = _stats.line_fit(lx, ly)
    return PowerFit(b, float(np.exp(a)), r2, len(lx))


def multilinear_fit(alpha4, g, theil, max_condition: float = 1e10) -> RegressionFit:
    """OLS of ln(kurtosis) on ln(g) and ln(Theil) with an intercept.

    The p-value is from the overall F statistic with (2, n-3) degrees of freedom.
    """
    y = _positive_logs(alpha4, "alpha4")
    x1 = _positive_logs(g, "g")
    x2 = _positive_logs(theil, "theil")
    n = len(y)
    if not (len(x1) == len(x2) == n):
        raise LengthError("inputs differ in length")
    if n < 4:
        raise LengthError(f"need at least 4 observations, got {n}")
    X = np.column_stack([np.ones(n), x1, x2])
    # Condition number of the column-scaled design; scaling keeps unit choice out of it.
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0) or np.linalg.cond(X / norms) > max_condition:
        raise SingularDesignError("predictors are collinear")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    dy = y - y.mean()
    ss_tot = float(dy @ dy)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    if r2 >= 1.0 or ss_res <= ss_tot * 1e-28:
        p = _stats.P_FLOOR
    else:
        F = (r2 / 2) / ((1 - r2) / (n - 3))
        p = max(float(stats.f.sf(F, 2, n - 3)), _stats.P_FLOOR)
    return RegressionFit(float(coef[0]), float(coef[1]), float(coef[2]), r2, p, n, resid)


# ---------------------------------------------------------------------------
# Files


def _rows(path, required: Sequence[str]):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(required) <= {f.strip() for f in reader.fieldnames}:
            raise ParseError(f"header must contain {list(required)}", 1, path)
        for rec in reader:
            yield reader.line_num, {k.strip(): (v or "").strip() for k, v in rec.items() if k}


def load_gdp(path) -> dict[str, dict[int, float]]:
    """``code,year,gdp_per_capita`` -> {code: {year: value}}."""
    out: dict[str, dict[int, float]] = {}
    for line, rec in _rows(path, ("code", "year", "gdp_per_capita")):
        if not rec["gdp_per_capita"]:
            continue
        try:
            year, v = int(rec["year"]), float(rec["gdp_per_capita"])
        except ValueError as exc:
            raise ParseError(str(exc), line, path) from None
        if v < 0:
            raise ParseError(f"negative GDP for {rec['code']} in {year}", line, path)
        out.setdefault(rec["code"], {})[year] = v
    return out


def load_exports(path) -> dict[str, dict[int, list[float]]]:
    """``code,year,product_id,value_usd`` -> {code: {year: [values]}}."""
    out: dict[str, dict[int, dict[str, float]]] = {}
    for line, rec in _rows(path, ("code", "year", "product_id", "value_usd")):
        try:
            year, v = int(rec["year"]), float(rec["value_usd"] or 0.0)
        except ValueError as exc:
            raise ParseError(str(exc), line, path) from None
        if v < 0:
            raise ParseError(f"negative export value for {rec['code']} in {year}", line, path)
        slot = out.setdefault(rec["code"], {}).setdefault(year, {})
        slot[rec["product_id"]] = slot.get(rec["product_id"], 0.0) + v
    return {c: {y: list(p.values()) for y, p in years.items()} for c, years in out.items()}


def build_records(gdp=None, exports=None, years=DEFAULT_YEARS, M: int | None = PRODUCT_SLOTS) -> dict[str, MacroRecord]:
    """Per-country averages; a country missing one indicator keeps ``None`` there."""
    gdp = gdp or {}
    exports = exports or {}
    out = {}
    for code in sorted(set(gdp) | set(exports)):
        rec = MacroRecord(code, dict(gdp.get(code, {})), dict(exports.get(code, {})))
        if rec.g_annual:
            try:
                rec.g_mean = mean_indicator(rec.g_annual, years, f"{code} GDP")
            except CoverageError as exc:
                log.warning("%s", exc)
        if rec.exports_annual:
            annual = {}
            for y, vals in rec.exports_annual.items():
                try:
                    annual[y] = theil_index(vals, M)
                except (DegenerateError, DomainError) as exc:
                    log.warning("%s %d: %s", code, y, exc)
            try:
                rec.theil_mean = mean_indicator(annual, years, f"{code} Theil")
            except CoverageError as exc:
                log.warning("%s", exc)
        out[code] = rec
    return out
