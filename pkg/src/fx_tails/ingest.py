"""Loading, validating and aligning exchange-rate panels.

A panel holds one row per currency and one column per calendar day.  Missing
quotes are stored as NaN.  Log prices are the canonical storage: synthetic
heavy-tailed paths can wander far outside the range where ``exp`` is finite,
and every downstream statistic works on log prices anyway.  Panels read from
CSV also keep the exact price values so that save/load round-trips are
bit-exact.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import CoverageError, ParseError, SpliceError, ValidationError

log = logging.getLogger(__name__)

REGIMES = ("floating", "fixed_peg", "crawling_peg", "horizontal_band")
MARKET_CLASSES = ("developed", "emerging", "frontier")

# Minimum run of consecutive quotes a currency needs to be usable at all.
MIN_CONSECUTIVE = 3


@dataclass(frozen=True)
class CurrencyMeta:
    code: str
    regime: str | None = None
    market_class: str | None = None
    region: str | None = None
    # Optional mean GDP per capita and Theil index carried alongside the labels.
    g_mean: float | None = None
    theil_mean: float | None = None

    def __post_init__(self):
        if not isinstance(self.code, str) or len(self.code) != 3:
            raise ValidationError(f"currency code must be a 3-letter string, got {self.code!r}")
        if self.regime is not None and self.regime not in REGIMES:
            raise ValidationError(f"{self.code}: unknown regime {self.regime!r}")
        if self.market_class is not None and self.market_class not in MARKET_CLASSES:
            raise ValidationError(f"{self.code}: unknown market class {self.market_class!r}")


def _longest_run(mask: np.ndarray) -> int:
    best = run = 0
    for ok in mask:
        run = run + 1 if ok else 0
        best = max(best, run)
    return best


def _as_dates(dates) -> np.ndarray:
    out = np.asarray(dates, dtype="datetime64[D]")
    if out.ndim != 1:
        raise ValidationError("dates must be one-dimensional")
    return out


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Aligned daily exchange rates for N currencies over T days.

    ``log_prices`` is an ``(N, T)`` float array with NaN marking gaps.
    """

    currencies: tuple[CurrencyMeta, ...]
    dates: np.ndarray
    log_prices: np.ndarray
    _prices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        currencies = tuple(self.currencies)
        dates = _as_dates(self.dates)
        lp = np.array(self.log_prices, dtype=float, copy=True)
        if lp.ndim == 1:
            lp = lp[None, :]
        if lp.shape != (len(currencies), len(dates)):
            raise ValidationError(
                f"price matrix shape {lp.shape} does not match "
                f"{len(currencies)} currencies x {len(dates)} dates"
            )
        codes = [c.code for c in currencies]
        if len(set(codes)) != len(codes):
            dup = sorted({c for c in codes if codes.count(c) > 1})
            raise ValidationError(f"duplicate currency codes: {', '.join(dup)}")
        if len(dates) > 1 and not np.all(np.diff(dates.astype("int64")) > 0):
            bad = int(np.argmin(np.diff(dates.astype("int64")) > 0)) + 1
            raise ValidationError(f"dates not strictly increasing at position {bad} ({dates[bad]})")
        if np.isinf(lp).any():
            i, j = np.argwhere(np.isinf(lp))[0]
            raise ValidationError(f"{codes[i]} on {dates[j]}: price is not a finite positive number")
        for i, code in enumerate(codes):
            if _longest_run(~np.isnan(lp[i])) < MIN_CONSECUTIVE:
                raise ValidationError(
                    f"{code}: fewer than {MIN_CONSECUTIVE} consecutive observations"
                )
        lp.setflags(write=False)
        dates.setflags(write=False)
        object.__setattr__(self, "currencies", currencies)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "log_prices", lp)
        if self._prices is not None:
            p = np.array(self._prices, dtype=float, copy=True).reshape(lp.shape)
            p.setflags(write=False)
            object.__setattr__(self, "_prices", p)

    @classmethod
    def from_prices(cls, currencies, dates, prices) -> "PricePanel":
        p = np.array(prices, dtype=float)
        if p.ndim == 1:
            p = p[None, :]
        dates = _as_dates(dates)
        bad = ~np.isnan(p) & ~(p > 0)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            code = currencies[i].code if i < len(currencies) else f"row {i}"
            raise ValidationError(f"{code} on {dates[j]}: non-positive price {p[i, j]!r}")
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.log(p)
        return cls(tuple(currencies), dates, lp, _prices=p)

    # -- accessors -------------------------------------------------------
    @property
    def codes(self) -> list[str]:
        return [c.code for c in self.currencies]

    @property
    def n_currencies(self) -> int:
        return len(self.currencies)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def prices(self) -> np.ndarray:
        if self._prices is not None:
            return self._prices
        with np.errstate(over="ignore"):
            return np.exp(self.log_prices)

    def index(self, code: str) -> int:
        try:
            return self.codes.index(code)
        except ValueError:
            raise KeyError(code) from None

    def row(self, code: str) -> np.ndarray:
        return self.log_prices[self.index(code)]

    def coverage(self) -> np.ndarray:
        """Fraction of non-missing days per currency."""
        if self.n_days == 0:
            return np.zeros(self.n_currencies)
        return np.mean(~np.isnan(self.log_prices), axis=1)

    def __eq__(self, other):
        if not isinstance(other, PricePanel):
            return NotImplemented
        return (
            self.currencies == other.currencies
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.log_prices, other.log_prices, equal_nan=True)
        )

    __hash__ = None

    # -- derived panels --------------------------------------------------
    def select(self, codes: Iterable[str]) -> "PricePanel":
        idx = [self.index(c) for c in codes]
        return PricePanel(
            tuple(self.currencies[i] for i in idx),
            self.dates,
            self.log_prices[idx],
            None if self._prices is None else self._prices[idx],
        )

    def window(self, start: int, stop: int) -> "PricePanel":
        """Columns ``[start, stop)``; currencies left without a usable run are dropped."""
        lp = self.log_prices[:, start:stop]
        keep = [i for i in range(self.n_currencies) if _longest_run(~np.isnan(lp[i])) >= MIN_CONSECUTIVE]
        dropped = [self.currencies[i].code for i in range(self.n_currencies) if i not in keep]
        if dropped:
            log.warning("window %d:%d drops currencies without data: %s", start, stop, ", ".join(dropped))
        return PricePanel(
            tuple(self.currencies[i] for i in keep),
            self.dates[start:stop],
            lp[keep],
            None if self._prices is None else self._prices[keep, start:stop],
        )

    def with_metadata(self, meta: Mapping[str, CurrencyMeta]) -> "PricePanel":
        """Replace bare currency entries by the matching metadata records."""
        cur = tuple(meta.get(c.code, c) for c in self.currencies)
        missing = [c.code for c in self.currencies if c.code not in meta]
        if missing:
            log.warning("no metadata for: %s", ", ".join(missing))
        return replace(self, currencies=cur)


# ---------------------------------------------------------------------------
# CSV I/O


def _parse_date(text: str, line: int, path) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(text.strip()), "D")
    except ValueError:
        raise ParseError(f"invalid ISO date {text!r}", line, path) from None


def load_price_panel(path) -> PricePanel:
    """Read a panel CSV: ``date`` column followed by one column per currency."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1, path) from None
        header = [h.strip() for h in header]
        if not header or header[0].lower() != "date":
            raise ParseError("first column must be 'date'", 1, path)
        codes = header[1:]
        if not codes:
            raise ParseError("no currency columns", 1, path)
        dates, rows = [], []
        for rec in reader:
            line = reader.line_num
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}", line, path)
            dates.append(_parse_date(rec[0], line, path))
            vals = []
            for code, cell in zip(codes, rec[1:]):
                cell = cell.strip()
                if not cell:
                    vals.append(np.nan)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"{code}: not a number {cell!r}", line, path) from None
                if not v > 0 or not np.isfinite(v):
                    raise ValidationError(f"{path}:{line}: {code} on {dates[-1]}: non-positive price {cell!r}")
                vals.append(v)
            rows.append(vals)
    dates_arr = np.array(dates, dtype="datetime64[D]")
    if len(dates_arr) > 1:
        steps = np.diff(dates_arr.astype("int64"))
        if not np.all(steps > 0):
            k = int(np.argmin(steps > 0)) + 1
            raise ValidationError(f"{path}: dates out of order or duplicated at {dates_arr[k]}")
    prices = np.array(rows, dtype=float).T if rows else np.empty((len(codes), 0))
    currencies = tuple(CurrencyMeta(c) for c in codes)
    return PricePanel.from_prices(currencies, dates_arr, prices)


def _fmt_price(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def save_price_panel(panel: PricePanel, path) -> None:
    prices = panel.prices
    if np.isinf(prices).any():
        raise ValidationError("panel has prices outside floating-point range; cannot write CSV")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.codes])
        for j, d in enumerate(panel.dates):
            w.writerow([str(d), *(_fmt_price(v) for v in prices[:, j])])


def _opt_float(text: str | None) -> float | None:
    if text is None:
        return None
    text = text.strip()
    if not text or text == "-":
        return None
    return float(text)


def load_metadata(path) -> dict[str, CurrencyMeta]:
    """Read ``code,regime,market_class,region[,g_mean,theil_mean]``."""
    path = Path(path)
    out: dict[str, CurrencyMeta] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"code", "regime", "market_class", "region"}
        if reader.fieldnames is None or not need <= {f.strip() for f in reader.fieldnames}:
            raise ParseError(f"metadata header must contain {sorted(need)}", 1, path)
        for rec in reader:
            rec = {k.strip(): (v or "").strip() for k, v in rec.items() if k}
            line = reader.line_num
            try:
                meta = CurrencyMeta(
                    code=rec["code"],
                    regime=rec["regime"] or None,
                    market_class=(rec["market_class"].lower() or None),
                    region=rec["region"] or None,
                    g_mean=_opt_float(rec.get("g_mean")),
                    theil_mean=_opt_float(rec.get("theil_mean")),
                )
            except ValueError as exc:
                raise ParseError(str(exc), line, path) from None
            if meta.code in out:
                raise ParseError(f"duplicate code {meta.code}", line, path)
            out[meta.code] = meta
    return out


def save_metadata(meta: Iterable[CurrencyMeta], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "regime", "market_class", "region", "g_mean", "theil_mean"])
        for m in meta:
            w.writerow([
                m.code, m.regime or "", m.market_class or "", m.region or "",
                "" if m.g_mean is None else repr(m.g_mean),
                "" if m.theil_mean is None else repr(m.theil_mean),
            ])


def reference_metadata() -> dict[str, CurrencyMeta]:
    """The 75-currency reference table shipped with the package."""
    ref = resources.files("fx_tails") / "data" / "reference_currencies.csv"
    with resources.as_file(ref) as p:
        return load_metadata(p)


# ---------------------------------------------------------------------------
# Alignment


def align_panels(panels: Sequence[PricePanel]) -> PricePanel:
    """Outer-join panels on dates; days absent from a panel become gaps."""
    if not panels:
        raise ValidationError("nothing to align")
    all_dates = np.unique(np.concatenate([p.dates for p in panels]))
    currencies, rows = [], []
    for p in panels:
        pos = np.searchsorted(all_dates, p.dates)
        block = np.full((p.n_currencies, len(all_dates)), np.nan)
        block[:, pos] = p.log_prices
        currencies.extend(p.currencies)
        rows.append(block)
    return PricePanel(tuple(currencies), all_dates, np.vstack(rows))


def filter_coverage(panel: PricePanel, min_coverage: float = 0.8) -> tuple[PricePanel, list[str]]:
    """Drop currencies quoted on fewer than ``min_coverage`` of the panel's days."""
    cov = panel.coverage()
    keep = [c for c, f in zip(panel.codes, cov) if f >= min_coverage]
    dropped = [c for c, f in zip(panel.codes, cov) if f < min_coverage]
    if dropped:
        log.warning("excluding low-coverage currencies (<%.0f%%): %s", 100 * min_coverage, ", ".join(dropped))
    if not keep:
        raise CoverageError("no currency meets the coverage threshold")
    return panel.select(keep), dropped


# ---------------------------------------------------------------------------
# Splicing


class PriceSeries(NamedTuple):
    dates: np.ndarray
    values: np.ndarray

    @classmethod
    def make(cls, dates, values) -> "PriceSeries":
        d = _as_dates(dates)
        v = np.asarray(values, dtype=float)
        if d.shape != v.shape:
            raise ValidationError("dates and values differ in length")
        return cls(d, v)


def splice_series(primary: PriceSeries, fallback: PriceSeries, switch_date) -> PriceSeries:
    """Use ``fallback`` strictly before ``switch_date`` and ``primary`` from it on.

    This is how a successor currency is stitched onto its predecessor (the euro
    onto the ECU on 1999-01-01).
    """
    primary = PriceSeries.make(*primary)
    fallback = PriceSeries.make(*fallback)
    switch = np.datetime64(switch_date, "D")
    before = fallback.dates < switch
    after = primary.dates >= switch
    at = primary.dates == switch
    if not at.any() or np.isnan(primary.values[at]).all():
        raise SpliceError(f"primary series has no quote on the switch date {switch}")
    if not before.any() or np.isnan(fallback.values[before]).all():
        raise SpliceError(f"fallback series has no quotes before {switch}")
    dates = np.concatenate([fallback.dates[before], primary.dates[after]])
    values = np.concatenate([fallback.values[before], primary.values[after]])
    return PriceSeries(dates, values)
