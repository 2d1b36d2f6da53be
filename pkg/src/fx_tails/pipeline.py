"""End-to-end analysis of a currency panel.

``run_analysis`` returns a plain JSON-serializable dict: the full-span scope
plus one scope per period, each with per-currency statistics, cross-sectional
fits, the distance matrix and the clustering.  Per-currency failures are
recorded under ``failures`` and never abort the run.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from . import clustering, macro, returns, scaling, similarity, synthetic, tails
from .errors import ConfigError, FxTailsError, SplitError, ValidationError
from .ingest import PricePanel, filter_coverage, load_metadata, load_price_panel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

BUNDLED = "bundled"
CCDF_POINTS = 100


@dataclass
class AnalysisConfig:
    panel: str = BUNDLED
    metadata: str | None = None
    gdp: str | None = None
    exports: str | None = None
    period_count: int = 3
    bins: int = similarity.DEFAULT_BINS
    binning: str = "pair"
    vr_lag: int = 10
    dfa_windows: list[int] | None = None
    dfa_profile: str = "log"
    linkage: str = "complete"
    cut_threshold: float | None = None
    tail_min: int = tails.MIN_TAIL
    tail_method: str = "ks"
    tail_quantile: float = 0.9
    year_start: int = 1995
    year_end: int = 2012
    theil_slots: int | None = macro.PRODUCT_SLOTS
    min_coverage: float = 0.8
    histogram_bins: int = 10
    output_dir: str = "fx_tails_report"
    seed: int = synthetic.BUNDLE_SEED

    def __post_init__(self):
        if self.period_count < 1:
            raise ConfigError("period_count must be >= 1")
        if self.bins < 2:
            raise ConfigError("bins must be >= 2")
        if self.binning not in ("pair", "global"):
            raise ConfigError(f"binning must be 'pair' or 'global', got {self.binning!r}")
        if self.vr_lag < 2:
            raise ConfigError("vr_lag must be >= 2")
        if self.dfa_profile not in ("log", "raw"):
            raise ConfigError(f"dfa_profile must be 'log' or 'raw', got {self.dfa_profile!r}")
        if self.linkage not in clustering.LINKAGES:
            raise ConfigError(f"linkage must be one of {clustering.LINKAGES}")
        if self.cut_threshold is not None and not self.cut_threshold > 0:
            raise ConfigError("cut_threshold must be positive")
        if self.tail_method not in ("ks", "quantile"):
            raise ConfigError(f"tail_method must be 'ks' or 'quantile', got {self.tail_method!r}")
        if not 0 < self.tail_quantile < 1:
            raise ConfigError("tail_quantile must lie in (0, 1)")
        if self.tail_min < 2:
            raise ConfigError("tail_min must be >= 2")
        if self.year_end < self.year_start:
            raise ConfigError("year_end precedes year_start")
        if not 0 <= self.min_coverage <= 1:
            raise ConfigError("min_coverage must lie in [0, 1]")
        if self.theil_slots is not None and self.theil_slots < 1:
            raise ConfigError("theil_slots must be positive (or omitted for per-country counts)")

    @property
    def years(self) -> range:
        return range(self.year_start, self.year_end + 1)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "AnalysisConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        if data.get("theil_slots") in ("nonzero", 0):
            data["theil_slots"] = None
        if base is not None:
            for key in ("panel", "metadata", "gdp", "exports", "output_dir"):
                v = data.get(key)
                if v and v != BUNDLED and not Path(v).is_absolute():
                    data[key] = str(base / v)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "AnalysisConfig":
        """Read a TOML config; relative paths resolve against the file's directory."""
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data.get("analysis", data), base=path.parent)


# ---------------------------------------------------------------------------
# Periods


def split_periods(panel: PricePanel, k: int) -> list[PricePanel]:
    """``k`` contiguous windows of floor(T/k) days; the remainder joins the last."""
    T = panel.n_days
    if k < 1:
        raise SplitError(f"period count must be >= 1, got {k}")
    if k > T:
        raise SplitError(f"cannot split {T} days into {k} periods")
    size = T // k
    rem = T - size * k
    if rem:
        log.warning("%d days do not divide into %d periods; %d extra day(s) go to the last period", T, k, rem)
    bounds = [(i * size, (i + 1) * size) for i in range(k)]
    bounds[-1] = (bounds[-1][0], T)
    return [panel.window(a, b) for a, b in bounds]


# ---------------------------------------------------------------------------
# Per-currency statistics


def _longest_finite_run(x: np.ndarray) -> np.ndarray:
    ok = np.isfinite(x)
    if ok.all():
        return x
    best, best_start, start = 0, 0, None
    for i, flag in enumerate(np.append(ok, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best:
                best, best_start = i - start, start
            start = None
    return x[best_start: best_start + best]


def thin_ccdf(ccdf: tails.CCDF, points: int = CCDF_POINTS) -> tuple[list[float], list[float]]:
    """Keep about ``points`` CCDF points at log-spaced ranks from the top."""
    m = len(ccdf.x)
    if m <= points:
        idx = np.arange(m)
    else:
        ranks = np.unique(np.round(np.geomspace(1, m, points)).astype(int))
        idx = np.sort(m - ranks)
    return ccdf.x[idx].tolist(), ccdf.pc[idx].tolist()


def analyze_currency(code: str, log_prices: np.ndarray, cfg: AnalysisConfig) -> tuple[dict, np.ndarray | None, list[dict]]:
    """Statistics for one currency; returns (record, normalized returns, failures)."""
    rec: dict[str, Any] = {"code": code}
    failures: list[dict] = []

    def fail(stage, exc):
        failures.append({"code": code, "stage": stage, "error": f"{type(exc).__name__}: {exc}"})
        log.warning("%s: %s failed: %s", code, stage, exc)

    R = returns.returns_from_log_prices(log_prices)
    rec["n_returns"] = int(len(R.values))
    norm = None
    try:
        norm = returns.normalize_returns(R)
        m = returns.moments(norm.values)
        rec["moments"] = m.as_dict()
    except FxTailsError as exc:
        fail("normalize", exc)
        rec["moments"] = None

    rec["tails"] = {}
    rec["ccdf"] = {}
    for side in ("positive", "negative"):
        rec["tails"][side] = None
        if norm is None:
            continue
        try:
            fit = tails.fit_tail(norm.values, side, method=cfg.tail_method,
                                 quantile=cfg.tail_quantile, min_tail=cfg.tail_min)
            rec["tails"][side] = fit.as_dict() | {"levy_stable": fit.levy_stable}
        except FxTailsError as exc:
            fail(f"tail_{side}", exc)
        s = tails.tail_samples(norm.values, side)
        if len(s):
            x, pc = thin_ccdf(tails.empirical_ccdf(s))
            rec["ccdf"][side] = {"x": x, "pc": pc}

    profile = _longest_finite_run(log_prices)
    if cfg.dfa_profile == "raw":
        profile = np.exp(profile)
    try:
        d = scaling.dfa(profile, cfg.dfa_windows)
        rec["dfa"] = {"gamma_dfa": d.exponent, "fit_r2": d.fit_r2,
                      "s": d.window_sizes.tolist(), "F": d.fluctuation.tolist(),
                      "profile": cfg.dfa_profile, "n": int(len(profile))}
    except FxTailsError as exc:
        fail("dfa", exc)
        rec["dfa"] = None

    contiguous = _longest_finite_run(np.diff(log_prices))
    try:
        v = scaling.variance_ratio(contiguous, cfg.vr_lag)
        rec["vr"] = {"vr": v.vr, "lag": v.lag, "mean_r": v.mean_r, "var_r": v.var_r}
    except FxTailsError as exc:
        fail("variance_ratio", exc)
        rec["vr"] = None
    return rec, (None if norm is None else norm.values), failures


# ---------------------------------------------------------------------------
# Cross-sectional fits


def _attempt(failures, stage, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except FxTailsError as exc:
        failures.append({"code": None, "stage": stage, "error": f"{type(exc).__name__}: {exc}"})
        log.warning("%s failed: %s", stage, exc)
        return None


def _as_dict(obj):
    return None if obj is None else (obj.as_dict() if hasattr(obj, "as_dict") else dataclasses.asdict(obj))


def cross_section(records: list[dict], cfg: AnalysisConfig, failures: list[dict]) -> dict:
    out: dict[str, Any] = {}
    fits = [tails.TailFit(**{k: v for k, v in r["tails"][side].items() if k != "levy_stable"})
            for r in records for side in ("positive", "negative") if r["tails"].get(side)]
    out["tail_summary"] = tails.tail_exponent_summary(fits, cfg.histogram_bins) if fits else {}
    out["levy_stable_counts"] = {
        side: {"stable": sum(1 for f in fits if f.side == side and f.levy_stable),
               "total": sum(1 for f in fits if f.side == side)}
        for side in ("positive", "negative")
    }

    out["kurtosis_exponent"] = {}
    for side in ("positive", "negative"):
        rows = [(r["code"], r["tails"][side]["gamma"], r["moments"]["kurtosis"])
                for r in records if r["moments"] and r["tails"].get(side) and r["moments"]["kurtosis"] > 1]
        fit = None
        if len(rows) >= 3:
            codes, g, k = zip(*rows)
            fit = _attempt(failures, f"kurtosis_exponent_{side}", tails.fit_kurtosis_exponent_relation, g, k, codes)
        out["kurtosis_exponent"][side] = _as_dict(fit)

    skew = {r["code"]: r["moments"]["skewness"] for r in records if r["moments"]}
    classes = {r["code"]: r.get("market_class") for r in records}
    out["skewness_by_class"] = returns.group_skewness(skew, classes)

    kurt = {r["code"]: r["moments"]["kurtosis"] for r in records if r["moments"]}
    mac: dict[str, Any] = {}
    for key, label in (("g_mean", "gdp"), ("theil_mean", "theil")):
        rows = [(r[key], kurt[r["code"]]) for r in records if r.get(key) and r["code"] in kurt]
        corr = power = None
        if len(rows) >= 3:
            x, y = zip(*rows)
            corr = _attempt(failures, f"correlation_{label}", macro.log_pearson, x, y)
            power = _attempt(failures, f"power_fit_{label}", macro.loglog_power_fit, x, y)
        mac[f"correlation_{label}"] = _as_dict(corr)
        mac[f"power_fit_{label}"] = _as_dict(power)
    rows = [(kurt[r["code"]], r["g_mean"], r["theil_mean"]) for r in records
            if r.get("g_mean") and r.get("theil_mean") and r["code"] in kurt]
    reg = None
    if len(rows) >= 4:
        a, g, t = zip(*rows)
        reg = _attempt(failures, "multilinear", macro.multilinear_fit, a, g, t)
    mac["multilinear"] = _as_dict(reg)
    out["macro"] = mac
    return out


def _cluster(norm: dict[str, np.ndarray], cfg: AnalysisConfig, failures: list[dict]) -> tuple[dict, dict]:
    try:
        D = similarity.distance_matrix(norm, cfg.bins, cfg.binning)
    except FxTailsError as exc:
        failures.append({"code": None, "stage": "similarity", "error": f"{type(exc).__name__}: {exc}"})
        return {"codes": [], "matrix": [], "excluded": sorted(norm)}, None
    sim = {"codes": D.codes, "matrix": D.d.tolist(), "excluded": D.excluded}
    dend = clustering.agglomerate(D.d, D.codes, cfg.linkage)
    if cfg.cut_threshold is None:
        th, cut = clustering.max_cluster_cut(dend)
    else:
        th, cut = cfg.cut_threshold, clustering.cut_threshold(dend, cfg.cut_threshold)
    clus = {
        "linkage": cfg.linkage,
        "dendrogram": dend.to_json(),
        "newick": clustering.export_newick(dend),
        "threshold": th,
        "threshold_rule": "max_nontrivial" if cfg.cut_threshold is None else "fixed",
        "clusters": cut.clusters,
        "n_nontrivial": cut.n_nontrivial,
    }
    return sim, clus


def analyze_scope(panel: PricePanel, label: str, cfg: AnalysisConfig,
                  indicators: dict[str, tuple[float | None, float | None]]) -> dict:
    scope: dict[str, Any] = {
        "label": label,
        "n_days": panel.n_days,
        "start": str(panel.dates[0]) if panel.n_days else None,
        "end": str(panel.dates[-1]) if panel.n_days else None,
    }
    failures: list[dict] = []
    records, norm = [], {}
    for meta in sorted(panel.currencies, key=lambda m: m.code):
        rec, r, fails = analyze_currency(meta.code, panel.row(meta.code), cfg)
        g, t = indicators.get(meta.code, (meta.g_mean, meta.theil_mean))
        rec.update(market_class=meta.market_class, regime=meta.regime, region=meta.region,
                   g_mean=g, theil_mean=t)
        records.append(rec)
        failures.extend(fails)
        if r is not None:
            norm[meta.code] = r
    scope["records"] = records
    scope.update(cross_section(records, cfg, failures))
    if len(norm) >= 2:
        scope["similarity"], scope["clustering"] = _cluster(norm, cfg, failures)
    else:
        scope["similarity"], scope["clustering"] = {"codes": [], "matrix": [], "excluded": sorted(norm)}, None
    scope["failures"] = failures
    return scope


# ---------------------------------------------------------------------------
# Driver


def load_inputs(cfg: AnalysisConfig) -> tuple[PricePanel, dict]:
    """Panel with metadata attached, plus {code: (g_mean, theil_mean)}."""
    if cfg.panel == BUNDLED:
        panel = synthetic.bundled_panel(seed=cfg.seed)
    else:
        panel = load_price_panel(cfg.panel)
    if cfg.metadata:
        panel = panel.with_metadata(load_metadata(cfg.metadata))
    indicators = {m.code: (m.g_mean, m.theil_mean) for m in panel.currencies}
    if cfg.gdp or cfg.exports:
        gdp = macro.load_gdp(cfg.gdp) if cfg.gdp else None
        exp = macro.load_exports(cfg.exports) if cfg.exports else None
        recs = macro.build_records(gdp, exp, cfg.years, cfg.theil_slots)
        for code, rec in recs.items():
            g0, t0 = indicators.get(code, (None, None))
            indicators[code] = (rec.g_mean if rec.g_mean is not None else g0,
                                rec.theil_mean if rec.theil_mean is not None else t0)
    return panel, indicators


def run_analysis(cfg: AnalysisConfig, panel: PricePanel | None = None,
                 indicators: dict | None = None) -> dict:
    """Full-span analysis plus one sub-report per period."""
    if panel is None:
        panel, indicators = load_inputs(cfg)
    indicators = indicators or {}
    if panel.n_currencies == 0:
        raise ValidationError("panel has no currencies")
    panel, excluded = filter_coverage(panel, cfg.min_coverage)
    report: dict[str, Any] = {
        "tool": "fx-tails",
        "version": __version__,
        "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.as_dict(),
        "panel": {
            "n_currencies": panel.n_currencies,
            "n_days": panel.n_days,
            "start": str(panel.dates[0]),
            "end": str(panel.dates[-1]),
            "excluded_low_coverage": excluded,
        },
    }
    report["full"] = analyze_scope(panel, "full", cfg, indicators)
    periods = []
    for i, sub in enumerate(split_periods(panel, cfg.period_count), start=1):
        periods.append(analyze_scope(sub, f"period_{i}", cfg, indicators))
    report["periods"] = periods
    return report


def scopes(report: dict) -> list[dict]:
    return [report["full"], *report["periods"]]
