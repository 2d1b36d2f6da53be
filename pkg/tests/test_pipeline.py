import json
import logging

import numpy as np
import pytest

from fx_tails.errors import ConfigError, SplitError
from fx_tails.pipeline import AnalysisConfig, run_analysis, scopes, split_periods, thin_ccdf
from fx_tails.report import SCOPE_FILES, dumps, load_report, manifest, render_report
from fx_tails.synthetic import SyntheticSpec, gen_synthetic_panel
from fx_tails.tails import empirical_ccdf


def small_panel(length=1200):
    specs = []
    for i in range(3):
        specs.append(SyntheticSpec("gaussian_random_walk", length, 10 + i, scale=0.005, code=f"DV{i}",
                                   market_class="developed", g_mean=40000.0 + 1000 * i, theil_mean=0.8 + 0.1 * i))
        specs.append(SyntheticSpec("student_t_returns", length, 20 + i, nu=2.5, scale=0.002, code=f"FR{i}",
                                   market_class="frontier", g_mean=900.0 + 100 * i, theil_mean=3.5 + 0.2 * i))
    return gen_synthetic_panel(specs)


@pytest.fixture(scope="module")
def small_report():
    logging.getLogger("fx_tails").setLevel(logging.ERROR)
    return run_analysis(AnalysisConfig(bins=200), panel=small_panel())


# -- periods -----------------------------------------------------------------------

def test_split_even():
    p = small_panel(6034)  # 6033 returns-worth of days + 1
    assert p.n_days == 6034
    parts = split_periods(p.window(0, 6033), 3)
    assert [q.n_days for q in parts] == [2011, 2011, 2011]


def test_split_remainder(caplog):
    p = small_panel(100).window(0, 10)
    with caplog.at_level(logging.WARNING):
        parts = split_periods(p, 3)
    assert [q.n_days for q in parts] == [3, 3, 4]
    assert "extra day" in caplog.text


def test_split_identity_and_concat():
    p = small_panel(300)
    assert split_periods(p, 1)[0] == p
    parts = split_periods(p, 4)
    np.testing.assert_array_equal(np.concatenate([q.dates for q in parts]), p.dates)
    np.testing.assert_array_equal(np.concatenate([q.log_prices for q in parts], axis=1), p.log_prices)
    with pytest.raises(SplitError):
        split_periods(p, 0)
    with pytest.raises(SplitError):
        split_periods(p.window(0, 5), 6)


def test_thin_ccdf_keeps_extremes(rng):
    c = empirical_ccdf(rng.pareto(2, size=5000) + 1)
    x, pc = thin_ccdf(c)
    assert len(x) <= 100
    assert x[-1] == c.x[-1] and pc[-1] == c.pc[-1]
    assert np.all(np.diff(x) > 0)


# -- config ------------------------------------------------------------------------

def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        AnalysisConfig(period_count=0)
    with pytest.raises(ConfigError):
        AnalysisConfig(linkage="ward")
    with pytest.raises(ConfigError):
        AnalysisConfig.from_dict({"bogus": 1})
    f = tmp_path / "c.toml"
    f.write_text('[analysis]\npanel = "p.csv"\nvr_lag = 5\ntheil_slots = "nonzero"\n')
    cfg = AnalysisConfig.load(f)
    assert cfg.panel == str(tmp_path / "p.csv") and cfg.vr_lag == 5 and cfg.theil_slots is None
    f.write_text("vr_lag = [")
    with pytest.raises(ConfigError):
        AnalysisConfig.load(f)
    with pytest.raises(ConfigError):
        AnalysisConfig.load(tmp_path / "missing.toml")


# -- runs -------------------------------------------------------------------------

def test_report_structure(small_report):
    assert [s["label"] for s in scopes(small_report)] == ["full", "period_1", "period_2", "period_3"]
    full = small_report["full"]
    assert [r["code"] for r in full["records"]] == sorted(r["code"] for r in full["records"])
    assert full["failures"] == []
    assert full["n_days"] == 1200
    assert sum(s["n_days"] for s in small_report["periods"]) == 1200
    assert full["clustering"]["n_nontrivial"] >= 1
    json.loads(dumps(small_report))


def test_run_deterministic(small_report):
    again = run_analysis(AnalysisConfig(bins=200), panel=small_panel())
    a, b = dict(small_report), dict(again)
    a.pop("generated_at"), b.pop("generated_at")
    assert dumps(a) == dumps(b)


def test_full_scope_independent_of_period_count(small_report):
    other = run_analysis(AnalysisConfig(bins=200, period_count=2), panel=small_panel())
    assert dumps(other["full"]) == dumps(small_report["full"])
    assert len(other["periods"]) == 2


def test_render_manifest(small_report, tmp_path):
    files = render_report(small_report, tmp_path / "out")
    assert len(files) == 1 + 4 * len(SCOPE_FILES)
    written = sorted(str(p.relative_to(tmp_path / "out")) for p in (tmp_path / "out").rglob("*") if p.is_file())
    assert written == sorted(manifest(small_report))
    first = {p: p.read_bytes() for p in files}
    render_report(load_report(tmp_path / "out" / "report.json"), tmp_path / "out")
    assert all(p.read_bytes() == b for p, b in first.items())
    header = (tmp_path / "out" / "full" / "records.csv").read_text().splitlines()[0]
    assert header.startswith("code,market_class")


def test_render_empty_period(tmp_path):
    p = small_panel(1200)
    # Second half of one currency missing, so a period loses it entirely.
    lp = p.log_prices.copy()
    lp[1:, 600:] = np.nan
    from fx_tails.ingest import PricePanel
    panel = PricePanel(p.currencies, p.dates, lp)
    rep = run_analysis(AnalysisConfig(bins=100, min_coverage=0.0, period_count=2), panel=panel)
    files = render_report(rep, tmp_path)
    assert all(f.exists() for f in files)
    per2 = tmp_path / "period_2"
    assert (per2 / "clusters.csv").read_text() == "code,cluster_id\n"
    assert (per2 / "dendrogram.nwk").read_text() == ""


def test_bundled_report_shape(bundled_report):
    full = bundled_report["full"]
    assert len(full["records"]) == 75
    assert full["failures"] == []
    assert bundled_report["panel"]["n_days"] == 6035
    mac = full["macro"]
    assert mac["correlation_gdp"]["n"] == 75
    assert mac["multilinear"]["n"] == 73
