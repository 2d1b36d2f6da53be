import json

import pytest

from fx_tails.cli import main
from fx_tails.ingest import load_price_panel

SPEC = """
[DVA]
generator = gaussian_random_walk
scale = 0.005
length = 900
seed = 1
market_class = developed

[DVB]
generator = gaussian_random_walk
scale = 0.005
length = 900
seed = 2
market_class = developed

[FRA]
generator = student_t_returns
nu = 2.5
scale = 0.002
length = 900
seed = 3
market_class = frontier

[FRB]
generator = student_t_returns
nu = 2.5
scale = 0.002
length = 900
seed = 4
market_class = frontier
"""


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("syn")
    spec = d / "spec.ini"
    spec.write_text(SPEC)
    assert main(["synth", "--spec", str(spec), "--out", str(d)]) == 0
    return d


def test_synth_outputs(synth_dir):
    for name in ("panel.csv", "metadata.csv", "synth_spec.ini", "config.toml"):
        assert (synth_dir / name).exists()
    p = load_price_panel(synth_dir / "panel.csv")
    assert p.codes == ["DVA", "DVB", "FRA", "FRB"] and p.n_days == 900


def test_ingest_check(synth_dir, capsys):
    assert main(["ingest-check", "--panel", str(synth_dir / "panel.csv")]) == 0
    assert "4 currencies, 900 days" in capsys.readouterr().out


def test_tails_and_scaling(synth_dir, tmp_path):
    out = tmp_path / "t.json"
    assert main(["tails", "--panel", str(synth_dir / "panel.csv"), "--method", "quantile", "--quantile", "0.8",
                 "--out", str(out)]) == 0
    fits = json.loads(out.read_text())
    assert len(fits) == 8 and all("gamma" in f for f in fits)
    assert main(["scaling", "--panel", str(synth_dir / "panel.csv"), "--period", "2",
                 "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["code"] for r in rows] == ["DVA", "DVB", "FRA", "FRB"]
    assert all(r["lag"] == 10 and r["vr"] > 0 for r in rows)


def test_similarity_then_cluster(synth_dir, tmp_path, capsys):
    m = tmp_path / "d.csv"
    assert main(["similarity", "--panel", str(synth_dir / "panel.csv"), "--bins", "50", "--out", str(m)]) == 0
    nwk, cut = tmp_path / "t.nwk", tmp_path / "c.csv"
    assert main(["cluster", "--matrix", str(m), "--newick", str(nwk), "--cut-csv", str(cut)]) == 0
    assert nwk.read_text().endswith(";\n")
    assert cut.read_text().splitlines()[0] == "code,cluster_id"
    assert "clusters" in capsys.readouterr().err


def test_macro_command(tmp_path):
    g = tmp_path / "g.csv"
    g.write_text("code,year,gdp_per_capita\nAAA,2000,10\nAAA,2001,30\n")
    out = tmp_path / "m.json"
    assert main(["macro", "--gdp", str(g), "--years", "2000-2001", "--out", str(out)]) == 0
    assert json.loads(out.read_text()) == [{"code": "AAA", "g_mean": 20.0, "theil_mean": None}]
    assert main(["macro", "--gdp", str(g), "--years", "2001-1999"]) == 2
    assert main(["macro"]) == 2


def test_run_and_report(synth_dir, tmp_path):
    out = tmp_path / "rep"
    assert main(["run", "--config", str(synth_dir / "config.toml"), "--out", str(out)]) == 0
    assert (out / "report.json").exists() and (out / "period_3" / "clusters.csv").exists()
    again = tmp_path / "again"
    assert main(["report", "--report", str(out / "report.json"), "--out", str(again)]) == 0
    assert (again / "full" / "records.csv").read_bytes() == (out / "full" / "records.csv").read_bytes()
    one = tmp_path / "one"
    assert main(["run", "--config", str(synth_dir / "config.toml"), "--out", str(one), "--period", "2"]) == 0
    assert (one / "period_2").is_dir() and not (one / "period_1").exists()


def test_exit_codes(tmp_path, synth_dir):
    assert main(["ingest-check", "--panel", str(tmp_path / "missing.csv")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("date,AAA\n2001-01-01,1.0\n2001-01-02,-3\n")
    assert main(["tails", "--panel", str(bad)]) == 1
    cfg = tmp_path / "c.toml"
    cfg.write_text("[analysis]\nlinkage = 'ward'\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 2
    assert main(["scaling", "--panel", str(synth_dir / "panel.csv"), "--period", "9"]) == 2
    junk = tmp_path / "r.json"
    junk.write_text("{")
    assert main(["report", "--report", str(junk), "--out", str(tmp_path / "x")]) == 1
    with pytest.raises(SystemExit):
        main(["nonsense"])
