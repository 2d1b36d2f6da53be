"""Writing a report to disk as JSON plus plot-ready CSV files.

Manifest (``<scope>`` is ``full`` and ``period_1`` ... ``period_k``)::

    report.json
    <scope>/records.csv            per-currency scatter table
    <scope>/tail_fits.json         one object per currency and side
    <scope>/scaling.json           DFA exponent and variance ratio per currency
    <scope>/cross_section.json     exponent summary, kurtosis fits, macro fits
    <scope>/ccdf.csv               code,side,x,pc
    <scope>/dfa.csv                code,s,F
    <scope>/distance_matrix.csv
    <scope>/dendrogram.nwk
    <scope>/dendrogram.json
    <scope>/dendrogram_merges.csv  step,a,b,height,size
    <scope>/clusters.csv           code,cluster_id
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .pipeline import scopes

SCOPE_FILES = (
    "records.csv", "tail_fits.json", "scaling.json", "cross_section.json", "ccdf.csv",
    "dfa.csv", "distance_matrix.csv", "dendrogram.nwk", "dendrogram.json",
    "dendrogram_merges.csv", "clusters.csv",
)

RECORD_COLUMNS = (
    "code", "market_class", "regime", "region", "g_mean", "theil_mean", "n_returns",
    "mean", "std", "skewness", "kurtosis", "gamma_pos", "gamma_neg", "alpha_pos", "alpha_neg",
    "gamma_dfa", "vr",
)


def manifest(report: dict) -> list[str]:
    files = ["report.json"]
    for s in scopes(report):
        files.extend(f"{s['label']}/{name}" for name in SCOPE_FILES)
    return files


def dumps(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True, allow_nan=False)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n")


def _record_row(r: dict) -> list:
    m = r.get("moments") or {}
    tp = r["tails"].get("positive") or {}
    tn = r["tails"].get("negative") or {}
    d = r.get("dfa") or {}
    v = r.get("vr") or {}
    return [
        r["code"], r.get("market_class"), r.get("regime"), r.get("region"), r.get("g_mean"),
        r.get("theil_mean"), r.get("n_returns"), m.get("mean"), m.get("std"), m.get("skewness"),
        m.get("kurtosis"), tp.get("gamma"), tn.get("gamma"), tp.get("alpha"), tn.get("alpha"),
        d.get("gamma_dfa"), v.get("vr"),
    ]


def render_scope(scope: dict, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    recs = scope["records"]
    _write_csv(outdir / "records.csv", RECORD_COLUMNS, (_record_row(r) for r in recs))
    _write_json(outdir / "tail_fits.json", [
        {"code": r["code"], **{k: v for k, v in r["tails"][side].items() if k != "levy_stable"}}
        for r in recs for side in ("positive", "negative") if r["tails"].get(side)
    ])
    _write_json(outdir / "scaling.json", [
        {"code": r["code"],
         "gamma_dfa": (r.get("dfa") or {}).get("gamma_dfa"),
         "fit_r2": (r.get("dfa") or {}).get("fit_r2"),
         "vr": (r.get("vr") or {}).get("vr"),
         "lag": (r.get("vr") or {}).get("lag")}
        for r in recs
    ])
    keys = ("label", "start", "end", "n_days", "tail_summary", "levy_stable_counts",
            "kurtosis_exponent", "skewness_by_class", "macro", "failures")
    _write_json(outdir / "cross_section.json", {k: scope.get(k) for k in keys})
    _write_csv(outdir / "ccdf.csv", ("code", "side", "x", "pc"), (
        (r["code"], side, x, pc)
        for r in recs for side, c in sorted(r.get("ccdf", {}).items())
        for x, pc in zip(c["x"], c["pc"])
    ))
    _write_csv(outdir / "dfa.csv", ("code", "s", "F"), (
        (r["code"], s, f) for r in recs if r.get("dfa") for s, f in zip(r["dfa"]["s"], r["dfa"]["F"])
    ))
    sim = scope.get("similarity") or {"codes": [], "matrix": []}
    _write_csv(outdir / "distance_matrix.csv", ("code", *sim["codes"]),
               ([c, *row] for c, row in zip(sim["codes"], sim["matrix"])))
    clus = scope.get("clustering")
    (outdir / "dendrogram.nwk").write_text((clus["newick"] + "\n") if clus else "")
    dend = clus["dendrogram"] if clus else {"leaves": [], "merges": []}
    _write_json(outdir / "dendrogram.json", dend)
    sizes = [1] * len(dend["leaves"])
    merge_rows = []
    for k, m in enumerate(dend["merges"]):
        sizes.append(sizes[m["a"]] + sizes[m["b"]])
        merge_rows.append((k, m["a"], m["b"], m["height"], sizes[-1]))
    _write_csv(outdir / "dendrogram_merges.csv", ("step", "a", "b", "height", "size"), merge_rows)
    labels = sorted((code, k) for k, members in enumerate(clus["clusters"] if clus else [])
                    for code in members)
    _write_csv(outdir / "clusters.csv", ("code", "cluster_id"), labels)


def render_report(report: dict, outdir) -> list[Path]:
    """Write every manifest file under ``outdir``; existing files are overwritten."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_text(dumps(report) + "\n")
        for s in scopes(report):
            render_scope(s, outdir / s["label"])
    except OSError as exc:
        raise OSError(f"cannot write report to {outdir}: {exc}") from exc
    return [outdir / f for f in manifest(report)]


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())
