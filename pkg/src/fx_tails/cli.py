"""Command-line interface: ``fx-tails <subcommand>``.

Exit status is 0 on success, 1 on unreadable or invalid input data and 2 on
configuration errors.  Log verbosity follows the ``FX_TAILS_LOG`` environment
variable (DEBUG, INFO, WARNING, ERROR; default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, clustering, macro, pipeline, report, returns, similarity, synthetic, tails
from .errors import ConfigError, FxTailsError
from .ingest import filter_coverage, save_metadata, save_price_panel

log = logging.getLogger("fx_tails")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2


def _panel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--panel", default=pipeline.BUNDLED,
                   help="panel CSV, or 'bundled' for the built-in synthetic panel (default)")
    p.add_argument("--metadata", help="metadata CSV (code,regime,market_class,region[,g_mean,theil_mean])")
    p.add_argument("--period", type=int, default=0, help="analyse period N (1-based) instead of the full span")
    p.add_argument("--periods", type=int, default=3, help="number of periods for --period (default 3)")
    p.add_argument("--min-coverage", type=float, default=0.8)


def _out_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fx-tails", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fx-tails {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full analysis driven by a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the configured output directory")
    p.add_argument("--period", type=int, default=0, help="render only period N (0 = everything)")

    p = sub.add_parser("ingest-check", help="validate a panel and report coverage")
    _panel_args(p)

    p = sub.add_parser("tails", help="power-law tail fits per currency (JSON)")
    _panel_args(p)
    p.add_argument("--method", choices=("ks", "quantile"), default="ks")
    p.add_argument("--quantile", type=float, default=0.9)
    p.add_argument("--min-tail", type=int, default=tails.MIN_TAIL)
    _out_arg(p)

    p = sub.add_parser("scaling", help="DFA exponent and variance ratio per currency (JSON)")
    _panel_args(p)
    p.add_argument("--lag", type=int, default=10)
    p.add_argument("--profile", choices=("log", "raw"), default="log")
    _out_arg(p)

    p = sub.add_parser("similarity", help="sqrt-JS distance matrix (CSV)")
    _panel_args(p)
    p.add_argument("--bins", type=int, default=similarity.DEFAULT_BINS)
    p.add_argument("--binning", choices=("pair", "global"), default="pair")
    _out_arg(p)

    p = sub.add_parser("cluster", help="hierarchical clustering of a distance matrix CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--linkage", choices=clustering.LINKAGES, default="complete")
    p.add_argument("--threshold", type=float, help="cut height (default: maximise non-trivial clusters)")
    p.add_argument("--newick", help="write the dendrogram here")
    p.add_argument("--cut-csv", help="write code,cluster_id here")

    p = sub.add_parser("macro", help="mean GDP per capita and Theil index per country (JSON)")
    p.add_argument("--gdp")
    p.add_argument("--exports")
    p.add_argument("--years", default="1995-2012", help="inclusive year range, e.g. 1995-2012")
    p.add_argument("--slots", default=str(macro.PRODUCT_SLOTS),
                   help="product slots M for the Theil index, or 'nonzero'")
    _out_arg(p)

    p = sub.add_parser("synth", help="write the bundled synthetic fixture (or a spec file's panel)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="INI spec file; default is the bundled 75-currency fixture")
    p.add_argument("--seed", type=int, default=synthetic.BUNDLE_SEED)

    p = sub.add_parser("report", help="re-render files from a saved report.json")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    return ap


# ---------------------------------------------------------------------------


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_panel(args):
    cfg = pipeline.AnalysisConfig(panel=args.panel, metadata=args.metadata)
    panel, _ = pipeline.load_inputs(cfg)
    panel, _ = filter_coverage(panel, args.min_coverage)
    if args.period:
        parts = pipeline.split_periods(panel, args.periods)
        if not 1 <= args.period <= len(parts):
            raise ConfigError(f"--period must lie in 1..{len(parts)}")
        panel = parts[args.period - 1]
    return panel


def _normalized(panel, code):
    R = returns.returns_from_log_prices(panel.row(code))
    return returns.normalize_returns(R).values


def cmd_run(args) -> int:
    cfg = pipeline.AnalysisConfig.load(args.config)
    if args.out:
        cfg.output_dir = args.out
    rep = pipeline.run_analysis(cfg)
    if args.period:
        if not 1 <= args.period <= len(rep["periods"]):
            raise ConfigError(f"--period must lie in 1..{len(rep['periods'])}")
        rep["periods"] = [rep["periods"][args.period - 1]]
    files = report.render_report(rep, cfg.output_dir)
    n_fail = sum(len(s["failures"]) for s in pipeline.scopes(rep))
    print(f"wrote {len(files)} files to {cfg.output_dir} ({n_fail} recorded stage failures)")
    return EXIT_OK


def cmd_ingest_check(args) -> int:
    cfg = pipeline.AnalysisConfig(panel=args.panel, metadata=args.metadata)
    panel, _ = pipeline.load_inputs(cfg)
    cov = panel.coverage()
    print(f"{panel.n_currencies} currencies, {panel.n_days} days "
          f"({panel.dates[0]} .. {panel.dates[-1]})")
    for code, c in zip(panel.codes, cov):
        flag = "" if c >= args.min_coverage else "  EXCLUDED (low coverage)"
        print(f"  {code}  coverage {c:6.1%}{flag}")
    return EXIT_OK


def cmd_tails(args) -> int:
    panel = _load_panel(args)
    out = []
    for code in sorted(panel.codes):
        r = _normalized(panel, code)
        for side in ("positive", "negative"):
            try:
                fit = tails.fit_tail(r, side, method=args.method, quantile=args.quantile, min_tail=args.min_tail)
                out.append({"code": code, **fit.as_dict()})
            except FxTailsError as exc:
                out.append({"code": code, "side": side, "error": str(exc)})
    _emit(json.dumps(out, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_scaling(args) -> int:
    panel = _load_panel(args)
    out = []
    cfg = pipeline.AnalysisConfig(vr_lag=args.lag, dfa_profile=args.profile)
    for code in sorted(panel.codes):
        rec, _, fails = pipeline.analyze_currency(code, panel.row(code), cfg)
        entry = {"code": code,
                 "gamma_dfa": (rec["dfa"] or {}).get("gamma_dfa"),
                 "fit_r2": (rec["dfa"] or {}).get("fit_r2"),
                 "vr": (rec["vr"] or {}).get("vr"), "lag": args.lag}
        errors = [f["error"] for f in fails if f["stage"] in ("dfa", "variance_ratio")]
        if errors:
            entry["errors"] = errors
        out.append(entry)
    _emit(json.dumps(out, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_similarity(args) -> int:
    panel = _load_panel(args)
    r = {}
    for code in sorted(panel.codes):
        try:
            r[code] = _normalized(panel, code)
        except FxTailsError as exc:
            log.warning("%s skipped: %s", code, exc)
    D = similarity.distance_matrix(r, args.bins, args.binning)
    if args.out:
        D.to_csv(args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["code", *D.codes])
        for c, row in zip(D.codes, D.d):
            w.writerow([c, *(repr(float(v)) for v in row)])
    return EXIT_OK


def cmd_cluster(args) -> int:
    D = similarity.DistanceMatrix.from_csv(args.matrix)
    dend = clustering.agglomerate(D.d, D.codes, args.linkage)
    if args.threshold is None:
        th, cut = clustering.max_cluster_cut(dend)
    else:
        th, cut = args.threshold, clustering.cut_threshold(dend, args.threshold)
    nwk = clustering.export_newick(dend)
    if args.newick:
        Path(args.newick).write_text(nwk + "\n")
    else:
        print(nwk)
    if args.cut_csv:
        clustering.write_cut_csv(cut, args.cut_csv)
    print(f"threshold {th:.6g}: {len(cut.clusters)} clusters, {cut.n_nontrivial} with >= 2 members",
          file=sys.stderr)
    return EXIT_OK


def _year_range(text: str) -> range:
    try:
        a, b = (int(x) for x in text.split("-"))
    except ValueError:
        raise ConfigError(f"bad year range {text!r}; expected e.g. 1995-2012") from None
    if b < a:
        raise ConfigError(f"bad year range {text!r}")
    return range(a, b + 1)


def cmd_macro(args) -> int:
    if not args.gdp and not args.exports:
        raise ConfigError("give --gdp and/or --exports")
    slots = None if args.slots == "nonzero" else int(args.slots)
    recs = macro.build_records(
        macro.load_gdp(args.gdp) if args.gdp else None,
        macro.load_exports(args.exports) if args.exports else None,
        _year_range(args.years), slots,
    )
    out = [{"code": c, "g_mean": r.g_mean, "theil_mean": r.theil_mean} for c, r in sorted(recs.items())]
    _emit(json.dumps(out, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.spec:
        specs, start = synthetic.parse_spec_file(args.spec)
        panel = synthetic.gen_synthetic_panel(specs, start)
    else:
        specs = synthetic.bundled_specs(seed=args.seed)
        start = synthetic.DEFAULT_START
        panel = synthetic.gen_synthetic_panel(specs, start)
        gdp_rows, export_rows = synthetic.bundled_macro(args.seed)
        with (out / "gdp.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["code", "year", "gdp_per_capita"])
            w.writerows(gdp_rows)
        with (out / "exports.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["code", "year", "product_id", "value_usd"])
            w.writerows(export_rows)
    synthetic.write_spec_file(specs, out / "synth_spec.ini", start)
    save_price_panel(panel, out / "panel.csv")
    save_metadata([s.meta() for s in specs], out / "metadata.csv")
    lines = ["[analysis]", 'panel = "panel.csv"', 'metadata = "metadata.csv"']
    if not args.spec:
        lines += ['gdp = "gdp.csv"', 'exports = "exports.csv"']
    lines += ['output_dir = "report"', ""]
    (out / "config.toml").write_text("\n".join(lines))
    print(f"wrote synthetic panel ({panel.n_currencies} currencies, {panel.n_days} days) to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        rep = report.load_report(args.report)
    except json.JSONDecodeError as exc:
        raise FxTailsError(f"{args.report}: not a report JSON ({exc})") from None
    files = report.render_report(rep, args.out)
    print(f"wrote {len(files)} files to {args.out}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run, "ingest-check": cmd_ingest_check, "tails": cmd_tails, "scaling": cmd_scaling,
    "similarity": cmd_similarity, "cluster": cmd_cluster, "macro": cmd_macro, "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("FX_TAILS_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FxTailsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
