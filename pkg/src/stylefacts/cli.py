"""Command-line entry point.

Exit codes: 0 success, 1 ingestion failure, 2 partial report (some stage
flagged), 3 usage error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .density import kde, qq_points
from .dependence import Transform, acf, ljung_box, mcleod_li
from .errors import DomainError, IngestError, StylefactsError
from .garch import GarchParams, garch_fit, garch_simulate
from .io import IngestSpec, ingest, write_prices
from .moments import aggregation_scan, jarque_bera, kolmogorov_smirnov, summarize
from .report import ReportConfig, emit, run_report
from .series import TimeScale, log_returns, prices_from_returns
from .special import Normal, StudentT

EXIT_OK, EXIT_INGEST, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("stylefacts")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scales(text):
    try:
        return tuple(TimeScale.parse(s) for s in text.split(",") if s.strip())
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


_FORMAT_CHOICES = ("json", "csv", "csv-dir", "svg", "svg-dir", "all")


def _formats(text):
    formats = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in formats if f not in _FORMAT_CHOICES]
    if bad or not formats:
        raise argparse.ArgumentTypeError(f"formats must be among {', '.join(_FORMAT_CHOICES)}, got {text!r}")
    return formats


def _window(text):
    try:
        start, end = text.split(":")
        return dt.date.fromisoformat(start), dt.date.fromisoformat(end)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:END ISO dates, got {text!r}") from None


def _add_input(p):
    p.add_argument("file", help="CSV with a header row, one instrument per file")
    p.add_argument("--date-col", default="date")
    p.add_argument("--price-col", default="adj_close")
    p.add_argument("--date-format", default=None, help="strptime pattern; ISO-8601 when omitted")
    p.add_argument("--on-duplicate", choices=("error", "keep_last"), default="error")
    p.add_argument("--subsample-last", type=_ints, default=(), metavar="N[,N...]",
                   help="also test the most recent N returns")


def _column(text):
    return int(text) if text.isdigit() else text


def build_parser():
    parser = _Parser(prog="stylefacts", description="Stylized-facts statistics for price series.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("report", help="full report: tables on stdout, files under --out")
    _add_input(p)
    p.add_argument("--out", default=None, help="output directory (default: <instrument>_report)")
    p.add_argument("--format", type=_formats, default=("all",),
                   help="json, csv, svg or all (comma-separated)")
    p.add_argument("--lags", type=int, default=21)
    p.add_argument("--ml-lags", type=int, default=26)
    p.add_argument("--scales", type=_scales, default=tuple(TimeScale))
    p.add_argument("--t-df", type=float, default=4.0)
    p.add_argument("--band-k", type=float, default=2.0)
    p.add_argument("--lag-window", type=_window, default=None, metavar="START:END")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-garch", action="store_true")
    p.add_argument("--fixed-clock", type=dt.datetime.fromisoformat, default=None, metavar="ISO_TIMESTAMP",
                   help="record this as generated_at (SOURCE_DATE_EPOCH is honoured too)")

    p = sub.add_parser("summary", help="summary statistics of daily log-returns")
    _add_input(p)
    p = sub.add_parser("normality", help="Jarque-Bera and Kolmogorov-Smirnov tests")
    _add_input(p)
    p = sub.add_parser("acf", help="autocorrelations with the 95%% band")
    _add_input(p)
    p.add_argument("--lags", type=int, default=21)
    p.add_argument("--transform", choices=[t.value for t in Transform], default="identity")
    p = sub.add_parser("lb", help="Ljung-Box test")
    _add_input(p)
    p.add_argument("--lags", type=int, default=21)
    p.add_argument("--transform", choices=[t.value for t in Transform] + ["all"], default="all")
    p = sub.add_parser("mcleod-li", help="McLeod-Li p-values for lags 1..N")
    _add_input(p)
    p.add_argument("--ml-lags", type=int, default=26)
    p = sub.add_parser("agg-gauss", help="moments and Jarque-Bera across time scales")
    _add_input(p)
    p.add_argument("--scales", type=_scales, default=tuple(TimeScale))
    p = sub.add_parser("qq", help="QQ points against normal or Student-t")
    _add_input(p)
    p.add_argument("--ref", choices=("normal", "t"), default="normal")
    p.add_argument("--t-df", type=float, default=4.0)
    p = sub.add_parser("kde", help="Gaussian kernel density estimate")
    _add_input(p)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--bandwidth", type=float, default=None)
    p = sub.add_parser("garch", help="GARCH(1,1) fit on demeaned returns")
    _add_input(p)

    p = sub.add_parser("simulate", help="write a simulated GARCH(1,1) price path as CSV")
    p.add_argument("--omega", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.8)
    p.add_argument("-n", type=int, default=3746, help="number of returns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--innovation", choices=("normal", "student_t"), default="normal")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--start-price", type=float, default=100.0)
    p.add_argument("--out", required=True, help="CSV path")
    return parser


def _table(name, header, rows, out=None):
    out = out or sys.stdout
    out.write(f"# {name}\n")
    out.write("\t".join(header) + "\n")
    for row in rows:
        out.write("\t".join(_cell(v) for v in row) + "\n")
    out.write("\n")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _clock(args):
    if getattr(args, "fixed_clock", None):
        return args.fixed_clock
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc)
    return None


_SUMMARY_COLS = ("n", "mean", "median", "min", "max", "std_dev", "skewness", "kurtosis")
_TEST_COLS = ("statistic", "df", "p_value", "sample_size")


def _print_report(bundle):
    s = bundle.summary.get("summarize")
    if s:
        _table("summarize", ["instrument", *(f"summarize.{c}" for c in _SUMMARY_COLS)],
               [[bundle.instrument_id, *(s[c] for c in _SUMMARY_COLS)]])
    rows = []
    for e in bundle.summary.get("aggregation_scan", []):
        s, t = e["summarize"] or {}, e["jarque_bera"] or {}
        rows.append([e["scale"], s.get("mean"), s.get("median"), s.get("std_dev"), s.get("skewness"),
                     s.get("kurtosis"), t.get("statistic"), t.get("p_value"), e["flag"]])
    _table("aggregation_scan", ["scale", "summarize.mean", "summarize.median", "summarize.std_dev",
                                "summarize.skewness", "summarize.kurtosis", "jarque_bera.statistic",
                                "jarque_bera.p_value", "flag"], rows)
    _table("tests", ["operation", "transform", "subsample", *_TEST_COLS],
           [[t["operation"], t.get("transform"), t.get("subsample"), *(t[c] for c in _TEST_COLS)]
            for t in bundle.tests])
    if bundle.garch:
        g = bundle.garch
        _table("garch_fit", ["omega", "alpha", "beta", "log_likelihood", "iterations", "converged"],
               [[g["params"]["omega"], g["params"]["alpha"], g["params"]["beta"],
                 g["log_likelihood"], g["iterations"], g["converged"]]])
    flagged = [(k, v["status"], v.get("detail", "")) for k, v in bundle.stages.items() if v["status"] != "ok"]
    if flagged:
        _table("stages", ["stage", "status", "detail"], flagged)


def _cmd_report(args, prices):
    config = ReportConfig(
        lags=args.lags, ml_lags=args.ml_lags, scales=args.scales, t_df=args.t_df,
        band_k=args.band_k, subsample_last=args.subsample_last, garch=not args.no_garch,
        lag_window=args.lag_window, seed=args.seed,
    )
    bundle = run_report(prices, config, clock=_clock(args))
    out = Path(args.out or f"{prices.instrument_id}_report")
    for path in emit(bundle, out, args.format):
        log.info("wrote %s", path)
    _print_report(bundle)
    return EXIT_PARTIAL if bundle.partial else EXIT_OK


def _test_row(name, t, **extra):
    return [name, *extra.values(), *(getattr(t, c) for c in _TEST_COLS)]


def _cmd_single(args, prices):
    r = log_returns(prices)
    cmd = args.command
    if cmd == "summary":
        s = summarize(r)
        _table("summarize", _SUMMARY_COLS, [[getattr(s, c) for c in _SUMMARY_COLS]])
    elif cmd == "normality":
        x = r.values
        tests = [jarque_bera(r), kolmogorov_smirnov(r, Normal(float(x.mean()), float(x.std(ddof=1))))]
        _table("normality", ["test", *_TEST_COLS], [_test_row(t.test_name, t) for t in tests])
    elif cmd == "acf":
        res = acf(r, args.lags, args.transform)
        _table(f"acf[{res.transform.value}]", ["lag", "rho", "band_halfwidth"],
               [[int(k), float(v), res.band_halfwidth] for k, v in zip(res.lags, res.rho)])
    elif cmd == "lb":
        transforms = list(Transform) if args.transform == "all" else [Transform(args.transform)]
        samples = [("full", r)] + [(f"last {n}", r.last(n)) for n in args.subsample_last]
        rows = [_test_row("ljung_box", ljung_box(s, args.lags, t), transform=t.value, subsample=label)
                for t in transforms for label, s in samples]
        _table("ljung_box", ["operation", "transform", "subsample", *_TEST_COLS], rows)
    elif cmd == "mcleod-li":
        _table("mcleod_li", ["m", *_TEST_COLS],
               [[m, *(getattr(t, c) for c in _TEST_COLS)] for m, t in mcleod_li(r, args.ml_lags)])
    elif cmd == "agg-gauss":
        rows = []
        for row in aggregation_scan(prices, args.scales):
            s, t = row.summary, row.test
            rows.append([row.scale.value, *((getattr(s, c) for c in _SUMMARY_COLS) if s else [None] * 8),
                         t.statistic if t else None, t.p_value if t else None, row.flag])
        _table("aggregation_scan", ["scale", *_SUMMARY_COLS, "jb_statistic", "jb_p_value", "flag"], rows)
        if any(row[-1] for row in rows):
            return EXIT_PARTIAL
    elif cmd == "qq":
        x = r.values
        ref = Normal(float(x.mean()), float(x.std(ddof=1))) if args.ref == "normal" else StudentT(args.t_df)
        q = qq_points(r, ref)
        _table(f"qq_points[{q.reference_name}]", ["theoretical", "sample"], q.points)
    elif cmd == "kde":
        curve = kde(r, args.grid, args.bandwidth)
        _table(f"kde[h={curve.bandwidth:.6g}]", ["grid", "density", "normal_reference"],
               zip(curve.grid.tolist(), curve.empirical.tolist(), curve.reference.tolist()))
    elif cmd == "garch":
        fit = garch_fit(r)
        p = fit.params
        _table("garch_fit", ["omega", "alpha", "beta", "log_likelihood", "iterations", "converged",
                             "mean_subtracted"],
               [[p.omega, p.alpha, p.beta, fit.log_likelihood, fit.iterations, fit.converged,
                 fit.mean_subtracted]])
        if not fit.converged:
            return EXIT_PARTIAL
    return EXIT_OK


def _cmd_simulate(args):
    params = GarchParams(args.omega, args.alpha, args.beta)
    r = garch_simulate(params, args.n, seed=args.seed, innovation=args.innovation, nu=args.nu)
    write_prices(prices_from_returns(r, args.start_price), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
    except DomainError as exc:
        print(f"stylefacts: {exc}", file=sys.stderr)
        return EXIT_USAGE

    spec = IngestSpec(args.file, _column(args.date_col), _column(args.price_col),
                      args.date_format, args.on_duplicate)
    try:
        prices = ingest(spec)
    except (IngestError, DomainError) as exc:
        print(f"stylefacts: ingestion failed: {exc}", file=sys.stderr)
        return EXIT_INGEST
    try:
        if args.command == "report":
            return _cmd_report(args, prices)
        return _cmd_single(args, prices)
    except StylefactsError as exc:
        print(f"stylefacts: {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
