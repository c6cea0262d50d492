"""End-to-end stylized-facts report: orchestration, bundle and file emission.

Every stage runs in isolation; a failing stage is recorded under
``bundle.stages`` and never suppresses its siblings.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .density import PLOTTING_POSITION, UnitVarianceT, histogram, kde, qq_points
from .dependence import Transform, acf, lag_pairs, ljung_box, mcleod_li
from .errors import DomainError, InsufficientDataError, StylefactsError
from .garch import garch_fit, volatility_bands
from .moments import aggregation_scan, jarque_bera, kolmogorov_smirnov, summarize
from .series import PriceSeries, TimeScale, log_returns, resample
from .special import Normal, StudentT

__all__ = ["SCHEMA_VERSION", "ReportConfig", "ReportBundle", "run_report", "emit", "FIGURES"]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ReportConfig:
    lags: int = 21
    ml_lags: int = 26
    scales: tuple = tuple(TimeScale)
    t_df: float = 4.0
    band_k: float = 2.0
    subsample_last: tuple = ()
    hist_bins: int = 50
    kde_grid: int = 512
    acf_plot_lags: int = 15
    garch: bool = True
    lag_window: Optional[tuple] = None
    seed: Optional[int] = None


@dataclass
class ReportBundle:
    instrument_id: str
    generated_at: str
    series: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    tests: list = field(default_factory=list)
    acf: dict = field(default_factory=dict)
    mcleod_li: list = field(default_factory=list)
    density: dict = field(default_factory=dict)
    qq: dict = field(default_factory=dict)
    lag_pairs: dict = field(default_factory=dict)
    garch: Optional[dict] = None
    stages: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def partial(self) -> bool:
        return any(s["status"] == "flagged" for s in self.stages.values())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ReportBundle":
        return cls(**data)

    def to_json(self, indent=1) -> str:
        return json.dumps(self.to_dict(), indent=indent, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# JSON-ready conversions
# ---------------------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _nums(arr):
    return [_num(v) for v in np.asarray(arr, dtype=float).tolist()]


def _dates(dates):
    return [d.isoformat() for d in dates]


def _summary_dict(s):
    return {
        "n": s.n, "mean": s.mean, "median": s.median, "min": s.min, "max": s.max,
        "std_dev": s.std_dev, "skewness": _num(s.skewness), "kurtosis": _num(s.kurtosis),
    }


def _test_dict(t, operation, **context):
    return {
        "operation": operation, **context, "test_name": t.test_name,
        "statistic": _num(t.statistic), "df": _num(t.df), "p_value": _num(t.p_value),
        "null_hypothesis": t.null_hypothesis, "sample_size": t.sample_size,
    }


def _curve_dict(c):
    out = {
        "kind": c.kind, "grid": _nums(c.grid), "empirical": _nums(c.empirical),
        "reference": _nums(c.reference), "reference_name": c.reference_name,
    }
    if c.edges is not None:
        out["edges"] = _nums(c.edges)
    if c.bandwidth is not None:
        out["bandwidth"] = c.bandwidth
    return out


def _metadata(config: ReportConfig) -> dict:
    return {
        "package_version": __version__,
        "return_definition": "100 * (ln P_t - ln P_{t-1}), dated at the later observation",
        "resampling": "last close per ISO week / calendar month / calendar quarter; empty periods skipped",
        "scales": [TimeScale.parse(s).value for s in config.scales],
        "std_dev_divisor": "n-1",
        "moment_divisor": "n (skewness and kurtosis use population moments)",
        "kurtosis_convention": "raw (normal = 3); Jarque-Bera subtracts 3",
        "median_even_n": "mean of the two central order statistics",
        "jarque_bera_null": "chi_square(2); p = exp(-JB/2)",
        "ks_reference": "normal(sample mean, n-1 std dev); estimated parameters make the p-value conservative",
        "acf_denominator": "lag-0 autocovariance with divisor n, full-sample mean",
        "acf_band": "+/- z_0.975 / sqrt(n), i.i.d. asymptotic",
        "ljung_box_df": "m (no fitted-model correction)",
        "lags": config.lags,
        "ml_lags": config.ml_lags,
        "subsample_last": list(config.subsample_last),
        "histogram": f"{config.hist_bins} equal-width bins over [min, max], unit area; "
                     "reference normal(mean, n-1 sd) at bin centres",
        "kde_kernel": "gaussian",
        "kde_bandwidth": "silverman: 0.9 * min(sd, IQR/1.34) * n^(-1/5)",
        "kde_grid": f"{config.kde_grid} points on [min - 3h, max + 3h]",
        "kde_reference": f"student_t({config.t_df:g}) rescaled to unit variance, "
                         "then to sample mean and n-1 sd (standardized, not fitted)",
        "qq_plotting_position": f"(i - {PLOTTING_POSITION}) / n (Hazen)",
        "qq_normal_reference": "normal(sample mean, n-1 sd), data units",
        "qq_student_t": "returns standardized by mean and n-1 sd; t quantiles scaled by sqrt((nu-2)/nu)",
        "t_df": config.t_df,
        "garch_model": "sigma2_t = omega + alpha * eps_{t-1}^2 + beta * sigma2_{t-1}, gaussian quasi-likelihood",
        "garch_mean": "sample mean subtracted; no ARMA mean equation",
        "garch_init": "sigma2_1 = variance (divisor n) of demeaned returns",
        "garch_optimizer": "Nelder-Mead, 5 starts, omega = var*exp(a), (alpha, beta) = softmax-simplex; "
                           "stop at f-spread < 1e-8 or 2000 iterations",
        "band_formula": "normalized = (r - mean) / sqrt(omega/(1-alpha-beta)); bands = +/- k * sigma_t on the same scale",
        "band_k": config.band_k,
        "lag_window": [d.isoformat() for d in config.lag_window] if config.lag_window else None,
        "acf_plot_lags": config.acf_plot_lags,
        "seed": config.seed,
    }


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

_CAUGHT = (StylefactsError, ArithmeticError, ValueError)


def _reference_normal(x) -> Normal:
    """Normal with the sample mean and n-1 standard deviation of ``x``."""
    if len(x) < 2:
        raise InsufficientDataError(f"need at least 2 returns to fit a reference normal, got {len(x)}")
    sd = float(x.std(ddof=1))
    if not sd > 0:
        raise DomainError("degenerate-series: zero variance, no reference normal")
    return Normal(float(x.mean()), sd)


class _Stages:
    def __init__(self):
        self.status = {}

    def run(self, name, fn):
        try:
            out = fn()
        except _CAUGHT as exc:
            log.info("stage %s flagged: %s", name, exc)
            self.status[name] = {"status": "flagged", "detail": f"{type(exc).__name__}: {exc}"}
            return None
        self.status.setdefault(name, {"status": "ok"})
        return out

    def flag(self, name, detail):
        self.status[name] = {"status": "flagged", "detail": detail}

    def skip(self, name, detail):
        self.status[name] = {"status": "skipped", "detail": detail}


def run_report(p: PriceSeries, config: ReportConfig = ReportConfig(), clock=None) -> ReportBundle:
    """Run every analysis on one price series and collect the results.

    Parameters
    ----------
    p : PriceSeries
    config : ReportConfig
    clock : datetime, optional
        Timestamp recorded as ``generated_at``; defaults to now (UTC).
    """
    now = clock or dt.datetime.now(dt.timezone.utc)
    bundle = ReportBundle(
        instrument_id=p.instrument_id,
        generated_at=now.isoformat(),
        metadata=_metadata(config),
    )
    st = _Stages()
    r = st.run("log_returns", lambda: log_returns(p))
    bundle.series = {
        "n_prices": len(p),
        "first_date": p.dates[0].isoformat() if len(p) else None,
        "last_date": p.dates[-1].isoformat() if len(p) else None,
        "scale": p.scale.value,
        "n_returns": len(r) if r is not None else 0,
    }
    if r is None:
        bundle.stages = st.status
        return bundle
    bundle.series["dates"] = _dates(r.dates)
    bundle.series["returns"] = _nums(r.values)

    _moments_stages(bundle, st, p, r, config)
    _dependence_stages(bundle, st, r, config)
    _density_stages(bundle, st, p, r, config)
    _garch_stages(bundle, st, r, config)
    bundle.stages = st.status
    return bundle


def _moments_stages(bundle, st, p, r, config):
    s = st.run("summarize", lambda: summarize(r))
    if s is not None:
        bundle.summary["summarize"] = _summary_dict(s)
        if s.degenerate:
            st.flag("summarize", "degenerate-series: zero variance")

    jb = st.run("jarque_bera", lambda: jarque_bera(r))
    if jb is not None:
        bundle.tests.append(_test_dict(jb, "jarque_bera", scale=r.scale.value))

    def ks():
        return kolmogorov_smirnov(r, _reference_normal(r.values))

    ks_result = st.run("kolmogorov_smirnov", ks)
    if ks_result is not None:
        bundle.tests.append(_test_dict(ks_result, "kolmogorov_smirnov", scale=r.scale.value))

    rows = st.run("aggregation_scan", lambda: aggregation_scan(p, config.scales)) or []
    table = []
    for row in rows:
        entry = {"scale": row.scale.value, "flag": row.flag}
        entry["summarize"] = _summary_dict(row.summary) if row.summary else None
        entry["jarque_bera"] = _test_dict(row.test, "jarque_bera", scale=row.scale.value) if row.test else None
        table.append(entry)
    bundle.summary["aggregation_scan"] = table
    flagged = [f"{row.scale.value}: {row.flag}" for row in rows if row.flag]
    if flagged:
        st.flag("aggregation_scan", "; ".join(flagged))


def _dependence_stages(bundle, st, r, config):
    samples = [("full", r)]
    for n in config.subsample_last:
        if n > len(r):
            st.flag(f"ljung_box[last {n}]", f"subsample of {n} exceeds {len(r)} returns")
            continue
        samples.append((f"last {n}", r.last(n)))

    for transform in Transform:
        result = st.run(f"acf[{transform.value}]", lambda: acf(r, config.lags, transform))
        if result is not None:
            bundle.acf[transform.value] = {
                "operation": "acf", "transform": transform.value, "lags": result.lags.tolist(),
                "rho": _nums(result.rho), "band_halfwidth": result.band_halfwidth, "n": result.n,
            }
        for label, sample in samples:
            name = f"ljung_box[{transform.value}, {label}]"
            lb = st.run(name, lambda: ljung_box(sample, config.lags, transform))
            if lb is not None:
                bundle.tests.append(_test_dict(
                    lb, "ljung_box", transform=transform.value, subsample=label, lags=config.lags,
                ))

    ml = st.run("mcleod_li", lambda: mcleod_li(r, config.ml_lags)) or []
    bundle.mcleod_li = [
        {"operation": "mcleod_li", "m": m, "statistic": _num(t.statistic), "df": _num(t.df),
         "p_value": _num(t.p_value), "sample_size": t.sample_size}
        for m, t in ml
    ]

    def pairs_dict(lp):
        return {"operation": "lag_pairs", "dates": _dates(lp.dates),
                "previous": _nums(lp.previous), "current": _nums(lp.current)}

    full = st.run("lag_pairs", lambda: lag_pairs(r))
    if full is not None:
        bundle.lag_pairs["full"] = pairs_dict(full)
    if config.lag_window:
        window = st.run("lag_pairs[window]", lambda: lag_pairs(r, config.lag_window))
        if window is not None:
            bundle.lag_pairs["window"] = pairs_dict(window)


def _density_stages(bundle, st, p, r, config):
    hist = st.run("histogram", lambda: histogram(r, config.hist_bins))
    if hist is not None:
        bundle.density["histogram"] = {"operation": "histogram", **_curve_dict(hist)}

    def t_kde():
        fitted = _reference_normal(r.values)
        ref = UnitVarianceT(config.t_df, fitted.mu, fitted.sigma)
        return kde(r, config.kde_grid, reference=ref)

    k = st.run("kde", t_kde)
    if k is not None:
        bundle.density["kde"] = {"operation": "kde", **_curve_dict(k)}

    by_scale = {}
    for scale in config.scales:
        scale = TimeScale.parse(scale)
        if scale is TimeScale.DAILY:
            continue
        curve = st.run(
            f"histogram[{scale.value}]",
            lambda: histogram(log_returns(resample(p, scale)), max(5, min(config.hist_bins, 20))),
        )
        if curve is not None:
            by_scale[scale.value] = {"operation": "histogram", **_curve_dict(curve)}
    bundle.density["histogram_by_scale"] = by_scale

    def normal_qq():
        return qq_points(r, _reference_normal(r.values))

    for key, fn in (("normal", normal_qq), ("student_t", lambda: qq_points(r, StudentT(config.t_df)))):
        if key == "student_t" and not r.values.std() > 0:
            st.flag("qq_points[student_t]", "degenerate-series: zero variance")
            continue
        q = st.run(f"qq_points[{key}]", fn)
        if q is not None:
            bundle.qq[key] = {
                "operation": "qq_points", "reference": q.reference_name, "standardized": q.standardized,
                "theoretical": _nums(q.theoretical), "sample": _nums(q.sample),
            }


def _garch_stages(bundle, st, r, config):
    if not config.garch:
        st.skip("garch_fit", "disabled by configuration")
        return
    if not r.values.std() > 0:
        st.skip("garch_fit", "degenerate-series: zero variance")
        return
    fit = st.run("garch_fit", lambda: garch_fit(r))
    if fit is None:
        return
    if not fit.converged:
        st.flag("garch_fit", f"Nelder-Mead did not converge in {fit.iterations} iterations")
    bands = st.run("volatility_bands", lambda: volatility_bands(r, fit, config.band_k))
    omega, alpha, beta = fit.params.as_tuple()
    bundle.garch = {
        "operation": "garch_fit",
        "params": {"omega": omega, "alpha": alpha, "beta": beta},
        "persistence": fit.params.persistence,
        "unconditional_variance": fit.params.unconditional_variance,
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "mean_subtracted": fit.mean_subtracted,
        "n": fit.n,
        "dates": _dates(r.dates),
        "cond_volatility": _nums(fit.cond_volatility),
        "starts": [
            {"start": list(s["start"]), "start_loglik": _num(s["start_loglik"]),
             "loglik": _num(s["loglik"]), "params": list(s["params"]),
             "iterations": s["iterations"], "converged": s["converged"]}
            for s in fit.starts
        ],
    }
    if bands is not None:
        bundle.garch["volatility_bands"] = {
            "operation": "volatility_bands", "k": bands.k,
            "normalized": _nums(bands.normalized), "upper": _nums(bands.upper),
            "lower": _nums(bands.lower), "exceedance_rate": bands.exceedance_rate(),
        }


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _write_csv(path, header, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _csv_tables(bundle: ReportBundle, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary_cols = ["n", "mean", "median", "min", "max", "std_dev", "skewness", "kurtosis"]
    test_cols = ["statistic", "df", "p_value", "sample_size"]

    rows = []
    for entry in bundle.summary.get("aggregation_scan", []):
        s = entry["summarize"] or {}
        t = entry["jarque_bera"] or {}
        rows.append([entry["scale"], *(s.get(c) for c in summary_cols),
                     t.get("statistic"), t.get("p_value"), entry["flag"]])
    written.append(_write_csv(
        out / "summary.csv",
        ["aggregation_scan.scale", *(f"summarize.{c}" for c in summary_cols),
         "jarque_bera.statistic", "jarque_bera.p_value", "aggregation_scan.flag"],
        rows,
    ))

    written.append(_write_csv(
        out / "tests.csv",
        ["operation", "test_name", "scale", "transform", "subsample", *test_cols, "null_hypothesis"],
        [[t["operation"], t["test_name"], t.get("scale"), t.get("transform"), t.get("subsample"),
          *(t[c] for c in test_cols), t["null_hypothesis"]] for t in bundle.tests],
    ))

    lb = [t for t in bundle.tests if t["operation"] == "ljung_box"]
    written.append(_write_csv(
        out / "ljung_box.csv",
        ["ljung_box.transform", "ljung_box.subsample", "ljung_box.sample_size", "ljung_box.lags",
         "ljung_box.statistic", "ljung_box.p_value"],
        [[t["transform"], t["subsample"], t["sample_size"], t["lags"], t["statistic"], t["p_value"]]
         for t in lb],
    ))

    written.append(_write_csv(
        out / "mcleod_li.csv",
        ["mcleod_li.m", "mcleod_li.statistic", "mcleod_li.p_value"],
        [[e["m"], e["statistic"], e["p_value"]] for e in bundle.mcleod_li],
    ))

    if bundle.acf:
        transforms = list(bundle.acf)
        lags = bundle.acf[transforms[0]]["lags"]
        written.append(_write_csv(
            out / "acf.csv",
            ["acf.lag", *(f"acf.{t}.rho" for t in transforms), *(f"acf.{t}.band_halfwidth" for t in transforms)],
            [[lag, *(bundle.acf[t]["rho"][i] for t in transforms),
              *(bundle.acf[t]["band_halfwidth"] for t in transforms)] for i, lag in enumerate(lags)],
        ))

    hist = bundle.density.get("histogram")
    if hist:
        edges = hist["edges"]
        written.append(_write_csv(
            out / "histogram.csv",
            ["histogram.bin_left", "histogram.bin_right", "histogram.centre", "histogram.density",
             "histogram.reference_density"],
            [[edges[i], edges[i + 1], c, e, ref] for i, (c, e, ref) in
             enumerate(zip(hist["grid"], hist["empirical"], hist["reference"]))],
        ))
    for scale, curve in bundle.density.get("histogram_by_scale", {}).items():
        edges = curve["edges"]
        written.append(_write_csv(
            out / f"histogram_{scale}.csv",
            ["histogram.bin_left", "histogram.bin_right", "histogram.centre", "histogram.density",
             "histogram.reference_density"],
            [[edges[i], edges[i + 1], c, e, ref] for i, (c, e, ref) in
             enumerate(zip(curve["grid"], curve["empirical"], curve["reference"]))],
        ))
    k = bundle.density.get("kde")
    if k:
        written.append(_write_csv(
            out / "kde.csv", ["kde.grid", "kde.density", "kde.reference_density"],
            zip(k["grid"], k["empirical"], k["reference"]),
        ))
    for key, q in bundle.qq.items():
        written.append(_write_csv(
            out / f"qq_{key}.csv", ["qq_points.theoretical", "qq_points.sample"],
            zip(q["theoretical"], q["sample"]),
        ))
    for key, lp in bundle.lag_pairs.items():
        written.append(_write_csv(
            out / f"lag_pairs_{key}.csv", ["lag_pairs.date", "lag_pairs.previous", "lag_pairs.current"],
            zip(lp["dates"], lp["previous"], lp["current"]),
        ))
    if bundle.garch:
        g = bundle.garch
        written.append(_write_csv(
            out / "garch_params.csv",
            ["garch_fit.omega", "garch_fit.alpha", "garch_fit.beta", "garch_fit.log_likelihood",
             "garch_fit.iterations", "garch_fit.converged", "garch_fit.mean_subtracted"],
            [[g["params"]["omega"], g["params"]["alpha"], g["params"]["beta"], g["log_likelihood"],
              g["iterations"], g["converged"], g["mean_subtracted"]]],
        ))
        bands = g.get("volatility_bands")
        header = ["garch_fit.date", "garch_fit.cond_volatility"]
        cols = [g["dates"], g["cond_volatility"]]
        if bands:
            header += ["volatility_bands.normalized", "volatility_bands.upper", "volatility_bands.lower"]
            cols += [bands["normalized"], bands["upper"], bands["lower"]]
        written.append(_write_csv(out / "garch_path.csv", header, zip(*cols)))

    written.append(_write_csv(
        out / "metadata.csv", ["key", "value"],
        [[key, json.dumps(value) if not isinstance(value, str) else value]
         for key, value in bundle.metadata.items()],
    ))
    return written


FIGURES = (
    "histogram", "qq", "kde", "aggregation", "acf",
    "acf_transforms", "lag_plot", "lag_window", "mcleod_li",
    "conditional_volatility", "volatility_bands",
)

_FORMATS = {"json": "json", "csv": "csv", "csv-dir": "csv", "svg": "svg", "svg-dir": "svg"}


def emit(bundle: ReportBundle, out_dir, formats=("json",)) -> list:
    """Write the bundle as ``report.json``, ``csv/*.csv`` and/or ``figures/*.svg``.

    Returns the written paths.
    """
    out = Path(out_dir)
    wanted = set()
    for f in formats:
        if f == "all":
            wanted |= {"json", "csv", "svg"}
        elif f in _FORMATS:
            wanted.add(_FORMATS[f])
        else:
            raise DomainError(f"unknown output format {f!r}")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in wanted:
        path = out / "report.json"
        path.write_text(bundle.to_json() + "\n")
        written.append(path)
    if "csv" in wanted:
        written += _csv_tables(bundle, out / "csv")
    if "svg" in wanted:
        from .plotting import render_figures

        written += render_figures(bundle.to_dict(), out / "figures")
    return written
