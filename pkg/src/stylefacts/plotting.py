"""Static SVG figures drawn from a report bundle's plain-data form.

Works on the dict produced by ``ReportBundle.to_dict()`` (or a re-parsed
``report.json``), so figures can be regenerated without recomputing.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

__all__ = ["render_figures", "STYLE"]

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "stylefacts",
    "svg.fonttype": "none",
}

EMPIRICAL = "#1f4e79"
REFERENCE = "#c0392b"
BAND = "#7f8c8d"


def _figure(nrows=1, ncols=1, width=6.0, height=3.6):
    # fixed margins: layout engines cost more than all the drawing here
    fig = Figure(figsize=(width, height))
    axes = fig.subplots(nrows, ncols, squeeze=False)
    fig.subplots_adjust(left=0.75 / width, right=1 - 0.15 / width, bottom=0.5 / height,
                        top=1 - 0.35 / height, wspace=0.35, hspace=0.2 + 0.4 * (nrows > 1))
    return fig, axes


def _save(fig, path):
    fig.savefig(path, format="svg", dpi=150, metadata={"Date": None})
    return path


def _as_dates(strings):
    return np.array(strings, dtype="datetime64[D]")


def _hist_axes(ax, curve, title):
    edges = np.asarray(curve["edges"])
    ax.stairs(curve["empirical"], edges, fill=True, color=EMPIRICAL, alpha=0.55, label="returns")
    ax.plot(curve["grid"], curve["reference"], color=REFERENCE, label=curve["reference_name"])
    ax.set_title(title)
    ax.set_xlabel("return (%)")
    ax.set_ylabel("density")


def fig_histogram(data, path):
    fig, ax = _figure()
    _hist_axes(ax[0, 0], data["density"]["histogram"], f"{data['instrument_id']}: daily returns vs normal")
    ax[0, 0].legend()
    return _save(fig, path)


def fig_qq(data, path):
    panels = [(k, data["qq"][k]) for k in ("normal", "student_t") if k in data["qq"]]
    fig, axes = _figure(1, len(panels), width=3.3 * len(panels), height=3.3)
    for ax, (key, q) in zip(axes[0], panels):
        th, sm = np.asarray(q["theoretical"]), np.asarray(q["sample"])
        ax.plot(th, sm, ".", color=EMPIRICAL, markersize=2, rasterized=True)
        lo, hi = min(th.min(), sm.min()), max(th.max(), sm.max())
        ax.plot([lo, hi], [lo, hi], color=REFERENCE)
        ax.set_title(q["reference"])
        ax.set_xlabel("theoretical quantile")
        ax.set_ylabel("standardized sample quantile" if q["standardized"] else "sample quantile")
    return _save(fig, path)


def fig_kde(data, path):
    k = data["density"]["kde"]
    fig, ax = _figure()
    ax = ax[0, 0]
    ax.plot(k["grid"], k["empirical"], color=EMPIRICAL, label=f"kernel density (h={k['bandwidth']:.3g})")
    ax.plot(k["grid"], k["reference"], color=REFERENCE, linestyle="--", label=k["reference_name"])
    ax.set_xlabel("return (%)")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, path)


def fig_aggregation(data, path):
    curves = data["density"]["histogram_by_scale"]
    fig, axes = _figure(1, len(curves), width=3.0 * len(curves), height=3.0)
    for ax, (scale, curve) in zip(axes[0], curves.items()):
        _hist_axes(ax, curve, scale)
    return _save(fig, path)


def _stems(ax, entry, max_lag=None):
    lags = np.asarray(entry["lags"])
    rho = np.asarray(entry["rho"])
    if max_lag:
        lags, rho = lags[:max_lag], rho[:max_lag]
    ax.vlines(lags, 0.0, rho, color=EMPIRICAL)
    ax.plot(lags, rho, "o", color=EMPIRICAL, markersize=2.5)
    ax.axhline(0.0, color="black", linewidth=0.6)
    for sign in (1.0, -1.0):
        ax.axhline(sign * entry["band_halfwidth"], color=BAND, linestyle="--", linewidth=0.8)
    ax.set_xlabel("lag")
    ax.set_ylabel("ACF")


def fig_acf(data, path):
    fig, ax = _figure()
    _stems(ax[0, 0], data["acf"]["identity"], data["metadata"].get("acf_plot_lags", 15))
    ax[0, 0].set_title("returns")
    return _save(fig, path)


def fig_acf_transforms(data, path):
    keys = [k for k in ("identity", "square", "absolute") if k in data["acf"]]
    fig, axes = _figure(len(keys), 1, width=6.0, height=2.2 * len(keys))
    titles = {"identity": "returns", "square": "squared returns", "absolute": "absolute returns"}
    for ax, key in zip(axes[:, 0], keys):
        _stems(ax, data["acf"][key])
        ax.set_title(titles[key])
    return _save(fig, path)


def fig_lag_plot(data, path):
    lp = data["lag_pairs"]["full"]
    fig, ax = _figure(width=4.0, height=4.0)
    ax = ax[0, 0]
    ax.plot(lp["previous"], lp["current"], ".", color=EMPIRICAL, markersize=2, rasterized=True)
    ax.set_xlabel("r(t-1)")
    ax.set_ylabel("r(t)")
    return _save(fig, path)


def fig_lag_window(data, path):
    lp = data["lag_pairs"]["window"]
    fig, ax = _figure(width=4.0, height=4.0)
    ax = ax[0, 0]
    ax.plot(lp["previous"], lp["current"], "-o", color=EMPIRICAL, markersize=3, linewidth=0.6)
    for i, (x, y) in enumerate(zip(lp["previous"], lp["current"]), start=1):
        ax.annotate(str(i), (x, y), textcoords="offset points", xytext=(3, 3), fontsize=7)
    ax.set_xlabel("r(t-1)")
    ax.set_ylabel("r(t)")
    if lp["dates"]:
        ax.set_title(f"{lp['dates'][0]} to {lp['dates'][-1]}")
    return _save(fig, path)


def fig_mcleod_li(data, path):
    ml = data["mcleod_li"]
    fig, ax = _figure()
    ax = ax[0, 0]
    ax.scatter([e["m"] for e in ml], [e["p_value"] for e in ml], s=12, color=EMPIRICAL)
    ax.axhline(0.05, color=REFERENCE, linestyle="--", linewidth=0.8)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("lag")
    ax.set_ylabel("p-value")
    return _save(fig, path)


def fig_conditional_volatility(data, path):
    g = data["garch"]
    fig, ax = _figure(width=7.0, height=3.0)
    ax = ax[0, 0]
    ax.plot(_as_dates(g["dates"]), g["cond_volatility"], color=EMPIRICAL)
    ax.set_ylabel("conditional volatility (%)")
    return _save(fig, path)


def fig_volatility_bands(data, path):
    g = data["garch"]
    b = g["volatility_bands"]
    dates = _as_dates(g["dates"])
    fig, ax = _figure(width=7.0, height=3.0)
    ax = ax[0, 0]
    ax.plot(dates, b["normalized"], color=EMPIRICAL, linewidth=0.5)
    ax.plot(dates, b["upper"], color=REFERENCE, linewidth=0.7)
    ax.plot(dates, b["lower"], color=REFERENCE, linewidth=0.7)
    ax.set_ylabel(f"normalized return, +/-{b['k']:g} sigma")
    return _save(fig, path)


_RENDERERS = {
    "histogram": (fig_histogram, lambda d: "histogram" in d["density"]),
    "qq": (fig_qq, lambda d: bool(d["qq"])),
    "kde": (fig_kde, lambda d: "kde" in d["density"]),
    "aggregation": (fig_aggregation, lambda d: bool(d["density"].get("histogram_by_scale"))),
    "acf": (fig_acf, lambda d: "identity" in d["acf"]),
    "acf_transforms": (fig_acf_transforms, lambda d: bool(d["acf"])),
    "lag_plot": (fig_lag_plot, lambda d: "full" in d["lag_pairs"]),
    "lag_window": (fig_lag_window, lambda d: "window" in d["lag_pairs"]),
    "mcleod_li": (fig_mcleod_li, lambda d: bool(d["mcleod_li"])),
    "conditional_volatility": (fig_conditional_volatility, lambda d: bool(d["garch"])),
    "volatility_bands": (
        fig_volatility_bands, lambda d: bool(d["garch"]) and "volatility_bands" in d["garch"],
    ),
}


def render_figures(data: dict, out_dir, only=None) -> list:
    """Render every figure the bundle has data for; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with matplotlib.rc_context(STYLE):
        for name, (render, available) in _RENDERERS.items():
            if only is not None and name not in only:
                continue
            if available(data):
                written.append(render(data, out / f"{name}.svg"))
    return written
