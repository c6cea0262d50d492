import csv
import datetime as dt
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import make_prices
from stylefacts.cli import main
from stylefacts.io import write_prices
from stylefacts.report import FIGURES, SCHEMA_VERSION, ReportBundle, ReportConfig, emit, run_report

CLOCK = dt.datetime(2024, 1, 1, tzinfo=dt.timezone.utc)


@pytest.fixture(scope="module")
def bundle(garch_prices):
    config = ReportConfig(subsample_last=(1000, 100),
                          lag_window=(dt.date(2001, 6, 1), dt.date(2001, 6, 29)))
    return run_report(garch_prices, config, clock=CLOCK)


def _tests(bundle, operation, **match):
    return [t for t in bundle.tests
            if t["operation"] == operation and all(t.get(k) == v for k, v in match.items())]


def test_bundle_carries_stylized_fact_signature(bundle):
    assert not bundle.partial
    assert all(s["status"] == "ok" for s in bundle.stages.values())
    jb = _tests(bundle, "jarque_bera")[0]
    assert jb["p_value"] < 0.05
    raw = _tests(bundle, "ljung_box", transform="identity", subsample="full")[0]
    sq = _tests(bundle, "ljung_box", transform="square", subsample="full")[0]
    ab = _tests(bundle, "ljung_box", transform="absolute", subsample="full")[0]
    assert raw["p_value"] > 0.05
    assert sq["p_value"] < 1e-6 and ab["p_value"] < 1e-6
    assert all(e["p_value"] < 0.05 for e in bundle.mcleod_li)
    assert bundle.garch["converged"]
    assert abs(bundle.garch["params"]["alpha"] - 0.1) < 0.05


def test_bundle_layout(bundle, garch_prices):
    assert bundle.schema_version == SCHEMA_VERSION == 1
    assert bundle.generated_at == "2024-01-01T00:00:00+00:00"
    assert bundle.series["n_returns"] == len(garch_prices) - 1
    assert [e["scale"] for e in bundle.summary["aggregation_scan"]] == \
        ["daily", "weekly", "monthly", "quarterly"]
    assert set(bundle.acf) == {"identity", "square", "absolute"}
    assert len(bundle.acf["identity"]["rho"]) == 21
    # 3 transforms x (full, last 1000, last 100)
    assert len(_tests(bundle, "ljung_box")) == 9
    assert {t["sample_size"] for t in _tests(bundle, "ljung_box")} == {len(garch_prices) - 1, 1000, 100}
    assert [e["m"] for e in bundle.mcleod_li] == list(range(1, 27))
    assert set(bundle.qq) == {"normal", "student_t"}
    assert set(bundle.lag_pairs) == {"full", "window"}
    assert bundle.lag_pairs["window"]["dates"][0] >= "2001-06-01"
    assert len(bundle.garch["volatility_bands"]["upper"]) == bundle.series["n_returns"]


def test_metadata_is_complete(bundle):
    keys = {"std_dev_divisor", "moment_divisor", "kurtosis_convention", "acf_band", "acf_denominator",
            "ljung_box_df", "kde_bandwidth", "qq_plotting_position", "qq_student_t", "band_formula",
            "garch_init", "garch_optimizer", "ks_reference", "resampling"}
    assert keys <= set(bundle.metadata)
    assert bundle.metadata["std_dev_divisor"] == "n-1"
    assert bundle.metadata["t_df"] == 4.0 and bundle.metadata["band_k"] == 2.0


def test_json_round_trip(bundle, tmp_path):
    emit(bundle, tmp_path, ["json"])
    text = (tmp_path / "report.json").read_text()
    again = ReportBundle.from_json(text)
    assert again.to_dict() == json.loads(text)
    assert again.to_json() + "\n" == text


def test_csv_row_counts(bundle, tmp_path):
    emit(bundle, tmp_path, ["csv-dir"])
    out = tmp_path / "csv"

    def rows(name):
        with (out / name).open() as fh:
            return list(csv.reader(fh))

    assert len(rows("summary.csv")) == 1 + 4
    assert len(rows("tests.csv")) == 1 + len(bundle.tests)
    assert len(rows("ljung_box.csv")) == 1 + 9
    assert len(rows("mcleod_li.csv")) == 1 + 26
    assert len(rows("acf.csv")) == 1 + 21
    assert len(rows("histogram.csv")) == 1 + 50
    assert len(rows("kde.csv")) == 1 + 512
    assert len(rows("qq_normal.csv")) == 1 + bundle.series["n_returns"]
    assert len(rows("lag_pairs_full.csv")) == bundle.series["n_returns"]
    assert len(rows("garch_path.csv")) == 1 + bundle.series["n_returns"]
    assert len(rows("metadata.csv")) == 1 + len(bundle.metadata)
    # every column names the operation that produced it
    assert rows("mcleod_li.csv")[0] == ["mcleod_li.m", "mcleod_li.statistic", "mcleod_li.p_value"]
    assert all(h.startswith("summarize.") for h in rows("summary.csv")[0][1:9])


def test_svg_one_valid_file_per_figure(bundle, tmp_path):
    written = emit(bundle, tmp_path, ["svg-dir"])
    names = sorted(p.stem for p in (tmp_path / "figures").glob("*.svg"))
    assert names == sorted(FIGURES)
    assert len(written) == len(FIGURES)
    for path in written:
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")


def test_svg_skips_figures_without_data(garch_prices, tmp_path):
    b = run_report(garch_prices, ReportConfig(garch=False), clock=CLOCK)
    emit(b, tmp_path, ["svg"])
    names = {p.stem for p in (tmp_path / "figures").glob("*.svg")}
    assert names == set(FIGURES) - {"lag_window", "conditional_volatility",
                                    "volatility_bands"}
    assert b.stages["garch_fit"]["status"] == "skipped"
    assert not b.partial


def test_unknown_format_is_rejected(bundle, tmp_path):
    from stylefacts.errors import DomainError

    with pytest.raises(DomainError):
        emit(bundle, tmp_path, ["pdf"])


def test_constant_prices_report_flags_everything():
    b = run_report(make_prices(np.full(400, 50.0)), clock=CLOCK)
    assert b.partial
    assert b.summary["summarize"]["skewness"] is None
    assert all(e["flag"] == "degenerate-series" for e in b.summary["aggregation_scan"])
    assert b.garch is None
    assert b.stages["garch_fit"]["status"] == "skipped"
    for stage in ("jarque_bera", "acf[identity]", "kde", "histogram", "qq_points[normal]"):
        assert b.stages[stage]["status"] == "flagged", stage
    # the bundle still serializes
    ReportBundle.from_json(b.to_json())


def test_fault_isolation_keeps_sibling_results(rng):
    # roughly five months of prices: quarterly has 1 return, monthly a handful
    p = make_prices(100 * np.exp(np.cumsum(rng.normal(0, 0.01, 110)) ), start=dt.date(2001, 1, 2))
    b = run_report(p, ReportConfig(subsample_last=(500,)), clock=CLOCK)
    assert b.partial
    scan = {e["scale"]: e for e in b.summary["aggregation_scan"]}
    assert scan["quarterly"]["jarque_bera"] is None and scan["quarterly"]["flag"]
    assert scan["daily"]["jarque_bera"] is not None
    assert b.stages["ljung_box[last 500]"]["status"] == "flagged"
    assert len(_tests(b, "ljung_box")) == 3
    assert b.garch is not None and b.mcleod_li and b.qq


def test_report_is_deterministic(garch_prices):
    a = run_report(garch_prices, clock=CLOCK).to_json()
    b = run_report(garch_prices, clock=CLOCK).to_json()
    assert a == b


def test_single_return_series_is_not_fatal():
    b = run_report(make_prices([100.0, 101.0]), clock=CLOCK)
    assert b.series["n_returns"] == 1
    assert b.partial


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def price_file(tmp_path_factory, garch_prices):
    path = tmp_path_factory.mktemp("data") / "sim.csv"
    write_prices(garch_prices, path)
    return path


def test_cli_report_writes_everything(price_file, tmp_path, capsys):
    code = main(["report", str(price_file), "--out", str(tmp_path), "--fixed-clock", "2024-01-01T00:00:00+00:00",
                 "--subsample-last", "1000,100", "--lag-window", "2001-06-01:2001-06-29"])
    assert code == 0
    out = capsys.readouterr().out
    assert "# summarize" in out and "# aggregation_scan" in out and "# garch_fit" in out
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["schema_version"] == 1 and data["instrument_id"] == "sim"
    assert len(list((tmp_path / "figures").glob("*.svg"))) == len(FIGURES)
    assert (tmp_path / "csv" / "summary.csv").exists()


def test_cli_report_json_is_byte_identical(price_file, tmp_path):
    outputs = []
    for i in range(3):
        out = tmp_path / str(i)
        assert main(["report", str(price_file), "--out", str(out), "--format", "json",
                     "--fixed-clock", "2024-01-01T00:00:00+00:00"]) == 0
        outputs.append((out / "report.json").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_cli_source_date_epoch(price_file, tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert main(["report", str(price_file), "--out", str(tmp_path), "--format", "json", "--no-garch"]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["generated_at"] == "1970-01-01T00:00:00+00:00"


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,adj_close\n2020-01-02,100\n2020-01-03,0\n")
    assert main(["summary", str(bad)]) == 1
    assert "row 3" in capsys.readouterr().err

    flat = tmp_path / "flat.csv"
    write_prices(make_prices(np.full(300, 10.0)), flat)
    assert main(["report", str(flat), "--out", str(tmp_path / "o"), "--format", "json"]) == 2

    for argv in (["report"], ["nonsense"], ["report", str(flat), "--format", "pdf"],
                 ["report", str(flat), "--scales", "yearly"], ["report", str(flat), "--fixed-clock", "noon"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 3


def test_cli_single_analyses(price_file, capsys):
    for argv, heading in [
        (["summary"], "# summarize"),
        (["normality"], "# normality"),
        (["acf", "--lags", "5", "--transform", "square"], "# acf[square]"),
        (["lb", "--subsample-last", "100"], "# ljung_box"),
        (["mcleod-li", "--ml-lags", "4"], "# mcleod_li"),
        (["agg-gauss"], "# aggregation_scan"),
        (["qq", "--ref", "t"], "# qq_points[student_t(4)]"),
        (["kde", "--grid", "16"], "# kde[h="),
        (["garch"], "# garch_fit"),
    ]:
        code = main([argv[0], str(price_file), *argv[1:]])
        assert code == 0, argv
        out = capsys.readouterr().out
        assert out.startswith(heading), argv
    main(["lb", str(price_file), "--subsample-last", "100"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 + 6  # heading, header, 3 transforms x 2 samples
    main(["mcleod-li", str(price_file), "--ml-lags", "4"])
    rows = [line.split("\t") for line in capsys.readouterr().out.strip().splitlines()[2:]]
    assert [r[0] for r in rows] == ["1", "2", "3", "4"]


def test_cli_simulate_then_report(tmp_path):
    sim = tmp_path / "sim.csv"
    assert main(["simulate", "--out", str(sim), "-n", "500", "--seed", "3"]) == 0
    lines = sim.read_text().splitlines()
    assert lines[0] == "date,adj_close" and len(lines) == 502
    assert main(["simulate", "--out", str(tmp_path / "x.csv"), "--alpha", "0.5", "--beta", "0.6"]) == 3
    assert main(["simulate", "--out", str(tmp_path / "t.csv"), "-n", "50", "--innovation", "student_t",
                 "--nu", "5"]) == 0


def test_console_script_runs(tmp_path):
    sim = tmp_path / "sim.csv"
    proc = subprocess.run([sys.executable, "-m", "stylefacts.cli", "simulate", "--out", str(sim), "-n", "200"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "stylefacts.cli", "summary", str(sim)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "# summarize"
