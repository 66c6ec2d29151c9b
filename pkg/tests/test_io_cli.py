import csv
import json
import math

import numpy as np
import pytest

from betashrink.bootstrap import BootstrapSummary, bootstrap_estimates, bootstrap_table
from betashrink.cli import main
from betashrink.dataio import RunConfig, emit_report, load_csv, write_manifest, write_plot_data
from betashrink.diagnostics import (
    condition_number,
    correlation_matrix,
    correlation_scan,
    fit_beta_shapes,
    kolmogorov_sf,
    ks_goodness_of_fit,
    ks_statistic,
)
from betashrink.errors import (
    DataValidationError,
    MissingColumn,
    NonNumericCell,
    ResponseOutOfRange,
    ZeroVariance,
)
from betashrink.estimators import FitResult
from betashrink.model import Coefficients, Dataset
from betashrink.report import Cell, ReportTable, format_number

from conftest import random_dataset


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def toy_csv(tmp_path, n=40, seed=0, name="toy.csv"):
    rng = np.random.default_rng(seed)
    ds, _ = random_dataset(rng, n, 3)
    rows = [list(x[1:]) + [100 * y] for x, y in zip(ds.design, ds.response)]
    return write_csv(tmp_path / name, ["a", "b", "c", "pct"], rows)


def cfg_for(path, **kw):
    base = dict(mode="fit", input_path=str(path), response_column="y")
    base.update(kw)
    return RunConfig(**base)


# ---------------------------------------------------------------- load_csv


def test_load_toy_file(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["x1", "x2", "y"], [[1, 2, 0.2], [3, 5, 0.5], [4, 1, 0.9]])
    ds = load_csv(cfg_for(p))
    assert ds.n == 3 and ds.n_params == 3
    assert np.all(ds.design[:, 0] == 1.0)
    assert ds.predictor_names == ("(Intercept)", "x1", "x2")


def test_load_percent_scaling_and_column_subset(tmp_path):
    p = toy_csv(tmp_path)
    ds = load_csv(cfg_for(p, response_column="pct", predictor_columns=["c", "a"], response_scale="percent"))
    assert ds.predictor_names == ("(Intercept)", "c", "a")
    assert np.all((ds.response > 0) & (ds.response < 1))


def test_load_errors(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["x", "y"], [[1, 0.2], [2, "abc"], [3, 0.4]])
    with pytest.raises(NonNumericCell) as info:
        load_csv(cfg_for(p))
    assert info.value.row == 2 and info.value.column == "y"
    with pytest.raises(MissingColumn):
        load_csv(cfg_for(p, predictor_columns=["nope"]))
    p = write_csv(tmp_path / "u.csv", ["x", "y"], [[1, 0.2], [2, 0.0], [3, 1.0]])
    with pytest.raises(ResponseOutOfRange) as info:
        load_csv(cfg_for(p))
    assert info.value.rows == [2, 3]
    with pytest.raises(DataValidationError):
        load_csv(cfg_for(tmp_path / "missing.csv"))


def test_percent_scale_must_land_inside_unit_interval(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["x", "y"], [[1, 20], [2, 100], [3, 40]])
    with pytest.raises(ResponseOutOfRange):
        load_csv(cfg_for(p, response_scale="percent"))


def test_run_config_validation(tmp_path):
    with pytest.raises(DataValidationError):
        RunConfig(mode="explode")
    with pytest.raises(DataValidationError):
        RunConfig(mode="fit", input_path="x.csv")
    with pytest.raises(DataValidationError):
        RunConfig(mode="fit", input_path="x.csv", response_column="y", response_scale="log")


# ---------------------------------------------------------------- report tables


def test_format_number():
    assert format_number(0.0) == "0"
    assert format_number(-0.2024912) == "-0.20249"
    assert format_number(-3.397e-6) == "-3.3970e-06"
    assert format_number(math.inf) == "inf"


def test_cell_validation():
    assert Cell(1.5, 2.0).text() == "1.50000 (2.0000)"
    assert Cell(1.0, math.inf).text() == "1.00000 (inf)"
    with pytest.raises(ValueError):
        Cell(math.nan)
    with pytest.raises(ValueError):
        Cell(1.0, math.nan)


def test_table_2x2_csv():
    t = ReportTable("two", ("a", "b"), [[Cell(1.0), 2], ["x", 0.5]])
    lines = t.csv_text().splitlines()
    assert lines == ["a,b", "1.0,2", "x,0.5"]


def test_table_stat_columns_and_text():
    t = ReportTable("est", ("p", "ML"), [["x", Cell(0.5, 3.0)], ["phi", Cell(2.0)]], ("note",))
    assert t.csv_text().splitlines() == ["p,ML,ML_stat", "x,0.5,3.0", "phi,2.0,"]
    text = t.text()
    assert text.startswith("est\n") and "0.50000 (3.0000)" in text and text.rstrip().endswith("note")


def test_table_must_be_rectangular_and_finite():
    with pytest.raises(ValueError):
        ReportTable("bad", ("a", "b"), [[1.0]])
    with pytest.raises(ValueError):
        ReportTable("bad", ("a",), [[math.inf]])


def test_emit_report_writes_csv_and_text(tmp_path):
    t = ReportTable("My Table", ("a", "b"), [[1, 2], [3, 4]])
    paths = emit_report([t], tmp_path / "out")
    names = sorted(p.split("/")[-1] for p in paths)
    assert names == ["my_table.csv", "my_table.txt"]


def test_emit_report_empty_list(tmp_path, caplog):
    out = tmp_path / "none"
    with caplog.at_level("WARNING", logger="betashrink"):
        assert emit_report([], out) == []
    assert not out.exists()
    assert "no tables" in caplog.text


def test_plot_data_has_nine_rows_per_estimator(tmp_path):
    rhos = [round(0.1 * i, 1) for i in range(1, 10)]
    rows = [(r, name, 0.1 * r) for name in ("ML", "Ridge(k_med)") for r in rhos]
    path = write_plot_data(rows, str(tmp_path / "plot.csv"))
    with open(path) as fh:
        data = list(csv.DictReader(fh))
    assert list(data[0]) == ["rho", "estimator", "tmse"]
    for name in ("ML", "Ridge(k_med)"):
        assert sum(r["estimator"] == name for r in data) == 9


def test_manifest_records_config(tmp_path):
    cfg = cfg_for("in.csv", response_scale="percent", seed=7, output_dir=str(tmp_path))
    path = write_manifest(cfg, str(tmp_path), [str(tmp_path / "a.csv")], "9.9")
    record = json.load(open(path))
    assert record["seed"] == 7 and record["version"] == "9.9"
    assert record["response_transformation"] == "y = y / 100 (percent to proportion)"
    assert record["outputs"] == ["a.csv"]
    assert "output_dir" not in record["config"]


# ---------------------------------------------------------------- diagnostics


def test_condition_number_orthonormal_is_one():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((20, 3)))
    ds = Dataset(np.column_stack([np.ones(20), Q]), np.full(20, 0.5))
    assert condition_number(ds) == pytest.approx(1.0, abs=1e-12)


def test_condition_number_duplicate_column_is_infinite():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(10)
    ds = Dataset(np.column_stack([np.ones(10), x, x]), np.full(10, 0.5))
    assert condition_number(ds) == math.inf
    assert condition_number(ds, include_intercept=True) == math.inf


def test_condition_number_row_permutation_invariant(rng):
    ds, _ = random_dataset(rng, 30, 3)
    perm = rng.permutation(30)
    shuffled = Dataset(ds.design[perm], ds.response[perm])
    for flag in (False, True):
        assert condition_number(shuffled, include_intercept=flag) == pytest.approx(
            condition_number(ds, include_intercept=flag), rel=1e-12
        )


def test_correlation_scan_flags_negated_pair(rng):
    x = rng.standard_normal(40)
    other = rng.standard_normal(40)
    ds = Dataset.from_predictors(np.column_stack([x, other, -x]), np.full(40, 0.4), ("x", "z", "negx"))
    R = correlation_matrix(ds)
    np.testing.assert_allclose(np.diag(R), 1.0)
    assert R[0, 2] == pytest.approx(-1.0, abs=1e-12)
    table = correlation_scan(ds)
    a, b, r = table.meta["extreme_pair"]
    assert (a, b) == ("x", "negx") and r == pytest.approx(-1.0)


def test_correlation_zero_variance():
    ds = Dataset.from_predictors(np.column_stack([[1.0, 2, 3], [5.0, 5, 5]]), [0.2, 0.3, 0.4])
    with pytest.raises(ZeroVariance):
        correlation_matrix(ds)


def test_kolmogorov_sf_oracle():
    # scipy.stats.kstwobign.sf, frozen
    for x, expected in [
        (0.3, 0.9999906941986655),
        (0.5, 0.9639452436648751),
        (0.8, 0.5441424115741981),
        (1.2, 0.11224966667072497),
        (2.0, 0.0006709252557796953),
    ]:
        assert kolmogorov_sf(x) == pytest.approx(expected, rel=1e-10, abs=1e-14)
    assert kolmogorov_sf(0.0) == 1.0


def test_ks_statistic_known_sample():
    # sample {0.1, 0.6} against U(0,1): max(1/2 - 0.1, 0.6 - 1/2, 1 - 0.6, ...) = 0.4
    assert ks_statistic([0.6, 0.1], lambda x: x) == pytest.approx(0.4)


def test_beta_shape_fit_recovers_parameters():
    y = np.random.default_rng(2).beta(2.0, 5.0, 4000)
    a, b = fit_beta_shapes(y)
    assert a == pytest.approx(2.0, rel=0.08) and b == pytest.approx(5.0, rel=0.08)


def test_ks_uniform_sample_fits_beta():
    u = np.random.default_rng(1).uniform(size=5000)
    res = ks_goodness_of_fit(u, "beta")
    assert res.p_value > 0.05
    assert "approximate" in res.method
    stat, p = res
    assert stat == res.statistic and p == res.p_value


def test_ks_parametric_bootstrap_is_deterministic():
    y = np.random.default_rng(3).beta(2.0, 3.0, 60)
    a = ks_goodness_of_fit(y, "normal", bootstrap=30, seed=5)
    b = ks_goodness_of_fit(y, "normal", bootstrap=30, seed=5)
    assert a == b and 0 < a.p_value <= 1


def test_ks_needs_eight_points():
    with pytest.raises(DataValidationError):
        ks_goodness_of_fit(np.linspace(0.1, 0.7, 7), "normal")


# ---------------------------------------------------------------- bootstrap


def test_bootstrap_is_deterministic(rng):
    ds, _ = random_dataset(rng, 40, 2)
    specs = ["ml", "ridge:0.5", "lasso:0.02"]
    a = bootstrap_estimates(ds, specs, 20, seed=3)
    b = bootstrap_estimates(ds, specs, 20, seed=3)
    assert bootstrap_table(a).csv_text() == bootstrap_table(b).csv_text()
    assert a.tmse == b.tmse
    c = bootstrap_estimates(ds, specs, 20, seed=4)
    assert c.tmse != a.tmse


def test_bootstrap_constant_estimator(monkeypatch, rng):
    import betashrink.bootstrap as bmod

    ds, _ = random_dataset(rng, 30, 2)
    const = Coefficients([0.5, -1.0, 0.0], 3.0)
    fit = FitResult(coef=const, coef_standardized=const, method="ML")
    monkeypatch.setattr(bmod, "fit_estimators", lambda d, specs, cfg=None: {s.name: fit for s in specs})
    s = bmod.bootstrap_estimates(ds, ["ml"], 10, seed=0)
    np.testing.assert_array_equal(s.sd["ML"], 0.0)
    assert s.tmse["ML"] == 0.0
    assert s.t_values["ML"][0] == math.inf and s.t_values["ML"][1] == -math.inf
    assert math.isnan(s.t_values["ML"][2])
    text = bootstrap_table(s).text()
    assert "inf" in text and "did not vary" in text


def test_bootstrap_redraw_cap(monkeypatch, rng):
    import betashrink.bootstrap as bmod
    from betashrink.errors import RedrawCapExceeded

    ds, _ = random_dataset(rng, 30, 1)
    const = Coefficients([0.5, -1.0], 3.0)
    good = FitResult(coef=const, coef_standardized=const, method="ML")
    calls = {"n": 0}

    def fits(d, specs, cfg=None):
        calls["n"] += 1
        return {s.name: (good if calls["n"] == 1 else None) for s in specs}

    monkeypatch.setattr(bmod, "fit_estimators", fits)
    with pytest.raises(RedrawCapExceeded):
        bmod.bootstrap_estimates(ds, ["ml"], 5, seed=0)
    assert calls["n"] == 1 + 10


# ---------------------------------------------------------------- CLI


def run_cli(args):
    return main([str(a) for a in args])


def test_cli_fit_writes_outputs(tmp_path, capsys):
    p = toy_csv(tmp_path, n=60)
    out = tmp_path / "fit"
    code = run_cli(["fit", "--input", p, "--response", "pct", "--scale", "percent",
                    "--method", "ml,ridge,lasso", "--ridge-k", "hk", "--lasso-k", "0.01", "--out", out])
    assert code == 0
    assert {f.name for f in out.iterdir()} == {"estimates.csv", "estimates.txt", "manifest.json"}
    manifest = json.load(open(out / "manifest.json"))
    assert manifest["config"]["estimators"] == ["ML", "Ridge(k_hk)", "Lasso(k=0.01)"]
    assert "percent" in manifest["response_transformation"]
    assert "ML" in capsys.readouterr().out


def test_cli_fit_is_byte_identical_across_runs(tmp_path):
    p = toy_csv(tmp_path, n=50)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run_cli(["fit", "--input", p, "--response", "pct", "--scale", "percent",
                        "--method", "ml,ridge", "--bootstrap", "10", "--seed", "4", "--out", out]) == 0
        outs.append(out)
    files = sorted(f.name for f in outs[0].iterdir())
    assert files == sorted(f.name for f in outs[1].iterdir())
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    p = toy_csv(tmp_path)
    assert run_cli(["fit", "--input", tmp_path / "nope.csv", "--response", "pct", "--out", tmp_path / "o"]) == 2
    # percent values are not proportions without --scale percent
    assert run_cli(["fit", "--input", p, "--response", "pct", "--out", tmp_path / "o"]) == 2
    assert run_cli(["fit", "--input", p, "--response", "missing", "--out", tmp_path / "o"]) == 2
    assert run_cli(["fit", "--input", p, "--response", "pct", "--scale", "percent",
                    "--method", "bogus", "--out", tmp_path / "o"]) == 2
    assert run_cli(["simulate", "--n", "20", "--p-slopes", "2", "--zero-tail", "2",
                    "--rho-grid", "0.1", "--out", tmp_path / "s"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err


def test_cli_convergence_failure_exit_code(tmp_path, monkeypatch):
    import betashrink.cli as cli

    p = toy_csv(tmp_path)
    monkeypatch.setattr(cli, "fit_estimators", lambda ds, specs, cfg=None: {s.name: None for s in specs})
    assert run_cli(["fit", "--input", p, "--response", "pct", "--scale", "percent", "--out", tmp_path / "o"]) == 3


def test_cli_simulate_outputs(tmp_path):
    out = tmp_path / "sim"
    code = run_cli(["simulate", "--n", "25", "--p-slopes", "3", "--phi", "5", "--rho-grid", "0.1,0.5,0.9",
                    "--reps", "3", "--estimators", "ml,ridge:med", "--seed", "1", "--out", out])
    assert code == 0
    names = {f.name for f in out.iterdir()}
    assert {"tmse_n25_phi5.csv", "tmse_n25_phi5.txt", "simulation.csv", "plot_data.csv", "manifest.json"} <= names
    with open(out / "plot_data.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 3


def test_cli_diagnose_outputs(tmp_path):
    p = toy_csv(tmp_path, n=60)
    out = tmp_path / "diag"
    assert run_cli(["diagnose", "--input", p, "--response", "pct", "--scale", "percent", "--out", out]) == 0
    names = {f.name for f in out.iterdir()}
    assert {"collinearity.csv", "correlations.csv", "ks_goodness_of_fit.csv", "manifest.json"} <= names


@pytest.mark.boston
def test_boston_loads_with_expected_shape(boston):
    assert boston.n == 506
    assert boston.n_params == 12
