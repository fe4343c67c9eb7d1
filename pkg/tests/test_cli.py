import json
import math

import numpy as np
import pytest

from ratioreg import CsvFormatError, MeanFunction, ModelParams, SampleSeries
from ratioreg.cli import EXIT_ERROR, EXIT_FAILED, EXIT_OK, main
from ratioreg import PairedObservations, estimate_ratio
from ratioreg.commands import (
    SEED_ENV,
    prefix_curve,
    VerifyConfig,
    cmd_estimate,
    cmd_simulate,
    cmd_variance,
    cmd_verify,
)
from ratioreg.csvio import parse_series, read_series, write_series


def write_csv(path, times, values):
    write_series(path, SampleSeries(np.asarray(times, float), np.asarray(values, float)))
    return path


@pytest.fixture
def xy_small(tmp_path):
    x = write_csv(tmp_path / "x.csv", [1, 2], [2, 4])
    y = write_csv(tmp_path / "y.csv", [1, 2], [1, 2])
    return x, y


# --------------------------------------------------------------------- csv


def test_csv_round_trip_is_exact(tmp_path):
    values = np.array([0.1, 1 / 3, -2.5e-300, 1e308, math.pi])
    path = write_csv(tmp_path / "s.csv", np.arange(5.0), values)
    back = read_series(path)
    assert back.values.tobytes() == values.tobytes()
    raw = path.read_bytes()
    assert raw.startswith(b"time,value\n") and b"\r" not in raw


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("t,v\n1,2\n", 1),
        ("time,value\n1,2\n2,abc\n", 3),
        ("time,value\n1,2\n1,3\n", 3),
        ("time,value\n1,2\n\n3,4,5\n", 4),
        ("time,value\n1,nan\n", 2),
    ],
)
def test_csv_errors_carry_line_numbers(text, line):
    with pytest.raises(CsvFormatError) as info:
        parse_series(text, "in.csv")
    assert info.value.line == line
    assert f"in.csv:{line}" in str(info.value)


def test_csv_header_only_is_an_error():
    with pytest.raises(CsvFormatError):
        parse_series("time,value\n")


# --------------------------------------------------------------------- estimate


def test_estimate_small_example(xy_small):
    x, y = xy_small
    report = cmd_estimate(x, y, sigma2_sq=0.5)
    assert report["ratio"] == 2.5
    assert report["denominator"] == 4.0
    assert report["sigma2_provenance"] == "supplied"
    assert report["ratio"] * report["denominator"] == pytest.approx(report["numerator"], rel=1e-12)
    assert report["prefix_curve"][-1] == [2, report["ratio"]]
    assert report["schema_version"] == 1


@pytest.mark.parametrize("with_factors", [False, True])
def test_prefix_curve_matches_estimator_on_each_prefix(with_factors):
    rng = np.random.default_rng(5)
    n = 157
    x = rng.normal(3, 1, n) * 10.0 ** rng.integers(-8, 8, n)
    y = rng.normal(1, 1, n)
    factors = rng.uniform(0.5, 1.0, n) if with_factors else None
    obs = PairedObservations(x, y, y_variance_factors=factors)
    curve = prefix_curve(obs, 0.3, stride=4)
    assert curve[-1][0] == n
    for k, value in curve:
        sub = PairedObservations(
            x[:k], y[:k], sigma2_sq=0.3, y_variance_factors=None if factors is None else factors[:k]
        )
        assert value == estimate_ratio(sub).value


def test_estimate_constant_y_falls_back_to_naive(tmp_path):
    x = write_csv(tmp_path / "x.csv", [1, 2, 3, 4], [3, 5, 7, 9])
    y = write_csv(tmp_path / "y.csv", [1, 2, 3, 4], [2, 2, 2, 2])
    report = cmd_estimate(x, y)
    assert report["sigma2_sq"] == 0.0
    assert report["sigma2_provenance"] == "estimated"
    assert report["ratio"] == (6 + 10 + 14 + 18) / 16


def test_estimate_degenerate_denominator(tmp_path):
    x = write_csv(tmp_path / "x.csv", [1, 2], [1, 1])
    y = write_csv(tmp_path / "y.csv", [1, 2], [1, 1])
    report = cmd_estimate(x, y, sigma2_sq=1.0)
    assert report["degenerate"] is True
    assert report["ratio"] is None
    assert report["condition_beta"] == "failed"
    out = tmp_path / "r.json"
    code = main(["estimate", "--x", str(x), "--y", str(y), "--sigma2", "1", "--out", str(out)])
    assert code == EXIT_FAILED
    assert json.loads(out.read_text())["degenerate"] is True


def test_estimate_exit_code_follows_beta(xy_small, capsys):
    x, y = xy_small
    assert main(["estimate", "--x", str(x), "--y", str(y), "--sigma2", "0.5", "--beta", "1"]) == EXIT_OK
    assert main(["estimate", "--x", str(x), "--y", str(y), "--sigma2", "0.5", "--beta", "2"]) == EXIT_FAILED
    assert main(["estimate", "--x", str(x), "--y", str(y), "--sigma2", "0.5"]) == EXIT_OK
    capsys.readouterr()


def test_estimate_alignment_modes(tmp_path):
    x = write_csv(tmp_path / "x.csv", [0.0, 1.0, 2.0], [2.0, 4.0, 6.0])
    y_near = write_csv(tmp_path / "yn.csv", [0.1, 1.1, 2.1, 5.0], [1.0, 2.0, 3.0, 99.0])
    report = cmd_estimate(x, y_near, sigma2_sq=0.0, align="nearest")
    assert report["ratio"] == pytest.approx(2.0)
    assert report["alignment"]["dropped_b"] == 1
    assert report["max_time_gap"] == pytest.approx(0.1)

    y_dense = write_csv(tmp_path / "yd.csv", np.arange(0.0, 2.01, 0.25), np.arange(0.0, 2.01, 0.25) + 1)
    report = cmd_estimate(x, y_dense, sigma2_sq=0.0, align="interp")
    assert report["ratio"] == pytest.approx(2.0)
    assert report["alignment"]["points_reused"] == 0

    with pytest.raises(Exception):
        cmd_estimate(x, y_near, sigma2_sq=0.0, align="same")


def test_estimate_tolerance_error_exit_code(tmp_path, capsys):
    x = write_csv(tmp_path / "x.csv", [0, 1, 2], [1, 2, 3])
    y = write_csv(tmp_path / "y.csv", [0.1, 1.1, 2.1], [1, 2, 3])
    assert main(["estimate", "--x", str(x), "--y", str(y), "--tol", "0.05"]) == EXIT_ERROR
    assert "index 0" in capsys.readouterr().err
    assert main(["estimate", "--x", str(x), "--y", str(y), "--tol", "0.2"]) == EXIT_OK


def test_estimate_csv_prefix_output(tmp_path, capsys):
    x = write_csv(tmp_path / "x.csv", range(1, 11), np.arange(1, 11) * 3.0)
    y = write_csv(tmp_path / "y.csv", range(1, 11), np.arange(1, 11) * 1.0)
    out = tmp_path / "curve.csv"
    code = main(["estimate", "--x", str(x), "--y", str(y), "--sigma2", "0", "--out", str(out),
                 "--format", "csv", "--stride", "3"])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "k,ratio"
    assert [int(line.split(",")[0]) for line in lines[1:]] == [2, 5, 8, 10]
    assert all(float(line.split(",")[1]) == 3.0 for line in lines[1:])
    capsys.readouterr()


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,value\n1,2\nx,3\n")
    assert main(["variance", "--y", str(bad)]) == EXIT_ERROR
    assert "bad.csv:3" in capsys.readouterr().err


# --------------------------------------------------------------------- variance


def test_variance_examples(tmp_path):
    path = write_csv(tmp_path / "y.csv", [1, 2, 3, 4], [1, 3, 2, 2])
    assert cmd_variance(path)["sigma2_sq"] == 1.0
    assert cmd_variance(path)["m"] == 2
    path = write_csv(tmp_path / "c.csv", [1, 2, 3], [5, 5, 5])
    assert cmd_variance(path)["sigma2_sq"] == 0.0


def test_variance_on_simulated_constant_channel(tmp_path):
    params = ModelParams(1.0, MeanFunction.constant(4.0), 1.5, 1.5, 100_000)
    cmd_simulate(params, seed=3, out_dir=tmp_path)
    assert abs(cmd_variance(tmp_path / "y.csv")["sigma2_sq"] - 2.25) <= 0.05


# --------------------------------------------------------------------- simulate


def test_simulate_noiseless_formula(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    code = main(["simulate", "--f", "sin2", "--r", "10", "--sigma1", "0", "--sigma2", "0",
                 "--n", "1000", "--seed", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    x = read_series(tmp_path / "x.csv")
    i = np.arange(1, 1001, dtype=float)
    assert x.values.tobytes() == (10 * (np.sin(i) + 2)).tobytes()
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert truth["mu2_norm_sq"] == math.fsum((math.sin(k) + 2) ** 2 for k in range(1, 1001))
    assert truth["r"] == 10.0 and truth["seed"] == 1


def test_simulate_same_seed_identical_files(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    args = ["simulate", "--n", "500", "--seed", "7"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    main(["simulate", "--n", "500", "--seed", "8", "--out", str(tmp_path / "c")])
    for name in ("x.csv", "y.csv", "truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "y.csv").read_bytes() != (tmp_path / "c" / "y.csv").read_bytes()


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "8")
    main(["simulate", "--n", "500", "--seed", "7", "--out", str(tmp_path / "a")])
    monkeypatch.delenv(SEED_ENV)
    main(["simulate", "--n", "500", "--seed", "8", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "y.csv").read_bytes() == (tmp_path / "b" / "y.csv").read_bytes()
    assert json.loads((tmp_path / "a" / "truth.json").read_text())["seed"] == 8


def test_simulate_then_estimate_round_trip(tmp_path):
    params = ModelParams(7.5, MeanFunction.sin_plus_2(), 0.0, 0.0, 400)
    cmd_simulate(params, seed=0, out_dir=tmp_path)
    report = cmd_estimate(tmp_path / "x.csv", tmp_path / "y.csv", sigma2_sq=0.0)
    assert report["n"] == 400
    assert report["ratio"] == pytest.approx(7.5, rel=1e-14)
    params = ModelParams(2.0, MeanFunction.sin_plus_2(), 0.0, 0.0, 400)
    cmd_simulate(params, seed=0, out_dir=tmp_path)
    assert cmd_estimate(tmp_path / "x.csv", tmp_path / "y.csv", sigma2_sq=0.0)["ratio"] == 2.0


def test_simulate_offset_needs_tolerance(tmp_path):
    params = ModelParams(3.0, MeanFunction.sin_plus_2(), 0.1, 0.1, 200, time_offset=0.01)
    cmd_simulate(params, seed=0, out_dir=tmp_path)
    with pytest.raises(Exception):
        cmd_estimate(tmp_path / "x.csv", tmp_path / "y.csv")
    report = cmd_estimate(tmp_path / "x.csv", tmp_path / "y.csv", sigma2_sq=0.01, tol=0.011)
    assert report["max_time_gap"] == pytest.approx(0.01)
    assert abs(report["ratio"] - 3.0) < 0.1


# --------------------------------------------------------------------- verify

NOISELESS = {
    "seed": 1,
    "model": {"r": 10.0, "f": "sin2", "sigma1": 0.0, "sigma2": 0.0},
    "n_grid": [100, 1000, 10000],
    "trials": 100,
    "variance": {"f": "const:1", "sigma2": 0.0, "trials": 100},
    "heavy_tail": None,
    # the offset adds a deterministic bias against a zero reference MSE
    "mismatched": None,
}


def test_verify_noiseless_all_pass(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(NOISELESS))
    out = tmp_path / "v.json"
    assert main(["verify", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    result = json.loads(out.read_text())
    assert result["passed"]
    names = {c["name"] for c in result["criteria"]}
    assert names == {"conditional_mse_scaling", "consistency", "chebyshev_bound",
                     "variance_estimator"}
    for rep in result["reports"]:
        assert rep["cond_mse"] <= 1e-24
        assert rep["consistency_rate"] == 1.0
    capsys.readouterr()


def test_verify_rejects_unknown_keys_and_short_grid():
    with pytest.raises(Exception):
        VerifyConfig.from_dict({"bogus": 1})
    with pytest.raises(Exception):
        VerifyConfig.from_dict({"n_grid": [100, 1000]})


def test_verify_premise_violation_is_named_failure(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    cfg = VerifyConfig.from_dict({
        **NOISELESS,
        "model": {"r": 10.0, "f": "sin2", "sigma1": 0.1, "sigma2": 0.1},
        "mismatched": {"offset_rule": "fixed", "offset_scale": 1.0, "max_mismatch_sq": 1.0},
    })
    result = cmd_verify(cfg)
    crit = next(c for c in result["criteria"] if c["name"] == "mismatched_time")
    assert crit["passed"] is False
    assert "exceeds the cap" in crit["error"]


def test_verify_bad_json_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["verify", "--config", str(cfg)]) == EXIT_ERROR
    assert "cfg.json:1" in capsys.readouterr().err
