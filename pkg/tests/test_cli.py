import json

import numpy as np
import pytest

from sobikit.cli import _parse_lags, _read_series, main
from sobikit.metrics import mdi
from sobikit.presets import lag_preset
from sobikit.signal_model import SourceSpec, simulate_sources


def write_model(path, components, omega=None, mu=None):
    doc = {"components": components}
    if omega is not None:
        doc["omega"] = omega
    if mu is not None:
        doc["mu"] = mu
    path.write_text(json.dumps(doc))
    return str(path)


AR_TRIPLE = [{"kind": "ar", "ar": [0.6]}, {"kind": "ar", "ar": [0.4]},
             {"kind": "ar", "ar": [0.2]}]


def test_parse_lags_forms():
    assert _parse_lags("1-10") == tuple(range(1, 11))
    assert _parse_lags("1-10,12-20/2,25") == tuple(range(1, 11)) + tuple(
        range(12, 21, 2)) + (25,)
    assert _parse_lags("3") == (3,)
    assert _parse_lags("preset2") == lag_preset("preset2")


def test_simulate_deterministic_and_round_trip(tmp_path):
    model = write_model(tmp_path / "m.json", AR_TRIPLE)
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", "--model", model, "--T", "400", "--seed", "9",
                 "--output", out1]) == 0
    assert main(["simulate", "--model", model, "--T", "400", "--seed", "9",
                 "--output", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()
    # parsed matrix identical bit-for-bit to the in-process simulation
    specs = [SourceSpec.from_dict(c) for c in AR_TRIPLE]
    z = simulate_sources(specs, 400, 9)
    np.testing.assert_array_equal(_read_series(out1), z)


def test_simulate_identity_mixing_is_noop(tmp_path):
    plain = write_model(tmp_path / "p.json", AR_TRIPLE)
    mixed = write_model(tmp_path / "i.json", AR_TRIPLE,
                        omega=np.eye(3).tolist(), mu=[0.0, 0.0, 0.0])
    out1, out2 = str(tmp_path / "plain.csv"), str(tmp_path / "mix.csv")
    assert main(["simulate", "--model", plain, "--T", "300", "--seed", "1",
                 "--output", out1]) == 0
    assert main(["simulate", "--model", mixed, "--T", "300", "--seed", "1",
                 "--mix", "--output", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_simulate_applies_mixing_and_location(tmp_path):
    omega = [[2.0, 0.5, 0.0], [0.0, 1.0, 0.3], [-0.4, 0.0, 1.0]]
    mu = [1.0, -2.0, 0.5]
    model = write_model(tmp_path / "m.json", AR_TRIPLE, omega=omega, mu=mu)
    out = str(tmp_path / "x.csv")
    assert main(["simulate", "--model", model, "--T", "250", "--seed", "2",
                 "--mix", "--output", out, "--header"]) == 0
    specs = [SourceSpec.from_dict(c) for c in AR_TRIPLE]
    z = simulate_sources(specs, 250, 2)
    expected = np.asarray(omega) @ z + np.asarray(mu)[:, None]
    np.testing.assert_array_equal(_read_series(out), expected)


def test_simulate_with_preset(tmp_path):
    out = str(tmp_path / "z.csv")
    assert main(["simulate", "--preset", "b", "--T", "200", "--seed", "3",
                 "--output", out]) == 0
    assert _read_series(out).shape == (3, 200)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    model = write_model(root / "m.json", AR_TRIPLE)
    path = str(root / "x.csv")
    main(["simulate", "--model", model, "--T", "8000", "--seed", "17",
          "--output", path])
    return path


def test_separate_report_fields(dataset, tmp_path, capsys):
    out = str(tmp_path / "sep")
    assert main(["separate", "--data", dataset, "--lags", "1-10",
                 "--method", "symmetric-jacobi", "--output", out]) == 0
    report = json.loads((tmp_path / "sep.json").read_text())
    for key in ("gamma", "method", "iterations", "converged", "residual",
                "objective", "warnings"):
        assert key in report
    assert report["converged"] is True
    assert report["residual"] < 1e-8
    sources = _read_series(out + ".csv")
    assert sources.shape == (3, 8000)
    assert "converged=True" in capsys.readouterr().out


def test_separate_diagonal_mixture_sanity(dataset, tmp_path):
    # separating once and rescaling the recovered sources plants an exactly
    # known diagonal mixture; the reported distance must be numerically zero
    first = str(tmp_path / "first")
    assert main(["separate", "--data", dataset, "--lags", "1-10",
                 "--method", "symmetric-jacobi", "--output", first]) == 0
    z = _read_series(first + ".csv")
    d = np.diag([2.0, 0.5, 1.5])
    np.savetxt(tmp_path / "scaled.csv", (d @ z).T, delimiter=",", fmt="%.17g")
    np.savetxt(tmp_path / "omega.csv", d, delimiter=",", fmt="%.17g")
    out = str(tmp_path / "second")
    assert main(["separate", "--data", str(tmp_path / "scaled.csv"),
                 "--lags", "1-10", "--method", "symmetric-jacobi",
                 "--omega", str(tmp_path / "omega.csv"),
                 "--output", out]) == 0
    report = json.loads((tmp_path / "second.json").read_text())
    assert report["mdi"] < 1e-6
    assert report["amari"] < 1e-4


def test_separate_solvers_agree(dataset, tmp_path):
    gammas = {}
    for method in ("symmetric-fixedpoint", "symmetric-jacobi"):
        out = str(tmp_path / method)
        assert main(["separate", "--data", dataset, "--lags", "1-10",
                     "--method", method, "--output", out]) == 0
        gammas[method] = np.array(
            json.loads((tmp_path / (method + ".json")).read_text())["gamma"])
    gain = gammas["symmetric-fixedpoint"] @ np.linalg.inv(
        gammas["symmetric-jacobi"])
    assert mdi(gain) < 1e-6


def test_separate_non_convergent_flagged(dataset, tmp_path):
    out = str(tmp_path / "short")
    assert main(["separate", "--data", dataset, "--lags", "1-10",
                 "--method", "symmetric-fixedpoint", "--max-iter", "1",
                 "--output", out]) == 0
    assert json.loads((tmp_path / "short.json").read_text())["converged"] is False


def test_separate_amuse_tau(dataset, tmp_path):
    out = str(tmp_path / "amuse")
    assert main(["separate", "--data", dataset, "--lags", "1-5",
                 "--method", "amuse", "--tau", "2", "--output", out]) == 0
    assert json.loads((tmp_path / "amuse.json").read_text())["method"] == "amuse"


def test_asv_single_lag_finite(tmp_path, capsys):
    out = str(tmp_path / "asv.csv")
    assert main(["asv", "--preset", "d", "--lags", "1", "--output", out]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    values = {ln.split(",")[0]: float(ln.split(",")[2]) for ln in lines}
    assert np.isfinite(values["deflation"]) and values["deflation"] > 0
    assert np.isfinite(values["symmetric"]) and values["symmetric"] > 0
    rows = [ln for ln in open(out).read().splitlines()[1:] if ln]
    # p = 3 per-element entries plus one global line per method
    assert len(rows) == 2 * (9 + 1)


def test_asv_white_noise_errors(tmp_path, capsys):
    model = write_model(tmp_path / "w.json", [{"kind": "psi", "psi": [1.0]}])
    assert main(["asv", "--model", model, "--lags", "1-10"]) == 1
    assert "identifiability failure" in capsys.readouterr().err


def test_asv_requires_one_model_source(tmp_path, capsys):
    model = write_model(tmp_path / "m.json", AR_TRIPLE)
    assert main(["asv", "--lags", "1-10"]) == 1
    assert main(["asv", "--model", model, "--preset", "a",
                 "--lags", "1-10"]) == 1
    assert main(["asv", "--preset", "nope", "--lags", "1-10"]) == 1
    err = capsys.readouterr().err
    assert "error:" in err


def test_benchmark_single_replication(tmp_path, capsys):
    out = str(tmp_path / "bench.csv")
    assert main(["benchmark", "--preset", "d", "--lags", "1-10",
                 "--reps", "1", "--T-values", "400",
                 "--methods", "symmetric-jacobi", "--output", out]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    t, method, reps, avg, expected = line.split(",")
    assert (t, method, reps) == ("400", "symmetric-jacobi", "1")
    assert float(avg) >= 0.0
    assert abs(float(expected) - 75.1) < 0.05


def test_benchmark_deterministic_and_jobs_invariant(tmp_path, capsys):
    args = ["benchmark", "--preset", "d", "--lags", "1-10", "--reps", "4",
            "--T-values", "300,600", "--methods", "deflation,symmetric-jacobi",
            "--seed", "5"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    second = capsys.readouterr().out
    assert first == second
    assert main(args + ["--jobs", "2"]) == 0
    parallel = capsys.readouterr().out
    assert parallel == first


def test_lagselect_identical_sets_tie(dataset, capsys):
    assert main(["lagselect", "--data", dataset,
                 "--lag-sets", "1-10;1-10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    sums = [float(ln.split(",")[2]) for ln in lines]
    assert sums[0] == sums[1]


def test_lagselect_needs_two_sets(dataset, capsys):
    assert main(["lagselect", "--data", dataset, "--lag-sets", "1-10"]) == 1
    assert "error:" in capsys.readouterr().err


def test_lagselect_row_subset_and_output(dataset, tmp_path, capsys):
    out = str(tmp_path / "rank.csv")
    assert main(["lagselect", "--data", dataset, "--lag-sets",
                 "1-5;1-10,12-20/2", "--rows", "1,2", "--output", out]) == 0
    capsys.readouterr()
    body = open(out).read().splitlines()
    assert body[0] == "rank,lags,row_variance_sum"
    assert len(body) == 3


def test_lagselect_ranking_reproducible_across_seeds(tmp_path, capsys):
    model = write_model(tmp_path / "c.json", [
        {"kind": "arma", "ar": [0.3, 0.3, -0.4], "ma": [-0.6, 0.3, 1.1, 1.0, -1.1, -0.3]},
        {"kind": "arma", "ar": [0.2, 0.1, -0.4], "ma": [1.2, 2.8, -1.0, -1.0, 0.1, 0.1]},
        {"kind": "arma", "ar": [0.2, 0.2, 0.4], "ma": [-1.4, -1.9, -0.5, -0.3, -0.4, 0.4]},
    ])
    orders = []
    for seed in ("101", "202"):
        data = str(tmp_path / f"x{seed}.csv")
        assert main(["simulate", "--model", model, "--T", "100000",
                     "--seed", seed, "--output", data]) == 0
        assert main(["lagselect", "--data", data,
                     "--lag-sets", "1-10;1-20"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        orders.append(tuple(ln.split(",")[1] for ln in lines))
    assert orders[0] == orders[1]


def test_missing_data_file_errors(capsys):
    assert main(["separate", "--data", "/nonexistent.csv", "--lags", "1-3",
                 "--output", "/tmp/x"]) == 1
    assert "error:" in capsys.readouterr().err
