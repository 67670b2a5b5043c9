"""Command-line front end, driven in process through main(argv)."""

import json

import pytest

from ptproc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


TINY = ["--window", "0.0", "0.2", "--model", "strauss",
        "--beta", "50", "--gamma", "0.5", "--r", "0.1"]


def test_estimate_writes_payload_and_round_trips(tmp_path, capsys):
    out1 = tmp_path / "run1.json"
    code, _, err = run(
        capsys, "estimate", *TINY, "--stat", "point-count",
        "--engine", "ais", "--target-rel-se", "0.05", "--seed", "7",
        "--out", str(out1),
    )
    assert code == 0 and err == ""
    payload = json.loads(out1.read_text())
    assert payload["config"]["command"] == "estimate"
    assert payload["config"]["statistic"] == {"kind": "point_count"}
    assert payload["config"]["threads"] == 1
    rep = payload["report"]
    assert rep["engine"] == "ais"
    assert rep["stop_reason"] == "converged"
    assert 1.0 < rep["mu_hat"] < 2.0

    # feeding the echoed config back reproduces everything except the clocks
    cfg_path = tmp_path / "echo.json"
    cfg_path.write_text(json.dumps(payload["config"]))
    out2 = tmp_path / "run2.json"
    code, _, _ = run(capsys, "estimate", "--config", str(cfg_path), "--out", str(out2))
    assert code == 0
    second = json.loads(out2.read_text())
    drop = ("wall_seconds", "time_variance")
    assert {k: v for k, v in second["report"].items() if k not in drop} == \
           {k: v for k, v in rep.items() if k not in drop}
    assert second["config"] == payload["config"]


def test_estimate_trace_sidecar(tmp_path, capsys):
    out = tmp_path / "traced.json"
    code, _, _ = run(
        capsys, "estimate", *TINY, "--stat", "point_count", "--engine", "ais",
        "--target-rel-se", "0.1", "--seed", "8", "--out", str(out), "--trace",
    )
    assert code == 0
    trace = (tmp_path / "traced.trace.csv").read_text().splitlines()
    assert trace[0] == "t,rho_hat,mu_hat,sigma2_hat,n_total"
    steps = json.loads(out.read_text())["report"]["steps"]
    assert len(trace) == steps + 1
    code, _, err = run(capsys, "estimate", *TINY, "--engine", "ais", "--trace")
    assert code == 2 and "trace" in err


def test_malformed_configs_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "estimate", "--engine", "ais")
    assert code == 2 and "model" in err

    code, _, err = run(
        capsys, "estimate", "--model", "strauss", "--gamma", "0.5", "--r", "0.1"
    )
    assert code == 2 and "beta" in err

    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    code, _, err = run(capsys, "estimate", "--config", str(bad))
    assert code == 2 and "bogus" in err

    nested = tmp_path / "nested.json"
    nested.write_text('{"ais": {"warmup": 3}}')
    code, _, err = run(capsys, "estimate", "--config", str(nested))
    assert code == 2 and "warmup" in err

    notjson = tmp_path / "broken.json"
    notjson.write_text("{")
    code, _, err = run(capsys, "estimate", "--config", str(notjson))
    assert code == 2 and "JSON" in err

    code, _, err = run(capsys, "estimate", *TINY, "--seed", "-1")
    assert code == 2 and "seed" in err


def test_engine_failures_exit_3(capsys):
    code, _, err = run(
        capsys, "estimate", "--model", "strauss", "--beta", "100", "--gamma", "0.5",
        "--r", "0.1", "--engine", "cftp", "--t-max", "0", "--seed", "1",
    )
    assert code == 3 and err.startswith("engine failure")

    code, _, err = run(
        capsys, "oracle", "--preset", "tiny-strauss", "--n-max", "11",
        "--mc-points", "2000", "--batches", "8", "--seed", "1",
    )
    assert code == 3 and err.startswith("engine failure")


def test_oracle_preset_and_flag_precedence(tmp_path, capsys):
    out = tmp_path / "oracle.json"
    code, _, _ = run(
        capsys, "oracle", "--preset", "tiny-strauss", "--n-max", "14",
        "--mc-points", "4000", "--batches", "8", "--seed", "2", "--out", str(out),
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["config"]["n_max"] == 14  # flag beats the preset
    res = payload["result"]
    assert res["n_max"] == 14
    assert 1.3 < res["mu"] < 1.5
    assert res["tail_bound"] < 1e-6
    assert sum(res["count_distribution"]) == pytest.approx(1.0, abs=1e-9)


def test_sample_poisson_stdout_and_directory(tmp_path, capsys):
    code, out, _ = run(capsys, "sample", "--engine", "poisson", "--rho", "20", "--seed", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y"
    for line in lines[1:]:
        x, y = map(float, line.split(","))
        assert -0.5 <= x <= 0.5 and -0.5 <= y <= 0.5

    code, _, err = run(capsys, "sample", "--engine", "poisson", "--rho", "5", "--reps", "2")
    assert code == 2 and "--out" in err

    outdir = tmp_path / "draws"
    code, _, _ = run(
        capsys, "sample", "--engine", "poisson", "--rho", "5", "--reps", "3",
        "--seed", "3", "--out", str(outdir),
    )
    assert code == 0
    names = sorted(p.name for p in outdir.iterdir())
    assert names == ["sample_00001.csv", "sample_00002.csv", "sample_00003.csv"]

    code, _, err = run(capsys, "sample", "--engine", "poisson", "--seed", "3")
    assert code == 2 and "rho" in err


def test_sample_mh_with_trace(tmp_path, capsys):
    outdir = tmp_path / "chain"
    code, _, _ = run(
        capsys, "sample", "--engine", "mh", "--model", "strauss", "--beta", "10",
        "--gamma", "1.0", "--r", "0.1", "--burn-in", "50", "--thin", "5",
        "--reps", "2", "--seed", "4", "--out", str(outdir), "--trace",
    )
    assert code == 0
    assert (outdir / "sample_00001.csv").exists()
    assert (outdir / "sample_00002.csv").exists()
    trace = (outdir / "trace.csv").read_text().splitlines()
    assert trace[0] == "step,n"
    assert len(trace) == 1 + 50 + 2 * 5

    code, _, err = run(
        capsys, "sample", "--engine", "poisson", "--rho", "2", "--trace", "--out", "x.csv"
    )
    assert code == 2 and "mh" in err


def test_sample_cftp_is_deterministic(capsys):
    argv = ["sample", "--engine", "cftp", "--model", "strauss", "--beta", "5",
            "--gamma", "0.9", "--r", "0.05", "--seed", "5"]
    code, out1, _ = run(capsys, *argv)
    assert code == 0 and out1.startswith("x,y\n")
    code, out2, _ = run(capsys, *argv)
    assert out1 == out2


def test_benchmark_from_config_cases(tmp_path, capsys):
    cfg = {
        "window": {"lower": [0.0, 0.0], "upper": [0.2, 0.2]},
        "target_rel_se": 0.1,
        "seed": 6,
        "cases": [
            {
                "model": {"kind": "strauss", "beta": 50.0, "gamma": 0.5, "r": 0.1},
                "statistic": {"kind": "point_count"},
                "engines": ["ais"],
            }
        ],
    }
    cfg_path = tmp_path / "bench.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "rows.csv"
    code, _, _ = run(capsys, "benchmark", "--config", str(cfg_path), "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("engine,beta,gamma,mu_hat,se,")
    assert len(lines) == 2 and lines[1].startswith("ais,50.0,0.5,")
    meta = json.loads((tmp_path / "rows.meta.json").read_text())
    assert meta["config"]["target_rel_se"] == 0.1
    assert meta["metadata"]["kernel_backend"] in ("cython", "python")

    code, _, err = run(capsys, "benchmark", "--seed", "6")
    assert code == 2 and "preset" in err

    cfg["cases"][0]["extra"] = 1
    cfg_path.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "benchmark", "--config", str(cfg_path))
    assert code == 2 and "extra" in err


def test_threads_come_from_environment(tmp_path, capsys, monkeypatch):
    out = tmp_path / "env.json"
    monkeypatch.setenv("PTPROC_THREADS", "2")
    code, _, _ = run(
        capsys, "estimate", *TINY, "--stat", "point_count", "--engine", "ais",
        "--target-rel-se", "0.1", "--seed", "9", "--out", str(out),
    )
    assert code == 0
    assert json.loads(out.read_text())["config"]["threads"] == 2

    monkeypatch.setenv("PTPROC_THREADS", "many")
    code, _, err = run(capsys, "estimate", *TINY, "--engine", "ais")
    assert code == 2 and "PTPROC_THREADS" in err
