"""Command-line interface: exit codes, artifacts, determinism."""

from __future__ import annotations

import csv
import importlib.util
import json
import os

import numpy as np
import pytest

from tcbayes.cli import load_chain_csv, main, resolve_config
from tcbayes.samplers import MarkovChain, ParticleHistory
from tcbayes.scenario import ConfigError


def _read_csv(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


# ---------------------------------------------------------------------------
# config resolution and argument errors
# ---------------------------------------------------------------------------


def test_resolve_packaged_names():
    assert resolve_config("model1").model == 1
    assert resolve_config("model2.json").model == 2
    assert resolve_config("model3").model == 3


def test_resolve_missing_config():
    with pytest.raises(ConfigError, match="neither a file"):
        resolve_config("does_not_exist.json")


def test_resolve_config_file(tiny_model1_dict, write_config):
    path = write_config(tiny_model1_dict)
    assert resolve_config(path).model == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "tcbayes" in capsys.readouterr().out


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_unknown_config_key_exits_2(tiny_model1_dict, write_config, capsys):
    tiny_model1_dict["bogus"] = True
    path = write_config(tiny_model1_dict)
    assert main(["run", "--config", path]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_config_file_exits_2(capsys):
    assert main(["run", "--config", "/nonexistent/cfg.json"]) == 2
    assert "neither a file" in capsys.readouterr().err


def test_model1_with_geometry_exits_2(tiny_model1_dict, tiny_model2_dict, write_config, capsys):
    tiny_model1_dict["geometry"] = tiny_model2_dict["geometry"]
    path = write_config(tiny_model1_dict)
    assert main(["run", "--config", path]) == 2
    assert "geometry" in capsys.readouterr().err


def test_infeasible_start_exits_3(tiny_model1_dict, write_config, tmp_path, capsys):
    tiny_model1_dict["sampler"]["theta_init"] = 400.0  # below the feasible boundary
    path = write_config(tiny_model1_dict)
    rc = main(["run", "--config", path, "--output", str(tmp_path / "out")])
    assert rc == 3
    err = capsys.readouterr().err
    assert "feasible interval" in err
    assert "theta_init" in err


# ---------------------------------------------------------------------------
# run pipeline
# ---------------------------------------------------------------------------


def test_run_artifacts_and_determinism(tiny_model1_dict, write_config, tmp_path):
    path = write_config(tiny_model1_dict)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", "--config", path, "--output", out1]) == 0
    assert main(["run", "--config", path, "--output", out2]) == 0

    expected = [
        "observations.csv",
        "observations.json",
        "feasible_scan.csv",
        "chain.csv",
        "reference.csv",
        "histogram.csv",
        "diagnostics.json",
        "l2_series.csv",
        "provenance.json",
    ]
    for name in expected:
        assert os.path.exists(os.path.join(out1, name)), name
    # a strip-only scenario has no interface field to snapshot
    assert not os.path.exists(os.path.join(out1, "field_initial.csv"))

    # everything except wall-clock timing is reproducible bit for bit
    header, rows1 = _read_csv(os.path.join(out1, "chain.csv"))
    _, rows2 = _read_csv(os.path.join(out2, "chain.csv"))
    assert header == ["index", "theta", "accepted", "feasible", "log_post", "cumulative_seconds"]
    timing_col = header.index("cumulative_seconds")
    for r1, r2 in zip(rows1, rows2):
        assert r1[:timing_col] == r2[:timing_col]
    assert (
        open(os.path.join(out1, "histogram.csv")).read()
        == open(os.path.join(out2, "histogram.csv")).read()
    )

    prov = json.load(open(os.path.join(out1, "provenance.json")))
    assert prov["command"] == "run"
    assert prov["master_seed"] == 0
    assert prov["chain_seeds"] == [0]
    assert prov["feasible_intervals"]
    assert prov["config"]["model"] == 1
    assert "numpy" in prov["versions"]

    diag = json.load(open(os.path.join(out1, "diagnostics.json")))
    assert 0.0 < diag["acceptance_rate"] <= 1.0
    assert diag["infeasible_fraction"] == 0.0


def test_run_seed_override_changes_chain(tiny_model1_dict, write_config, tmp_path):
    path = write_config(tiny_model1_dict)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", "--config", path, "--output", out1, "--seed", "5"]) == 0
    assert main(["run", "--config", path, "--output", out2, "--seed", "6"]) == 0
    c1 = load_chain_csv(os.path.join(out1, "chain.csv"))
    c2 = load_chain_csv(os.path.join(out2, "chain.csv"))
    assert not np.array_equal(c1.samples, c2.samples)
    prov = json.load(open(os.path.join(out1, "provenance.json")))
    assert prov["master_seed"] == 5 and prov["chain_seeds"] == [5]


def test_run_model2_writes_fields_and_bg(tiny_model2_dict, write_config, tmp_path):
    tiny_model2_dict["sampler"]["n_chains"] = 2
    path = write_config(tiny_model2_dict)
    out = str(tmp_path / "out")
    assert main(["run", "--config", path, "--output", out, "--jobs", "2"]) == 0

    for name in ("chain_00.csv", "chain_01.csv", "field_initial.csv", "field_constraint.csv"):
        assert os.path.exists(os.path.join(out, name)), name
    header, rows = _read_csv(os.path.join(out, "field_initial.csv"))
    assert header == ["z", "temperature"]
    z = np.array([float(r[0]) for r in rows])
    assert z[0] == 0.0 and z[-1] == 1.0 and len(z) == 120
    # multi-chain Markov runs get a shrink-ratio series
    assert os.path.exists(os.path.join(out, "bg_series.csv"))


@pytest.mark.skipif(importlib.util.find_spec("matplotlib") is None, reason="needs matplotlib")
def test_run_plots(tiny_model1_dict, write_config, tmp_path):
    path = write_config(tiny_model1_dict)
    out = str(tmp_path / "out")
    assert main(["run", "--config", path, "--output", out, "--plots"]) == 0
    assert os.path.exists(os.path.join(out, "posterior.svg"))


# ---------------------------------------------------------------------------
# sample / diagnose round trip
# ---------------------------------------------------------------------------


def test_sample_then_diagnose(tiny_model1_dict, write_config, tmp_path, capsys):
    path = write_config(tiny_model1_dict)
    sample_dir = str(tmp_path / "sample")
    assert main(["sample", "--config", path, "--output", sample_dir]) == 0
    chain_path = os.path.join(sample_dir, "chain.csv")
    assert os.path.exists(chain_path)
    assert os.path.exists(os.path.join(sample_dir, "provenance.json"))
    assert "acceptance" in capsys.readouterr().out

    diag_dir = str(tmp_path / "diag")
    rc = main(["diagnose", "--config", path, "--chains", chain_path, "--output", diag_dir])
    assert rc == 0
    payload = json.load(open(os.path.join(diag_dir, "diagnostics.json")))
    assert payload["n_chains"] == 1
    assert os.path.exists(os.path.join(diag_dir, "l2_series.csv"))


def test_diagnose_particles(tiny_model1_dict, write_config, tmp_path):
    tiny_model1_dict["sampler"] = {
        "kind": "csvgd",
        "n_particles": 8,
        "n_generations": 12,
        "step_size": 5.0,
        "delta": 0.2,
    }
    tiny_model1_dict["diagnostics"]["checkpoints"] = [16, 48, 96]
    path = write_config(tiny_model1_dict)
    sample_dir = str(tmp_path / "sample")
    assert main(["sample", "--config", path, "--output", sample_dir]) == 0
    particles = os.path.join(sample_dir, "particles.csv")
    assert os.path.exists(particles)

    diag_dir = str(tmp_path / "diag")
    assert main(["diagnose", "--config", path, "--chains", particles, "--output", diag_dir]) == 0
    payload = json.load(open(os.path.join(diag_dir, "diagnostics.json")))
    assert payload["acceptance_rate"] is None
    assert 0.0 <= payload["infeasible_fraction"] <= 1.0


def test_diagnose_checkpoints_must_fit_run(tiny_model1_dict, write_config, tmp_path, capsys):
    tiny_model1_dict["sampler"] = {
        "kind": "csvgd",
        "n_particles": 8,
        "n_generations": 12,
        "step_size": 5.0,
        "delta": 0.2,
    }
    path = write_config(tiny_model1_dict)  # diagnostics checkpoints reach 300 > 96
    sample_dir = str(tmp_path / "sample")
    assert main(["sample", "--config", path, "--output", sample_dir]) == 0
    particles = os.path.join(sample_dir, "particles.csv")
    rc = main(["diagnose", "--config", path, "--chains", particles, "--output", str(tmp_path)])
    assert rc == 2
    assert "exceeds" in capsys.readouterr().err


def test_load_chain_csv_roundtrip(tiny_model1_dict, write_config, tmp_path):
    path = write_config(tiny_model1_dict)
    out = str(tmp_path / "out")
    assert main(["sample", "--config", path, "--output", out]) == 0
    chain = load_chain_csv(os.path.join(out, "chain.csv"))
    assert isinstance(chain, MarkovChain)
    assert chain.samples.shape == (300,)
    assert set(np.unique(chain.accepted)) <= {0, 1}

    tiny_model1_dict["sampler"] = {
        "kind": "projected_svgd",
        "n_particles": 6,
        "n_generations": 10,
        "step_size": 0.5,
    }
    path2 = write_config(tiny_model1_dict, "psvgd.json")
    out2 = str(tmp_path / "out2")
    assert main(["sample", "--config", path2, "--output", out2]) == 0
    hist = load_chain_csv(os.path.join(out2, "particles.csv"))
    assert isinstance(hist, ParticleHistory)
    assert hist.generations.shape == (11, 6)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def test_compare_rows_are_sampler_by_checkpoint(tiny_model1_dict, write_config, tmp_path):
    tiny_model1_dict["compare"] = {
        "samplers": {
            "crw": {"proposal_std": 120.0, "n_samples": 200, "theta_init": 700.0},
            "csvgd": {
                "n_particles": 10,
                "n_generations": 20,
                "step_size": 5.0,
                "delta": 0.2,
            },
        },
        "checkpoints": [50, 100],
    }
    path = write_config(tiny_model1_dict)
    out = str(tmp_path / "out")
    rc = main(["compare", "--config", path, "--output", out, "--samplers", "crw,csvgd"])
    assert rc == 0
    header, rows = _read_csv(os.path.join(out, "compare.csv"))
    assert header == ["sampler", "n_samples", "l2_error", "cpu_seconds"]
    assert [(r[0], int(r[1])) for r in rows] == [
        ("crw", 50),
        ("crw", 100),
        ("csvgd", 50),
        ("csvgd", 100),
    ]
    for row in rows:
        assert float(row[2]) >= 0.0
        assert float(row[3]) >= 0.0


def test_compare_rejects_unordered_checkpoints(tiny_model1_dict, write_config, tmp_path, capsys):
    path = write_config(tiny_model1_dict)
    rc = main(
        ["compare", "--config", path, "--output", str(tmp_path / "o"),
         "--samplers", "crw", "--checkpoints", "100,50"]
    )
    assert rc == 2
    assert "strictly increasing" in capsys.readouterr().err


def test_compare_rejects_checkpoint_beyond_chain(tiny_model1_dict, write_config, tmp_path):
    path = write_config(tiny_model1_dict)
    rc = main(
        ["compare", "--config", path, "--output", str(tmp_path / "o"),
         "--samplers", "crw", "--checkpoints", "50,5000"]
    )
    assert rc == 2


def test_compare_requires_hyperparameters(tiny_model1_dict, write_config, tmp_path, capsys):
    path = write_config(tiny_model1_dict)  # no compare block, sampler is crw
    rc = main(
        ["compare", "--config", path, "--output", str(tmp_path / "o"), "--samplers", "chmc"]
    )
    assert rc == 2
    assert "compare.samplers" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# remaining subcommands
# ---------------------------------------------------------------------------


def test_simulate_forward(tiny_model1_dict, write_config, tmp_path, capsys):
    path = write_config(tiny_model1_dict)
    out = str(tmp_path / "out")
    assert main(["simulate-forward", "--config", path, "--output", out, "--theta", "700"]) == 0
    assert "pressure" in capsys.readouterr().out

    header, rows = _read_csv(os.path.join(out, "trajectory.csv"))
    assert header == ["x", "t_fluid", "t_solid", "density", "velocity"]
    assert len(rows) == 401  # n_steps + 1
    x = np.array([float(r[0]) for r in rows])
    assert x[0] == 0.0 and x[-1] == pytest.approx(1.0)

    from tcbayes.porous_flow import forward_pressure_at_mean
    from tcbayes.scenario import ScenarioConfig

    cfg = ScenarioConfig.from_dict(tiny_model1_dict)
    expected = forward_pressure_at_mean(cfg.params, (462.675, 0.111), 700.0, n_steps=400)
    last = rows[-1]
    assert float(last[1]) * float(last[3]) == pytest.approx(expected, rel=1e-12)


def test_build_surrogate_uses_cache_dir(tiny_model1_dict, write_config, tmp_path, monkeypatch):
    cache = tmp_path / "cache"
    monkeypatch.setenv("TCBAYES_CACHE_DIR", str(cache))
    path = write_config(tiny_model1_dict)
    assert main(["build-surrogate", "--config", path, "--theta", "700"]) == 0
    files = list(cache.glob("*.npz"))
    assert len(files) == 1
    # second invocation reuses the cached file
    assert main(["build-surrogate", "--config", path, "--theta", "700"]) == 0
    assert list(cache.glob("*.npz")) == files


def test_scan_feasible_prints_intervals(tiny_model1_dict, write_config, tmp_path, capsys):
    path = write_config(tiny_model1_dict)
    out = str(tmp_path / "out")
    assert main(["scan-feasible", "--config", path, "--output", out]) == 0
    assert "feasible interval" in capsys.readouterr().out
    header, rows = _read_csv(os.path.join(out, "feasible_scan.csv"))
    assert rows, "scan csv must not be empty"
