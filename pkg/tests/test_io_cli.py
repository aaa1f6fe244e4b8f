"""File formats and the command line, end to end at reduced resolution."""

import json
import math

import numpy as np
import pytest

from kerrcat import (
    ConfigError,
    FockBasis,
    PhaseGrid,
    QuantumState,
    Schedule,
    cat_state,
    io as kio,
    wigner,
)
from kerrcat.cli import main


@pytest.fixture(scope="module")
def small_plan(tmp_path_factory):
    """A cheap planned run shared by the CLI tests (delta0=1, coarse ds)."""
    out = tmp_path_factory.mktemp("plan")
    code = main(["--out-dir", str(out), "plan", "--delta0", "1", "--ds", "0.04"])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def small_run(small_plan, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main([
        "--out-dir", str(out), "evolve",
        "--schedule", str(small_plan / "schedule.csv"),
        "--dt", "1e-3", "--store-every", "20", "--snapshots", "7",
    ])
    assert code == 0
    return out


# ---------- io round trips ----------


def test_path_csv_round_trip(default_path, tmp_path):
    f = tmp_path / "path.csv"
    kio.write_path_csv(f, default_path)
    back = kio.read_path_csv(f)
    assert back.ds == default_path.ds
    assert back.total_penalty == default_path.total_penalty
    assert np.array_equal(back.deltas, default_path.deltas)
    assert np.array_equal(back.betas, default_path.betas)
    assert np.array_equal(back.penalties, default_path.penalties)
    # theta round-trips including the leading NaN
    assert np.array_equal(back.thetas[1:], default_path.thetas[1:])
    assert math.isnan(back.thetas[0])


def test_schedule_csv_round_trip(default_schedule, tmp_path):
    f = tmp_path / "schedule.csv"
    kio.write_schedule_csv(f, default_schedule)
    back = kio.read_schedule_csv(f)
    assert back.source == default_schedule.source
    assert np.array_equal(back.times, default_schedule.times)
    assert np.array_equal(back.deltas, default_schedule.deltas)
    assert np.array_equal(back.betas, default_schedule.betas)


def test_trajectory_csv_round_trip(tpc_even, tmp_path):
    f = tmp_path / "trajectory.csv"
    kio.write_trajectory_csv(f, tpc_even)
    back = kio.read_trajectory_csv(f)
    assert np.array_equal(back["t"], tpc_even.times)
    assert np.array_equal(back["fidelity"], tpc_even.fidelity)
    assert np.array_equal(back["parity"], tpc_even.parity)
    assert np.array_equal(back["n_mean"], tpc_even.n_mean)
    assert np.array_equal(back["trace"], tpc_even.trace)
    assert back["kappa"] == 0.0


def test_wigner_csv_round_trip(tmp_path):
    state = cat_state(1.5, "even", FockBasis(20))
    wmap = wigner(state, PhaseGrid.square(4.0, 64))
    f = tmp_path / "wigner.csv"
    kio.write_wigner_csv(f, wmap)
    back = kio.read_wigner_csv(f)
    assert back.grid.resolution == 64
    assert back.grid.half_width == pytest.approx(4.0)
    assert np.array_equal(back.values, wmap.values)


def test_state_json_round_trip_full_precision(tmp_path, rng):
    vec = rng.normal(size=24) + 1j * rng.normal(size=24)
    state = QuantumState.pure(vec / np.linalg.norm(vec))
    f = tmp_path / "state.json"
    kio.write_state_json(f, state, meta={"t": 1.25})
    back = kio.read_state_json(f)
    assert back.kind == "pure"
    assert np.array_equal(back.data, state.data)
    assert json.loads(f.read_text())["meta"]["t"] == 1.25


def test_density_json_round_trip(tmp_path):
    basis = FockBasis(12)
    rho = 0.5 * basis.fock_state(0).as_density() + 0.5 * cat_state(1.0, "even", basis).as_density()
    state = QuantumState.density(rho)
    f = tmp_path / "rho.json"
    kio.write_state_json(f, state)
    back = kio.read_state_json(f)
    assert back.kind == "density"
    assert np.array_equal(back.data, state.data)


def test_format_tag_is_checked(tmp_path, default_schedule):
    f = tmp_path / "schedule.csv"
    kio.write_schedule_csv(f, default_schedule)
    with pytest.raises(ConfigError):
        kio.read_path_csv(f)
    g = tmp_path / "state.json"
    g.write_text('{"format_version": "other.v9", "kind": "pure", "dim": 2}')
    with pytest.raises(ConfigError):
        kio.read_state_json(g)


def test_manifest_round_trip(tmp_path):
    manifest = kio.RunManifest(command="plan", config={"delta0": 2.0})
    f = tmp_path / "manifest.json"
    kio.write_manifest(f, manifest)
    doc = kio.read_manifest(f)
    assert doc["command"] == "plan"
    assert doc["config"] == {"delta0": 2.0}
    assert doc["tool_version"]
    assert doc["created_utc"]


# ---------- CLI end to end ----------


def test_plan_outputs_and_manifest(small_plan):
    assert (small_plan / "path.csv").exists()
    assert (small_plan / "schedule.csv").exists()
    doc = kio.read_manifest(small_plan / "manifest.json")
    assert doc["config"]["delta0"] == 1.0
    for name, digest in doc["outputs"].items():
        assert kio.sha256_of(small_plan / name) == digest


def test_plan_determinism_bytes(small_plan, tmp_path):
    again = tmp_path / "again"
    code = main(["--out-dir", str(again), "plan", "--delta0", "1", "--ds", "0.04"])
    assert code == 0
    for name in ("path.csv", "schedule.csv"):
        assert (again / name).read_bytes() == (small_plan / name).read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"delta0": 1.0, "ds": 0.08, "duration": 1.0}))
    out = tmp_path / "out"
    code = main(["--out-dir", str(out), "plan", "--config", str(cfg), "--ds", "0.04"])
    assert code == 0
    doc = kio.read_manifest(out / "manifest.json")
    assert doc["config"]["ds"] == 0.04  # flag beats config file
    assert doc["config"]["duration"] == 1.0


def test_spc_plan(tmp_path):
    out = tmp_path / "spc"
    code = main(["--out-dir", str(out), "plan", "--spc", "--duration", "2.0"])
    assert code == 0
    schedule = kio.read_schedule_csv(out / "schedule.csv")
    assert schedule.source == "spc"
    assert np.allclose(schedule.deltas, 0.0)


def test_evolve_run_contents(small_plan, small_run):
    traj = kio.read_trajectory_csv(small_run / "trajectory.csv")
    assert traj["fidelity"][-1] > 0.9
    assert abs(traj["trace"][-1] - 1.0) < 1e-8
    state = kio.read_state_json(small_run / "final_state.json")
    assert state.kind == "pure"
    snaps = sorted((small_run / "snapshots").glob("snap_*.json"))
    assert len(snaps) == 7
    doc = kio.read_manifest(small_run / "manifest.json")
    beta_f = kio.read_schedule_csv(small_plan / "schedule.csv").betas[-1]
    assert doc["config"]["target_amplitude"] == pytest.approx(math.sqrt(beta_f))
    assert doc["inputs"]  # schedule digest recorded


def test_kappa_sweep_parallel(small_plan, tmp_path):
    out = tmp_path / "sweep"
    code = main([
        "--out-dir", str(out), "evolve",
        "--schedule", str(small_plan / "schedule.csv"),
        "--dt", "1e-3", "--store-every", "50",
        "--kappa-list", "0,0.1",
    ])
    assert code == 0
    zero = kio.read_trajectory_csv(out / "kappa_0" / "trajectory.csv")
    lossy = kio.read_trajectory_csv(out / "kappa_0.1" / "trajectory.csv")
    assert lossy["kappa"] == 0.1
    assert lossy["fidelity"][-1] < zero["fidelity"][-1]


def test_analyze_run(small_run, tmp_path, capsys):
    out = tmp_path / "ana"
    code = main(["--out-dir", str(out), "analyze", "--run", str(small_run),
                 "--resolution", "96"])
    assert code == 0
    text = capsys.readouterr().out
    for key in ("parity", "n_mean", "fidelity", "nonclassical volume", "cat size"):
        assert key in text
    assert (out / "wigner.png").exists()
    metrics = json.loads((out / "analysis.json").read_text())
    assert metrics["format_version"] == "kerrcat.analysis.v1"
    assert metrics["fidelity"] > 0.9
    wmap = kio.read_wigner_csv(out / "wigner.csv")
    assert wmap.grid.resolution == 96


def test_analyze_vacuum_reports_no_lobes(tmp_path, capsys):
    state_file = tmp_path / "vac.json"
    kio.write_state_json(state_file, FockBasis(12).fock_state(0))
    out = tmp_path / "ana"
    code = main(["--out-dir", str(out), "analyze", "--state", str(state_file),
                 "--resolution", "64"])
    assert code == 0
    text = capsys.readouterr().out
    assert "lobes not detected" in text
    assert "no target specified" in text
    metrics = json.loads((out / "analysis.json").read_text())
    assert metrics["cat_size"] is None
    assert metrics["nonclassical_volume"] < 1e-3


def test_compare_self(small_run, tmp_path, capsys):
    out = tmp_path / "cmp"
    code = main(["--out-dir", str(out), "compare",
                 "--first", str(small_run), "--second", str(small_run),
                 "--labels", "a,b", "--resolution", "64", "--half-width", "4.0",
                 "--sample-count", "7"])
    assert code == 0
    assert "fidelity crossings: 0" in capsys.readouterr().out
    data, comments = kio._read_table(
        out / "comparison.csv", kio.COMPARISON_FORMAT,
        ("t", "fidelity_first", "fidelity_second", "volume_first", "volume_second"),
    )
    assert comments["labels"] == "a,b"
    assert np.array_equal(data[:, 1], data[:, 2])


def test_sweep_cli(tmp_path, capsys):
    out = tmp_path / "dsweep"
    code = main(["--out-dir", str(out), "sweep", "--delta0-list", "1",
                 "--ds", "0.04", "--resolution", "96"])
    assert code == 0
    assert "beta_f" in capsys.readouterr().out
    data, _ = kio._read_table(out / "sweep.csv", kio.SWEEP_FORMAT,
                              ("delta0", "beta_f", "cat_size"))
    assert data.shape == (1, 3)
    assert 1.8 < data[0, 1] < 2.6


def test_env_var_default_out_dir(tmp_path, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv("KERRCAT_OUT_DIR", str(target))
    code = main(["plan", "--spc", "--duration", "1.0"])
    assert code == 0
    assert (target / "schedule.csv").exists()


def test_shared_flags_accepted_after_subcommand(tmp_path):
    # --out-dir/--dim/--seed work in either position; the later one wins.
    out = tmp_path / "after"
    code = main(["plan", "--spc", "--duration", "1.0", "--out-dir", str(out),
                 "--dim", "12", "--seed", "7"])
    assert code == 0
    manifest = kio.read_manifest(out / "manifest.json")
    assert manifest["config"]["seed"] == 7
    override = tmp_path / "override"
    code = main(["--out-dir", str(tmp_path / "ignored"), "plan", "--spc",
                 "--duration", "1.0", "--out-dir", str(override)])
    assert code == 0
    assert (override / "schedule.csv").exists()
    assert not (tmp_path / "ignored").exists()


# ---------- CLI error paths ----------


def test_exit_code_2_for_bad_delta0(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "plan", "--delta0", "0"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_exit_code_2_for_schema_violation(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"delta0": -2.0}))
    code = main(["--out-dir", str(tmp_path / "o"), "plan", "--config", str(bad)])
    assert code == 2
    assert "$.delta0" in capsys.readouterr().err
    bad.write_text(json.dumps({"no_such_key": 1}))
    assert main(["--out-dir", str(tmp_path / "o"), "plan", "--config", str(bad)]) == 2


def test_exit_code_2_for_ambiguous_analyze(tmp_path):
    code = main(["--out-dir", str(tmp_path), "analyze"])
    assert code == 2


def test_exit_code_3_for_grid_too_small(small_run, tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "analyze", "--run", str(small_run),
                 "--half-width", "1.2", "--resolution", "64"])
    assert code == 3
    assert "half-width" in capsys.readouterr().err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
