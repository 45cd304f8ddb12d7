"""CLI contract: subcommands, outputs, exit codes."""

import json
import os

import pytest

from dsdivn.cli import main

SCENARIO = os.path.join(os.path.dirname(__file__), "..", "scenarios",
                        "paper-sec5.json")


def small_scenario(tmp_path, **patch):
    data = {
        "area_m": [600, 600], "n_vehicles": 60, "sim_duration_s": 8.0,
        "timers": {"idle_timeout_s": 2.0, "view_period_s": 0.5},
        "seed": 4,
    }
    data.update(patch)
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(data))
    return str(p)


def test_simulate_writes_csvs_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["simulate", "--scenario", small_scenario(tmp_path),
               "--out", str(out)])
    assert rc == 0
    for name in ("pdr.csv", "install.csv", "counters.csv"):
        assert (out / name).exists()
    assert "trace.tsv" not in os.listdir(out)
    summary = capsys.readouterr().out
    assert "mode=dsdivn" in summary and "pdr=" in summary


def test_simulate_trace_flag(tmp_path):
    out = tmp_path / "out"
    rc = main(["simulate", "--scenario",
               small_scenario(tmp_path, sim_duration_s=3.0),
               "--out", str(out), "--trace"])
    assert rc == 0
    assert (out / "trace.tsv").stat().st_size > 0


def test_simulate_overrides_mode_and_seed(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["simulate", "--scenario", small_scenario(tmp_path),
               "--seed", "9", "--mode", "no-fallback", "--out", str(out)])
    assert rc == 0
    assert "mode=no-fallback seed=9" in capsys.readouterr().out


def test_bad_scenario_is_exit_code_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"n_vehicles": -3}))
    assert main(["simulate", "--scenario", str(p), "--out",
                 str(tmp_path / "o")]) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_scenario_is_exit_code_2(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_fig4_runs_all_modes(tmp_path, capsys):
    scen = small_scenario(
        tmp_path, n_vehicles=80, sim_duration_s=12.0,
        failure={"target_segment": 1, "start_s": 7.0, "duration_s": 3.0})
    out = tmp_path / "f4"
    rc = main(["fig4", "--scenario", scen, "--seeds", "2", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    for mode in ("dsdivn", "self-organized", "no-fallback"):
        assert f"mode={mode} seed=1" in text
        assert f"mode={mode} seed=2" in text
    assert (out / "pdr.csv").exists()


def test_fig4_without_failure_spec_is_config_error(tmp_path):
    assert main(["fig4", "--scenario", small_scenario(tmp_path),
                 "--seeds", "1", "--out", str(tmp_path / "o")]) == 1


def test_fig5_writes_install_csv(tmp_path, capsys):
    out = tmp_path / "f5"
    rc = main(["fig5", "--distances", "150,300", "--sizes", "100,500",
               "--reps", "3", "--out", str(out)])
    assert rc == 0
    lines = (out / "install.csv").read_text().splitlines()
    assert lines[0] == "distance_m,size_B,elapsed_s"
    assert len(lines) == 1 + 2 * 2 * 3
    assert "mean_install=" in capsys.readouterr().out


def test_fig5_bad_list_is_exit_code_1(tmp_path):
    assert main(["fig5", "--distances", "150,abc", "--sizes", "100",
                 "--out", str(tmp_path / "o")]) == 1
    assert main(["fig5", "--distances", "", "--sizes", "100",
                 "--out", str(tmp_path / "o")]) == 1
