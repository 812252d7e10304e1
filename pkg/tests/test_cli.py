import json

import pytest

from gpscatter import cli

GRID = ["--grid", "40:512"]


def run(capsys, argv):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def strip_timing(text):
    doc = json.loads(text)
    doc["meta"].pop("timing")
    return doc


def test_parse_simulate():
    cfg = cli.parse_args(["simulate", "--eq", "gp", "--init", "black", "--dt", "1e-3", "--t-final", "1", "--snap", "10"])
    assert (cfg.command, cfg.equation, cfg.init, cfg.dt, cfg.t_final, cfg.snaps) == ("simulate", "gp", "black", 1e-3, 1.0, 10)


def test_parse_energies():
    cfg = cli.parse_args(["energies", "--init", "dark:0.5", "--s", "1.5", "--tau", "4"])
    assert (cfg.s, cfg.tau, cfg.init) == (1.5, 4.0, "dark:0.5")


def test_parse_scatter_ranges():
    cfg = cli.parse_args(["scatter", "--init", "black", "--tau-grid", "2:10:5", "--xi-grid", "-3:3:7", "--eigen"])
    assert cfg.tau_grid == (2.0, 10.0, 5) and cfg.xi_grid == (-3.0, 3.0, 7) and cfg.eigen


@pytest.mark.parametrize("argv", [["scatter", "--init=-black"], ["scatter", "--init", "-black"]])
def test_parse_negated_preset(argv):
    assert cli.parse_args(argv).init == "-black"


@pytest.mark.parametrize(
    "argv",
    [
        ["energies", "--init", "black", "--s", "0.4"],
        ["energies", "--init", "black", "--s", "1", "--tau", "1.5"],
        ["metric", "--a", "black", "--b", "one", "--s", "-1"],
        ["scatter", "--init", "black", "--tau-grid", "1:3:4"],
        ["simulate", "--eq", "gp", "--init", "black", "--dt", "abc"],
        ["simulate", "--eq", "nls", "--init", "black"],
        ["frobnicate"],
        ["scatter", "--init", "black", "--bogus"],
        ["verify", "--suite", "huge"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, out, _ = run(capsys, argv)
    assert code == 2 and out == ""


def test_unknown_preset_exit_2(capsys):
    code, out, err = run(capsys, ["energies", "--init", "nosuch", "--s", "1"] + GRID)
    assert code == 2 and "error" in json.loads(err)


def test_numerical_failure_exit_1(capsys):
    code, _, err = run(capsys, ["simulate", "--eq", "kdv6", "--init", "-kinkpair:0.2", "--t-final", "0.01"] + GRID)
    assert code in (0, 1)
    if code == 1:
        assert json.loads(err)["error"]


def test_energies_json_is_deterministic(capsys):
    argv = ["energies", "--init", "dark:0.5", "--s", "1.5", "--tau", "4"] + GRID
    first = run(capsys, argv)
    second = run(capsys, argv)
    assert first[0] == second[0] == 0
    assert strip_timing(first[1]) == strip_timing(second[1])
    doc = json.loads(first[1])
    assert set(doc) == {"result", "config", "meta"}
    assert list(doc) == sorted(doc)


def test_scatter_independent_of_threads(capsys):
    base = ["scatter", "--init", "dark:0.5", "--tau-grid", "2:8:4", "--xi-grid", "-2:2:4", "--eigen"] + GRID
    one = strip_timing(run(capsys, base + ["--threads", "1"])[1])
    four = strip_timing(run(capsys, base + ["--threads", "4"])[1])
    one["config"].pop("threads")
    four["config"].pop("threads")
    assert one == four
    res = one["result"]
    assert len(res["cut"]) == 4 and len(res["imag_axis"]) == 4
    assert len(res["eigenvalues"]) == 1


def test_scatter_black_soliton_closed_form(capsys):
    import math

    doc = json.loads(run(capsys, ["scatter", "--init", "black", "--tau-grid", "3:3:1"] + GRID)[1])
    entry = doc["result"]["imag_axis"][0]
    omega = 1.5 + math.sqrt(1.5**2 - 1)
    assert abs(entry["re_log"] - (2 / 3 + math.log((omega - 1) / (omega + 1)))) < 1e-9
    assert abs(entry["im_log"]) < 1e-9


def test_cut_branch_point_rejected(capsys):
    code, out, err = run(capsys, ["scatter", "--init", "black", "--xi-grid", "-1:1:3"] + GRID)
    assert code == 2 and out == "" and "branch point" in json.loads(err)["message"]


def test_metric_command(capsys):
    code, out, _ = run(capsys, ["metric", "--a", "black", "--b", "black", "--s", "1"] + GRID)
    assert code == 0 and json.loads(out)["result"]["distance"] < 1e-12


def test_simulate_writes_snapshots(capsys, tmp_path):
    argv = ["simulate", "--eq", "gp", "--init", "dark:0.5", "--dt", "1e-2", "--t-final", "0.1", "--snap", "2",
            "--out", str(tmp_path)] + GRID
    code, out, _ = run(capsys, argv)
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["snapshots"] == ["snapshot_0000.txt", "snapshot_0001.txt", "snapshot_0002.txt"]
    assert all((tmp_path / name).exists() for name in doc["snapshots"])
    lines = (tmp_path / "drift.csv").read_text().splitlines()
    assert lines[0] == "t,observable,value,rel_drift"
    observed = {line.split(",")[1] for line in lines[1:]}
    assert {"mass", "momentum", "gl_energy"} <= observed
    assert max(doc["max_drift"].values()) < 1e-6


def test_simulate_kdv6_from_kink(capsys):
    argv = ["simulate", "--eq", "kdv6", "--init=-black", "--dt", "1e-3", "--t-final", "0.05"] + GRID
    code, out, _ = run(capsys, argv)
    assert code == 0 and json.loads(out)["result"]["equation"] == "kdv6"


def test_miura_check_command(capsys):
    code, out, _ = run(capsys, ["miura-check", "--init=-black", "--t-final", "0.1"] + GRID)
    assert code == 0 and json.loads(out)["result"]["max_mismatch"] < 1e-4
