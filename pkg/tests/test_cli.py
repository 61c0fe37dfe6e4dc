import numpy as np
import pytest

from obstaclelab.cli import main


def read_body(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return lines[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_solve_zero_measure_gives_zero_field(tmp_path, capsys):
    out = tmp_path / "u.csv"
    assert main(["solve", "--n", "8", "--k", "0.3", "--output", str(out)]) == 0
    cols, data = read_body(out)
    assert cols == ["x", "y", "u", "lambda0"]
    assert data.shape == (49, 4) and np.all(data[:, 2:] == 0)
    assert "u_max_abs = 0.0" in capsys.readouterr().out


def test_solve_measure_file_both_modes(tmp_path, capsys):
    mfile = tmp_path / "mu.txt"
    mfile.write_text("dimension 2\natom 0.5 0.5 -1\n")
    summary = tmp_path / "s.txt"
    args = ["solve", "--measure", str(mfile), "--n", "32", "--k", "0.35", "--summary", str(summary)]
    assert main(args + ["--output", str(tmp_path / "a.csv")]) == 0
    assert "singular_reaction_mass = 1.0" in summary.read_text()
    assert main(args + ["--mode", "naive", "--output", str(tmp_path / "b.csv")]) == 0
    _, data = read_body(tmp_path / "b.csv")
    assert data[:, 2].min() == pytest.approx(-0.35)


def test_green_subcommand(tmp_path, capsys):
    assert main(["green", "--n", "32", "--output", str(tmp_path / "g.csv")]) == 0
    assert "bounds_ok = True" in capsys.readouterr().out
    text = (tmp_path / "g.csv").read_text()
    assert "# c1 =" in text


def test_potential_scan_subcommand(tmp_path, capsys):
    assert main(["potential-scan", "--output", str(tmp_path / "p.csv")]) == 0
    out = capsys.readouterr().out
    assert "strictly_decreasing = True" in out
    cols, data = read_body(tmp_path / "p.csv")
    assert cols == ["radius", "num_avg", "den_avg", "ratio"] and data.shape == (9, 4)


def test_capacity_subcommand(tmp_path):
    assert main(["capacity", "--n", "8,16", "--set", "disk", "--output", str(tmp_path / "c.csv")]) == 0
    cols, data = read_body(tmp_path / "c.csv")
    assert cols == ["n", "h", "nodes", "capacity"] and data.shape == (2, 4)


def test_experiment_with_config_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid_sizes = 8, 16  # coarse\noutput = ignored.csv\nobstacle_shift = 0.3\n")
    out = tmp_path / "lo.csv"
    assert main(["experiment", "lostesso", "--config", str(cfg), "--output", str(out), "--obstacle-shift", "0.2"]) == 0
    text = out.read_text()
    assert "# config.obstacle_shift = 0.2" in text and "# config.grid_sizes = 8,16" in text
    assert "C3 datum_invariance: PASS" in capsys.readouterr().out


def test_experiment_failure_exits_nonzero(tmp_path):
    # delta carries the naive-arm refinement criterion, which does not hold
    rc = main(["experiment", "delta", "--grid-sizes", "16,32", "--output", str(tmp_path / "d.csv")])
    assert rc == 1
    assert "# verdict C2 naive_l1_successive_change: FAIL" in (tmp_path / "d.csv").read_text()


def test_missing_config_file(tmp_path, capsys):
    assert main(["experiment", "delta", "--config", str(tmp_path / "none.cfg")]) != 0
    assert "not found" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["solve", "--bogus"], []])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_help_lists_config_keys(capsys):
    with pytest.raises(SystemExit):
        main(["experiment", "--help"])
    out = capsys.readouterr().out
    assert "obstacle_shift" in out and "grid_sizes" in out
