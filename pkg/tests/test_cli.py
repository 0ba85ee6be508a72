import json

import numpy as np
import pytest

from parkplan.cli import BAD_INPUT, FAILED, OK, main
from parkplan.formats import read_path_csv, read_points_csv


def test_plan_and_smooth(tmp_path, capsys):
    out, sm, svg = tmp_path / "p.csv", tmp_path / "s.csv", tmp_path / "p.svg"
    code = main(["plan", "--start", "95,85", "--goal", "109,133", "--out", str(out),
                 "--smooth-out", str(sm), "--svg", str(svg)])
    assert code == OK
    path = read_path_csv(out)
    assert path[0] == (95, 85) and path[-1] == (109, 133)
    assert len(read_points_csv(sm)) > 10
    assert "smooth-path" in svg.read_text()
    assert "cells" in capsys.readouterr().err

    s2 = tmp_path / "s2.csv"
    assert main(["smooth", "--in", str(out), "--out", str(s2)]) == OK
    assert np.allclose(read_points_csv(s2)[[0, -1]], [[95, 85], [109, 133]])


def test_plan_baseline_stdout(capsys):
    assert main(["plan", "--mode", "baseline", "--start", "95,85", "--goal", "109,133"]) == OK
    assert capsys.readouterr().out.startswith("col,row\n95,85\n")


def test_plan_exit_codes(tmp_path):
    assert main(["plan", "--start", "95,85", "--goal", "999,5"]) == BAD_INPUT
    assert main(["plan", "--map", str(tmp_path / "none.pgm"), "--start", "1,1", "--goal", "2,2"]) == BAD_INPUT
    bad = tmp_path / "bad.pgm"
    bad.write_text("P7\n")
    assert main(["plan", "--map", str(bad), "--start", "1,1", "--goal", "2,2"]) == BAD_INPUT
    assert main(["plan", "--mode", "baseline", "--start", "95,85", "--goal", "109,117"]) == FAILED
    with pytest.raises(SystemExit):
        main(["plan", "--start", "a", "--goal", "1,1"])


def test_track(tmp_path, capsys):
    path = tmp_path / "line.csv"
    path.write_text("x,y\n" + "".join(f"{x},0\n" for x in range(0, 21)))
    log = tmp_path / "log.csv"
    assert main(["track", "--in", str(path), "--out", str(log)]) == OK
    rows = log.read_text().splitlines()
    assert rows[0] == "t,x,y,v,psi,a,delta" and len(rows) > 50
    assert "avg|a|" in capsys.readouterr().err


def test_park_danger(tmp_path, capsys):
    assert main(["park", "--scenario", "danger_A", "--out", str(tmp_path)]) == OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["optimizer_pass"] and summary["geometric_pass"]
    assert (tmp_path / "danger_A_trajectory.csv").exists()
    traj = tmp_path / "danger_A_trajectory.csv"
    assert main(["track", "--in", str(traj), "--t-s", "0.25", "--out", str(tmp_path / "log.csv")]) == OK


def test_park_map(tmp_path, capsys):
    assert main(["park", "--scenario", "vertical", "--out", str(tmp_path)]) == OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["reached_goal"] and (tmp_path / "report.csv").exists()
    assert main(["park", "--scenario", str(tmp_path / "missing.json")]) == BAD_INPUT


def test_bench_comfort(tmp_path, capsys):
    assert main(["bench", "--suite", "comfort", "--out", str(tmp_path), "--scenarios", "vertical"]) == OK
    assert capsys.readouterr().out.startswith("scenario,algo,init_ms")
    assert (tmp_path / "vertical.svg").exists()
