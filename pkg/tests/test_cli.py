import json
import subprocess
import sys

import pytest

from truelkit.cli import run


def data_lines(path):
    return [l for l in open(path).read().splitlines() if not l.startswith("#")]


def test_truel_solve(capsys):
    assert run(["truel", "solve", "--marks", "1,0.8,0.5", "--order", "random", "--profile", "BAA"]) == 0
    assert "P = (0.290, 0.348, 0.362)" in capsys.readouterr().out


def test_duel(capsys):
    assert run(["duel", "--marks", "0.5,0.5", "--order", "random"]) == 0
    assert "(0.500, 0.500)" in capsys.readouterr().out


def test_nash(capsys):
    assert run(["nash", "--marks", "1,0.8,0.5", "--order", "random"]) == 0
    assert capsys.readouterr().out.split()[0] == "BAA"
    run(["nash", "--marks", "1,0.8,0.5", "--order", "sequential"])
    assert capsys.readouterr().out.startswith("BA0")


def test_brd_and_opinion(capsys):
    assert run(["brd", "--marks", "1,0.8,0.5", "--start", "CCB"]) == 0
    assert capsys.readouterr().out.strip().endswith("BAA")
    assert run(["opinion", "--marks", "1,0.8,0.5"]) == 0
    assert capsys.readouterr().out.startswith("P = (0.386")


def test_exit_codes(tmp_path, capsys):
    assert run(["truel", "solve", "--marks", "1.5,0.8,0.5"]) == 2
    assert run(["truel", "solve", "--marks", "1,0.8"]) == 2
    assert run(["duel", "--marks", "1,1", "--bogus"]) == 2
    assert run(["nash", "--marks", "1,0.8,0.5", "--profile", "AAA"]) == 2
    assert run(["truel", "solve", "--marks", "1,0.8,0.5", "--profile", "000"]) == 3
    assert run(["duel", "--marks", "0,0"]) == 3
    assert run(["truel", "table", "--marks", "1,0.8,0.5", "--out", str(tmp_path / "no" / "x.csv")]) == 2
    assert run(["spatial", "run", "--L", "6", "--literal", "--step-cap", "10", "--seed", "1"]) == 3


def test_table_header_and_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["nuel", "--N", "3", "--games", "5000", "--seed", "7", "--bins", "10"]
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    head = [l for l in open(a) if l.startswith("#")]
    keys = [l[2:].split(":")[0] for l in head]
    assert keys == ["command", "seed", "version", "timestamp"]
    assert "# seed: 7\n" in head
    assert data_lines(a) == data_lines(b)
    rows = data_lines(a)
    assert rows[0] == "rank,bin_lo,bin_hi,count" and len(rows) == 31


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TRUELKIT_SEED", "123")
    out = tmp_path / "l.csv"
    assert run(["league", "--M", "6", "--mode", "sampled", "--out", str(out)]) == 0
    assert "# seed: 123\n" in open(out).read()
    monkeypatch.setenv("TRUELKIT_SEED", "x")
    assert run(["league", "--M", "6", "--out", str(out)]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# nuel settings\nN = 5\ngames = 300\nbins = 4\n")
    out = tmp_path / "o.csv"
    assert run(["nuel", "--config", str(cfg), "--bins", "5", "--out", str(out)]) == 0
    rows = data_lines(out)[1:]
    assert len(rows) == 5 * 5
    assert sum(int(r.split(",")[3]) for r in rows if r.startswith("1,")) == 300
    cfg.write_text("nope = 1\n")
    assert run(["nuel", "--config", str(cfg)]) == 2


def test_regions_schema(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["regions", "--order", "sequential", "--h", "0.25", "--out", str(out)]) == 0
    rows = data_lines(out)
    assert rows[0] == "b,c,equilibrium,favorite,P_A,P_B,P_C,multi_eq_flag"
    assert len(rows) == 10
    assert rows[1].split(",")[:2] == ["0.25", "0.25"]


def test_ndjson(tmp_path):
    out = tmp_path / "t.ndjson"
    assert run(["truel", "table", "--marks", "1,0.8,0.5", "--format", "ndjson", "--out", str(out)]) == 0
    lines = [json.loads(l) for l in open(out)]
    assert "meta" in lines[0] and len(lines) == 28
    assert lines[1]["profile"] == "BAA" and lines[1]["nash"] == 1


def test_spatial_commands(tmp_path):
    snaps = tmp_path / "snaps"
    assert run(["spatial", "run", "--L", "8", "--seed", "2", "--snapshots", str(snaps), "--snapshot-every", "20"]) == 0
    files = sorted(snaps.iterdir())
    assert files and files[0].read_text().startswith("P3\n8 8\n255\n")
    out = tmp_path / "d.csv"
    assert run(["spatial", "diagram", "--L", "4", "--step", "0.5", "--runs", "2", "--out", str(out)]) == 0
    rows = data_lines(out)
    assert rows[0] == "x_A,x_B,x_C,f_A,f_B,f_C,favorite" and len(rows) == 7


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "truelkit", "duel", "--marks", "1,0"], capture_output=True, text=True)
    assert r.returncode == 0 and "(1.000, 0.000)" in r.stdout
