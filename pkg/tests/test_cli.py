import json
import subprocess
import sys

import pytest

from pitchkde.cli import main
from pitchkde.render import read_ppm
from pitchkde.synthgen import Component, SeasonConfig, TeamProfile

CELL = {"x-min": -10, "x-max": 80, "y-min": -20, "y-max": 120, "cell-size": 5}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


@pytest.fixture
def season(tmp_path):
    teams = tuple(
        TeamProfile(n, (Component(1.0, (x, 50.0), (8.0, 25.0)),), (80.0, 5.0))
        for n, x in (("Ant", 20.0), ("Bee", 35.0), ("Cow", 50.0))
    )
    cfg = tmp_path / "season.json"
    cfg.write_text(json.dumps(SeasonConfig(teams, 1, 0).to_dict()))
    return cfg


def grid_args(**kw):
    out = []
    for k, v in {**CELL, **kw}.items():
        out += [f"--{k}", v]
    return out


def test_full_flow(tmp_path, capsys, season):
    csv = tmp_path / "s.csv"
    code, out = run(capsys, "synth", "--config", season, "--seed", 4, "--out", csv,
                    "--dump-config", tmp_path / "used.json")
    assert code == 0 and out["teams"] == ["Ant", "Bee", "Cow"] and out["seed"] == 4
    assert json.loads((tmp_path / "used.json").read_text())["seed"] == 4

    code, out = run(capsys, "ingest", "--input", csv, "--out", tmp_path / "parts")
    assert code == 0 and out["subsets"] == 1 + 3 + 6
    manifest = json.loads((tmp_path / "parts" / "manifest.json").read_text())
    assert manifest["subsets"]["team__Ant"]["file"] == "team__Ant.csv"
    assert (tmp_path / "parts" / "tvo__Ant__vs__Bee.csv").exists()

    code, out = run(capsys, "select-bandwidth", "--input", csv, "--grid", "1,100,6", "--seed", 3)
    assert code == 0 and len(out["subsets"]) == 6
    assert all(len(s["scores"]) == 6 for s in out["subsets"].values())
    assert out["pooled_bandwidth"] > 0

    code, out = run(capsys, "select-bandwidth", "--input", csv, "--group-by", "team", "--grid", "1,100,6")
    assert set(out["subsets"]) == {"team__Ant", "team__Bee", "team__Cow"}

    h = 20.0
    for team in ("Ant", "Cow"):
        code, _ = run(capsys, "grid", "--input", csv, "--h", h, "--team", team,
                      "--out", tmp_path / f"{team}.json", *grid_args())
        assert code == 0
    code, _ = run(capsys, "grid", "--input", csv, "--h", h, "--team", "Ant", "--opponent", "Bee",
                  "--out", tmp_path / "ab.json", *grid_args())
    assert code == 0

    code, out = run(capsys, "distance", "--a", tmp_path / "Ant.json", "--b", tmp_path / "Cow.json")
    assert code == 0 and out["solver"] == "exact" and out["converged"] is True
    assert 25 < out["distance"] < 35  # the two team means are 30 m apart in x
    assert out["cell_size"] == 5 and out["norm"] == "l1"
    exact = out["distance"]

    code, out = run(capsys, "distance", "--a", tmp_path / "Ant.json", "--b", tmp_path / "Cow.json",
                    "--solver", "sinkhorn")
    # default epsilon is coarse next to 5 m cells; the tight bound lives in the acceptance suite
    assert code == 0 and abs(out["distance"] - exact) < 0.1 * exact
    assert out["epsilon"] > 0

    code, out = run(capsys, "render", "--grid", tmp_path / "Ant.json", "--out", tmp_path / "a.ppm")
    assert code == 0 and read_ppm((tmp_path / "a.ppm").read_bytes()).shape == (28, 18, 3)
    code, _ = run(capsys, "render", "--grid", tmp_path / "Ant.json", "--diff", tmp_path / "Cow.json",
                  "--out", tmp_path / "d.ppm")
    assert code == 0


def test_analyze(tmp_path, capsys, season):
    csv = tmp_path / "s.csv"
    run(capsys, "synth", "--config", season, "--out", csv)
    cfg = {
        "input": "s.csv",
        "output_dir": "res",
        "candidate_grid": [2.0, 8.0, 32.0],
        "grid_spec": {"x_min": -10, "x_max": 80, "y_min": -20, "y_max": 120, "cell_size": 5.0},
        "render_grid": None,
    }
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    code, out = run(capsys, "analyze", "--config", tmp_path / "cfg.json")
    assert code == 0 and out["n_distances"] == 3 + 6
    assert (tmp_path / "res" / "report.json").exists()
    assert max(out["all_column"], key=out["all_column"].get) in ("Ant", "Cow")


def test_errors_return_2(tmp_path, capsys):
    missing = str(tmp_path / "missing.json")
    assert main(["distance", "--a", missing, "--b", missing]) == 2
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("team,x\nA,1\n")
    assert main(["ingest", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pitchkde", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("ingest", "select-bandwidth", "distance", "synth", "analyze", "render"):
        assert cmd in res.stdout
