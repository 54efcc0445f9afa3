import json

import numpy as np
import pytest

import reference_table
from pitchkde.errors import ConfigError, InvalidArgumentError
from pitchkde.ingest import write_events
from pitchkde.kde import DensityGrid, GridSpec, evaluate_grid, fit
from pitchkde.pipeline import AnalysisConfig, DistanceReport, difference_grid, mean_sd, run_analysis, summarize
from pitchkde.synthgen import Component, SeasonConfig, TeamProfile, generate_season

BASE = (Component(0.6, (35.0, 50.0), (15.0, 25.0)), Component(0.4, (35.0, 20.0), (12.0, 8.0)))


def small_season(seed=0, apm=(120.0, 10.0)):
    """Three ordinary teams plus one that lives on the left touchline."""
    teams = [TeamProfile(n, BASE, apm) for n in ("Alp", "Bra", "Cha")]
    teams.append(TeamProfile("Lft", (Component(0.6, (12.0, 50.0), (6.0, 25.0)),
                                     Component(0.4, (35.0, 20.0), (12.0, 8.0))), apm))
    return SeasonConfig(tuple(teams), 1, seed)


def small_config(tmp_path, seed=0, **kw):
    csv = tmp_path / "season.csv"
    write_events(generate_season(small_season(seed)), csv)
    d = {
        "input": "season.csv",
        "output_dir": "out",
        "candidate_grid": {"min": 1.0, "max": 100.0, "count": 8},
        "grid_spec": {"x_min": -10, "x_max": 80, "y_min": -20, "y_max": 120, "cell_size": 5.0},
        "render_grid": {"x_min": -10, "x_max": 80, "y_min": -20, "y_max": 120, "cell_size": 2.5},
    }
    d.update(kw)
    (tmp_path / "config.json").write_text(json.dumps(d))
    return AnalysisConfig.from_dict(d, base_dir=tmp_path)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = small_config(tmp)
    return cfg, run_analysis(cfg)


# -- summary statistics ------------------------------------------------------

def test_mean_sd_constant_row():
    assert mean_sd([2.5] * 11) == {"n": 11, "mean": 2.5, "sd": 0.0}
    assert mean_sd([1.0])["sd"] is None
    assert mean_sd([1.0, 3.0])["sd"] == pytest.approx(2 ** 0.5)


def table_report():
    all_column, within = reference_table.as_report_parts()
    return summarize(DistanceReport(0.0, all_column, within))


def test_reference_table_cas_row():
    s = table_report().row_stats["Cas"]
    assert s["n"] == 11
    assert s["mean"] == pytest.approx(4.33, abs=0.01)
    assert s["sd"] == pytest.approx(1.28, abs=0.01)


def test_reference_table_cat_column():
    s = table_report().col_stats["Cat"]
    assert s["n"] == 11
    assert s["mean"] == pytest.approx(6.19, abs=0.01)
    assert s["sd"] == pytest.approx(2.77, abs=0.01)


def test_reference_table_all_column_excluded_from_rows():
    r = table_report()
    assert r.all_stats["mean"] == pytest.approx(2.07, abs=0.01)
    assert r.all_stats["sd"] == pytest.approx(0.71, abs=0.01)
    assert r.n_distances == 144


# -- difference grids ----------------------------------------------------------

def test_difference_grid():
    spec = GridSpec(-20, 60, -20, 60, 2)
    a = evaluate_grid(fit([(10, 20), (15, 25)], 9.0), spec)
    b = evaluate_grid(fit([(25, 20)], 9.0), spec)
    d = difference_grid(a, b)
    assert np.array_equal(difference_grid(a, a).values, np.zeros(spec.shape))
    assert np.array_equal(difference_grid(b, a).values, -d.values)
    assert abs(d.integral()) < 1e-6
    with pytest.raises(InvalidArgumentError):
        difference_grid(a, DensityGrid(GridSpec(-20, 60, -20, 60, 4), np.zeros((20, 20))))


# -- config --------------------------------------------------------------------

def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        AnalysisConfig.from_dict({"output_dir": "x"}, tmp_path)
    with pytest.raises(ConfigError):
        AnalysisConfig.from_dict({"input": "a.csv", "solver": {"kind": "magic"}}, tmp_path)
    with pytest.raises(ConfigError):
        AnalysisConfig.from_dict({"input": "a.csv", "min_subset_size": 5}, tmp_path)


# -- end to end ------------------------------------------------------------------

def test_report_shape(small_run):
    cfg, report = small_run
    assert report.teams == ["Alp", "Bra", "Cha", "Lft"]
    assert len(report.all_column) == 4
    assert all(len(r) == 3 and t not in r for t, r in report.within_matrix.items())
    assert report.n_distances == 4 + 12
    assert len(report.row_stats) == 4 and len(report.col_stats) == 4
    assert set(report.selected_bandwidths) == {
        f"tvo__{t}__vs__{o}" for t in report.teams for o in report.teams if t != o
    }
    assert min(report.selected_bandwidths.values()) <= report.pooled_bandwidth <= max(report.selected_bandwidths.values())


def test_left_team_is_furthest_from_league(small_run):
    _, report = small_run
    assert max(report.all_column, key=report.all_column.get) == "Lft"


def test_outputs_on_disk(small_run):
    cfg, report = small_run
    out = cfg.output_dir
    assert json.loads((out / "report.json").read_text()) == json.loads(report.to_json())
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["n_models"] == 1 + 4 + 12
    assert manifest["n_distances"] == 16
    assert manifest["self_distance_check"] == 0.0
    assert len(manifest["config_hash"]) == 64
    grids = sorted(p.name for p in (out / "grids").iterdir())
    assert len(grids) == 17 and "league.json" in grids
    g = DensityGrid.load(out / "grids" / "team__Lft.json")
    assert g.spec == cfg.grid_spec
    assert (out / "images" / "league.ppm").exists()
    assert len(manifest["images"]) == 1 + 4 + 12


def test_left_team_difference_sign(small_run):
    cfg, _ = small_run
    league = DensityGrid.load(cfg.output_dir / "grids" / "league.json")
    team = DensityGrid.load(cfg.output_dir / "grids" / "team__Lft.json")
    d = difference_grid(team, league)
    x = d.spec.x_centers()
    left = d.values[:, x < 35].sum()
    right = d.values[:, x > 35].sum()
    assert left > 0 > right


def test_small_subsets_excluded(tmp_path):
    cfg = small_config(tmp_path, min_subset_size=230)
    report = run_analysis(cfg)
    manifest = json.loads((cfg.output_dir / "manifest.json").read_text())
    assert manifest["excluded_subsets"]
    assert report.n_distances == 4 + sum(len(r) for r in report.within_matrix.values())
    assert report.n_distances < 16


def test_sinkhorn_solver_close_to_exact(tmp_path, small_run):
    _, exact = small_run
    cfg = small_config(tmp_path, solver={"kind": "sinkhorn", "epsilon": 2.0, "tol": 1e-6}, render_grid=None)
    approx = run_analysis(cfg)
    assert approx.solver == {"kind": "sinkhorn", "epsilon": 2.0, "max_iters": 10000, "tol": 1e-6}
    assert json.loads((cfg.output_dir / "manifest.json").read_text())["nonconverged"] == []
    # entropic bias stays below epsilon; the ordering of teams survives
    for t, d in exact.all_column.items():
        assert abs(approx.all_column[t] - d) < 2.0
    assert max(approx.all_column, key=approx.all_column.get) == "Lft"


def test_deterministic_report(tmp_path, small_run):
    cfg, report = small_run
    again = run_analysis(cfg.__class__(**{**cfg.__dict__, "output_dir": tmp_path / "again"}))
    assert again.to_json() == report.to_json()
    for name in ("report.json", "images/league.ppm", "images/diff_team__Lft.ppm"):
        assert (tmp_path / "again" / name).read_bytes() == (cfg.output_dir / name).read_bytes()
