import csv
from collections import Counter

import numpy as np
import pytest
from scipy.stats import truncnorm

from pitchkde.errors import ConfigError
from pitchkde.ingest import TEAM, TEAM_VS_OPPONENT, count_summary, filter_attacking, parse_events, partition, write_events
from pitchkde.synthgen import (
    Component,
    SeasonConfig,
    TeamProfile,
    default_season,
    generate_season,
    league_average,
    sample_profile,
)


def two_team_config(seed=0, rounds=1):
    a = TeamProfile("A", (Component(1.0, (20.0, 50.0), (5.0, 5.0)),), (50.0, 5.0))
    b = TeamProfile("B", (Component(1.0, (50.0, 50.0), (5.0, 5.0)),), (50.0, 5.0))
    return SeasonConfig((a, b), rounds, seed)


@pytest.fixture(scope="module")
def season1(tmp_path_factory):
    path = tmp_path_factory.mktemp("season") / "season.csv"
    write_events(generate_season(default_season(seed=1)), path)
    return path


def test_profile_validation():
    with pytest.raises(ConfigError):
        TeamProfile("A", (Component(0.5, (0, 0), (1, 1)),))
    with pytest.raises(ConfigError):
        TeamProfile("A", (Component(1.0, (0, 0), (0, 1)),))
    with pytest.raises(ConfigError):
        TeamProfile("", (Component(1.0, (0, 0), (1, 1)),))
    with pytest.raises(ConfigError):
        SeasonConfig((two_team_config().teams[0],))
    with pytest.raises(ConfigError):
        SeasonConfig(two_team_config().teams, rounds=0)


def test_config_roundtrip():
    cfg = default_season(seed=9, rounds=2)
    assert SeasonConfig.from_dict(cfg.to_dict()) == cfg


def test_malformed_config():
    with pytest.raises(ConfigError):
        SeasonConfig.from_dict({"teams": [{"components": []}]})


def test_unsatisfiable_truncation():
    far = TeamProfile("F", (Component(1.0, (1000.0, 1000.0), (1.0, 1.0)),))
    with pytest.raises(ConfigError):
        sample_profile(far, 10, np.random.default_rng(0))


def test_byte_identical_csv(tmp_path):
    for name in ("a.csv", "b.csv"):
        write_events(generate_season(default_season(seed=4)), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    write_events(generate_season(default_season(seed=5)), tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_round_robin_structure():
    events = generate_season(two_team_config(rounds=3))
    pairs = Counter((e.attacking_team, e.defending_team) for e in events)
    assert set(pairs) == {("A", "B"), ("B", "A")}
    # 3 rounds x 2 home/away fixtures x ~50 actions
    assert 250 < pairs[("A", "B")] < 350


def test_match_streams_independent_of_other_teams():
    cfg = two_team_config(seed=3)
    base = [e for e in generate_season(cfg) if e.attacking_team == "A"]
    c = TeamProfile("C", (Component(1.0, (35.0, 50.0), (5.0, 5.0)),), (50.0, 5.0))
    bigger = SeasonConfig(cfg.teams + (c,), 1, 3)
    again = [e for e in generate_season(bigger) if e.attacking_team == "A" and e.defending_team == "B"]
    assert again == base


def test_bounds(season1):
    res = parse_events(season1)
    assert res.errors == []
    xy = np.array([(e.x, e.y) for e in res.records])
    assert xy[:, 0].min() >= 0 and xy[:, 0].max() <= 70
    assert xy[:, 1].min() >= -10 and xy[:, 1].max() <= 110


def test_actions_uniform_from_allow_list(season1):
    counts = Counter(e.action for e in parse_events(season1).records)
    assert set(counts) == {"Catch", "Run", "Pass", "Kick"}
    total = sum(counts.values())
    assert all(abs(c / total - 0.25) < 0.01 for c in counts.values())


def test_truncated_mean():
    mean, sigma = (20.0, 50.0), (15.0, 40.0)
    prof = TeamProfile("T", (Component(1.0, mean, sigma),))
    n = 40_000
    pts = sample_profile(prof, n, np.random.default_rng(123))
    for axis, (lo, hi) in enumerate([(0.0, 70.0), (-10.0, 110.0)]):
        a, b = (lo - mean[axis]) / sigma[axis], (hi - mean[axis]) / sigma[axis]
        dist = truncnorm(a, b, loc=mean[axis], scale=sigma[axis])
        se = dist.std() / np.sqrt(n)
        assert abs(pts[:, axis].mean() - dist.mean()) < 3 * se
    # truncation matters here: the raw x mean would be 20
    assert pts[:, 0].mean() > 21


def test_sizing_and_subset_counts(season1):
    """Per-team totals near the 8105 sizing target; counting oracle over the CSV."""
    with open(season1, newline="") as fh:
        rows = list(csv.DictReader(fh))
    by_team = Counter(r["attacking_team"] for r in rows)
    by_pair = Counter((r["attacking_team"], r["defending_team"]) for r in rows)
    assert len(by_team) == 12 and len(by_pair) == 132
    assert abs(np.median(list(by_team.values())) - 8105) <= 0.2 * 8105

    # ingest sees the same counts apart from filtered consecutive duplicates
    events, summary = filter_attacking(parse_events(season1).records)
    part = partition(events)
    assert summary.dropped_duplicate == len(rows) - len(events)
    summ = count_summary(part.subsets)
    team_sizes = [len(s) for k, s in part.subsets.items() if k.kind == TEAM]
    pair_sizes = [len(s) for k, s in part.subsets.items() if k.kind == TEAM_VS_OPPONENT]
    assert summ["between_team"]["median"] == pytest.approx(np.median(team_sizes))
    assert summ["between_team"]["iqr"] == pytest.approx(list(np.percentile(team_sizes, [25, 75])))
    assert summ["within_team"]["median"] == pytest.approx(np.median(pair_sizes))
    assert 600 < summ["within_team"]["median"] < 870


def test_league_average_weights():
    cfg = default_season()
    wig = next(t for t in cfg.teams if t.name == "Wig")
    others = [t for t in cfg.teams if t.name != "Wig"]
    assert len(wig.components) == sum(len(t.components) for t in others)
    assert sum(c.weight for c in wig.components) == pytest.approx(1.0)
    key = lambda c: (c.mean, c.sigma, round(c.weight, 12))
    assert sorted(map(key, league_average(others, "X").components)) == sorted(map(key, wig.components))
