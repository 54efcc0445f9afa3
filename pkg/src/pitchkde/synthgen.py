"""Synthetic seasons with known per-team spatial strategies.

Each team attacks from a Gaussian mixture truncated to the playing area by
rejection.  Every match draws from its own generator seeded by
(seed, round, home, away), so output does not depend on generation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .ingest import DEFAULT_ACTIONS, EventRecord
from .kde import PITCH_X, PITCH_Y

MAX_REJECTIONS = 1_000_000
_COORD_DECIMALS = 2


@dataclass(frozen=True)
class Component:
    weight: float
    mean: tuple[float, float]
    sigma: tuple[float, float]


@dataclass(frozen=True)
class TeamProfile:
    name: str
    components: tuple[Component, ...]
    actions_per_match: tuple[float, float] = (368.0, 40.0)

    def __post_init__(self):
        if not self.name:
            raise ConfigError("team name must not be empty")
        if not self.components:
            raise ConfigError(f"{self.name}: at least one mixture component is required")
        w = np.array([c.weight for c in self.components], dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ConfigError(f"{self.name}: component weights must be positive and sum to 1")
        if any(s <= 0 for c in self.components for s in c.sigma):
            raise ConfigError(f"{self.name}: component sigmas must be positive")
        mean, spread = self.actions_per_match
        if mean < 0 or spread < 0:
            raise ConfigError(f"{self.name}: actions_per_match must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "TeamProfile":
        comps = tuple(
            Component(float(c["weight"]), tuple(map(float, c["mean"])), tuple(map(float, c["sigma"])))
            for c in d["components"]
        )
        apm = d.get("actions_per_match", {"mean": 368.0, "spread": 40.0})
        return cls(str(d["name"]), comps, (float(apm["mean"]), float(apm["spread"])))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "components": [
                {"weight": c.weight, "mean": list(c.mean), "sigma": list(c.sigma)} for c in self.components
            ],
            "actions_per_match": {"mean": self.actions_per_match[0], "spread": self.actions_per_match[1]},
        }


@dataclass(frozen=True)
class SeasonConfig:
    teams: tuple[TeamProfile, ...]
    rounds: int = 1
    seed: int = 0
    actions: tuple[str, ...] = DEFAULT_ACTIONS

    def __post_init__(self):
        if len(self.teams) < 2:
            raise ConfigError("a season needs at least two teams")
        if len({t.name for t in self.teams}) != len(self.teams):
            raise ConfigError("team names must be unique")
        if self.rounds < 1:
            raise ConfigError("rounds must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.actions:
            raise ConfigError("action list must not be empty")

    @classmethod
    def from_dict(cls, d: dict) -> "SeasonConfig":
        try:
            return cls(
                tuple(TeamProfile.from_dict(t) for t in d["teams"]),
                int(d.get("rounds", 1)),
                int(d.get("seed", 0)),
                tuple(d.get("actions", DEFAULT_ACTIONS)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed season config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "teams": [t.to_dict() for t in self.teams],
            "rounds": self.rounds,
            "seed": self.seed,
            "actions": list(self.actions),
        }


def sample_profile(profile: TeamProfile, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` locations from the profile's mixture, truncated to the pitch."""
    weights = np.array([c.weight for c in profile.components])
    means = np.array([c.mean for c in profile.components])
    sigmas = np.array([c.sigma for c in profile.components])
    out = np.empty((count, 2))
    filled = 0
    rejected = 0
    while filled < count:
        need = count - filled
        batch = max(16, int(need * 1.25))
        comp = rng.choice(len(weights), size=batch, p=weights)
        pts = means[comp] + sigmas[comp] * rng.standard_normal((batch, 2))
        ok = (
            (pts[:, 0] >= PITCH_X[0]) & (pts[:, 0] <= PITCH_X[1])
            & (pts[:, 1] >= PITCH_Y[0]) & (pts[:, 1] <= PITCH_Y[1])
        )
        rejected += int(batch - ok.sum())
        if rejected > MAX_REJECTIONS:
            raise ConfigError(f"{profile.name}: mixture puts almost no mass on the pitch")
        good = pts[ok][:need]
        out[filled:filled + len(good)] = good
        filled += len(good)
    return out


def _match_events(cfg: SeasonConfig, rnd: int, home: int, away: int) -> list[EventRecord]:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, rnd, home, away]))
    events = []
    for att, dfd in ((home, away), (away, home)):
        prof = cfg.teams[att]
        mean, spread = prof.actions_per_match
        count = max(0, int(round(rng.normal(mean, spread))))
        pts = np.round(sample_profile(prof, count, rng), _COORD_DECIMALS)
        labels = rng.integers(0, len(cfg.actions), size=count)
        opp = cfg.teams[dfd].name
        for (x, y), lab in zip(pts.tolist(), labels.tolist()):
            events.append(EventRecord(prof.name, opp, x, y, cfg.actions[lab]))
    return events


def generate_season(cfg: SeasonConfig) -> list[EventRecord]:
    """Every ordered (home, away) pair meets once per round; both sides attack."""
    events: list[EventRecord] = []
    n = len(cfg.teams)
    for rnd in range(cfg.rounds):
        for home in range(n):
            for away in range(n):
                if home != away:
                    events.extend(_match_events(cfg, rnd, home, away))
    return events


# Shared shape of attacking play: a broad central spread with extra density
# around the own 20 m line and 10 m from the opposition try line.
_BASE = (
    Component(0.45, (33.0, 45.0), (16.0, 26.0)),
    Component(0.30, (35.0, 22.0), (14.0, 8.0)),
    Component(0.25, (35.0, 88.0), (15.0, 8.0)),
)

# name -> (x shift of the base shape, extra component or None)
_STYLES = {
    "Cas": (0.0, Component(0.35, (14.0, 50.0), (7.0, 28.0))),   # left side, whole length
    "Cat": (0.0, Component(0.20, (35.0, 92.0), (14.0, 5.0))),   # heavy in opposition 20
    "Hud": (0.0, Component(0.35, (48.0, 35.0), (7.0, 8.0))),    # centre-right, own half
    "Hul": (-4.0, None),
    "HKR": (0.0, Component(0.25, (10.0, 60.0), (5.0, 20.0))),   # left wing
    "Lee": (4.0, None),
    "Lei": (0.0, Component(0.30, (35.0, 10.0), (12.0, 6.0))),   # pinned deep
    "Sal": (0.0, Component(0.25, (58.0, 55.0), (6.0, 22.0))),   # right wing
    "StH": (0.0, Component(0.15, (35.0, 60.0), (18.0, 10.0))),
    "Wak": (0.0, Component(0.25, (35.0, 45.0), (8.0, 12.0))),   # narrow centre
    "War": (0.0, Component(0.25, (60.0, 85.0), (6.0, 10.0))),   # right edge attack
}


def _styled(shift: float, extra) -> tuple[Component, ...]:
    base = [Component(c.weight, (c.mean[0] + shift, c.mean[1]), c.sigma) for c in _BASE]
    if extra is None:
        return tuple(base)
    scale = 1.0 - extra.weight
    return tuple(Component(c.weight * scale, c.mean, c.sigma) for c in base) + (extra,)


def league_average(profiles: Sequence[TeamProfile], name: str) -> TeamProfile:
    """Equal-weight mixture of ``profiles`` (the league shape when team sizes match)."""
    k = len(profiles)
    comps = tuple(
        Component(c.weight / k, c.mean, c.sigma) for p in profiles for c in p.components
    )
    total = sum(c.weight for c in comps)
    comps = tuple(Component(c.weight / total, c.mean, c.sigma) for c in comps)
    return TeamProfile(name, comps, profiles[0].actions_per_match)


def default_season(seed: int = 0, rounds: int = 1, actions_per_match=(368.0, 40.0),
                   average_team: str = "Wig") -> SeasonConfig:
    """Twelve teams with distinct styles; ``average_team`` plays the league-average mixture.

    With one round each team attacks in 22 matches, about 8100 actions.
    """
    teams = [
        TeamProfile(name, _styled(*style), tuple(actions_per_match))
        for name, style in _STYLES.items()
    ]
    teams.append(league_average(teams, average_team))
    teams.sort(key=lambda t: t.name)
    return SeasonConfig(tuple(teams), rounds, seed)
