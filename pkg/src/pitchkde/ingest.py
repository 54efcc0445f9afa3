"""Event CSV parsing, attacking-action filtering and subset partitioning."""

from __future__ import annotations

import csv
import logging
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidArgumentError, SchemaError
from .kde import PITCH_X, PITCH_Y, SampleSet

log = logging.getLogger(__name__)

CANONICAL_COLUMNS = ("attacking_team", "defending_team", "x", "y", "action")
DEFAULT_ACTIONS = ("Catch", "Run", "Pass", "Kick")

LEAGUE = "league"
TEAM = "team"
TEAM_VS_OPPONENT = "team_vs_opponent"


@dataclass(frozen=True)
class EventRecord:
    attacking_team: str
    defending_team: str
    x: float
    y: float
    action: str


@dataclass(frozen=True)
class RowError:
    line: int
    reason: str


@dataclass
class ParseResult:
    records: list[EventRecord]
    errors: list[RowError] = field(default_factory=list)


@dataclass(frozen=True)
class FilterPolicy:
    allowed_actions: frozenset = frozenset(DEFAULT_ACTIONS)
    drop_consecutive_duplicates: bool = True

    def __post_init__(self):
        actions = frozenset(str(a) for a in self.allowed_actions)
        if not actions:
            raise InvalidArgumentError("allowed_actions must not be empty")
        object.__setattr__(self, "allowed_actions", actions)

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "FilterPolicy":
        d = d or {}
        return cls(
            frozenset(d.get("allowed_actions", DEFAULT_ACTIONS)),
            bool(d.get("drop_consecutive_duplicates", True)),
        )

    def to_dict(self) -> dict:
        return {
            "allowed_actions": sorted(self.allowed_actions),
            "drop_consecutive_duplicates": self.drop_consecutive_duplicates,
        }


@dataclass(frozen=True, order=True)
class PartitionKey:
    kind: str
    team: Optional[str] = None
    opponent: Optional[str] = None

    def __post_init__(self):
        if self.kind not in (LEAGUE, TEAM, TEAM_VS_OPPONENT):
            raise InvalidArgumentError(f"unknown partition kind {self.kind!r}")
        if (self.team is None) != (self.kind == LEAGUE):
            raise InvalidArgumentError("team is required unless kind is league")
        if (self.opponent is None) != (self.kind != TEAM_VS_OPPONENT):
            raise InvalidArgumentError("opponent is required exactly for team_vs_opponent")

    @property
    def slug(self) -> str:
        if self.kind == LEAGUE:
            return "league"
        if self.kind == TEAM:
            return f"team__{_slugify(self.team)}"
        return f"tvo__{_slugify(self.team)}__vs__{_slugify(self.opponent)}"

    def sort_key(self):
        order = {LEAGUE: 0, TEAM: 1, TEAM_VS_OPPONENT: 2}[self.kind]
        return (order, self.team or "", self.opponent or "")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "team": self.team, "opponent": self.opponent}


def _slugify(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", name).strip("-") or "x"


@dataclass
class FilterSummary:
    kept: int = 0
    dropped_action: int = 0
    dropped_duplicate: int = 0

    def to_dict(self) -> dict:
        return {
            "kept": self.kept,
            "dropped_action": self.dropped_action,
            "dropped_duplicate": self.dropped_duplicate,
        }


@dataclass
class Partition:
    subsets: dict[PartitionKey, SampleSet]
    events: dict[PartitionKey, list[EventRecord]]
    teams: list[str]
    notices: list[str] = field(default_factory=list)


def parse_events(path, columns: Optional[dict] = None) -> ParseResult:
    """Read an event CSV in file order.

    ``columns`` maps canonical names to the file's header names.  Rows with
    bad numbers, empty or identical team names, or coordinates off the
    padded pitch are collected in ``errors`` (with 1-based file line numbers)
    rather than raised.
    """
    mapping = {c: c for c in CANONICAL_COLUMNS}
    if columns:
        unknown = set(columns) - set(CANONICAL_COLUMNS)
        if unknown:
            raise SchemaError(f"column mapping has unknown canonical names: {sorted(unknown)}")
        mapping.update(columns)

    records: list[EventRecord] = []
    errors: list[RowError] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [mapping[c] for c in CANONICAL_COLUMNS if mapping[c] not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        for row in reader:
            line = reader.line_num
            att = (row[mapping["attacking_team"]] or "").strip()
            dfd = (row[mapping["defending_team"]] or "").strip()
            action = (row[mapping["action"]] or "").strip()
            try:
                x = float(row[mapping["x"]])
                y = float(row[mapping["y"]])
            except (TypeError, ValueError):
                errors.append(RowError(line, "unparseable coordinate"))
                continue
            if not (math.isfinite(x) and math.isfinite(y)):
                errors.append(RowError(line, "non-finite coordinate"))
                continue
            if not att or not dfd:
                errors.append(RowError(line, "missing team name"))
                continue
            if att == dfd:
                errors.append(RowError(line, "attacking and defending team are the same"))
                continue
            if not (PITCH_X[0] <= x <= PITCH_X[1] and PITCH_Y[0] <= y <= PITCH_Y[1]):
                errors.append(RowError(line, f"bounds violation: ({x}, {y})"))
                continue
            records.append(EventRecord(att, dfd, x, y, action))
    return ParseResult(records, errors)


def write_events(events: Iterable[EventRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CANONICAL_COLUMNS)
        for e in events:
            w.writerow([e.attacking_team, e.defending_team, repr(e.x), repr(e.y), e.action])


def filter_attacking(events: Iterable[EventRecord], policy: FilterPolicy = FilterPolicy()):
    """Keep allowed actions and drop repeated locations.

    A row is a duplicate when its (attacking_team, x, y) equals that of the
    immediately preceding kept row, e.g. a catch followed by a run from the
    same spot.  Returns (kept_events, FilterSummary).
    """
    kept: list[EventRecord] = []
    summary = FilterSummary()
    prev = None
    for e in events:
        if e.action not in policy.allowed_actions:
            summary.dropped_action += 1
            continue
        key = (e.attacking_team, e.x, e.y)
        if policy.drop_consecutive_duplicates and key == prev:
            summary.dropped_duplicate += 1
            continue
        kept.append(e)
        prev = key
    summary.kept = len(kept)
    return kept, summary


def _to_samples(events: list[EventRecord], label: str) -> SampleSet:
    pts = np.array([(e.x, e.y) for e in events], dtype=np.float64).reshape(-1, 2)
    return SampleSet(pts, label)


def partition(events: Iterable[EventRecord]) -> Partition:
    """League, per-team and per-(team, opponent) subsets of attacking events.

    Teams are every name seen on either side.  Empty subsets are omitted
    and listed in ``notices``.
    """
    events = list(events)
    teams = sorted({e.attacking_team for e in events} | {e.defending_team for e in events})
    grouped: dict[PartitionKey, list[EventRecord]] = defaultdict(list)
    league = PartitionKey(LEAGUE)
    for e in events:
        grouped[league].append(e)
        grouped[PartitionKey(TEAM, e.attacking_team)].append(e)
        grouped[PartitionKey(TEAM_VS_OPPONENT, e.attacking_team, e.defending_team)].append(e)

    notices = []
    keys = [league] + [PartitionKey(TEAM, t) for t in teams]
    keys += [PartitionKey(TEAM_VS_OPPONENT, t, o) for t in teams for o in teams if t != o]
    ordered: dict[PartitionKey, list[EventRecord]] = {}
    for k in keys:
        if grouped.get(k):
            ordered[k] = grouped[k]
        else:
            msg = f"no attacking actions for {k.slug}; subset omitted"
            if k.kind == TEAM:
                log.warning(msg)
            notices.append(msg)
    subsets = {k: _to_samples(v, k.slug) for k, v in ordered.items()}
    return Partition(subsets, ordered, teams, notices)


def _level_stats(sizes: list[int]) -> dict:
    if not sizes:
        return {"subsets": 0, "median": None, "iqr": None, "min": None, "max": None}
    arr = np.asarray(sizes, dtype=float)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "subsets": len(sizes),
        "median": float(med),
        "iqr": [float(q1), float(q3)],
        "min": int(arr.min()),
        "max": int(arr.max()),
    }


def count_summary(subsets: dict[PartitionKey, SampleSet]) -> dict:
    """Subset-size descriptives per comparison level (between / within team)."""
    by_kind = Counter()
    sizes = defaultdict(list)
    for k, s in subsets.items():
        by_kind[k.kind] += 1
        sizes[k.kind].append(len(s))
    return {
        "league_size": sizes[LEAGUE][0] if sizes[LEAGUE] else 0,
        "between_team": _level_stats(sizes[TEAM]),
        "within_team": _level_stats(sizes[TEAM_VS_OPPONENT]),
    }
