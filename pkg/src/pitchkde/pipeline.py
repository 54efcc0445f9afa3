"""End-to-end analysis: CV on team-vs-opponent subsets, pooled bandwidth,
refit of every subset, between/within-team distances and their summary."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import render
from .bandwidth import CvConfig, argmax_prefer_larger, check_candidate_grid, cv_curve, default_candidate_grid, pool_geometric_mean
from .errors import ConfigError, InvalidArgumentError
from .ingest import (
    LEAGUE,
    TEAM,
    TEAM_VS_OPPONENT,
    FilterPolicy,
    PartitionKey,
    count_summary,
    filter_attacking,
    parse_events,
    partition,
)
from .kde import RENDER_GRID, TRANSPORT_GRID, DensityGrid, GridSpec, evaluate_grid, fit
from .transport import DEFAULT_MASS_FLOOR, CostSpec, discretize, median_cost, wasserstein_exact, wasserstein_sinkhorn

log = logging.getLogger(__name__)

MIN_SUBSET_SIZE = 25


@dataclass(frozen=True)
class SolverSpec:
    kind: str = "exact"
    epsilon: Optional[float] = None  # absolute; None -> 0.05 x median ground cost per pair
    max_iters: int = 10_000
    tol: float = 1e-9

    def __post_init__(self):
        if self.kind not in ("exact", "sinkhorn"):
            raise ConfigError(f"solver must be 'exact' or 'sinkhorn', got {self.kind!r}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "sinkhorn":
            d.update(epsilon=self.epsilon, max_iters=self.max_iters, tol=self.tol)
        return d


@dataclass(frozen=True)
class AnalysisConfig:
    input: Path
    output_dir: Path
    filter: FilterPolicy = FilterPolicy()
    columns: Optional[dict] = None
    cv: CvConfig = CvConfig()
    candidate_grid: tuple = tuple(default_candidate_grid())
    grid_spec: GridSpec = TRANSPORT_GRID
    render_grid: Optional[GridSpec] = RENDER_GRID
    cost: CostSpec = CostSpec()
    solver: SolverSpec = SolverSpec()
    mass_floor: float = DEFAULT_MASS_FLOOR
    min_subset_size: int = MIN_SUBSET_SIZE
    workers: int = 1

    def __post_init__(self):
        check_candidate_grid(self.candidate_grid)
        if self.min_subset_size < self.cv.folds:
            raise ConfigError("min_subset_size must be at least the number of CV folds")

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path = Path(".")) -> "AnalysisConfig":
        try:
            grid = d.get("candidate_grid")
            if grid is None:
                cand = default_candidate_grid()
            elif isinstance(grid, dict):
                cand = np.geomspace(float(grid["min"]), float(grid["max"]), int(grid["count"]))
            else:
                cand = np.asarray(grid, dtype=float)
            render_grid = d.get("render_grid", RENDER_GRID.to_dict())
            cost = d.get("cost", {})
            solver = d.get("solver", {})
            if isinstance(solver, str):
                solver = {"kind": solver}
            return cls(
                input=(base_dir / d["input"]).resolve(),
                output_dir=(base_dir / d.get("output_dir", "analysis_out")).resolve(),
                filter=FilterPolicy.from_dict(d.get("filter")),
                columns=d.get("columns"),
                cv=CvConfig(**d.get("cv", {})),
                candidate_grid=tuple(float(v) for v in cand),
                grid_spec=GridSpec(**d["grid_spec"]) if "grid_spec" in d else TRANSPORT_GRID,
                render_grid=GridSpec(**render_grid) if render_grid else None,
                cost=CostSpec.from_names(cost.get("p", 1.0), cost.get("norm", "l1")),
                solver=SolverSpec(**solver),
                mass_floor=float(d.get("mass_floor", DEFAULT_MASS_FLOOR)),
                min_subset_size=int(d.get("min_subset_size", MIN_SUBSET_SIZE)),
                workers=int(d.get("workers", 1)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed analysis config: {exc}") from exc

    def to_dict(self) -> dict:
        """Canonical form used for hashing; paths are left out so moved runs hash alike."""
        return {
            "filter": self.filter.to_dict(),
            "columns": self.columns,
            "cv": {"folds": self.cv.folds, "seed": self.cv.seed, "shuffle": self.cv.shuffle},
            "candidate_grid": list(self.candidate_grid),
            "grid_spec": self.grid_spec.to_dict(),
            "render_grid": self.render_grid.to_dict() if self.render_grid else None,
            "cost": self.cost.to_dict(),
            "solver": self.solver.to_dict(),
            "mass_floor": self.mass_floor,
            "min_subset_size": self.min_subset_size,
        }


@dataclass
class DistanceReport:
    pooled_bandwidth: float
    all_column: dict[str, float]
    within_matrix: dict[str, dict[str, float]]
    row_stats: dict[str, dict] = field(default_factory=dict)
    col_stats: dict[str, dict] = field(default_factory=dict)
    all_stats: dict = field(default_factory=dict)
    teams: list[str] = field(default_factory=list)
    selected_bandwidths: dict[str, float] = field(default_factory=dict)
    grid_spec: dict = field(default_factory=dict)
    cost: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)

    @property
    def n_distances(self) -> int:
        return len(self.all_column) + sum(len(r) for r in self.within_matrix.values())

    def to_dict(self) -> dict:
        return {
            "pooled_bandwidth": self.pooled_bandwidth,
            "all_column": self.all_column,
            "within_matrix": self.within_matrix,
            "row_stats": self.row_stats,
            "col_stats": self.col_stats,
            "all_stats": self.all_stats,
            "teams": self.teams,
            "selected_bandwidths": self.selected_bandwidths,
            "grid_spec": self.grid_spec,
            "cost": self.cost,
            "solver": self.solver,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def mean_sd(values) -> dict:
    """Mean and sample SD (n - 1 divisor); SD is None below two values."""
    vals = [float(v) for v in values]
    if not vals:
        return {"n": 0, "mean": None, "sd": None}
    mean = math.fsum(vals) / len(vals)
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else None
    return {"n": len(vals), "mean": mean, "sd": sd}


def summarize(report: DistanceReport) -> DistanceReport:
    """Fill row/column/'All' statistics; row and column stats exclude the 'All' column."""
    rows: dict[str, list] = {}
    cols: dict[str, list] = {}
    for team, row in report.within_matrix.items():
        for opp, d in row.items():
            rows.setdefault(team, []).append(d)
            cols.setdefault(opp, []).append(d)
    report.row_stats = {t: mean_sd(v) for t, v in sorted(rows.items())}
    report.col_stats = {o: mean_sd(v) for o, v in sorted(cols.items())}
    report.all_stats = mean_sd(report.all_column[t] for t in sorted(report.all_column))
    return report


def difference_grid(a: DensityGrid, b: DensityGrid) -> DensityGrid:
    """Signed a - b; positive where ``a`` is denser."""
    if a.spec != b.spec:
        raise InvalidArgumentError(f"grid specs differ: {a.spec} vs {b.spec}")
    return DensityGrid(a.spec, a.values - b.values, signed=True)


# -- stage workers (top-level so they pickle for process pools) -----------

def _cv_job(args):
    points, grid, cv = args
    scores = cv_curve(points, grid, cv)
    return float(grid[argmax_prefer_larger(scores)]), scores


def _distance_job(args):
    a_vals, b_vals, spec, cost, solver, floor = args
    mu = discretize(DensityGrid(spec, a_vals), floor)
    nu = discretize(DensityGrid(spec, b_vals), floor)
    if solver.kind == "exact":
        return wasserstein_exact(mu, nu, cost).distance, True
    eps = solver.epsilon if solver.epsilon is not None else 0.05 * median_cost(mu, nu, cost)
    res = wasserstein_sinkhorn(mu, nu, cost, eps, solver.max_iters, solver.tol)
    return res.distance, res.converged


def _run_stage(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [fn(j) for j in jobs]


def config_hash(cfg: AnalysisConfig, input_bytes: bytes) -> str:
    h = hashlib.sha256(json.dumps(cfg.to_dict(), sort_keys=True).encode())
    h.update(hashlib.sha256(input_bytes).digest())
    return h.hexdigest()


def run_analysis(cfg: AnalysisConfig, write: bool = True) -> DistanceReport:
    t0 = time.perf_counter()
    warnings: list[str] = []
    raw = Path(cfg.input).read_bytes()
    parsed = parse_events(cfg.input, cfg.columns)
    for err in parsed.errors:
        warnings.append(f"line {err.line}: {err.reason}")
    events, fsummary = filter_attacking(parsed.records, cfg.filter)
    part = partition(events)
    warnings.extend(part.notices)

    subsets = {}
    excluded = []
    for key, s in part.subsets.items():
        if len(s) < cfg.min_subset_size:
            excluded.append({"key": key.slug, "size": len(s)})
            warnings.append(f"{key.slug} has {len(s)} actions (< {cfg.min_subset_size}); excluded")
        else:
            subsets[key] = s
    if PartitionKey(LEAGUE) not in subsets:
        raise InvalidArgumentError("not enough data for a league model")
    for w in warnings:
        log.warning(w)

    # (1)-(2) CV per team-vs-opponent subset, then geometric-mean pooling
    tvo_keys = [k for k in subsets if k.kind == TEAM_VS_OPPONENT]
    if not tvo_keys:
        raise InvalidArgumentError("no team-vs-opponent subset is large enough for cross-validation")
    grid = np.asarray(cfg.candidate_grid)
    cv_out = _run_stage(_cv_job, [(subsets[k].points, grid, cfg.cv) for k in tvo_keys], cfg.workers)
    selected = {k.slug: h for k, (h, _) in zip(tvo_keys, cv_out)}
    h_pool = pool_geometric_mean([h for h, _ in cv_out])
    log.info("pooled bandwidth %.6g from %d subsets", h_pool, len(tvo_keys))

    # (3) every model shares the pooled bandwidth
    models = {k: fit(s, h_pool) for k, s in subsets.items()}
    grids = {k: evaluate_grid(m, cfg.grid_spec) for k, m in models.items()}

    # (4) distances
    league = PartitionKey(LEAGUE)
    pairs = []
    for k in models:
        if k.kind == TEAM:
            pairs.append((k, league))
        elif k.kind == TEAM_VS_OPPONENT:
            overall = PartitionKey(TEAM, k.team)
            if overall in models:
                pairs.append((k, overall))
            else:
                warnings.append(f"{k.slug} skipped: {overall.slug} was excluded")
    # self-distance smoke check on the first team overall model
    smoke_key = next((k for k in models if k.kind == TEAM), None)
    if smoke_key is not None:
        pairs.append((smoke_key, smoke_key))
    jobs = [
        (grids[a].values, grids[b].values, cfg.grid_spec, cfg.cost, cfg.solver, cfg.mass_floor)
        for a, b in pairs
    ]
    results = _run_stage(_distance_job, jobs, cfg.workers)
    nonconverged = []
    all_column: dict[str, float] = {}
    within: dict[str, dict[str, float]] = {}
    self_distance = None
    for (a, b), (d, ok) in zip(pairs, results):
        if a == b:
            self_distance = d
            continue
        if not ok:
            nonconverged.append(a.slug)
        if a.kind == TEAM:
            all_column[a.team] = d
        else:
            within.setdefault(a.team, {})[a.opponent] = d
    if self_distance is not None and self_distance > 1e-9:
        warnings.append(f"self-distance smoke check failed: {self_distance!r}")

    report = DistanceReport(
        pooled_bandwidth=h_pool,
        all_column=dict(sorted(all_column.items())),
        within_matrix={t: dict(sorted(r.items())) for t, r in sorted(within.items())},
        teams=part.teams,
        selected_bandwidths=dict(sorted(selected.items())),
        grid_spec=cfg.grid_spec.to_dict(),
        cost=cfg.cost.to_dict(),
        solver=cfg.solver.to_dict(),
    )
    summarize(report)

    if write:
        out = Path(cfg.output_dir)
        (out / "grids").mkdir(parents=True, exist_ok=True)
        for k, g in grids.items():
            g.save(out / "grids" / f"{k.slug}.json")
        images = _render_images(cfg, models, out) if cfg.render_grid is not None else []
        (out / "report.json").write_text(report.to_json())
        manifest = {
            "config_hash": config_hash(cfg, raw),
            "config": cfg.to_dict(),
            "input": str(cfg.input),
            "seed": cfg.cv.seed,
            "parse_errors": len(parsed.errors),
            "filter": fsummary.to_dict(),
            "counts": count_summary(part.subsets),
            "excluded_subsets": excluded,
            "pooled_bandwidth": h_pool,
            "n_models": len(models),
            "n_distances": report.n_distances,
            "self_distance_check": self_distance,
            "nonconverged": nonconverged,
            "warnings": warnings,
            "images": images,
            "elapsed_seconds": round(time.perf_counter() - t0, 3),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return report


def _render_images(cfg: AnalysisConfig, models, out: Path) -> list[str]:
    spec = cfg.render_grid
    img_dir = out / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    fine = {k: evaluate_grid(m, spec) for k, m in models.items()}
    league = PartitionKey(LEAGUE)
    written = []

    def emit(name, data):
        (img_dir / name).write_bytes(data)
        written.append(f"images/{name}")

    emit("league.ppm", render.render_heatmap(fine[league], render.SEQUENTIAL_MAP))
    for k, g in fine.items():
        if k.kind == TEAM:
            emit(f"diff_{k.slug}.ppm", render.render_diff(difference_grid(g, fine[league]), render.DIVERGING_MAP))
        elif k.kind == TEAM_VS_OPPONENT and PartitionKey(TEAM, k.team) in fine:
            base = fine[PartitionKey(TEAM, k.team)]
            emit(f"diff_{k.slug}.ppm", render.render_diff(difference_grid(g, base), render.DIVERGING_MAP))
    return written
