"""Command line entry point: ``pitchkde <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from . import render
from .bandwidth import CvConfig, argmax_prefer_larger, candidate_grid, cv_curve, pool_geometric_mean
from .errors import InsufficientDataError, PitchKDEError
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
    write_events,
)
from .kde import TRANSPORT_GRID, DensityGrid, GridSpec, evaluate_grid, fit
from .pipeline import AnalysisConfig, difference_grid, run_analysis
from .synthgen import SeasonConfig, default_season, generate_season
from .transport import CostSpec, discretize, median_cost, wasserstein_exact, wasserstein_sinkhorn

log = logging.getLogger("pitchkde")


def _dump(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return payload


def _load_events(path, config: dict):
    parsed = parse_events(path, config.get("columns"))
    for err in parsed.errors:
        log.warning("%s line %d: %s", path, err.line, err.reason)
    events, summary = filter_attacking(parsed.records, FilterPolicy.from_dict(config.get("filter")))
    return parsed, events, summary


def cmd_ingest(args) -> int:
    config = _read_json(args.config) if args.config else {}
    parsed, events, summary = _load_events(args.input, config)
    part = partition(events)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for key, evs in part.events.items():
        name = f"{key.slug}.csv"
        write_events(evs, out / name)
        files[key.slug] = {"file": name, "count": len(evs), **key.to_dict()}
    manifest = {
        "input": str(args.input),
        "rows_rejected": [{"line": e.line, "reason": e.reason} for e in parsed.errors],
        "filter": summary.to_dict(),
        "teams": part.teams,
        "subsets": files,
        "counts": count_summary(part.subsets),
        "notices": part.notices,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _dump({"subsets": len(files), "counts": manifest["counts"]})
    return 0


_GROUPS = {
    "team,opponent": TEAM_VS_OPPONENT,
    "team": TEAM,
    "league": LEAGUE,
}


def cmd_select_bandwidth(args) -> int:
    config = _read_json(args.config) if args.config else {}
    _, events, _ = _load_events(args.input, config)
    kind = _GROUPS[args.group_by.replace(" ", "")]
    part = partition(events)
    lo, hi, count = (float(v) for v in args.grid.split(","))
    grid = candidate_grid(lo, hi, int(count))
    cv = CvConfig(args.folds, args.seed, not args.no_shuffle)
    subsets = {}
    chosen = []
    for key, samples in part.subsets.items():
        if key.kind != kind:
            continue
        try:
            scores = cv_curve(samples, grid, cv)
        except InsufficientDataError as exc:
            log.warning("%s skipped: %s", key.slug, exc)
            continue
        h = float(grid[argmax_prefer_larger(scores)])
        chosen.append(h)
        subsets[key.slug] = {"n": len(samples), "h": h, "scores": [float(s) for s in scores]}
    _dump({
        "grid": [float(g) for g in grid],
        "folds": cv.folds,
        "seed": cv.seed,
        "subsets": subsets,
        "pooled_bandwidth": pool_geometric_mean(chosen) if chosen else None,
    })
    return 0


def cmd_grid(args) -> int:
    config = _read_json(args.config) if args.config else {}
    _, events, _ = _load_events(args.input, config)
    part = partition(events)
    if args.opponent:
        key = PartitionKey(TEAM_VS_OPPONENT, args.team, args.opponent)
    elif args.team:
        key = PartitionKey(TEAM, args.team)
    else:
        key = PartitionKey(LEAGUE)
    if key not in part.subsets:
        raise ValueError(f"no data for {key.slug}")
    spec = GridSpec(args.x_min, args.x_max, args.y_min, args.y_max, args.cell_size)
    evaluate_grid(fit(part.subsets[key], args.h), spec).save(args.out)
    _dump({"key": key.slug, "n": len(part.subsets[key]), "h": args.h, "out": str(args.out)})
    return 0


def cmd_distance(args) -> int:
    a = DensityGrid.load(args.a)
    b = DensityGrid.load(args.b)
    if a.spec != b.spec:
        raise ValueError("both grids must share one grid spec")
    cost = CostSpec.from_names(args.p, args.norm)
    mu = discretize(a, args.mass_floor)
    nu = discretize(b, args.mass_floor)
    payload = {
        "solver": args.solver,
        "support_sizes": [len(mu), len(nu)],
        "cell_size": a.spec.cell_size,
        "p": cost.p,
        "norm": cost.norm_name,
    }
    if args.solver == "exact":
        payload.update(distance=wasserstein_exact(mu, nu, cost).distance, converged=True)
    else:
        eps = args.epsilon if args.epsilon is not None else 0.05 * median_cost(mu, nu, cost)
        res = wasserstein_sinkhorn(mu, nu, cost, eps, args.max_iters, args.tol)
        payload.update(distance=res.distance, converged=res.converged, epsilon=eps,
                       iterations=res.iterations)
    _dump(payload)
    return 0


def cmd_synth(args) -> int:
    if args.config:
        cfg = SeasonConfig.from_dict(_read_json(args.config))
        if args.seed is not None:
            cfg = SeasonConfig(cfg.teams, cfg.rounds, args.seed, cfg.actions)
    else:
        cfg = default_season(seed=args.seed or 0)
    if args.dump_config:
        Path(args.dump_config).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    events = generate_season(cfg)
    write_events(events, args.out)
    _dump({"events": len(events), "teams": [t.name for t in cfg.teams], "seed": cfg.seed, "out": str(args.out)})
    return 0


def cmd_analyze(args) -> int:
    path = Path(args.config)
    cfg = AnalysisConfig.from_dict(_read_json(path), base_dir=path.parent)
    report = run_analysis(cfg)
    _dump({
        "output_dir": str(cfg.output_dir),
        "pooled_bandwidth": report.pooled_bandwidth,
        "n_distances": report.n_distances,
        "all_column": report.all_column,
    })
    return 0


def cmd_render(args) -> int:
    grid = DensityGrid.load(args.grid)
    if args.diff:
        cmap = render.ColorMap.load(args.colormap) if args.colormap else render.DIVERGING_MAP
        data = render.render_diff(difference_grid(grid, DensityGrid.load(args.diff)), cmap,
                                  symmetric_scale=not args.asymmetric)
    else:
        cmap = render.ColorMap.load(args.colormap) if args.colormap else render.SEQUENTIAL_MAP
        data = render.render_heatmap(grid, cmap, args.scale if args.scale is not None else "max")
    Path(args.out).write_bytes(data)
    _dump({"out": str(args.out), "rows": grid.spec.rows, "cols": grid.spec.cols})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pitchkde", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="filter and partition an event CSV")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--config", type=Path, help="JSON with 'filter' and 'columns'")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("select-bandwidth", help="cross-validated bandwidth per subset")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--group-by", default="team,opponent", choices=sorted(_GROUPS))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--grid", default="0.25,100,40", help="min,max,count (log-spaced, m^2)")
    p.set_defaults(func=cmd_select_bandwidth)

    p = sub.add_parser("grid", help="fit one subset and write its density grid JSON")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--h", required=True, type=float, help="bandwidth (m^2)")
    p.add_argument("--team")
    p.add_argument("--opponent")
    p.add_argument("--out", required=True, type=Path)
    for name, default in TRANSPORT_GRID.to_dict().items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=default)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("distance", help="Wasserstein distance between two grid files")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--norm", default="l1", choices=["l1", "l2"])
    p.add_argument("--solver", default="exact", choices=["exact", "sinkhorn"])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--mass-floor", type=float, default=1e-10)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("synth", help="generate a synthetic season CSV")
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--dump-config", type=Path, help="also write the season config used")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="run the full analysis from a JSON config")
    p.add_argument("--config", required=True, type=Path)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("render", help="write a PPM heatmap or difference map")
    p.add_argument("--grid", required=True, type=Path)
    p.add_argument("--diff", type=Path, help="subtract this grid and draw a diverging map")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--colormap", type=Path)
    p.add_argument("--scale", type=float, help="fixed value mapped to the top color")
    p.add_argument("--asymmetric", action="store_true")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PitchKDEError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
