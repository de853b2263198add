"""Command-line entry point: ``generate``, ``plan``, ``simulate`` and ``compare``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .errors import MissionFailed, SolverConfigError, ValidationError, WeedNavError
from .geometry import concatenate
from .routing import (
    Field,
    Tour,
    euclidean_tour_length,
    solve_decoupled,
    solve_dtsp_coupled,
    solve_etsp,
    tour_legs,
)
from .simulation import MissionLog, run_mission
from .svg import render_svg

EXIT_OK, EXIT_VALIDATION, EXIT_MISSION, EXIT_SOLVER_CONFIG = 0, 2, 3, 4


@dataclass
class PlanResult:
    planner: str
    closed: bool
    order: list
    total_cost: float
    euclidean_length: float
    tour: Optional[Tour]  # None for the curvature-free planner
    leg_lengths: list
    segments: list  # ReferencePath per leg (Dubins planners only)

    def reference_arrays(self, fld: Field) -> list:
        if self.segments:
            return [seg.samples for seg in self.segments]
        p = fld.targets[self.order]
        if self.closed:
            p = np.vstack([p, p[:1]])
        d = np.diff(p, axis=0)
        th = np.arctan2(d[:, 1], d[:, 0])
        return [np.column_stack([p, np.append(th, th[-1])])]


def plan(fld: Field, cfg: io.ExperimentConfig) -> PlanResult:
    closed = cfg.closed_tour
    if cfg.planner == "etsp_only":
        order = [int(i) for i in solve_etsp(fld, seed=cfg.seed, closed=closed)]
        L = euclidean_tour_length(fld, order, closed)
        p = fld.targets[order]
        legs = np.hypot(*np.diff(np.vstack([p, p[:1]]) if closed else p, axis=0).T)
        return PlanResult(cfg.planner, closed, order, L, L, None, legs.tolist(), [])
    if cfg.planner == "coupled":
        tour = solve_dtsp_coupled(fld, cfg.K, cfg.rho, seed=cfg.seed, budget=cfg.atsp_budget, closed=closed)
    else:
        tour = solve_decoupled(fld, cfg.rho, seed=cfg.seed, closed=closed)
    paths = tour_legs(tour, cfg.rho)
    segments = concatenate(paths, step=cfg.sample_step)
    return PlanResult(
        cfg.planner, closed, list(tour.order), float(tour.total_cost), euclidean_tour_length(fld, tour.order, closed),
        tour, [p.length for p in paths], segments,
    )


def simulate(fld: Field, cfg: io.ExperimentConfig, result: Optional[PlanResult] = None):
    """Plan (unless given) and fly the mission; returns ``(plan, log, failure_reason)``."""
    result = result or plan(fld, cfg)
    if result.tour is None:
        raise ValidationError("the etsp_only planner has no curvature-feasible path to simulate")
    try:
        mission = run_mission(result.tour, result.segments, cfg.ocp_params())
        failure = None
    except MissionFailed as exc:
        mission, failure = exc.log, f"waypoint {exc.waypoint_index}: {exc.reason}"
    return result, mission, failure


def _write_plan(out: Path, fld: Field, cfg, result: PlanResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if result.tour is not None:
        data = io.tour_to_dict(result.tour, fld, cfg.rho, result.leg_lengths)
    else:
        data = {"order": result.order, "headings": None, "closed": cfg.closed_tour, "rho": None,
                "targets": fld.targets.tolist(), "leg_lengths": result.leg_lengths, "total_cost": result.total_cost}
    data["planner"] = result.planner
    data["euclidean_length"] = result.euclidean_length
    io.write_json(out / "tour.json", data)
    io.write_reference_csv(out / "reference.csv", result.segments or result.reference_arrays(fld))
    heads = np.array([q.as_array() for q in result.tour.configurations]) if result.tour is not None else None
    (out / "plan.svg").write_text(
        render_svg(fld, result.reference_arrays(fld), heads, title=f"{result.planner} tour"), encoding="utf-8"
    )


def _write_mission(out: Path, fld: Field, result: PlanResult, mission: MissionLog, failure) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    io.write_mission_csv(out / "mission.csv", mission)
    summary = io.mission_summary(mission, failure)
    summary["planner"] = result.planner
    io.write_json(out / "summary.json", summary)
    heads = np.array([q.as_array() for q in result.tour.configurations])
    (out / "mission.svg").write_text(
        render_svg(fld, result.reference_arrays(fld), heads, mission.state_array(), title="closed loop"),
        encoding="utf-8",
    )
    return summary


def _config(args, path_attr="config") -> io.ExperimentConfig:
    path = getattr(args, path_attr, None)
    cfg = io.load_config(path) if path else io.ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "planner", None) is not None and path_attr == "config":
        overrides["planner"] = args.planner
    if args.k is not None:
        overrides["K"] = args.k
    if args.rho is not None:
        overrides["rho"] = args.rho
    if args.open_tour:
        overrides["closed_tour"] = False
    if args.out is not None:
        overrides["out"] = args.out
    return cfg.replace(**overrides) if overrides else cfg


def cmd_generate(args) -> int:
    fld = io.generate_field(args.seed or 0, args.count, args.width, args.height, args.min_sep)
    out = Path(args.out or "field.csv")
    if out.suffix.lower() != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "field.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    io.write_field(out, fld, header=f"seed={args.seed or 0} count={args.count} {args.width}x{args.height} m")
    print(f"wrote {len(fld)} targets to {out}")
    return EXIT_OK


def cmd_plan(args) -> int:
    cfg = _config(args)
    fld = io.read_field(args.field)
    result = plan(fld, cfg)
    _write_plan(Path(cfg.out), fld, cfg, result)
    print(f"{result.planner}: {len(result.order)} targets, tour length {result.total_cost:.2f} m "
          f"(euclidean {result.euclidean_length:.2f} m)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    fld = io.read_field(args.field)
    result, mission, failure = simulate(fld, cfg)
    out = Path(cfg.out)
    _write_plan(out, fld, cfg, result)
    summary = _write_mission(out, fld, result, mission, failure)
    print(f"reached {summary['waypoints_reached']}/{summary['n_waypoints']} waypoints, "
          f"max error {summary['max_position_error']:.4f} m, closed-loop {summary['closed_loop_length']:.2f} m "
          f"vs reference {summary['reference_length']:.2f} m")
    if failure:
        print(f"mission failed at {failure}", file=sys.stderr)
        return EXIT_MISSION
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg_a = _config(args)
    if args.config_b:
        cfg_b = _config(args, "config_b")
    else:
        cfg_b = cfg_a.replace(planner=args.planner_b)
    fld = io.read_field(args.field)
    if args.field_b:
        other = io.read_field(args.field_b)
        if other.targets.shape != fld.targets.shape or not np.array_equal(other.targets, fld.targets):
            raise ValidationError("compare needs both configurations on the same field")
    rows = []
    failed = False
    for name, cfg in (("a", cfg_a), ("b", cfg_b)):
        res = plan(fld, cfg)
        row = {"run": name, "planner": cfg.planner, "K": cfg.K, "rho": cfg.rho, "tour_length": res.total_cost}
        if args.simulate and res.tour is not None:
            _, mission, failure = simulate(fld, cfg, res)
            failed |= failure is not None
            row.update(closed_loop_length=mission.path_length, max_position_error=mission.max_position_error,
                       waypoints_reached=len(mission.waypoints))
        rows.append(row)
    a, b = rows[0]["tour_length"], rows[1]["tour_length"]
    diff = 100.0 * (b - a) / a
    out = Path(cfg_a.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(dict.fromkeys(k for r in rows for k in r))
    lines = [",".join(keys)] + [",".join(str(r.get(k, "")) for k in keys) for r in rows]
    (out / "compare.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for r in rows:
        print("  ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))
    print(f"difference (b - a) / a: {diff:+.2f}%")
    return EXIT_MISSION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed (field generation, tour search)")
    common.add_argument("--out", help="output file (generate) or directory")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")

    planning = argparse.ArgumentParser(add_help=False)
    planning.add_argument("--field", required=True, help="CSV of x,y target positions")
    planning.add_argument("--config", help="JSON experiment config")
    planning.add_argument("--planner", choices=io.PLANNERS, help="tour planner")
    planning.add_argument("--k", type=int, help="candidate headings per target")
    planning.add_argument("--rho", type=float, help="turning radius used for planning [m]")
    planning.add_argument("--open-tour", action="store_true", help="do not return to the first target")

    p = argparse.ArgumentParser(prog="weednav", description="Curvature-constrained weed tours and NMPC missions.")
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("generate", parents=[common], help="write a random field CSV")
    g.add_argument("--count", type=int, default=20)
    g.add_argument("--width", type=float, default=20.0)
    g.add_argument("--height", type=float, default=20.0)
    g.add_argument("--min-sep", type=float, default=0.5)
    g.set_defaults(func=cmd_generate)
    sub.add_parser("plan", parents=[common, planning], help="plan a tour").set_defaults(func=cmd_plan)
    sub.add_parser("simulate", parents=[common, planning], help="plan and run the closed loop").set_defaults(
        func=cmd_simulate)
    c = sub.add_parser("compare", parents=[common, planning], help="compare two configurations on one field")
    c.add_argument("--config-b", help="config for side b (default: same as a)")
    c.add_argument("--planner-b", choices=io.PLANNERS, default="decoupled", help="planner for side b")
    c.add_argument("--field-b", help="must hold the same targets as --field")
    c.add_argument("--simulate", action="store_true", help="also fly both missions")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except SolverConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_CONFIG
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MissionFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSION
    except WeedNavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSION


if __name__ == "__main__":
    sys.exit(main())
