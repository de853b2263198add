"""Field files, experiment configuration, tour JSON and mission logs on disk."""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import PackingInfeasible, SolverConfigError, ValidationError
from .geometry import ReferencePath
from .nmpc import Obstacle, OcpParams
from .routing import Field, Tour, make_tour
from .vehicle import RobotLimits

PLANNERS = ("coupled", "decoupled", "etsp_only")
MISSION_HEADER = ("t", "x", "y", "theta", "v", "omega", "s_bar", "status", "iters", "solve_ms")
MAX_PACKING_ATTEMPTS = 100_000


def parse_field(text: str, source: str = "<field>") -> Field:
    """Parse ``x,y`` rows; blank lines and ``#`` comments are skipped."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip().lstrip("﻿")
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ValidationError(f"{source}:{lineno}: expected 'x,y', got {raw.strip()!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValidationError(f"{source}:{lineno}: not a number in {raw.strip()!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"{source}:{lineno}: coordinates must be finite")
        rows.append((x, y))
    if len(rows) < 2:
        raise ValidationError(f"{source}: need at least 2 targets, found {len(rows)}")
    return Field(np.array(rows))


def read_field(path) -> Field:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8-sig")
    except OSError as exc:
        raise ValidationError(f"cannot read field file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ValidationError(f"{path}: not UTF-8") from None
    return parse_field(text, str(path))


def write_field(path, fld: Field, header: Optional[str] = None) -> None:
    lines = [f"# {header}"] if header else []
    lines += [f"{x!r},{y!r}" for x, y in fld.targets.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def generate_field(seed: int, count: int, width: float, height: float, min_separation: float = 0.0) -> Field:
    """Uniform targets in ``[0, width] x [0, height]``, at least ``min_separation`` apart."""
    if count < 2:
        raise ValidationError("count must be at least 2")
    if min_separation < 0.0 or not (width > 0.0 and height > 0.0):
        raise ValidationError("width and height must be positive, min_separation non-negative")
    rng = np.random.default_rng(seed)
    pts = np.empty((count, 2))
    n = 0
    attempts = 0
    while n < count:
        if attempts >= MAX_PACKING_ATTEMPTS:
            raise PackingInfeasible(
                f"placed {n} of {count} targets after {attempts} attempts (min_separation={min_separation})"
            )
        attempts += 1
        p = rng.uniform((0.0, 0.0), (width, height))
        if n and np.hypot(*(pts[:n] - p).T).min() < min_separation:
            continue
        pts[n] = p
        n += 1
    return Field(pts, (0.0, 0.0, float(width), float(height)))


@dataclass
class ExperimentConfig:
    """Flat experiment schema; ``from_dict`` rejects unknown keys."""

    planner: str = "coupled"
    K: int = 10
    rho: float = 0.55  # planning radius; kept above r_min so the controller has curvature to spare
    closed_tour: bool = True
    seed: int = 0
    atsp_budget: int = 2000
    H: int = 20
    dt: float = 0.1
    Q: list = field(default_factory=lambda: [0.1, 0.1, 0.01])
    R: list = field(default_factory=lambda: [0.1, 1.0])
    q_s: float = 1e4
    v_max: float = 0.5
    omega_max: float = 1.9
    r_min: float = 0.5
    rate_divisor: float = 5.0
    goal_pos_tol: float = 0.05
    heading_tol: float = 0.2
    footprint_radius: float = 0.0
    obstacles: list = field(default_factory=list)  # [[x, y, radius], ...]
    max_iter: int = 200
    tol: float = 1e-6
    sample_step: float = 0.05
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.planner not in PLANNERS:
            raise ValidationError(f"planner must be one of {PLANNERS}, got {self.planner!r}")
        if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 1:
            raise ValidationError(f"K must be a positive integer, got {self.K}")
        if not (self.rho > 0.0) or not math.isfinite(self.rho):
            raise ValidationError(f"rho must be positive, got {self.rho}")
        if not isinstance(self.closed_tour, bool):
            raise ValidationError("closed_tour must be true or false")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed:
            raise ValidationError("seed must be an integer")
        if int(self.atsp_budget) != self.atsp_budget or self.atsp_budget < 0:
            raise ValidationError("atsp_budget must be a non-negative integer")
        if not (self.sample_step > 0.0):
            raise ValidationError("sample_step must be positive")
        if len(self.Q) != 3 or len(self.R) != 2:
            raise SolverConfigError("Q takes 3 diagonal entries and R takes 2")
        self.ocp_params()  # raises SolverConfigError on bad physics

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig.from_dict({**self.to_dict(), **changes})

    def limits(self) -> RobotLimits:
        return RobotLimits(
            v_max=self.v_max, omega_max=self.omega_max, r_min=self.r_min, rate_divisor=self.rate_divisor,
            goal_pos_tol=self.goal_pos_tol, heading_tol=self.heading_tol, footprint_radius=self.footprint_radius,
        )

    def ocp_params(self) -> OcpParams:
        try:
            obstacles = tuple(Obstacle(*map(float, o)) for o in self.obstacles)
        except (TypeError, ValueError):
            raise SolverConfigError("obstacles must be [x, y, radius] triples") from None
        return OcpParams(
            H=self.H, dt=self.dt, Q=np.diag(np.asarray(self.Q, dtype=float)), R=np.diag(np.asarray(self.R, dtype=float)),
            q_s=self.q_s, limits=self.limits(), obstacles=obstacles, max_iter=self.max_iter, tol=self.tol,
        )


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return ExperimentConfig.from_dict(data)


def tour_to_dict(tour: Tour, fld: Field, rho: float, leg_lengths) -> dict:
    return {
        "order": [int(i) for i in tour.order],
        "headings": [float(h) for h in tour.headings],
        "closed": bool(tour.closed),
        "rho": float(rho),
        "targets": fld.targets.tolist(),
        "leg_lengths": [float(v) for v in leg_lengths],
        "total_cost": float(tour.total_cost),
    }


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_tour(path) -> tuple:
    """Re-cost a saved tour from its targets, order and headings; returns ``(tour, field, data)``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        fld = Field(np.asarray(data["targets"], dtype=float))
        tour = make_tour(fld, data["order"], data["headings"], float(data["rho"]), bool(data["closed"]))
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"bad tour file {path}: {exc}") from None
    return tour, fld, data


def write_reference_csv(path, segments) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("leg", "s", "x", "y", "theta"))
        for k, seg in enumerate(segments):
            samples = seg.samples if isinstance(seg, ReferencePath) else np.asarray(seg)
            knots = seg.knots if isinstance(seg, ReferencePath) else np.linspace(0.0, 1.0, len(samples))
            for s, (x, y, th) in zip(knots, samples):
                w.writerow((k, repr(float(s)), repr(float(x)), repr(float(y)), repr(float(th))))


def mission_csv_text(log) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MISSION_HEADER)
    for i, u in enumerate(log.inputs):
        q = log.states[i]
        w.writerow((
            f"{i * log.dt:.10g}", repr(q.x), repr(q.y), repr(q.theta), repr(u.v), repr(u.omega),
            repr(float(log.s_bar[i])), log.status[i], log.iterations[i], f"{log.solve_time[i] * 1e3:.3f}",
        ))
    return buf.getvalue()


def write_mission_csv(path, log) -> None:
    Path(path).write_text(mission_csv_text(log), encoding="utf-8")


def mission_summary(log, failure: Optional[str] = None) -> dict:
    """Deterministic summary; wall-clock timings are deliberately left out."""
    iters = np.asarray(log.iterations, dtype=float)
    return {
        "success": bool(log.success) and failure is None,
        "failure": failure,
        "n_waypoints": int(log.n_waypoints),
        "waypoints_reached": len(log.waypoints),
        "steps": len(log.inputs),
        "mission_time": len(log.inputs) * log.dt,
        "reference_length": float(log.reference_length),
        "closed_loop_length": float(log.path_length),
        "max_position_error": float(log.max_position_error),
        "min_turn_violations": int(log.min_turn_violations),
        "infeasible_solves": int(log.infeasible_count),
        "solver_iterations": {
            "mean": float(iters.mean()) if iters.size else 0.0,
            "max": int(iters.max()) if iters.size else 0,
            "total": int(iters.sum()),
        },
        "waypoints": [
            {"index": w.index, "time": w.time, "position_error": w.position_error, "heading_error": w.heading_error}
            for w in log.waypoints
        ],
    }
