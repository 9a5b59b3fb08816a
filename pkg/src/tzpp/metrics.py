"""Evaluation metrics computed from an episode trace.

Sixteen metrics over six dimensions: task efficiency (TIME, D, R), path
fidelity (CR, PS, RMSE), exploration utility (N_K, EER, N_E, N_move),
coordination (V_GE), robustness (CCR_q, N_rev_h, N_rev_q, N_rot_q) and
constrained navigation (V_avoid). Where the underlying idea has no single
canonical computation, the definition documented on compute_report is the
normative one for this artifact:

* EER is key points over missions that physically reached their waypoint;
  CCR_q is reached-over-assigned.
* Revisit counts use re-entries into previously visited 0.5 m grid cells.
* N_rot_q counts completed (not early-terminated) full rotational scans
  whose panoramic entity set adds nothing over earlier completed scans;
  the first completed scan is exempt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .config import SimConfig
from .engine import AssignWaypoint, EpisodeTrace, ExplorationReportMsg
from .geometry import (
    HUMANOID,
    QUADRUPED,
    Obstacle,
    Point2,
    Pose,
    Scene,
    arc_length,
    nearest_obstacle_point,
    project_to_polyline,
)
from .perception import FULL_CIRCLE, OracleParams, observe

REVISIT_CELL = 0.5
AVOIDANCE_SPACING = 0.05


@dataclass(frozen=True)
class MetricsReport:
    """None marks a metric as not applicable for the run."""
    time_total: float
    dist_humanoid: float
    rot_humanoid: float
    completion: float
    path_score: Optional[float]
    rmse: float
    key_points: int
    exploration_rate: Optional[float]
    scout_missions: int
    move_count: int
    guidance_ratio: Optional[float]
    compliance_rate: Optional[float]
    revisits_humanoid: int
    revisits_quadruped: int
    redundant_scans: int
    avoidance_ratio: Optional[float]
    notes: tuple = ()

    def __post_init__(self):
        for name in ("completion", "exploration_rate", "compliance_rate"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} outside [0, 1]: {value}")
        if self.path_score is not None and not 0.0 < self.path_score <= 100.0:
            raise ValueError(f"path score outside (0, 100]: {self.path_score}")
        for name in ("key_points", "scout_missions", "move_count",
                     "revisits_humanoid", "revisits_quadruped", "redundant_scans"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} negative")


# Stable public column order for tables and CSV.
METRIC_COLUMNS: Tuple[Tuple[str, str], ...] = (
    ("TIME", "time_total"),
    ("D", "dist_humanoid"),
    ("R", "rot_humanoid"),
    ("CR", "completion"),
    ("PS", "path_score"),
    ("RMSE", "rmse"),
    ("N_K", "key_points"),
    ("EER", "exploration_rate"),
    ("N_E", "scout_missions"),
    ("N_move", "move_count"),
    ("V_GE", "guidance_ratio"),
    ("CCR_q", "compliance_rate"),
    ("N_rev_h", "revisits_humanoid"),
    ("N_rev_q", "revisits_quadruped"),
    ("N_rot_q", "redundant_scans"),
    ("V_avoid", "avoidance_ratio"),
)


def path_score(l_optimal: float, l_actual: float) -> float:
    """100 * optimal-over-actual path length."""
    if l_optimal <= 0 or l_actual <= 0:
        raise ValueError("path lengths must be positive")
    return 100.0 * l_optimal / l_actual


def path_rmse(trajectory, reference) -> float:
    """Root mean square of each trajectory point's distance to the nearest
    point of the reference polyline."""
    if not trajectory:
        raise ValueError("empty trajectory")
    total = 0.0
    for p in trajectory:
        _, dist = project_to_polyline(p, reference)
        total += dist * dist
    return math.sqrt(total / len(trajectory))


def resample_polyline(points, spacing: float):
    """Points spaced `spacing` apart along the polyline, endpoints included."""
    if not points:
        raise ValueError("empty polyline")
    if len(points) == 1 or spacing <= 0:
        return list(points)
    out = [points[0]]
    carried = 0.0
    for a, b in zip(points[:-1], points[1:]):
        seg = a.dist(b)
        if seg < 1e-12:
            continue
        along = spacing - carried
        while along <= seg:
            t = along / seg
            out.append(Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
            along += spacing
        carried = seg - (along - spacing)
    if out[-1].dist(points[-1]) > 1e-9:
        out.append(points[-1])
    return out


def avoidance_trace(trajectory, obstacle: Obstacle,
                    spacing: float = AVOIDANCE_SPACING):
    """Projection of the (resampled) trajectory onto the obstacle surface."""
    samples = resample_polyline(list(trajectory), spacing)
    return [nearest_obstacle_point(p, obstacle) for p in samples]


def avoidance_coefficient(trajectory, obstacle: Obstacle,
                          l_avoid_optimal: float,
                          spacing: float = AVOIDANCE_SPACING) -> float:
    """Arc length swept on the obstacle surface, relative to the optimal
    detour's sweep."""
    if not trajectory:
        raise ValueError("empty trajectory")
    if l_avoid_optimal <= 0:
        raise ValueError("optimal avoidance arc must be positive")
    swept = avoidance_trace(trajectory, obstacle, spacing)
    return arc_length(swept) / l_avoid_optimal


def _grid_cell(p: Point2):
    return (math.floor(p.x / REVISIT_CELL), math.floor(p.y / REVISIT_CELL))


def _revisits(positions) -> int:
    if not positions:
        return 0
    first = _grid_cell(positions[0])
    visited = {first}
    prev = first
    count = 0
    for p in positions[1:]:
        cell = _grid_cell(p)
        if cell != prev and cell in visited:
            count += 1
        visited.add(cell)
        prev = cell
    return count


@dataclass
class _Mission:
    waypoint: Point2
    outcome: Optional[str] = None
    quadruped_positions: List[Point2] = field(default_factory=list)


def _missions(trace: EpisodeTrace) -> List[_Mission]:
    missions = []
    current = None
    for rec in trace.records:
        if current is not None and rec.agent == QUADRUPED:
            current.quadruped_positions.append(rec.pose_before.position)
            current.quadruped_positions.append(rec.pose_after.position)
        for msg in rec.messages:
            if isinstance(msg.body, AssignWaypoint):
                current = _Mission(msg.body.waypoint)
                missions.append(current)
            elif isinstance(msg.body, ExplorationReportMsg):
                if current is not None:
                    current.outcome = msg.body.outcome
                current = None
    return missions


def _redundant_scans(trace: EpisodeTrace, scene: Scene,
                     params: OracleParams) -> int:
    """Completed full scans whose panoramic landmark view adds nothing new."""
    seen_union = set()
    redundant = 0
    first = True
    for rec in trace.records:
        if rec.agent != QUADRUPED or rec.kind != "scan":
            continue
        if ":full:completed" not in rec.detail:
            continue
        pose = Pose(rec.pose_after.position, 0.0)
        panorama = observe(pose, QUADRUPED, scene, FULL_CIRCLE, params.max_range)
        visible = {e.name for e in panorama.entities if not e.occluded}
        if not first and visible <= seen_union:
            redundant += 1
        seen_union |= visible
        first = False
    return redundant


def compute_report(trace: EpisodeTrace, scene: Scene,
                   params: OracleParams = OracleParams()) -> MetricsReport:
    """All sixteen metrics for one terminal episode trace."""
    if trace.result is None:
        raise ValueError("trace is not terminal")
    cfg = trace.config
    notes = []

    dist_h = rot_h = dist_q = 0.0
    moves = 0
    h_positions = []
    q_positions = []
    for rec in trace.records:
        if rec.agent == HUMANOID:
            if not h_positions:
                h_positions.append(rec.pose_before.position)
            dist_h += rec.displacement
            rot_h += abs(rec.rotation)
            if rec.kind == "move" and rec.displacement > 0:
                moves += 1
            h_positions.append(rec.pose_after.position)
        else:
            if not q_positions:
                q_positions.append(rec.pose_before.position)
            dist_q += rec.displacement
            if rec.displacement > 0:
                q_positions.append(rec.pose_after.position)
    if not h_positions:
        h_positions = [scene.humanoid_start.position]

    success = trace.result.success
    completion = 1.0 if success else 0.0

    ps = None
    if success and dist_h > 0:
        ps = path_score(arc_length(scene.reference_path), dist_h)
        if ps > 100.0:
            notes.append(f"path shorter than reference ({ps:.2f}); clamped to 100")
            ps = 100.0
    elif success:
        notes.append("no humanoid travel; path score not applicable")

    rmse = path_rmse(h_positions, scene.reference_path)

    missions = _missions(trace)
    n_e = len(missions)
    n_k = sum(1 for m in missions if m.outcome == "success")
    reach = cfg.d_achieve + 1e-9
    reached = sum(
        1 for m in missions
        if any(p.dist(m.waypoint) <= reach for p in m.quadruped_positions))
    eer = (n_k / reached) if reached else None
    ccr = (reached / n_e) if n_e else None
    v_ge = (dist_h / dist_q) if dist_q > 0 else None

    v_avoid = None
    if scene.optimal_avoidance_arc is not None:
        detour = scene.obstacle_by_id(scene.detour_obstacle_id)
        v_avoid = avoidance_coefficient(h_positions, detour,
                                        scene.optimal_avoidance_arc)

    return MetricsReport(
        time_total=trace.result.time,
        dist_humanoid=dist_h,
        rot_humanoid=rot_h,
        completion=completion,
        path_score=ps,
        rmse=rmse,
        key_points=n_k,
        exploration_rate=eer,
        scout_missions=n_e,
        move_count=moves,
        guidance_ratio=v_ge,
        compliance_rate=ccr,
        revisits_humanoid=_revisits(h_positions),
        revisits_quadruped=_revisits(q_positions),
        redundant_scans=_redundant_scans(trace, scene, params),
        avoidance_ratio=v_avoid,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# presentation
# ---------------------------------------------------------------------------

_PERCENT_FIELDS = {"completion", "exploration_rate", "compliance_rate"}


def format_value(field_name: str, value, csv: bool = False) -> str:
    if value is None:
        return "N/A"
    if csv:
        return f"{value:.6f}" if isinstance(value, float) else str(value)
    if field_name in _PERCENT_FIELDS:
        return f"{100.0 * value:.2f}%"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def report_table(report: MetricsReport) -> str:
    """Aligned two-column metric table."""
    lines = []
    width = max(len(name) for name, _ in METRIC_COLUMNS)
    for name, field_name in METRIC_COLUMNS:
        value = format_value(field_name, getattr(report, field_name))
        lines.append(f"{name:<{width}}  {value}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def csv_header() -> str:
    return ",".join(name for name, _ in METRIC_COLUMNS)


def csv_row(report: MetricsReport) -> str:
    return ",".join(format_value(field_name, getattr(report, field_name), csv=True)
                    for _, field_name in METRIC_COLUMNS)
