"""Static 2D world model and the geometric primitives everything else consumes.

Conventions: all lengths in meters, angles in radians, headings normalized to
[-pi, pi). Polygon obstacles only; tangency is conservative (a segment that
merely grazes a vertex or edge counts as intersecting).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

HUMANOID = "humanoid"
QUADRUPED = "quadruped"
AGENT_CLASSES = (HUMANOID, QUADRUPED)

_EPS = 1e-12


class SceneError(ValueError):
    """A scene definition or geometric precondition is violated."""


def normalize_angle(angle: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    a = math.fmod(angle + math.pi, 2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise SceneError(f"non-finite coordinates ({self.x}, {self.y})")

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def bearing_to(self, other: "Point2") -> float:
        """Absolute angle of the ray from self to other."""
        return math.atan2(other.y - self.y, other.x - self.x)

    def offset(self, angle: float, distance: float) -> "Point2":
        return Point2(self.x + distance * math.cos(angle),
                      self.y + distance * math.sin(angle))


@dataclass(frozen=True)
class Pose:
    position: Point2
    heading: float

    def __post_init__(self):
        if not math.isfinite(self.heading):
            raise SceneError("non-finite heading")
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise SceneError("degenerate bounds rectangle")

    def contains(self, p: Point2, margin: float = 0.0) -> bool:
        return (self.xmin + margin <= p.x <= self.xmax - margin
                and self.ymin + margin <= p.y <= self.ymax - margin)


def polygon_area(vertices: Sequence[Point2]) -> float:
    """Signed shoelace area (positive for counterclockwise winding)."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        total += a.x * b.y - b.x * a.y
    return total / 2.0


def _orient(a: Point2, b: Point2, c: Point2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _on_segment(a: Point2, b: Point2, p: Point2) -> bool:
    """p collinear with a-b: is p within the segment's bounding box?"""
    return (min(a.x, b.x) - _EPS <= p.x <= max(a.x, b.x) + _EPS
            and min(a.y, b.y) - _EPS <= p.y <= max(a.y, b.y) + _EPS)


def segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool:
    """Inclusive segment intersection: shared endpoints and grazes count."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def polygon_is_simple(vertices: Sequence[Point2]) -> bool:
    """No two non-adjacent edges intersect; adjacent edges meet only at the
    shared vertex."""
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a1, a2 = edges[i]
        if a1.dist(a2) < _EPS:
            return False
        for j in range(i + 1, n):
            b1, b2 = edges[j]
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                # Shared vertex only; any other contact is a self-touch.
                shared = a2 if j == i + 1 else a1
                other = b2 if j == i + 1 else b1
                if _orient(a1, a2, other) == 0 and _on_segment(a1, a2, other):
                    return False
                del shared
                continue
            if segments_intersect(a1, a2, b1, b2):
                return False
    return True


def point_in_polygon(p: Point2, vertices: Sequence[Point2]) -> bool:
    """Even-odd crossing test. Boundary points are ambiguous; use
    point_on_polygon_boundary when that distinction matters."""
    inside = False
    n = len(vertices)
    j = n - 1
    for i in range(n):
        vi, vj = vertices[i], vertices[j]
        if (vi.y > p.y) != (vj.y > p.y):
            x_cross = (vj.x - vi.x) * (p.y - vi.y) / (vj.y - vi.y) + vi.x
            if p.x < x_cross:
                inside = not inside
        j = i
    return inside


def point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    foot, dist, _ = project_point_segment(p, a, b)
    del foot
    return dist


def project_point_segment(p: Point2, a: Point2, b: Point2):
    """Clamped orthogonal projection of p onto segment a-b.

    Returns (foot, distance, t) with t in [0, 1] the segment parameter.
    """
    vx, vy = b.x - a.x, b.y - a.y
    ll = vx * vx + vy * vy
    if ll < _EPS:
        return a, p.dist(a), 0.0
    t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / ll
    t = max(0.0, min(1.0, t))
    foot = Point2(a.x + t * vx, a.y + t * vy)
    return foot, p.dist(foot), t


def point_on_polygon_boundary(p: Point2, vertices: Sequence[Point2],
                              tol: float = 1e-9) -> bool:
    n = len(vertices)
    for i in range(n):
        if point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= tol:
            return True
    return False


def point_strictly_inside(p: Point2, vertices: Sequence[Point2],
                          tol: float = 1e-9) -> bool:
    return point_in_polygon(p, vertices) and not point_on_polygon_boundary(p, vertices, tol)


@dataclass(frozen=True)
class Obstacle:
    id: str
    boundary: tuple
    blocks_vision: bool = True
    traversable_by: frozenset = frozenset()

    def __post_init__(self):
        boundary = tuple(self.boundary)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "traversable_by", frozenset(self.traversable_by))
        if len(boundary) < 3:
            raise SceneError(f"obstacle {self.id!r}: fewer than 3 vertices")
        if not polygon_is_simple(boundary):
            raise SceneError(f"obstacle {self.id!r}: polygon is not simple")
        if abs(polygon_area(boundary)) < 1e-12:
            raise SceneError(f"obstacle {self.id!r}: zero area")
        unknown = self.traversable_by - set(AGENT_CLASSES)
        if unknown:
            raise SceneError(f"obstacle {self.id!r}: unknown agent classes {sorted(unknown)}")

    def edges(self):
        n = len(self.boundary)
        return [(self.boundary[i], self.boundary[(i + 1) % n]) for i in range(n)]

    def blocks(self, agent_class: str) -> bool:
        return agent_class not in self.traversable_by


@dataclass(frozen=True)
class Landmark:
    id: str
    name: str
    position: Point2


@dataclass(frozen=True)
class Scene:
    name: str
    bounds: Rect
    obstacles: tuple
    landmarks: tuple
    humanoid_start: Pose
    quadruped_start: Pose
    target: str
    reference_path: tuple
    optimal_avoidance_arc: Optional[float] = None
    detour_obstacle_id: Optional[str] = None
    landmark_sparse_hint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        object.__setattr__(self, "reference_path", tuple(self.reference_path))
        self._validate()

    def _validate(self):
        names = [lm.name for lm in self.landmarks]
        if len(set(n.casefold() for n in names)) != len(names):
            raise SceneError("duplicate landmark names")
        ids = [lm.id for lm in self.landmarks]
        if len(set(ids)) != len(ids):
            raise SceneError("duplicate landmark ids")
        obstacle_ids = [o.id for o in self.obstacles]
        if len(set(obstacle_ids)) != len(obstacle_ids):
            raise SceneError("duplicate obstacle ids")
        try:
            target_lm = self.landmark_by_id(self.target)
        except KeyError:
            raise SceneError(f"target {self.target!r} is not a scene landmark") from None
        for agent, pose in ((HUMANOID, self.humanoid_start), (QUADRUPED, self.quadruped_start)):
            if not self.bounds.contains(pose.position):
                raise SceneError(f"{agent} start outside bounds")
            for obs in self.obstacles:
                if obs.blocks(agent) and point_in_polygon(pose.position, obs.boundary):
                    raise SceneError(f"{agent} start inside obstacle {obs.id!r}")
        for lm in self.landmarks:
            if not self.bounds.contains(lm.position):
                raise SceneError(f"landmark {lm.name!r} outside bounds")
            for obs in self.obstacles:
                if obs.blocks(HUMANOID) and point_in_polygon(lm.position, obs.boundary):
                    raise SceneError(f"landmark {lm.name!r} inside obstacle {obs.id!r}")
        if len(self.reference_path) < 2:
            raise SceneError("reference path needs at least two vertices")
        if self.reference_path[0].dist(self.humanoid_start.position) > 1e-6:
            raise SceneError("reference path must start at the humanoid start")
        if self.reference_path[-1].dist(target_lm.position) > 1e-6:
            raise SceneError("reference path must end at the target")
        if self.optimal_avoidance_arc is not None:
            if self.optimal_avoidance_arc <= 0:
                raise SceneError("optimal avoidance arc must be positive")
            if self.detour_obstacle_id is None:
                raise SceneError("optimal avoidance arc set without a detour obstacle")
            if self.detour_obstacle_id not in obstacle_ids:
                raise SceneError(f"detour obstacle {self.detour_obstacle_id!r} not found")

    def landmark_by_id(self, lm_id: str) -> Landmark:
        for lm in self.landmarks:
            if lm.id == lm_id:
                return lm
        raise KeyError(lm_id)

    def landmark_by_name(self, name: str) -> Optional[Landmark]:
        folded = name.casefold()
        for lm in self.landmarks:
            if lm.name.casefold() == folded:
                return lm
        return None

    def obstacle_by_id(self, obs_id: str) -> Obstacle:
        for obs in self.obstacles:
            if obs.id == obs_id:
                return obs
        raise KeyError(obs_id)

    def target_position(self) -> Point2:
        return self.landmark_by_id(self.target).position


def segment_intersects_polygon(a: Point2, b: Point2, vertices: Sequence[Point2]) -> bool:
    """Inclusive: any edge contact or containment counts."""
    n = len(vertices)
    for i in range(n):
        if segments_intersect(a, b, vertices[i], vertices[(i + 1) % n]):
            return True
    # No edge crossing: the segment is either wholly inside or wholly outside.
    mid = Point2((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
    return point_in_polygon(mid, vertices)


def segment_clear(a: Point2, b: Point2, scene: Scene, agent_class: str) -> bool:
    """True iff the segment a-b crosses no obstacle the agent cannot traverse."""
    if agent_class not in AGENT_CLASSES:
        raise SceneError(f"unknown agent class {agent_class!r}")
    for obs in scene.obstacles:
        if not obs.blocks(agent_class):
            continue
        if segment_intersects_polygon(a, b, obs.boundary):
            return False
    return True


def line_of_sight(a: Point2, b: Point2, scene: Scene) -> bool:
    """True iff the segment a-b crosses no vision-blocking obstacle.

    Independent of traversability: a low ramp never hides anything, a wall
    hides everything behind it.
    """
    for obs in scene.obstacles:
        if not obs.blocks_vision:
            continue
        if segment_intersects_polygon(a, b, obs.boundary):
            return False
    return True


def project_to_polyline(p: Point2, path: Sequence[Point2]):
    """Closest point on a polyline.

    Returns (foot, distance) minimizing over all segments; ties go to the
    earliest segment index.
    """
    if len(path) < 2:
        raise SceneError("degenerate reference path")
    best_foot = None
    best_dist = math.inf
    for i in range(len(path) - 1):
        foot, dist, _ = project_point_segment(p, path[i], path[i + 1])
        if dist < best_dist:
            best_dist = dist
            best_foot = foot
    return best_foot, best_dist


def nearest_obstacle_point(p: Point2, obstacle: Obstacle) -> Point2:
    """Closest point on the obstacle boundary to p.

    Ties break to the lowest edge index, then the lowest segment parameter.
    Raises if p is strictly inside: a trajectory may touch but never
    penetrate an obstacle it is measured against.
    """
    if point_strictly_inside(p, obstacle.boundary):
        raise SceneError("trajectory penetrates obstacle")
    best = None
    best_dist = math.inf
    best_t = 0.0
    for a, b in obstacle.edges():
        foot, dist, t = project_point_segment(p, a, b)
        if dist < best_dist or (dist == best_dist and t < best_t and best is not None):
            best = foot
            best_dist = dist
            best_t = t
    return best


def arc_length(points: Sequence[Point2]) -> float:
    """Sum of consecutive Euclidean distances; a single point has length 0."""
    if len(points) == 0:
        raise SceneError("arc length of an empty point list")
    total = 0.0
    for i in range(len(points) - 1):
        total += points[i].dist(points[i + 1])
    return total


def ray_hit_distance(origin: Point2, angle: float,
                     edges: Iterable, max_range: float) -> Optional[float]:
    """Distance along the ray from origin at `angle` to the nearest edge hit
    within max_range, or None. Endpoint grazes count as hits."""
    rx, ry = math.cos(angle), math.sin(angle)
    best = None
    for a, b in edges:
        ex, ey = b.x - a.x, b.y - a.y
        denom = rx * ey - ry * ex
        if abs(denom) < _EPS:
            continue
        ox, oy = a.x - origin.x, a.y - origin.y
        t = (ox * ey - oy * ex) / denom
        u = (ox * ry - oy * rx) / denom
        if -_EPS <= u <= 1.0 + _EPS and _EPS < t <= max_range:
            if best is None or t < best:
                best = t
    return best


def clip_displacement(pos: Point2, heading: float, desired: float,
                      scene: Scene, agent_class: str,
                      backoff: float = 0.98, iters: int = 40) -> float:
    """Largest displacement along heading whose swept segment stays clear and
    in bounds. Clear-ness of the prefix segment is monotone in t, so a
    bisection applies; the result is backed off slightly to keep the endpoint
    strictly off obstacle boundaries."""
    if desired <= 0.0:
        return 0.0

    def ok(d: float) -> bool:
        end = pos.offset(heading, d)
        return scene.bounds.contains(end) and segment_clear(pos, end, scene, agent_class)

    if ok(desired):
        return desired
    lo, hi = 0.0, desired
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo * backoff
