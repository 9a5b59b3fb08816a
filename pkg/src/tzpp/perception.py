"""Egocentric observations and the semantic query oracle.

An Observation is a symbolic stand-in for a forward camera frame: named
entities at (bearing, distance) plus the angular intervals subtended by
obstructions. The oracle answers four queries over observations — target
inspection, path feasibility, environment accessibility, waypoint
suggestion — either geometrically or by forwarding to a remote endpoint
speaking the wire protocol below.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .geometry import (
    HUMANOID,
    QUADRUPED,
    Point2,
    Pose,
    Scene,
    SceneError,
    line_of_sight,
    normalize_angle,
    ray_hit_distance,
    segment_clear,
)

FULL_CIRCLE = math.pi  # fov half-angle that makes a snapshot panoramic
_RAY_STEP_DEG = 1


class OracleError(RuntimeError):
    """Oracle communication or contract failure; aborts the episode."""


@dataclass(frozen=True)
class Entity:
    name: str
    bearing: float
    distance: float
    occluded: bool


@dataclass(frozen=True)
class ObstacleArc:
    start_bearing: float
    end_bearing: float
    min_distance: float


@dataclass(frozen=True)
class Observation:
    observer: str
    pose: Pose
    fov_half_angle: float
    max_range: float
    entities: tuple
    obstacle_arcs: tuple

    @property
    def panoramic(self) -> bool:
        return self.fov_half_angle >= math.pi - 1e-9


@dataclass(frozen=True)
class OracleVerdict:
    answer: bool
    confidence: float = 1.0
    rationale: str = ""

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence outside [0, 1]")


@dataclass(frozen=True)
class Candidate:
    point: Point2
    score: float


@dataclass(frozen=True)
class OracleParams:
    """Tunables for the geometric oracle; none are given by the protocol
    itself, all are scene-scale defaults."""
    fov_half_angle: float = math.pi / 4
    max_range: float = 8.0
    gap_min_angle: float = math.radians(15.0)
    corridor_probe_range: float = 4.0
    blocking_radius: float = 3.0
    blocked_fraction_max: float = 0.25
    waypoint_reach: float = 2.0        # matches the per-turn displacement cap
    clearance: float = 0.5             # stand-off from obstructions
    min_candidate_dist: float = 0.6    # below this a waypoint teaches nothing
    edge_margin: float = math.radians(10.0)
    throat_min_depth: float = 1.2      # blocked ray long enough to hide a corridor
    throat_reach: float = 4.0          # corridor-mouth probes may outrange a hop
    max_candidates: int = 8


def obstruction_edges(scene: Scene):
    """Edges the observation ray caster collides with.

    An obstruction is anything the coordinator cannot walk through or see
    through; terrain traversable by the humanoid and transparent (e.g. a
    ramp) subtends no arc.
    """
    edges = []
    for obs in scene.obstacles:
        if obs.blocks_vision or obs.blocks(HUMANOID):
            edges.extend(obs.edges())
    return edges


def observe(pose: Pose, agent_class: str, scene: Scene,
            fov_half_angle: float, max_range: float,
            markers: Optional[dict] = None) -> Observation:
    """Snapshot of what an agent perceives from a pose.

    Entities are landmarks (plus ad-hoc markers such as an assigned
    waypoint) within range and field of view; occlusion follows
    line-of-sight. Obstacle arcs come from ray casting at 1 degree steps.
    """
    if not scene.bounds.contains(pose.position):
        raise SceneError("agent out of bounds")
    entities = []
    named = [(lm.name, lm.position) for lm in scene.landmarks]
    if markers:
        named.extend(sorted(markers.items()))
    for name, position in named:
        distance = pose.position.dist(position)
        if distance > max_range:
            continue
        bearing = normalize_angle(pose.position.bearing_to(position) - pose.heading)
        if abs(bearing) > fov_half_angle + 1e-12:
            continue
        occluded = not line_of_sight(pose.position, position, scene)
        entities.append(Entity(name, bearing, distance, occluded))

    edges = obstruction_edges(scene)
    arcs = []
    if edges:
        degs = _ray_degrees(fov_half_angle)
        run_start = None
        run_min = math.inf
        prev_deg = None
        for deg in degs:
            hit = ray_hit_distance(pose.position,
                                   pose.heading + math.radians(deg),
                                   edges, max_range)
            if hit is not None:
                if run_start is None:
                    run_start = deg
                    run_min = hit
                else:
                    run_min = min(run_min, hit)
                prev_deg = deg
            elif run_start is not None:
                arcs.append(ObstacleArc(math.radians(run_start),
                                        math.radians(prev_deg), run_min))
                run_start = None
                run_min = math.inf
        if run_start is not None:
            arcs.append(ObstacleArc(math.radians(run_start),
                                    math.radians(prev_deg), run_min))
    return Observation(agent_class, pose, fov_half_angle, max_range,
                       tuple(entities), tuple(arcs))


def _ray_degrees(fov_half_angle: float):
    if fov_half_angle >= math.pi - 1e-9:
        return range(-180, 180)
    half = int(round(math.degrees(fov_half_angle)))
    return range(-half, half + 1)


def free_gaps(obs: Observation, min_block_distance: Optional[float] = None):
    """Angular intervals not covered by (relevant) obstacle arcs.

    Returns (start, end) bearing pairs with end > start; on panoramic
    observations the interval wrapping the +/-pi seam is merged, so end may
    exceed pi.
    """
    fov = min(obs.fov_half_angle, math.pi)
    arcs = [a for a in obs.obstacle_arcs
            if min_block_distance is None or a.min_distance < min_block_distance]
    lo, hi = -fov, fov
    if not arcs:
        return [(lo, hi)]
    arcs = sorted(arcs, key=lambda a: a.start_bearing)
    gaps = []
    cursor = lo
    for arc in arcs:
        if arc.start_bearing - cursor > 1e-9:
            gaps.append((cursor, arc.start_bearing))
        cursor = max(cursor, arc.end_bearing)
    if hi - cursor > 1e-9:
        gaps.append((cursor, hi))
    if obs.panoramic and len(gaps) >= 2:
        first, last = gaps[0], gaps[-1]
        if first[0] <= lo + 1e-9 and last[1] >= hi - 1e-9:
            gaps = gaps[1:-1] + [(last[0], first[1] + 2 * math.pi)]
    return gaps


def blocked_fraction(obs: Observation, blocking_radius: float) -> float:
    """Fraction of the scanned field subtended by obstructions closer than
    blocking_radius. Each 1-degree ray bin counts its full width."""
    step = math.radians(_RAY_STEP_DEG)
    total = 0.0
    for arc in obs.obstacle_arcs:
        if arc.min_distance < blocking_radius:
            total += (arc.end_bearing - arc.start_bearing) + step
    span = 2 * min(obs.fov_half_angle, math.pi)
    return min(1.0, total / span)


class PerceptionOracle:
    """Interface shared by the geometric, remote and replay oracles."""

    def inspect_for(self, target: str, obs: Observation) -> OracleVerdict:
        raise NotImplementedError

    def path_ideal(self, target: str, obs: Observation) -> OracleVerdict:
        raise NotImplementedError

    def env_all_reachable(self, obs: Observation) -> OracleVerdict:
        raise NotImplementedError

    def suggest_waypoints(self, obs: Observation, target: str, k: int):
        raise NotImplementedError


class GeometricOracle(PerceptionOracle):
    """Pure function of (observation, scene, parameters); the VLM's role
    answered with plane geometry. Confidence is always 1."""

    def __init__(self, scene: Scene, params: OracleParams = OracleParams()):
        self.scene = scene
        self.params = params

    # -- queries ----------------------------------------------------------

    def inspect_for(self, target: str, obs: Observation) -> OracleVerdict:
        if target.casefold() == "passage":
            return self._passage_verdict(obs)
        for ent in obs.entities:
            if ent.occluded:
                continue
            if ent.name.casefold() == target.casefold():
                return OracleVerdict(True, 1.0,
                                     f"{target} visible at bearing {ent.bearing:.2f}")
        return OracleVerdict(False, 1.0, f"{target} not in view")

    def path_ideal(self, target: str, obs: Observation) -> OracleVerdict:
        lm = self.scene.landmark_by_name(target)
        if lm is None:
            raise OracleError(f"unknown target label: {target!r}")
        visible = self.inspect_for(target, obs).answer
        if not visible:
            return OracleVerdict(False, 1.0, "target not visible")
        clear = segment_clear(obs.pose.position, lm.position, self.scene, HUMANOID)
        if not clear:
            return OracleVerdict(False, 1.0, "blocking structure on the direct segment")
        return OracleVerdict(True, 1.0, "target visible with a clear direct segment")

    def env_all_reachable(self, obs: Observation) -> OracleVerdict:
        frac = blocked_fraction(obs, self.params.blocking_radius)
        open_enough = frac <= self.params.blocked_fraction_max
        return OracleVerdict(open_enough, 1.0,
                             f"{frac:.0%} of the field blocked within "
                             f"{self.params.blocking_radius:g} m")

    def suggest_waypoints(self, obs: Observation, target: str, k: int):
        if k < 1:
            raise ValueError("k must be at least 1")
        lm = self.scene.landmark_by_name(target)
        if lm is None:
            raise OracleError(f"unknown target label: {target!r}")
        raw = self._raw_candidates(obs, lm.position)
        ranked = sorted(raw, key=lambda c: (round(c[1], 9), -c[2], c[3]))
        out = []
        for point, dist_to_target, _width, _bearing in ranked:
            if any(point.dist(c.point) < 0.3 for c in out):
                continue
            out.append(Candidate(point, -dist_to_target))
            if len(out) >= k:
                break
        return out

    # -- internals --------------------------------------------------------

    def _passage_verdict(self, obs: Observation) -> OracleVerdict:
        p = self.params
        for start, end in free_gaps(obs, min_block_distance=p.corridor_probe_range):
            if end - start >= p.gap_min_angle:
                return OracleVerdict(True, 1.0,
                                     f"open corridor spanning {math.degrees(end - start):.0f} deg")
        return OracleVerdict(False, 1.0, "no traversable corridor in view")

    def _raw_candidates(self, obs: Observation, target_pos: Point2):
        """(point, distance-to-target, gap-width, bearing) tuples, unranked.

        Three families: free-gap candidates (midpoint and near-edge rays,
        projected one hop out), corridor throats (local maxima of the
        blocked-ray distance profile, projected up to throat_reach), and the
        visible-region boundary point along the target's direction. Every
        candidate must be in bounds, at a useful distance, and reachable by
        the scout on a straight run.
        """
        p = self.params
        pose = obs.pose
        edges = obstruction_edges(self.scene)
        degs = list(_ray_degrees(obs.fov_half_angle))
        profile = [ray_hit_distance(pose.position, pose.heading + math.radians(d),
                                    edges, obs.max_range) for d in degs]
        raw = []

        def consider(bearing, reach_limit, width, cap=None):
            r = min(reach_limit - p.clearance,
                    cap if cap is not None else p.waypoint_reach)
            if r < p.min_candidate_dist:
                return
            point = pose.position.offset(pose.heading + bearing, r)
            if not self.scene.bounds.contains(point, margin=0.05):
                return
            if not segment_clear(pose.position, point, self.scene, QUADRUPED):
                return
            raw.append((point, point.dist(target_pos), width, normalize_angle(bearing)))

        def ray_reach(bearing):
            hit = ray_hit_distance(pose.position, pose.heading + bearing,
                                   edges, obs.max_range)
            return obs.max_range if hit is None else hit

        for start, end in free_gaps(obs):
            width = end - start
            if width < p.gap_min_angle:
                continue
            bearings = [(start + end) / 2.0]
            if width >= 2 * p.edge_margin + 1e-9:
                bearings.extend([start + p.edge_margin, end - p.edge_margin])
            for b in bearings:
                consider(b, ray_reach(b), width)

        for idx in self._throat_indices(profile):
            consider(math.radians(degs[idx]), profile[idx], 0.0,
                     cap=p.throat_reach)

        # Probe along the target's direction. Against an obstruction this is
        # the visible-region boundary point (frontier, not capped to one
        # hop); on a free ray it is an ordinary hop toward the target.
        target_bearing = normalize_angle(
            pose.position.bearing_to(target_pos) - pose.heading)
        if abs(target_bearing) <= min(obs.fov_half_angle, math.pi) + 1e-9:
            hit = ray_hit_distance(pose.position, pose.heading + target_bearing,
                                   edges, obs.max_range)
            if hit is None:
                consider(target_bearing, obs.max_range, 0.0)
            else:
                consider(target_bearing, hit, 0.0, cap=obs.max_range)
        return raw

    def _throat_indices(self, profile):
        """Local maxima of the blocked-ray distance profile: directions where
        an obstruction sits unusually deep, i.e. likely corridor mouths."""
        p = self.params
        picked = []
        n = len(profile)
        for i, dist in enumerate(profile):
            if dist is None or dist < p.throat_min_depth:
                continue
            left = profile[i - 1] if i > 0 else None
            right = profile[i + 1] if i < n - 1 else None
            if left is not None and left > dist:
                continue
            if right is not None and right >= dist and right != dist:
                continue
            if right is not None and right == dist:
                # plateau: keep only the first index
                if left is not None and left == dist:
                    continue
            picked.append(i)
        # Enforce a minimal angular separation, preferring deeper throats.
        picked.sort(key=lambda i: (-profile[i], i))
        kept = []
        for i in picked:
            if all(abs(i - j) >= 5 for j in kept):
                kept.append(i)
        return sorted(kept)


# ---------------------------------------------------------------------------
# Journaling, replay, remote
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QueryRecord:
    kind: str
    target: Optional[str]
    answer: Optional[bool] = None
    confidence: Optional[float] = None
    candidates: Optional[tuple] = None


class RecordingOracle(PerceptionOracle):
    """Wraps an oracle and journals every query for the episode trace."""

    def __init__(self, inner: PerceptionOracle):
        self.inner = inner
        self.journal = []

    def drain(self):
        out = self.journal
        self.journal = []
        return out

    def inspect_for(self, target, obs):
        v = self.inner.inspect_for(target, obs)
        self.journal.append(QueryRecord("inspect_for", target, v.answer, v.confidence))
        return v

    def path_ideal(self, target, obs):
        v = self.inner.path_ideal(target, obs)
        self.journal.append(QueryRecord("path_ideal", target, v.answer, v.confidence))
        return v

    def env_all_reachable(self, obs):
        v = self.inner.env_all_reachable(obs)
        self.journal.append(QueryRecord("env_all_reachable", None, v.answer, v.confidence))
        return v

    def suggest_waypoints(self, obs, target, k):
        cands = self.inner.suggest_waypoints(obs, target, k)
        self.journal.append(QueryRecord("suggest_waypoints", target,
                                        candidates=tuple(cands)))
        return cands


class ReplayOracle(PerceptionOracle):
    """Replays a recorded query journal; any divergence from the recorded
    sequence is an error rather than a guess."""

    def __init__(self, records: Sequence[QueryRecord]):
        self._records = list(records)
        self._cursor = 0

    def _next(self, kind, target):
        if self._cursor >= len(self._records):
            raise OracleError("replay exhausted: no recorded verdict left")
        rec = self._records[self._cursor]
        self._cursor += 1
        if rec.kind != kind or rec.target != target:
            raise OracleError(
                f"replay divergence: recorded {rec.kind}({rec.target!r}), "
                f"queried {kind}({target!r})")
        return rec

    def inspect_for(self, target, obs):
        rec = self._next("inspect_for", target)
        return OracleVerdict(rec.answer, rec.confidence or 1.0, "replayed")

    def path_ideal(self, target, obs):
        rec = self._next("path_ideal", target)
        return OracleVerdict(rec.answer, rec.confidence or 1.0, "replayed")

    def env_all_reachable(self, obs):
        rec = self._next("env_all_reachable", None)
        return OracleVerdict(rec.answer, rec.confidence or 1.0, "replayed")

    def suggest_waypoints(self, obs, target, k):
        rec = self._next("suggest_waypoints", target)
        return list(rec.candidates or ())[:k]


ORACLE_URL_ENV = "TZPP_ORACLE_URL"


def serialize_observation(obs: Observation) -> dict:
    return {
        "pose": {"x": obs.pose.position.x, "y": obs.pose.position.y,
                 "heading": obs.pose.heading},
        "fov_half_angle": obs.fov_half_angle,
        "max_range": obs.max_range,
        "entities": [
            {"name": e.name, "bearing": e.bearing, "distance": e.distance,
             "occluded": e.occluded} for e in obs.entities
        ],
        "obstacle_arcs": [
            {"start_bearing": a.start_bearing, "end_bearing": a.end_bearing,
             "min_distance": a.min_distance} for a in obs.obstacle_arcs
        ],
    }


def deserialize_observation(data: dict, observer: str = QUADRUPED) -> Observation:
    pose = Pose(Point2(data["pose"]["x"], data["pose"]["y"]), data["pose"]["heading"])
    entities = tuple(Entity(e["name"], e["bearing"], e["distance"], e["occluded"])
                     for e in data["entities"])
    arcs = tuple(ObstacleArc(a["start_bearing"], a["end_bearing"], a["min_distance"])
                 for a in data["obstacle_arcs"])
    return Observation(observer, pose, data["fov_half_angle"], data["max_range"],
                       entities, arcs)


class RemoteOracle(PerceptionOracle):
    """Forwards queries to a remote endpoint over HTTP POST.

    The engine blocks on each verdict; a timeout or malformed response
    aborts the episode with a distinguished error.
    """

    def __init__(self, url: Optional[str] = None, timeout: float = 30.0,
                 context: str = ""):
        self.url = os.environ.get(ORACLE_URL_ENV) or url
        if not self.url:
            raise ValueError("remote oracle endpoint not configured "
                             f"(pass url or set {ORACLE_URL_ENV})")
        self.timeout = timeout
        self.context = context

    def _post(self, kind: str, target: Optional[str], obs: Observation) -> dict:
        import requests

        payload = {
            "query_kind": kind,
            "target_label": target or "",
            "observation": serialize_observation(obs),
            "context": self.context,
        }
        try:
            resp = requests.post(self.url, json=payload, timeout=self.timeout)
        except requests.Timeout as exc:
            raise OracleError("oracle timeout") from exc
        except requests.RequestException as exc:
            raise OracleError(f"oracle protocol error: {exc}") from exc
        try:
            body = resp.json()
        except ValueError as exc:
            raise OracleError("oracle protocol error: response is not JSON") from exc
        if not isinstance(body, dict):
            raise OracleError("oracle protocol error: response is not an object")
        return body

    def _verdict(self, body: dict) -> OracleVerdict:
        try:
            return OracleVerdict(bool(body["answer"]),
                                 float(body.get("confidence", 1.0)),
                                 str(body.get("rationale", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleError(f"oracle protocol error: {exc}") from exc

    def inspect_for(self, target, obs):
        return self._verdict(self._post("inspect_for", target, obs))

    def path_ideal(self, target, obs):
        return self._verdict(self._post("path_ideal", target, obs))

    def env_all_reachable(self, obs):
        return self._verdict(self._post("env_all_reachable", None, obs))

    def suggest_waypoints(self, obs, target, k):
        body = self._post("suggest_waypoints", target, obs)
        try:
            cands = [Candidate(Point2(float(c["x"]), float(c["y"])),
                               float(c.get("score", 0.0)))
                     for c in body["candidates"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleError(f"oracle protocol error: {exc}") from exc
        return cands[:k]
