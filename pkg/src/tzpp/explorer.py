"""The scout's mission pipeline, run once per assigned waypoint.

A mission is: assess the surroundings and pick an exploration mode, confirm
the waypoint is visible in a full rotational scan, walk there, scan for the
task target with a feasibility check, and in obstacle-rich mode probe a
bounded forward arc for traversable passages before giving up. Every
physical action is emitted as a per-turn record so the episode trace can
hold the scout to the same kinematic limits as the coordinator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .config import SimConfig
from .geometry import (
    QUADRUPED,
    Point2,
    Pose,
    Scene,
    normalize_angle,
    segment_clear,
)
from .perception import (
    FULL_CIRCLE,
    GeometricOracle,
    Observation,
    OracleParams,
    PerceptionOracle,
    observe,
)

STEP_ANGLE = math.pi / 8
WAYPOINT_LABEL = "waypoint"
PASSAGE_LABEL = "passage"


class ExplorationMode(Enum):
    X = "X"  # landmark-sparse: panoramic scanning, fail fast on dead ends
    Y = "Y"  # obstacle-rich: additionally probe for corridors


class Outcome(Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class Reason(Enum):
    TARGET_VISIBLE_PATH_IDEAL = "target_visible_path_ideal"
    PASSAGE_FOUND = "passage_found"
    WAYPOINT_NOT_VISIBLE = "waypoint_not_visible"
    TARGET_NOT_FOUND = "target_not_found"
    UNREACHABLE = "unreachable"


_SUCCESS_REASONS = {Reason.TARGET_VISIBLE_PATH_IDEAL, Reason.PASSAGE_FOUND}


@dataclass(frozen=True)
class ExplorationReport:
    waypoint: Point2
    outcome: Outcome
    reason: Reason
    final_obs: Observation
    quadruped_path: tuple

    def __post_init__(self):
        object.__setattr__(self, "quadruped_path", tuple(self.quadruped_path))
        if (self.outcome is Outcome.SUCCESS) != (self.reason in _SUCCESS_REASONS):
            raise ValueError(f"outcome {self.outcome} inconsistent with reason {self.reason}")
        if not self.quadruped_path:
            raise ValueError("quadruped path must not be empty")


@dataclass(frozen=True)
class ExplorerTurn:
    kind: str          # observe | scan | move
    detail: str
    pose_before: Pose
    pose_after: Pose
    rotation: float
    displacement: float
    queries: tuple


class Explorer:
    """One scout instance; its pose persists across missions."""

    def __init__(self, scene: Scene, oracle: PerceptionOracle,
                 config: SimConfig = SimConfig(),
                 params: OracleParams = None):
        self.scene = scene
        self.oracle = oracle
        self.config = config
        self.params = params or OracleParams(waypoint_reach=config.d_max)
        self.pose = scene.quadruped_start
        self._scan_serial = 0

    # ------------------------------------------------------------------
    # operations
    # ------------------------------------------------------------------

    def select_mode(self, obs: Observation,
                    mode_override: Optional[str] = None) -> ExplorationMode:
        forced = mode_override or self.config.forced_mode()
        if forced:
            return ExplorationMode(forced)
        return (ExplorationMode.X if self.oracle.env_all_reachable(obs).answer
                else ExplorationMode.Y)

    def scan_for(self, target: str, pose: Optional[Pose] = None,
                 arc: str = "full", markers: Optional[dict] = None):
        """Rotational scan for a label; returns the heading offset (relative
        to the starting heading) at which it was first seen, or None.

        arc "full" sweeps a whole turn counterclockwise; "half" sweeps
        -r_scan..+r_scan after aligning to the arc start.
        """
        pose = pose or self.pose
        found, _, _, _ = self._scan(
            pose, arc, lambda obs: self.oracle.inspect_for(target, obs).answer,
            markers, label=target)
        return found

    def move_to(self, waypoint: Point2, pose: Optional[Pose] = None):
        """Greedy per-turn motion toward the waypoint; returns the pose list
        (start plus one pose per turn)."""
        pose = pose or self.pose
        turns, final_pose, reached = self._move(pose, waypoint)
        del reached
        return [pose] + [t.pose_after for t in turns]

    def run_mission(self, waypoint: Point2, target_label: str,
                    start: Optional[Pose] = None,
                    mode_override: Optional[str] = None) -> ExplorationReport:
        report, _ = self.run_mission_detailed(waypoint, target_label,
                                              start, mode_override)
        return report

    def run_mission_detailed(self, waypoint: Point2, target_label: str,
                             start: Optional[Pose] = None,
                             mode_override: Optional[str] = None):
        """Full mission; returns (report, per-turn records)."""
        if start is not None:
            self.pose = start
        start_pose = self.pose
        markers = {WAYPOINT_LABEL: waypoint}
        turns = []
        path = [start_pose.position]

        # Mode selection from an omnidirectional assessment of the start.
        obs0 = self._observe(self.pose, FULL_CIRCLE, markers)
        mode = self.select_mode(obs0, mode_override)
        turns.append(ExplorerTurn("observe", f"mode={mode.value}", self.pose,
                                  self.pose, 0.0, 0.0, self._drain()))

        def finish(outcome, reason, final_obs, go_home):
            if go_home and self.pose.position.dist(start_pose.position) > self.config.d_achieve:
                home_turns, home_pose, _ = self._move(self.pose, start_pose.position,
                                                      detail="return")
                turns.extend(home_turns)
                path.extend(t.pose_after.position for t in home_turns
                            if t.displacement > 0)
                self.pose = home_pose
            report = ExplorationReport(waypoint, outcome, reason, final_obs,
                                       tuple(path))
            return report, turns

        # Waypoint visibility: a full rotation; invisible means infeasible.
        found, scan_turns, last_obs, pose = self._scan(
            self.pose, "full",
            lambda obs: self.oracle.inspect_for(WAYPOINT_LABEL, obs).answer,
            markers, label=WAYPOINT_LABEL)
        turns.extend(scan_turns)
        self.pose = pose
        if found is None:
            return finish(Outcome.FAILURE, Reason.WAYPOINT_NOT_VISIBLE,
                          last_obs, go_home=False)

        # Walk to the waypoint.
        move_turns, pose, reached = self._move(self.pose, waypoint)
        turns.extend(move_turns)
        path.extend(t.pose_after.position for t in move_turns if t.displacement > 0)
        self.pose = pose
        if not reached:
            return finish(Outcome.FAILURE, Reason.UNREACHABLE, last_obs,
                          go_home=True)

        # Target detection: the target must be in sight with a feasible path.
        def target_ideal(obs):
            if not self.oracle.inspect_for(target_label, obs).answer:
                return False
            return self.oracle.path_ideal(target_label, obs).answer

        found, scan_turns, last_obs, pose = self._scan(
            self.pose, "full", target_ideal, markers, label=target_label)
        turns.extend(scan_turns)
        self.pose = pose
        if found is not None:
            return finish(Outcome.SUCCESS, Reason.TARGET_VISIBLE_PATH_IDEAL,
                          last_obs, go_home=False)

        if mode is ExplorationMode.Y:
            # Bounded forward probe for a traversable corridor.
            found, scan_turns, probe_obs, pose = self._scan(
                self.pose, "half",
                lambda obs: self.oracle.inspect_for(PASSAGE_LABEL, obs).answer,
                markers, label=PASSAGE_LABEL)
            turns.extend(scan_turns)
            self.pose = pose
            if found is not None:
                return finish(Outcome.SUCCESS, Reason.PASSAGE_FOUND,
                              probe_obs, go_home=False)
            last_obs = probe_obs

        return finish(Outcome.FAILURE, Reason.TARGET_NOT_FOUND, last_obs,
                      go_home=True)

    # ------------------------------------------------------------------
    # internals
    # ------------------------------------------------------------------

    def _observe(self, pose: Pose, fov_half: float, markers=None) -> Observation:
        return observe(pose, QUADRUPED, self.scene, fov_half,
                       self.params.max_range, markers)

    def _drain(self):
        drain = getattr(self.oracle, "drain", None)
        return tuple(drain()) if drain else ()

    def _scan(self, pose: Pose, arc: str, predicate: Callable, markers,
              label: str):
        """Stepwise rotational scan, observing every STEP_ANGLE heading.

        Scan snapshots use a half-angle of STEP_ANGLE/2 so the sweep tiles
        the arc without overlap: the returned heading is then within half a
        step of the found entity's true bearing, and a half-arc sweep cannot
        see past its bounds. Sub-steps are batched so a single turn never
        rotates beyond r_max. Returns (offset or None, turns, last
        observation, final pose).
        """
        self._scan_serial += 1
        sid = self._scan_serial
        r_max = self.config.r_max
        per_turn = max(1, int(r_max / STEP_ANGLE))

        if arc == "full":
            count = int(math.ceil(2 * math.pi / STEP_ANGLE))
            offsets = [i * STEP_ANGLE for i in range(count)]
        elif arc == "half":
            r_scan = self.config.r_scan
            count = int(round(2 * r_scan / STEP_ANGLE)) + 1
            offsets = [-r_scan + i * STEP_ANGLE for i in range(count)]
        else:
            raise ValueError(f"unknown scan arc {arc!r}")

        turns = []
        cur = pose
        last_obs = None
        tag = f"scan#{sid}:{label}:{arc}"

        # Align to the first offset before sweeping (relevant for "half").
        align = normalize_angle(pose.heading + offsets[0] - cur.heading)
        while abs(align) > 1e-12:
            step = max(-r_max, min(r_max, align))
            nxt = Pose(cur.position, cur.heading + step)
            turns.append(ExplorerTurn("scan", f"{tag}:align", cur, nxt,
                                      step, 0.0, self._drain()))
            align -= step
            cur = nxt

        i = 0
        while i < len(offsets):
            batch_before = cur
            rotation = 0.0
            queries = ()
            found_at = None
            batch_end = min(i + per_turn, len(offsets))
            while i < batch_end:
                heading = pose.heading + offsets[i]
                if i > 0:
                    delta = offsets[i] - offsets[i - 1]
                    rotation += delta
                    cur = Pose(cur.position, heading)
                obs = self._observe(cur, STEP_ANGLE / 2, markers)
                last_obs = obs
                hit = predicate(obs)
                queries = queries + self._drain()
                if hit:
                    found_at = offsets[i]
                    break
                i += 1
            done = found_at is not None or i >= len(offsets)
            suffix = (f":found@{i}" if found_at is not None
                      else (":completed" if done else ""))
            turns.append(ExplorerTurn("scan", tag + suffix, batch_before, cur,
                                      rotation, 0.0, queries))
            if found_at is not None:
                return found_at, turns, last_obs, cur
        return None, turns, last_obs, cur

    def _move(self, pose: Pose, goal: Point2, detail: str = "leg"):
        """Per-turn greedy motion with single-level detours around blockers.

        Stops within d_achieve of the goal, or gives up after three
        consecutive stalled turns (or a hard turn cap).
        """
        cfg = self.config
        turns = []
        cur = pose
        stall = 0
        cap = int(math.ceil(pose.position.dist(goal) / cfg.d_max)) * 6 + 18

        while True:
            dist = cur.position.dist(goal)
            if dist <= cfg.d_achieve:
                return turns, cur, True
            if stall >= 3 or len(turns) >= cap:
                return turns, cur, False

            step_len, direction = self._pick_step(cur, goal, dist)
            if direction is None:
                turns.append(ExplorerTurn("move", f"{detail}:blocked", cur, cur,
                                          0.0, 0.0, self._drain()))
                stall += 1
                continue

            rot_needed = normalize_angle(direction - cur.heading)
            rot = max(-cfg.r_max, min(cfg.r_max, rot_needed))
            heading = normalize_angle(cur.heading + rot)
            if abs(rot_needed) > cfg.r_max + 1e-12:
                # Pure alignment; counts against the cap but is not a stall.
                nxt = Pose(cur.position, heading)
                turns.append(ExplorerTurn("move", f"{detail}:align", cur, nxt,
                                          rot, 0.0, self._drain()))
                cur = nxt
                continue

            nxt = Pose(cur.position.offset(heading, step_len), heading)
            turns.append(ExplorerTurn("move", detail, cur, nxt, rot, step_len,
                                      self._drain()))
            cur = nxt
            stall = 0

    def _pick_step(self, cur: Pose, goal: Point2, dist: float):
        """Longest clear step in the direction closest in angle to the goal."""
        cfg = self.config
        desired = cur.position.bearing_to(goal)
        deflections = [0.0]
        for k in range(1, 8):
            deflections.extend([k * STEP_ANGLE, -k * STEP_ANGLE])
        # Split the last two steps evenly rather than leave an orphan shorter
        # than d_achieve: the scout should scan from the waypoint itself, not
        # from the rim of its arrival radius.
        direct = min(cfg.d_max, dist)
        if cfg.d_max < dist <= cfg.d_max + cfg.d_achieve:
            direct = dist / 2.0
        for delta in deflections:
            direction = desired + delta
            base = direct if delta == 0.0 else min(cfg.d_max, max(dist * 0.6, 0.5))
            for frac in (1.0, 0.5, 0.25):
                step_len = base * frac
                if step_len < 0.1:
                    continue
                end = cur.position.offset(direction, step_len)
                if not self.scene.bounds.contains(end, margin=0.05):
                    continue
                if segment_clear(cur.position, end, self.scene, QUADRUPED):
                    return step_len, direction
        return 0.0, None
