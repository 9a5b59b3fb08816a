"""The coordinating agent's iterative state machine.

Cycle: evaluate whether the target is directly attainable; if not, delegate
a scouting waypoint and wait; fold the scout's report into the plan (or
discard the waypoint); execute motion toward the plan, re-checking
feasibility after every move. Phase transitions are restricted to a fixed
graph and every transition is journaled for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from .config import SimConfig
from .explorer import ExplorationReport, Outcome
from .geometry import (
    HUMANOID,
    Point2,
    Pose,
    Scene,
    clip_displacement,
    normalize_angle,
)
from .perception import (
    FULL_CIRCLE,
    OracleParams,
    PerceptionOracle,
    observe,
)

PROCEED = "proceed"
DELEGATE = "delegate"
FAIL = "fail"

MAX_DELEGATIONS = 8
_MATCH_TOL = 1e-9
_MIN_USEFUL_STEP = 0.05


class Phase(Enum):
    EVALUATING = "evaluating"
    AWAITING_EXPLORATION = "awaiting_exploration"
    EXECUTING = "executing"
    DONE = "done"
    FAILED = "failed"


ALLOWED_TRANSITIONS = {
    (Phase.EVALUATING, Phase.EXECUTING),
    (Phase.EVALUATING, Phase.AWAITING_EXPLORATION),
    (Phase.EVALUATING, Phase.FAILED),
    (Phase.AWAITING_EXPLORATION, Phase.EXECUTING),
    (Phase.AWAITING_EXPLORATION, Phase.EVALUATING),
    (Phase.EXECUTING, Phase.DONE),
    (Phase.EXECUTING, Phase.EVALUATING),
}


class ProtocolViolation(RuntimeError):
    """An agent drove the protocol outside its contract."""


@dataclass(frozen=True)
class MoveCommand:
    rotation: float
    displacement: float
    toward: Optional[Point2]


@dataclass(frozen=True)
class Decision:
    kind: str
    waypoint: Optional[Point2] = None


def _contains(point: Point2, points, tol: float = _MATCH_TOL) -> bool:
    return any(point.dist(p) <= tol for p in points)


@dataclass
class InteractionContext:
    """Running inter-agent context: what was asked, what came back."""
    history: List[Tuple[int, str, Optional[bool]]] = field(default_factory=list)
    rejected_waypoints: List[Point2] = field(default_factory=list)
    informative_waypoints: List[Point2] = field(default_factory=list)

    def log(self, summary: str, verdict: Optional[bool] = None):
        self.history.append((len(self.history), summary, verdict))

    def reject(self, waypoint: Point2):
        if _contains(waypoint, self.informative_waypoints):
            raise ProtocolViolation("waypoint cannot be both informative and rejected")
        if not _contains(waypoint, self.rejected_waypoints):
            self.rejected_waypoints.append(waypoint)

    def mark_informative(self, waypoint: Point2):
        if _contains(waypoint, self.rejected_waypoints):
            raise ProtocolViolation("waypoint cannot be both informative and rejected")
        self.informative_waypoints.append(waypoint)


@dataclass
class CoordinatorState:
    phase: Phase
    current_plan: List[Point2]
    pending_waypoint: Optional[Point2]
    d_dt: float
    context: InteractionContext
    delegate_rounds: int = 0
    fail_reason: Optional[str] = None
    transitions: List[Tuple[Phase, Phase]] = field(default_factory=list)


class Coordinator:
    def __init__(self, scene: Scene, oracle: PerceptionOracle,
                 config: SimConfig = SimConfig(),
                 params: OracleParams = None,
                 max_delegations: int = MAX_DELEGATIONS):
        self.scene = scene
        self.oracle = oracle
        self.config = config
        self.params = params or OracleParams(waypoint_reach=config.d_max)
        self.max_delegations = max_delegations
        self.target_pos = scene.target_position()
        self.target_label = scene.landmark_by_id(scene.target).name
        self.state = CoordinatorState(
            phase=Phase.EVALUATING,
            current_plan=[],
            pending_waypoint=None,
            d_dt=scene.humanoid_start.position.dist(self.target_pos),
            context=InteractionContext(),
        )

    # ------------------------------------------------------------------

    def _transition(self, new_phase: Phase):
        old = self.state.phase
        if (old, new_phase) not in ALLOWED_TRANSITIONS:
            raise ProtocolViolation(f"illegal phase transition {old} -> {new_phase}")
        self.state.transitions.append((old, new_phase))
        self.state.phase = new_phase

    def evaluate_path(self, obs) -> Decision:
        """Decide between direct execution and scouting delegation."""
        st = self.state
        if st.phase is not Phase.EVALUATING:
            raise ProtocolViolation(f"evaluate_path in phase {st.phase}")
        verdict = self.oracle.path_ideal(self.target_label, obs)
        st.context.log(f"evaluate at ({obs.pose.position.x:.2f}, "
                       f"{obs.pose.position.y:.2f})", verdict.answer)
        if verdict.answer:
            st.current_plan = [self.target_pos]
            self._transition(Phase.EXECUTING)
            return Decision(PROCEED)
        if st.delegate_rounds >= self.max_delegations:
            st.fail_reason = "delegation budget exhausted"
            self._transition(Phase.FAILED)
            return Decision(FAIL)
        candidates = self.oracle.suggest_waypoints(obs, self.target_label,
                                                   self.params.max_candidates)
        for cand in candidates:
            if not _contains(cand.point, st.context.rejected_waypoints):
                st.pending_waypoint = cand.point
                st.delegate_rounds += 1
                self._transition(Phase.AWAITING_EXPLORATION)
                return Decision(DELEGATE, cand.point)
        st.fail_reason = "no viable waypoint candidates remain"
        self._transition(Phase.FAILED)
        return Decision(FAIL)

    def integrate_feedback(self, report: ExplorationReport):
        """Fold a scout report into the plan; uninformative waypoints are
        discarded and never re-delegated."""
        st = self.state
        if st.phase is not Phase.AWAITING_EXPLORATION:
            raise ProtocolViolation(f"integrate_feedback in phase {st.phase}")
        if st.pending_waypoint is None or \
           report.waypoint.dist(st.pending_waypoint) > _MATCH_TOL:
            raise ProtocolViolation("exploration report for an unassigned waypoint")
        st.context.log(f"report {report.reason.value}",
                       report.outcome is Outcome.SUCCESS)
        if report.outcome is Outcome.SUCCESS:
            st.context.mark_informative(report.waypoint)
            st.current_plan.append(report.waypoint)
            st.pending_waypoint = None
            self._transition(Phase.EXECUTING)
        else:
            st.context.reject(report.waypoint)
            st.pending_waypoint = None
            self._transition(Phase.EVALUATING)

    def step_execute(self, pose: Pose):
        """One motion turn toward the head of the plan.

        Returns (command, resulting pose). Rotation saturates at r_max;
        displacement at d_max and at the last clear point of the commanded
        segment. A move clipped to nearly nothing triggers a replan and the
        blocked plan point is dropped for good.
        """
        st = self.state
        cfg = self.config
        if st.phase is not Phase.EXECUTING:
            raise ProtocolViolation(f"step_execute in phase {st.phase}")
        if not st.current_plan:
            raise ProtocolViolation("executing with an empty plan")
        goal = st.current_plan[0]
        desired = pose.position.bearing_to(goal)
        rot_needed = normalize_angle(desired - pose.heading)
        rotation = max(-cfg.r_max, min(cfg.r_max, rot_needed))
        heading = normalize_angle(pose.heading + rotation)

        displacement = 0.0
        if abs(rot_needed) <= cfg.r_max + 1e-12:
            dist = pose.position.dist(goal)
            want = min(cfg.d_max, dist)
            if cfg.d_max < dist <= cfg.d_max + cfg.d_achieve:
                # Split the approach so the next turn lands on the goal
                # instead of stopping an orphan step short of it.
                want = dist / 2.0
            got = clip_displacement(pose.position, heading, want,
                                    self.scene, HUMANOID)
            if want > _MIN_USEFUL_STEP and got < _MIN_USEFUL_STEP:
                # Blocked: drop the unreachable plan point and replan.
                new_pose = Pose(pose.position, heading)
                st.context.reject(goal)
                st.current_plan = []
                self._transition(Phase.EVALUATING)
                return MoveCommand(rotation, 0.0, goal), new_pose
            displacement = got

        position = pose.position.offset(heading, displacement) \
            if displacement > 0 else pose.position
        new_pose = Pose(position, heading)
        command = MoveCommand(rotation, displacement, goal)

        if st.current_plan and position.dist(st.current_plan[0]) <= cfg.d_achieve:
            st.current_plan.pop(0)
        st.d_dt = position.dist(self.target_pos)
        if st.d_dt <= cfg.d_achieve:
            self._transition(Phase.DONE)
        elif not st.current_plan:
            self._transition(Phase.EVALUATING)
        else:
            # Feasibility is re-checked after every move; losing sight of a
            # directly-planned target forces a replan.
            obs = observe(new_pose, HUMANOID, self.scene, FULL_CIRCLE,
                          self.params.max_range)
            verdict = self.oracle.path_ideal(self.target_label, obs)
            if (not verdict.answer and len(st.current_plan) == 1
                    and st.current_plan[0].dist(self.target_pos) <= _MATCH_TOL):
                st.current_plan = []
                self._transition(Phase.EVALUATING)
        return command, new_pose

    def check_done(self, pose: Pose) -> bool:
        return check_done(pose, self.scene, self.config.d_achieve)


def check_done(pose: Pose, scene: Scene, d_achieve: float = 0.5) -> bool:
    """Achievement test: within d_achieve of the target, inclusive."""
    return pose.position.dist(scene.target_position()) <= d_achieve
