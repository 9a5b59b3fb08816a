import math

import pytest

from tzpp.config import SimConfig
from tzpp.coordinator import (
    ALLOWED_TRANSITIONS,
    DELEGATE,
    FAIL,
    PROCEED,
    Coordinator,
    Phase,
    ProtocolViolation,
    check_done,
)
from tzpp.explorer import ExplorationReport, Outcome, Reason
from tzpp.geometry import HUMANOID, Landmark, Point2, Pose
from tzpp.perception import FULL_CIRCLE, GeometricOracle, observe

from conftest import rect_obstacle, simple_scene


def open_scene(target_x=15.0, start=Point2(2.0, 10.0), heading=0.0):
    return simple_scene(
        landmarks=(Landmark("g", "goal", Point2(target_x, 10.0)),),
        humanoid_start=Pose(start, heading),
        reference_path=(start, Point2(target_x, 10.0)),
    )


def walled_scene():
    """Target hidden behind a wall with gaps above and below."""
    wall = rect_obstacle("wall", 7.0, 6.0, 8.0, 14.0)
    return simple_scene(
        obstacles=(wall,),
        landmarks=(Landmark("g", "goal", Point2(12.0, 10.0)),),
        humanoid_start=Pose(Point2(5.0, 10.0), 0.0),
        reference_path=(Point2(5.0, 10.0), Point2(7.0, 5.0),
                        Point2(9.0, 5.0), Point2(12.0, 10.0)),
    )


def make_coordinator(scene, config=None):
    config = config or SimConfig()
    return Coordinator(scene, GeometricOracle(scene), config)


def panorama(coord, pose):
    return observe(pose, HUMANOID, coord.scene, FULL_CIRCLE,
                   coord.params.max_range)


def fake_report(waypoint, success, obs, reason=None):
    if success:
        reason = reason or Reason.TARGET_VISIBLE_PATH_IDEAL
        outcome = Outcome.SUCCESS
    else:
        reason = reason or Reason.TARGET_NOT_FOUND
        outcome = Outcome.FAILURE
    return ExplorationReport(waypoint, outcome, reason, obs, (waypoint,))


# ---------------------------------------------------------------------------
# evaluate_path
# ---------------------------------------------------------------------------

def test_evaluate_visible_clear_target_proceeds():
    coord = make_coordinator(open_scene(target_x=6.0))
    decision = coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    assert decision.kind == PROCEED
    assert coord.state.phase is Phase.EXECUTING
    assert coord.state.current_plan == [Point2(6.0, 10.0)]


def test_evaluate_occluded_target_delegates():
    coord = make_coordinator(walled_scene())
    decision = coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    assert decision.kind == DELEGATE
    assert decision.waypoint is not None
    assert coord.state.phase is Phase.AWAITING_EXPLORATION
    assert coord.state.pending_waypoint == decision.waypoint


def test_evaluate_exhausted_candidates_fails():
    coord = make_coordinator(walled_scene())
    pose = coord.scene.humanoid_start
    obs = panorama(coord, pose)
    all_candidates = coord.oracle.suggest_waypoints(obs, "goal",
                                                    coord.params.max_candidates)
    coord.state.context.rejected_waypoints = [c.point for c in all_candidates]
    decision = coord.evaluate_path(obs)
    assert decision.kind == FAIL
    assert coord.state.phase is Phase.FAILED


def test_evaluate_respects_delegation_budget():
    coord = make_coordinator(walled_scene())
    coord.state.delegate_rounds = coord.max_delegations
    decision = coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    assert decision.kind == FAIL
    assert coord.state.fail_reason == "delegation budget exhausted"


def test_evaluate_wrong_phase_rejected():
    coord = make_coordinator(open_scene(target_x=6.0))
    coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    with pytest.raises(ProtocolViolation):
        coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))


# ---------------------------------------------------------------------------
# integrate_feedback
# ---------------------------------------------------------------------------

def test_feedback_success_extends_plan():
    coord = make_coordinator(walled_scene())
    obs = panorama(coord, coord.scene.humanoid_start)
    decision = coord.evaluate_path(obs)
    coord.integrate_feedback(fake_report(decision.waypoint, True, obs))
    assert coord.state.phase is Phase.EXECUTING
    assert coord.state.current_plan == [decision.waypoint]
    assert decision.waypoint in coord.state.context.informative_waypoints


def test_feedback_failure_rejects_waypoint():
    coord = make_coordinator(walled_scene())
    obs = panorama(coord, coord.scene.humanoid_start)
    decision = coord.evaluate_path(obs)
    coord.integrate_feedback(fake_report(decision.waypoint, False, obs))
    assert coord.state.phase is Phase.EVALUATING
    assert decision.waypoint in coord.state.context.rejected_waypoints
    assert coord.state.current_plan == []


def test_two_failures_then_success():
    coord = make_coordinator(walled_scene())
    pose = coord.scene.humanoid_start
    obs = panorama(coord, pose)
    seen = []
    for i in range(3):
        decision = coord.evaluate_path(obs)
        assert decision.kind == DELEGATE
        seen.append(decision.waypoint)
        coord.integrate_feedback(fake_report(decision.waypoint, i == 2, obs))
    assert len(set((w.x, w.y) for w in seen)) == 3
    assert coord.state.current_plan == [seen[2]]
    assert coord.state.context.rejected_waypoints == seen[:2]


def test_feedback_mismatched_waypoint_rejected():
    coord = make_coordinator(walled_scene())
    obs = panorama(coord, coord.scene.humanoid_start)
    coord.evaluate_path(obs)
    with pytest.raises(ProtocolViolation, match="unassigned waypoint"):
        coord.integrate_feedback(fake_report(Point2(0.5, 0.5), True, obs))


def test_feedback_outside_exploration_rejected():
    coord = make_coordinator(open_scene())
    obs = panorama(coord, coord.scene.humanoid_start)
    with pytest.raises(ProtocolViolation):
        coord.integrate_feedback(fake_report(Point2(1, 1), True, obs))


# ---------------------------------------------------------------------------
# step_execute
# ---------------------------------------------------------------------------

def test_step_aligned_short_hop_reaches_done():
    coord = make_coordinator(open_scene(target_x=3.0))
    coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    cmd, pose = coord.step_execute(coord.scene.humanoid_start)
    assert cmd.displacement == pytest.approx(1.0)
    assert cmd.rotation == pytest.approx(0.0)
    assert pose.position == Point2(3.0, 10.0)
    assert coord.state.phase is Phase.DONE
    assert coord.state.d_dt == pytest.approx(0.0)


def test_step_clamps_displacement_to_d_max():
    coord = make_coordinator(open_scene(target_x=7.0))
    coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    cmd, pose = coord.step_execute(coord.scene.humanoid_start)
    assert cmd.displacement == pytest.approx(2.0)
    assert pose.position.x == pytest.approx(4.0)
    assert coord.state.phase is Phase.EXECUTING


def test_step_clamps_rotation_to_r_max():
    # Goal requires a 2.0 rad turn: half this turn, the remainder next turn.
    start = Pose(Point2(2.0, 10.0), 0.0)
    scene = simple_scene(
        landmarks=(Landmark("g", "goal",
                            Point2(2.0 + 4 * math.cos(2.0), 10.0 + 4 * math.sin(2.0))),),
        humanoid_start=start,
        reference_path=(start.position,
                        Point2(2.0 + 4 * math.cos(2.0), 10.0 + 4 * math.sin(2.0))),
    )
    coord = make_coordinator(scene)
    coord.evaluate_path(panorama(coord, start))
    cmd, pose = coord.step_execute(start)
    assert cmd.rotation == pytest.approx(math.pi / 2)
    assert cmd.displacement == 0.0
    assert pose.heading == pytest.approx(math.pi / 2)
    cmd2, pose2 = coord.step_execute(pose)
    assert cmd2.rotation == pytest.approx(2.0 - math.pi / 2)
    assert cmd2.displacement > 0.0


def test_step_blocked_move_replans_and_drops_goal():
    # A wall right in front of the humanoid: the commanded segment clips to
    # nearly nothing, the plan point is discarded, phase returns to
    # evaluating.
    wall = rect_obstacle("wall", 2.6, 8.0, 3.4, 12.0)
    start = Point2(2.56, 10.0)  # 4 cm short of the wall face
    scene = simple_scene(
        obstacles=(wall,),
        landmarks=(Landmark("g", "goal", Point2(12.0, 10.0)),),
        humanoid_start=Pose(start, 0.0),
        reference_path=(start, Point2(3.0, 6.0), Point2(12.0, 10.0)),
    )
    coord = make_coordinator(scene)
    goal = Point2(6.0, 10.0)  # behind the wall
    coord.state.phase = Phase.EXECUTING
    coord.state.current_plan = [goal]
    cmd, pose = coord.step_execute(Pose(start, 0.0))
    assert cmd.displacement == 0.0
    assert coord.state.phase is Phase.EVALUATING
    assert goal in coord.state.context.rejected_waypoints
    assert pose.position == start


def test_step_pops_waypoint_then_replans():
    coord = make_coordinator(open_scene(target_x=15.0))
    waypoint = Point2(4.0, 10.0)
    coord.state.phase = Phase.EXECUTING
    coord.state.current_plan = [waypoint]
    cmd, pose = coord.step_execute(coord.scene.humanoid_start)
    assert cmd.displacement == pytest.approx(2.0)
    assert pose.position == Point2(4.0, 10.0)
    # Waypoint reached and popped; no target point in the plan yet, so the
    # coordinator goes back to evaluating.
    assert coord.state.current_plan == []
    assert coord.state.phase is Phase.EVALUATING


def test_step_refused_while_awaiting_exploration():
    coord = make_coordinator(walled_scene())
    coord.evaluate_path(panorama(coord, coord.scene.humanoid_start))
    assert coord.state.phase is Phase.AWAITING_EXPLORATION
    with pytest.raises(ProtocolViolation):
        coord.step_execute(coord.scene.humanoid_start)


def test_step_commands_respect_limits():
    coord = make_coordinator(open_scene(target_x=9.0))
    pose = Pose(Point2(2.0, 10.0), -3.0)
    coord.state.phase = Phase.EXECUTING
    coord.state.current_plan = [Point2(9.0, 10.0)]
    for _ in range(20):
        if coord.state.phase is not Phase.EXECUTING:
            break
        cmd, pose = coord.step_execute(pose)
        assert abs(cmd.rotation) <= math.pi / 2 + 1e-9
        assert cmd.displacement <= 2.0 + 1e-9
    assert coord.state.phase is Phase.DONE


# ---------------------------------------------------------------------------
# check_done and transitions
# ---------------------------------------------------------------------------

def test_check_done_thresholds():
    scene = open_scene(target_x=10.0)
    assert check_done(Pose(Point2(9.51, 10.0), 0.0), scene)
    assert not check_done(Pose(Point2(9.49, 10.0), 0.0), scene)
    assert check_done(Pose(Point2(9.5, 10.0), 0.0), scene)  # inclusive


def test_transition_audit_stays_in_graph():
    coord = make_coordinator(walled_scene())
    obs = panorama(coord, coord.scene.humanoid_start)
    decision = coord.evaluate_path(obs)
    coord.integrate_feedback(fake_report(decision.waypoint, False, obs))
    decision = coord.evaluate_path(obs)
    coord.integrate_feedback(fake_report(decision.waypoint, True, obs))
    for pair in coord.state.transitions:
        assert pair in ALLOWED_TRANSITIONS


def test_rejected_and_informative_disjoint():
    coord = make_coordinator(walled_scene())
    obs = panorama(coord, coord.scene.humanoid_start)
    d1 = coord.evaluate_path(obs)
    coord.integrate_feedback(fake_report(d1.waypoint, False, obs))
    d2 = coord.evaluate_path(obs)
    assert d2.waypoint != d1.waypoint
    coord.integrate_feedback(fake_report(d2.waypoint, True, obs))
    rejected = {(p.x, p.y) for p in coord.state.context.rejected_waypoints}
    informative = {(p.x, p.y) for p in coord.state.context.informative_waypoints}
    assert not rejected & informative
