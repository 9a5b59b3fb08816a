"""Turn-based episode executor and the trace file format.

One record per turn: who acted, how far they moved and turned, which oracle
queries were issued and which protocol messages were exchanged. The record
stream is the only input the metrics suite consumes, and it is written with
a stable field order so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .config import G1_GO2, G1_ONLY, SimConfig
from .coordinator import Coordinator, DELEGATE, FAIL, Phase
from .explorer import ExplorationReport, Explorer, Outcome, Reason
from .geometry import HUMANOID, QUADRUPED, Point2, Pose, Scene
from .perception import (
    FULL_CIRCLE,
    Candidate,
    GeometricOracle,
    OracleError,
    OracleParams,
    PerceptionOracle,
    QueryRecord,
    RecordingOracle,
    ReplayOracle,
    observe,
)

TRACE_FORMAT = "tzpp-trace/1"


# ---------------------------------------------------------------------------
# protocol messages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssignWaypoint:
    waypoint: Point2
    target_label: str


@dataclass(frozen=True)
class ExplorationReportMsg:
    waypoint: Point2
    outcome: str
    reason: str


@dataclass(frozen=True)
class MoveExecuted:
    before: Pose
    after: Pose


@dataclass(frozen=True)
class EpisodeEnd:
    result: str


@dataclass(frozen=True)
class Message:
    sender: str
    turn: int
    body: Union[AssignWaypoint, ExplorationReportMsg, MoveExecuted, EpisodeEnd]


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    time: float
    agent: str
    kind: str        # evaluate | move | scan | observe | report
    detail: str
    pose_before: Pose
    pose_after: Pose
    rotation: float
    displacement: float
    queries: tuple
    messages: tuple


@dataclass(frozen=True)
class TerminalResult:
    status: str      # success | failure | aborted
    detail: str
    time: float
    turns: int

    @property
    def success(self) -> bool:
        return self.status == "success"


@dataclass
class EpisodeTrace:
    scene_name: str
    config: SimConfig
    records: List[TurnRecord]
    result: TerminalResult

    def humanoid_positions(self) -> List[Point2]:
        """Start position plus the humanoid pose after every turn it acted."""
        positions = []
        for rec in self.records:
            if rec.agent == HUMANOID:
                if not positions:
                    positions.append(rec.pose_before.position)
                positions.append(rec.pose_after.position)
        return positions

    def query_records(self) -> List[QueryRecord]:
        return [q for rec in self.records for q in rec.queries]


def advance_clock(prev: float, displacement: float, rotation: float,
                  queries: int, agent: str, config: SimConfig) -> float:
    """Simulated time cost of one turn: travel, body rotation, oracle calls."""
    if min(prev, displacement, rotation, queries) < 0:
        raise ValueError("clock inputs must be non-negative")
    return (prev
            + displacement / config.speed_of(agent)
            + rotation / config.angular_speed
            + queries * config.oracle_latency)


class _BudgetExhausted(Exception):
    pass


def run_episode(scene: Scene, config: SimConfig = SimConfig(),
                oracle: Optional[PerceptionOracle] = None) -> EpisodeTrace:
    """Drive coordinator (and scout, if paired) to a terminal state.

    Oracle failures abort the episode with a distinguished terminal record;
    the turn budget bounds every run, adversarial oracles included.
    """
    params = OracleParams(waypoint_reach=config.d_max)
    recorder = RecordingOracle(oracle or GeometricOracle(scene, params))
    coordinator = Coordinator(scene, recorder, config, params)
    explorer = (Explorer(scene, recorder, config, params)
                if config.agents == G1_GO2 else None)

    records: List[TurnRecord] = []
    clock = 0.0
    hpose = scene.humanoid_start

    def emit(agent, kind, detail, before, after, rotation, displacement,
             queries, messages=()):
        nonlocal clock
        if len(records) >= config.turn_budget:
            raise _BudgetExhausted
        clock = advance_clock(clock, displacement, abs(rotation),
                              len(queries), agent, config)
        records.append(TurnRecord(len(records), clock, agent, kind, detail,
                                  before, after, rotation, displacement,
                                  tuple(queries), tuple(messages)))

    def terminal(status, detail):
        return EpisodeTrace(scene.name, config, records,
                            TerminalResult(status, detail, clock, len(records)))

    try:
        while True:
            phase = coordinator.state.phase
            if phase is Phase.DONE:
                return terminal("success", "target achieved")
            if phase is Phase.FAILED:
                return terminal("failure",
                                coordinator.state.fail_reason or "coordinator failed")

            if phase is Phase.EVALUATING:
                obs = observe(hpose, HUMANOID, scene, FULL_CIRCLE, params.max_range)
                decision = coordinator.evaluate_path(obs)
                queries = recorder.drain()
                messages = []
                if decision.kind == DELEGATE and config.agents == G1_GO2:
                    messages.append(Message(HUMANOID, len(records),
                                            AssignWaypoint(decision.waypoint,
                                                           coordinator.target_label)))
                emit(HUMANOID, "evaluate", f"decision={decision.kind}",
                     hpose, hpose, 0.0, 0.0, queries, tuple(messages))
                if decision.kind != DELEGATE:
                    continue
                if config.agents == G1_ONLY:
                    # No scout available: the delegation immediately fails and
                    # the coordinator falls back through its own machine.
                    report = ExplorationReport(decision.waypoint, Outcome.FAILURE,
                                               Reason.UNREACHABLE, obs,
                                               (hpose.position,))
                    coordinator.integrate_feedback(report)
                    emit(HUMANOID, "report", "delegation unavailable (g1-only)",
                         hpose, hpose, 0.0, 0.0, recorder.drain())
                    continue
                report, mission_turns = explorer.run_mission_detailed(
                    decision.waypoint, coordinator.target_label)
                for t in mission_turns:
                    emit(QUADRUPED, t.kind, t.detail, t.pose_before, t.pose_after,
                         t.rotation, t.displacement, t.queries)
                coordinator.integrate_feedback(report)
                msg = Message(QUADRUPED, len(records),
                              ExplorationReportMsg(report.waypoint,
                                                   report.outcome.value,
                                                   report.reason.value))
                emit(QUADRUPED, "report",
                     f"{report.outcome.value}:{report.reason.value}",
                     explorer.pose, explorer.pose, 0.0, 0.0,
                     recorder.drain(), (msg,))

            elif phase is Phase.EXECUTING:
                before = hpose
                command, hpose = coordinator.step_execute(before)
                queries = recorder.drain()
                msg = Message(HUMANOID, len(records), MoveExecuted(before, hpose))
                emit(HUMANOID, "move", "", before, hpose, command.rotation,
                     command.displacement, queries, (msg,))

            elif phase is Phase.AWAITING_EXPLORATION:  # pragma: no cover
                raise RuntimeError("engine left the coordinator awaiting exploration")

    except _BudgetExhausted:
        return terminal("failure", "turn budget exhausted")
    except OracleError as exc:
        return terminal("aborted", str(exc))


# ---------------------------------------------------------------------------
# trace file format: one JSON document per line, stable key order
# ---------------------------------------------------------------------------

def _pose_json(pose: Pose):
    return [pose.position.x, pose.position.y, pose.heading]


def _pose_from(data) -> Pose:
    return Pose(Point2(data[0], data[1]), data[2])


def _query_json(q: QueryRecord) -> dict:
    if q.candidates is not None:
        return {"kind": q.kind, "target": q.target,
                "candidates": [[c.point.x, c.point.y, c.score]
                               for c in q.candidates]}
    return {"kind": q.kind, "target": q.target, "answer": q.answer,
            "confidence": q.confidence}


def _query_from(data: dict) -> QueryRecord:
    if "candidates" in data:
        return QueryRecord(data["kind"], data["target"],
                           candidates=tuple(Candidate(Point2(x, y), s)
                                            for x, y, s in data["candidates"]))
    return QueryRecord(data["kind"], data["target"], data["answer"],
                       data["confidence"])


def _message_json(m: Message) -> dict:
    body = m.body
    if isinstance(body, AssignWaypoint):
        payload = {"type": "assign_waypoint", "x": body.waypoint.x,
                   "y": body.waypoint.y, "target": body.target_label}
    elif isinstance(body, ExplorationReportMsg):
        payload = {"type": "exploration_report", "x": body.waypoint.x,
                   "y": body.waypoint.y, "outcome": body.outcome,
                   "reason": body.reason}
    elif isinstance(body, MoveExecuted):
        payload = {"type": "move_executed", "before": _pose_json(body.before),
                   "after": _pose_json(body.after)}
    else:
        payload = {"type": "episode_end", "result": body.result}
    return {"sender": m.sender, "turn": m.turn, "body": payload}


def _message_from(data: dict) -> Message:
    body = data["body"]
    kind = body["type"]
    if kind == "assign_waypoint":
        parsed = AssignWaypoint(Point2(body["x"], body["y"]), body["target"])
    elif kind == "exploration_report":
        parsed = ExplorationReportMsg(Point2(body["x"], body["y"]),
                                      body["outcome"], body["reason"])
    elif kind == "move_executed":
        parsed = MoveExecuted(_pose_from(body["before"]), _pose_from(body["after"]))
    elif kind == "episode_end":
        parsed = EpisodeEnd(body["result"])
    else:
        raise ValueError(f"unknown message type {kind!r}")
    return Message(data["sender"], data["turn"], parsed)


_CONFIG_FIELDS = ("d_max", "r_max", "d_achieve", "r_scan", "humanoid_speed",
                  "quadruped_speed", "angular_speed", "oracle_latency",
                  "turn_budget", "seed", "mode_override", "agents",
                  "disable_mode_x", "disable_mode_y")


def trace_to_text(trace: EpisodeTrace) -> str:
    lines = []
    header = {"format": TRACE_FORMAT, "scene": trace.scene_name,
              "config": {name: getattr(trace.config, name)
                         for name in _CONFIG_FIELDS}}
    lines.append(json.dumps(header, separators=(",", ":")))
    for rec in trace.records:
        lines.append(json.dumps({
            "turn": rec.turn,
            "time": rec.time,
            "agent": rec.agent,
            "kind": rec.kind,
            "detail": rec.detail,
            "before": _pose_json(rec.pose_before),
            "after": _pose_json(rec.pose_after),
            "rotation": rec.rotation,
            "displacement": rec.displacement,
            "queries": [_query_json(q) for q in rec.queries],
            "messages": [_message_json(m) for m in rec.messages],
        }, separators=(",", ":")))
    lines.append(json.dumps({"result": trace.result.status,
                             "detail": trace.result.detail,
                             "time": trace.result.time,
                             "turns": trace.result.turns},
                            separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_trace(trace: EpisodeTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trace_to_text(trace))


def trace_from_text(text: str) -> EpisodeTrace:
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        raise ValueError("trace file too short: missing header or terminal line")
    header = json.loads(lines[0])
    if header.get("format") != TRACE_FORMAT:
        raise ValueError(f"unsupported trace format {header.get('format')!r}")
    config = SimConfig(**header["config"])
    records = []
    for i, line in enumerate(lines[1:-1], start=1):
        data = json.loads(line)
        try:
            records.append(TurnRecord(
                data["turn"], data["time"], data["agent"], data["kind"],
                data["detail"], _pose_from(data["before"]),
                _pose_from(data["after"]), data["rotation"],
                data["displacement"],
                tuple(_query_from(q) for q in data["queries"]),
                tuple(_message_from(m) for m in data["messages"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed trace record at line {i + 1}: {exc}") from exc
    tail = json.loads(lines[-1])
    if "result" not in tail:
        raise ValueError("trace missing terminal line")
    result = TerminalResult(tail["result"], tail["detail"], tail["time"],
                            tail["turns"])
    return EpisodeTrace(header["scene"], config, records, result)


def read_trace(path) -> EpisodeTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return trace_from_text(fh.read())


def replay_oracle(trace: EpisodeTrace) -> ReplayOracle:
    """Oracle that replays the trace's recorded verdicts in order."""
    return ReplayOracle(trace.query_records())
