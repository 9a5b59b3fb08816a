"""Operator service: one human-driven episode over a WebSocket.

The client sees only what the agents see: a session header with the action
limits and the target label, egocentric observation frames, command
acknowledgements, scout reports and the final result. Scene geometry never
crosses the wire. Commands beyond the per-turn limits are rejected with the
clamp value echoed back and leave the episode state untouched.

Frames are JSON text. Server to client: hello, observation, ack, rejected,
report, result, error. Client to server: {"cmd": rotate|move|scan|
assign_waypoint|end, ...}.
"""

from __future__ import annotations

import asyncio
import json
import math
from typing import List, Optional

from .config import SimConfig
from .coordinator import check_done
from .engine import (
    AssignWaypoint,
    EpisodeTrace,
    ExplorationReportMsg,
    Message,
    MoveExecuted,
    TerminalResult,
    TurnRecord,
    advance_clock,
    write_trace,
)
from .explorer import Explorer, Outcome
from .geometry import (
    HUMANOID,
    QUADRUPED,
    Point2,
    Pose,
    Scene,
    clip_displacement,
    normalize_angle,
)
from .perception import (
    FULL_CIRCLE,
    GeometricOracle,
    OracleParams,
    RecordingOracle,
    observe,
    serialize_observation,
)

ROLE_HUMANOID = "human-humanoid"
ROLE_BOTH = "human-both"


class HumanEpisode:
    """Episode state driven by operator commands instead of the autonomous
    coordinator. Produces the same trace records as autonomous runs."""

    def __init__(self, scene: Scene, config: SimConfig,
                 role: str = ROLE_HUMANOID):
        if role not in (ROLE_HUMANOID, ROLE_BOTH):
            raise ValueError(f"unknown role {role!r}")
        self.scene = scene
        self.config = config
        self.role = role
        self.params = OracleParams(waypoint_reach=config.d_max)
        self.oracle = RecordingOracle(GeometricOracle(scene, self.params))
        self.explorer = Explorer(scene, self.oracle, config, self.params)
        self.target_label = scene.landmark_by_id(scene.target).name
        self.hpose = scene.humanoid_start
        self.clock = 0.0
        self.records: List[TurnRecord] = []
        self.result: Optional[TerminalResult] = None
        self.controlling = HUMANOID
        self.active_waypoint: Optional[Point2] = None

    # -- frames ---------------------------------------------------------

    def hello_frame(self) -> dict:
        return {
            "type": "hello",
            "role": self.role,
            "scene": self.scene.name,
            "target": self.target_label,
            "limits": {"d_max": self.config.d_max, "r_max": self.config.r_max,
                       "d_achieve": self.config.d_achieve},
            "turn": len(self.records),
        }

    def observation_frame(self, agent: str, pose: Pose,
                          fov_half: float = None) -> dict:
        fov = self.params.fov_half_angle if fov_half is None else fov_half
        obs = observe(pose, agent, self.scene, fov, self.params.max_range)
        return {
            "type": "observation",
            "agent": agent,
            "turn": len(self.records),
            "time": self.clock,
            "phase": self.phase(),
            "observation": serialize_observation(obs),
        }

    def result_frame(self) -> dict:
        return {"type": "result", "outcome": self.result.status,
                "detail": self.result.detail, "time": self.result.time,
                "turns": self.result.turns}

    def phase(self) -> str:
        if self.result is not None:
            return "done" if self.result.success else "failed"
        if self.controlling == QUADRUPED:
            return "scouting"
        if self.active_waypoint is not None:
            return "awaiting_exploration"
        return "operating"

    # -- bookkeeping ------------------------------------------------------

    @property
    def live(self) -> bool:
        return self.result is None

    def _emit(self, agent, kind, detail, before, after, rotation,
              displacement, messages=()):
        queries = tuple(self.oracle.drain())
        self.clock = advance_clock(self.clock, displacement, abs(rotation),
                                   len(queries), agent, self.config)
        self.records.append(TurnRecord(len(self.records), self.clock, agent,
                                       kind, detail, before, after, rotation,
                                       displacement, queries, tuple(messages)))
        if self.result is None and len(self.records) >= self.config.turn_budget:
            self._finish("failure", "turn budget exhausted")

    def _finish(self, status, detail):
        self.result = TerminalResult(status, detail, self.clock,
                                     len(self.records))

    def trace(self) -> EpisodeTrace:
        result = self.result or TerminalResult("aborted", "client disconnected",
                                               self.clock, len(self.records))
        return EpisodeTrace(self.scene.name, self.config, self.records, result)

    # -- commands ---------------------------------------------------------

    def handle(self, command: dict) -> List[dict]:
        """Apply one operator command; returns the frames to send back."""
        if not self.live:
            return [{"type": "error", "message": "episode already ended"}]
        kind = command.get("cmd")
        if kind == "rotate":
            return self._cmd_rotate(command)
        if kind == "move":
            return self._cmd_move(command)
        if kind == "scan":
            return self._cmd_scan()
        if kind == "assign_waypoint":
            return self._cmd_assign(command)
        if kind == "end":
            self._finish("failure", "ended by operator")
            return [self.result_frame()]
        return [{"type": "error", "message": f"unknown command {kind!r}"}]

    def _value(self, command) -> float:
        value = float(command.get("value", 0.0))
        if not math.isfinite(value):
            raise ValueError("value must be finite")
        return value

    def _pose(self) -> Pose:
        return self.hpose if self.controlling == HUMANOID else self.explorer.pose

    def _set_pose(self, pose: Pose):
        if self.controlling == HUMANOID:
            self.hpose = pose
        else:
            self.explorer.pose = pose

    def _cmd_rotate(self, command) -> List[dict]:
        try:
            value = self._value(command)
        except (TypeError, ValueError) as exc:
            return [{"type": "error", "message": str(exc)}]
        if abs(value) > self.config.r_max + 1e-9:
            return [{"type": "rejected", "command": "rotate",
                     "requested": value,
                     "clamped": math.copysign(self.config.r_max, value),
                     "message": "rotation exceeds r_max"}]
        pose = self._pose()
        after = Pose(pose.position, normalize_angle(pose.heading + value))
        self._set_pose(after)
        self._emit(self.controlling, "move", "operator:rotate", pose, after,
                   value, 0.0)
        return [{"type": "ack", "command": "rotate", "applied": value,
                 "turn": len(self.records)},
                self.observation_frame(self.controlling, after)]

    def _cmd_move(self, command) -> List[dict]:
        try:
            value = self._value(command)
        except (TypeError, ValueError) as exc:
            return [{"type": "error", "message": str(exc)}]
        if value < 0 or value > self.config.d_max + 1e-9:
            return [{"type": "rejected", "command": "move",
                     "requested": value,
                     "clamped": max(0.0, min(value, self.config.d_max)),
                     "message": "displacement exceeds d_max"}]
        pose = self._pose()
        agent = self.controlling
        applied = clip_displacement(pose.position, pose.heading, value,
                                    self.scene, agent)
        after = Pose(pose.position.offset(pose.heading, applied), pose.heading)
        self._set_pose(after)
        self._emit(agent, "move", "operator:move", pose, after, 0.0, applied,
                   (Message(agent, len(self.records), MoveExecuted(pose, after)),))
        frames = [{"type": "ack", "command": "move", "applied": applied,
                   "requested": value, "turn": len(self.records)},
                  self.observation_frame(agent, after)]
        if agent == HUMANOID and self.live and \
                check_done(after, self.scene, self.config.d_achieve):
            self._finish("success", "target achieved")
            frames.append(self.result_frame())
        return frames

    def _cmd_scan(self) -> List[dict]:
        pose = self._pose()
        agent = self.controlling
        if agent == QUADRUPED:
            return self._quadruped_scan(pose)
        self._emit(agent, "observe", "operator:scan", pose, pose, 0.0, 0.0)
        return [self.observation_frame(agent, pose, FULL_CIRCLE)]

    def _quadruped_scan(self, pose) -> List[dict]:
        # Human-driven scout: a scan is the mission's decision point. The
        # target check runs here and ends the scouting leg either way.
        obs = observe(pose, QUADRUPED, self.scene, FULL_CIRCLE,
                      self.params.max_range)
        visible = self.oracle.inspect_for(self.target_label, obs).answer
        ideal = visible and self.oracle.path_ideal(self.target_label, obs).answer
        self._emit(QUADRUPED, "scan", "operator:target-scan", pose, pose,
                   0.0, 0.0)
        outcome = "success" if ideal else "failure"
        reason = "target_visible_path_ideal" if ideal else "target_not_found"
        return [self.observation_frame(QUADRUPED, pose, FULL_CIRCLE)] + \
            self._close_mission(outcome, reason)

    def _close_mission(self, outcome, reason) -> List[dict]:
        msg = Message(QUADRUPED, len(self.records),
                      ExplorationReportMsg(self.active_waypoint, outcome, reason))
        pose = self.explorer.pose
        self._emit(QUADRUPED, "report", f"{outcome}:{reason}", pose, pose,
                   0.0, 0.0, (msg,))
        self.active_waypoint = None
        self.controlling = HUMANOID
        return [{"type": "report", "outcome": outcome, "reason": reason}]

    def _cmd_assign(self, command) -> List[dict]:
        if self.controlling != HUMANOID:
            return [{"type": "error",
                     "message": "assign_waypoint only while coordinating"}]
        try:
            waypoint = Point2(float(command["x"]), float(command["y"]))
        except (KeyError, TypeError, ValueError):
            return [{"type": "error", "message": "assign_waypoint needs x, y"}]
        if not self.scene.bounds.contains(waypoint):
            return [{"type": "rejected", "command": "assign_waypoint",
                     "message": "waypoint outside bounds"}]
        assign = Message(HUMANOID, len(self.records),
                         AssignWaypoint(waypoint, self.target_label))
        self._emit(HUMANOID, "evaluate", "operator:assign", self.hpose,
                   self.hpose, 0.0, 0.0, (assign,))
        self.active_waypoint = waypoint
        if self.role == ROLE_BOTH:
            self.controlling = QUADRUPED
            return [{"type": "ack", "command": "assign_waypoint",
                     "turn": len(self.records)},
                    self.observation_frame(QUADRUPED, self.explorer.pose)]
        frames = [{"type": "ack", "command": "assign_waypoint",
                   "turn": len(self.records)}]
        report, turns = self.explorer.run_mission_detailed(waypoint,
                                                           self.target_label)
        for t in turns:
            self._emit(QUADRUPED, t.kind, t.detail, t.pose_before,
                       t.pose_after, t.rotation, t.displacement)
            if not self.live:
                break
            if t.displacement > 0 or t.kind == "observe":
                frames.append(self.observation_frame(QUADRUPED, t.pose_after))
        if self.live:
            frames.extend(self._close_mission(report.outcome.value,
                                              report.reason.value))
        else:
            frames.append(self.result_frame())
        return frames


async def _session(episode: HumanEpisode, websocket, trace_path):
    import websockets

    await websocket.send(json.dumps(episode.hello_frame()))
    await websocket.send(json.dumps(
        episode.observation_frame(HUMANOID, episode.hpose)))
    try:
        async for raw in websocket:
            try:
                command = json.loads(raw)
                if not isinstance(command, dict):
                    raise ValueError("command must be an object")
            except ValueError as exc:
                await websocket.send(json.dumps(
                    {"type": "error", "message": f"bad frame: {exc}"}))
                continue
            for frame in episode.handle(command):
                await websocket.send(json.dumps(frame))
            if not episode.live:
                break
    except websockets.ConnectionClosed:
        pass
    finally:
        if trace_path:
            write_trace(episode.trace(), trace_path)


def run_service(scene: Scene, config: SimConfig, role: str = ROLE_HUMANOID,
                host: str = "127.0.0.1", port: int = 8765,
                trace_path=None) -> int:
    """Serve operator sessions until interrupted (one client at a time)."""
    import websockets

    from .metrics import compute_report, report_table

    busy = asyncio.Lock()

    async def handler(websocket):
        if busy.locked():
            await websocket.send(json.dumps(
                {"type": "error", "message": "another session is active"}))
            await websocket.close()
            return
        async with busy:
            episode = HumanEpisode(scene, config, role)
            await _session(episode, websocket, trace_path)
            trace = episode.trace()
            print(f"session over: {trace.result.status} ({trace.result.detail})")
            if trace.result.status != "aborted":
                print(report_table(compute_report(trace, scene)))

    async def main():
        async with websockets.serve(handler, host, port):
            print(f"operator service on ws://{host}:{port} "
                  f"(scene {scene.name}, role {role})")
            await asyncio.Future()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0
