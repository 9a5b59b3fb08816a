"""Scene file format and the built-in evaluation scenes.

Scenes are human-editable YAML documents (extension .tzpp-scene, units in
meters). The five built-ins are desk-scale structural replicas of the
evaluation scenarios: an L-turn search, a unilateral-access pillar, a
bilateral pillar in a sparse room, a Z-turn corridor and a ramp-mediated
detour over agent-selective steps.
"""

from __future__ import annotations

import os
from importlib import resources
from typing import List, Union

import yaml

from .geometry import (
    Landmark,
    Obstacle,
    Point2,
    Pose,
    Rect,
    Scene,
    SceneError,
)

SCENE_FORMAT = 1
SCENE_SUFFIX = ".tzpp-scene"


class ScenarioError(ValueError):
    """Scene file rejected; message carries the offending location."""


def _require(data: dict, key: str, context: str):
    if key not in data:
        raise ScenarioError(f"{context}: missing field {key!r}")
    return data[key]


def _point(data, context: str) -> Point2:
    try:
        if isinstance(data, dict):
            return Point2(float(data["x"]), float(data["y"]))
        x, y = data
        return Point2(float(x), float(y))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{context}: not a point: {data!r}") from exc


def _pose(data: dict, context: str) -> Pose:
    return Pose(_point(data, context), float(data.get("heading", 0.0)))


def scene_from_mapping(data: dict) -> Scene:
    """Validate a parsed mapping into a Scene."""
    if not isinstance(data, dict):
        raise ScenarioError("scene document must be a mapping")
    fmt = data.get("format")
    if fmt != SCENE_FORMAT:
        raise ScenarioError(f"unsupported scene format {fmt!r}")
    name = str(_require(data, "name", "scene"))
    bounds_data = _require(data, "bounds", name)
    try:
        bounds = Rect(float(bounds_data["xmin"]), float(bounds_data["ymin"]),
                      float(bounds_data["xmax"]), float(bounds_data["ymax"]))
    except (KeyError, TypeError, ValueError, SceneError) as exc:
        raise ScenarioError(f"{name}: bad bounds: {exc}") from exc

    obstacles = []
    for i, od in enumerate(data.get("obstacles", []) or []):
        ctx = f"{name}: obstacle #{i}"
        oid = str(_require(od, "id", ctx))
        vertices = tuple(_point(v, f"{ctx} ({oid})")
                         for v in _require(od, "vertices", f"{ctx} ({oid})"))
        try:
            obstacles.append(Obstacle(
                oid, vertices,
                blocks_vision=bool(od.get("blocks_vision", True)),
                traversable_by=frozenset(od.get("traversable_by", []) or [])))
        except SceneError as exc:
            raise ScenarioError(str(exc)) from exc

    landmarks = []
    for i, ld in enumerate(data.get("landmarks", []) or []):
        ctx = f"{name}: landmark #{i}"
        lname = str(_require(ld, "name", ctx))
        landmarks.append(Landmark(str(ld.get("id", lname)), lname,
                                  _point(ld, f"{ctx} ({lname})")))

    try:
        scene = Scene(
            name=name,
            bounds=bounds,
            obstacles=tuple(obstacles),
            landmarks=tuple(landmarks),
            humanoid_start=_pose(_require(data, "humanoid_start", name),
                                 f"{name}: humanoid_start"),
            quadruped_start=_pose(_require(data, "quadruped_start", name),
                                  f"{name}: quadruped_start"),
            target=str(_require(data, "target", name)),
            reference_path=tuple(_point(p, f"{name}: reference_path")
                                 for p in _require(data, "reference_path", name)),
            optimal_avoidance_arc=(float(data["optimal_avoidance_arc"])
                                   if data.get("optimal_avoidance_arc") is not None
                                   else None),
            detour_obstacle_id=data.get("detour_obstacle"),
            landmark_sparse_hint=bool(data.get("landmark_sparse", False)),
        )
    except SceneError as exc:
        raise ScenarioError(f"{name}: {exc}") from exc
    return scene


def scene_to_mapping(scene: Scene) -> dict:
    data = {
        "format": SCENE_FORMAT,
        "name": scene.name,
        "units": "meters",
        "bounds": {"xmin": scene.bounds.xmin, "ymin": scene.bounds.ymin,
                   "xmax": scene.bounds.xmax, "ymax": scene.bounds.ymax},
        "humanoid_start": {"x": scene.humanoid_start.position.x,
                           "y": scene.humanoid_start.position.y,
                           "heading": scene.humanoid_start.heading},
        "quadruped_start": {"x": scene.quadruped_start.position.x,
                            "y": scene.quadruped_start.position.y,
                            "heading": scene.quadruped_start.heading},
        "target": scene.target,
        "landmark_sparse": scene.landmark_sparse_hint,
        "obstacles": [
            {"id": o.id,
             "blocks_vision": o.blocks_vision,
             "traversable_by": sorted(o.traversable_by),
             "vertices": [[v.x, v.y] for v in o.boundary]}
            for o in scene.obstacles
        ],
        "landmarks": [
            {"id": lm.id, "name": lm.name, "x": lm.position.x, "y": lm.position.y}
            for lm in scene.landmarks
        ],
        "reference_path": [[p.x, p.y] for p in scene.reference_path],
    }
    if scene.optimal_avoidance_arc is not None:
        data["optimal_avoidance_arc"] = scene.optimal_avoidance_arc
        data["detour_obstacle"] = scene.detour_obstacle_id
    return data


def save_scene(scene: Scene) -> str:
    return yaml.safe_dump(scene_to_mapping(scene), sort_keys=False,
                          default_flow_style=None)


def load_scene(source: Union[str, os.PathLike]) -> Scene:
    """Load a scene from a file path or raw document text."""
    text = None
    if isinstance(source, os.PathLike) or (
            isinstance(source, str) and "\n" not in source
            and os.path.exists(source)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, str):
        text = source
    if text is None:
        raise ScenarioError(f"unreadable scene source {source!r}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scene parse error: {exc}") from exc
    return scene_from_mapping(data)


BUILTIN_NAMES = (
    "l-turn-sofa",
    "pillar-unilateral",
    "pillar-bilateral",
    "z-turn-extinguisher",
    "ramp-detour",
)


def _builtin_text(name: str) -> str:
    return (resources.files("tzpp") / "scenes" / f"{name}{SCENE_SUFFIX}") \
        .read_text(encoding="utf-8")


def builtin_scene(which: Union[int, str]) -> Scene:
    """Built-in scene by 1-based index or name."""
    if isinstance(which, int):
        if not 1 <= which <= len(BUILTIN_NAMES):
            raise ScenarioError(f"builtin scene index out of range: {which}")
        name = BUILTIN_NAMES[which - 1]
    else:
        if which not in BUILTIN_NAMES:
            raise ScenarioError(f"unknown builtin scene {which!r}")
        name = which
    return load_scene(_builtin_text(name))


def builtin_scenes() -> List[Scene]:
    return [builtin_scene(i) for i in range(1, len(BUILTIN_NAMES) + 1)]
