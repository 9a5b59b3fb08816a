"""Shared scene-building helpers for the test suite."""

import math

import pytest

from tzpp.geometry import (
    HUMANOID,
    QUADRUPED,
    Landmark,
    Obstacle,
    Point2,
    Pose,
    Rect,
    Scene,
)


def square_obstacle(obs_id, cx, cy, half, blocks_vision=True, traversable_by=()):
    pts = (Point2(cx - half, cy - half), Point2(cx + half, cy - half),
           Point2(cx + half, cy + half), Point2(cx - half, cy + half))
    return Obstacle(obs_id, pts, blocks_vision, frozenset(traversable_by))


def rect_obstacle(obs_id, xmin, ymin, xmax, ymax, blocks_vision=True,
                  traversable_by=()):
    pts = (Point2(xmin, ymin), Point2(xmax, ymin),
           Point2(xmax, ymax), Point2(xmin, ymax))
    return Obstacle(obs_id, pts, blocks_vision, frozenset(traversable_by))


def simple_scene(obstacles=(), landmarks=None, bounds=None,
                 humanoid_start=None, quadruped_start=None,
                 target=None, reference_path=None, name="test-scene", **kw):
    """Open 20x20 room with a single 'goal' landmark unless told otherwise."""
    bounds = bounds or Rect(0.0, 0.0, 20.0, 20.0)
    landmarks = landmarks if landmarks is not None else (
        Landmark("goal", "goal", Point2(15.0, 10.0)),)
    humanoid_start = humanoid_start or Pose(Point2(2.0, 10.0), 0.0)
    quadruped_start = quadruped_start or Pose(Point2(2.0, 9.0), 0.0)
    target = target or landmarks[0].id
    if reference_path is None:
        target_pos = next(lm.position for lm in landmarks if lm.id == target)
        reference_path = (humanoid_start.position, target_pos)
    return Scene(
        name=name,
        bounds=bounds,
        obstacles=tuple(obstacles),
        landmarks=tuple(landmarks),
        humanoid_start=humanoid_start,
        quadruped_start=quadruped_start,
        target=target,
        reference_path=tuple(reference_path),
        **kw,
    )
