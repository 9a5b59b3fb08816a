import math
import random

import pytest
from shapely.geometry import LineString, Point, Polygon

from tzpp.geometry import (
    HUMANOID,
    QUADRUPED,
    Landmark,
    Obstacle,
    Point2,
    Pose,
    Rect,
    Scene,
    SceneError,
    arc_length,
    line_of_sight,
    nearest_obstacle_point,
    normalize_angle,
    point_on_polygon_boundary,
    project_to_polyline,
    segment_clear,
)


# ---------------------------------------------------------------------------
# Independent oracles. These stay deliberately separate from the library:
# shapely for boolean intersection, dense sampling for projections.
# ---------------------------------------------------------------------------

def oracle_segment_blocked(a, b, vertices):
    """Shapely-based: does segment a-b touch or cross the polygon at all?"""
    seg = LineString([(a.x, a.y), (b.x, b.y)])
    poly = Polygon([(v.x, v.y) for v in vertices])
    return seg.intersects(poly)


def oracle_project_polyline(p, path, step=1e-4):
    """Dense sampling of the polyline at `step` spacing."""
    best = math.inf
    for i in range(len(path) - 1):
        a, b = path[i], path[i + 1]
        seg_len = a.dist(b)
        n = max(1, int(math.ceil(seg_len / step)))
        for k in range(n + 1):
            t = k / n
            q = Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            best = min(best, p.dist(q))
    return best


def oracle_nearest_boundary(p, vertices, step=1e-4):
    best = None
    best_dist = math.inf
    n = len(vertices)
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        seg_len = a.dist(b)
        m = max(1, int(math.ceil(seg_len / step)))
        for k in range(m + 1):
            t = k / m
            q = Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            d = p.dist(q)
            if d < best_dist:
                best_dist = d
                best = q
    return best, best_dist


def random_convexish_polygon(rng, cx, cy, rmin=0.3, rmax=1.5, nmin=4, nmax=8):
    """Star-shaped polygon around (cx, cy).

    Simple as long as every angular gap between consecutive vertices stays
    under pi (otherwise the closing chord can cut across the figure).
    """
    while True:
        n = rng.randint(nmin, nmax)
        angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
        gaps = [(angles[(i + 1) % n] - angles[i]) % (2 * math.pi) for i in range(n)]
        if min(gaps) < 0.05 or max(gaps) > 2.8:
            continue
        radii = [rng.uniform(rmin, rmax) for _ in angles]
        return [Point2(cx + r * math.cos(a), cy + r * math.sin(a))
                for a, r in zip(angles, radii)]


def make_scene(obstacles, bounds=Rect(-20, -20, 20, 20)):
    return Scene(
        name="test",
        bounds=bounds,
        obstacles=tuple(obstacles),
        landmarks=(Landmark("goal", "goal", Point2(18, 18)),),
        humanoid_start=Pose(Point2(-18, -18), 0.0),
        quadruped_start=Pose(Point2(-18, -17), 0.0),
        target="goal",
        reference_path=(Point2(-18, -18), Point2(18, 18)),
    )


def square(cx, cy, half, **kw):
    pts = (Point2(cx - half, cy - half), Point2(cx + half, cy - half),
           Point2(cx + half, cy + half), Point2(cx - half, cy + half))
    return Obstacle(kw.pop("id", "sq"), pts, **kw)


def regular_polygon(cx, cy, radius, n):
    return tuple(Point2(cx + radius * math.cos(2 * math.pi * i / n),
                        cy + radius * math.sin(2 * math.pi * i / n))
                 for i in range(n))


# ---------------------------------------------------------------------------
# segment_clear
# ---------------------------------------------------------------------------

def test_segment_clear_empty_scene():
    scene = make_scene([])
    assert segment_clear(Point2(0, 0), Point2(1, 0), scene, HUMANOID)


def test_segment_clear_pierced_square():
    scene = make_scene([square(1.0, 0.0, 0.5)])
    assert not segment_clear(Point2(0, 0), Point2(2, 0), scene, HUMANOID)
    assert not segment_clear(Point2(0, 0), Point2(2, 0), scene, QUADRUPED)


def test_segment_clear_respects_traversability():
    steps = square(1.0, 0.0, 0.5, id="steps", blocks_vision=False,
                   traversable_by={QUADRUPED})
    scene = make_scene([steps])
    assert not segment_clear(Point2(0, 0), Point2(2, 0), scene, HUMANOID)
    assert segment_clear(Point2(0, 0), Point2(2, 0), scene, QUADRUPED)


def test_segment_touching_vertex_blocks():
    # Diamond with a vertex exactly at (1, 0); a horizontal segment through it
    # only grazes but still counts (conservative tangency).
    diamond = Obstacle("d", (Point2(1, 0), Point2(2, 1), Point2(3, 0), Point2(2, -1)))
    scene = make_scene([diamond])
    assert not segment_clear(Point2(0, 0), Point2(1, 0), scene, HUMANOID)


def test_segment_fully_inside_polygon_blocked():
    scene = make_scene([square(0.0, 0.0, 2.0)])
    assert not segment_clear(Point2(-0.5, 0), Point2(0.5, 0), scene, HUMANOID)


def test_segment_clear_randomized_against_shapely():
    rng = random.Random(12345)
    checked = 0
    while checked < 1000:
        poly = random_convexish_polygon(rng, rng.uniform(-2, 2), rng.uniform(-2, 2))
        a = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        b = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        shp_poly = Polygon([(v.x, v.y) for v in poly])
        if not shp_poly.is_valid:
            continue
        # Skip near-tangent instances where float noise decides the answer.
        d = LineString([(a.x, a.y), (b.x, b.y)]).distance(shp_poly)
        if 0.0 < d < 1e-9:
            continue
        obstacle = Obstacle("r", tuple(poly))
        scene = make_scene([obstacle])
        expect = not oracle_segment_blocked(a, b, poly)
        assert segment_clear(a, b, scene, HUMANOID) == expect
        checked += 1


def test_segment_clear_symmetric():
    rng = random.Random(7)
    poly = random_convexish_polygon(rng, 0.0, 0.0)
    scene = make_scene([Obstacle("p", tuple(poly))])
    for _ in range(200):
        a = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        b = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        assert segment_clear(a, b, scene, HUMANOID) == segment_clear(b, a, scene, HUMANOID)


# ---------------------------------------------------------------------------
# line_of_sight
# ---------------------------------------------------------------------------

def test_line_of_sight_ignores_transparent_terrain():
    ramp = square(1.0, 0.0, 0.5, id="ramp", blocks_vision=False,
                  traversable_by={HUMANOID, QUADRUPED})
    scene = make_scene([ramp])
    assert line_of_sight(Point2(0, 0), Point2(2, 0), scene)


def test_line_of_sight_blocked_by_wall():
    scene = make_scene([square(1.0, 0.0, 0.5, id="wall")])
    assert not line_of_sight(Point2(0, 0), Point2(2, 0), scene)


def test_line_of_sight_randomized_against_shapely():
    rng = random.Random(999)
    checked = 0
    while checked < 300:
        poly = random_convexish_polygon(rng, rng.uniform(-2, 2), rng.uniform(-2, 2))
        shp_poly = Polygon([(v.x, v.y) for v in poly])
        if not shp_poly.is_valid:
            continue
        a = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        b = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        d = LineString([(a.x, a.y), (b.x, b.y)]).distance(shp_poly)
        if 0.0 < d < 1e-9:
            continue
        scene = make_scene([Obstacle("w", tuple(poly))])
        assert line_of_sight(a, b, scene) == (not oracle_segment_blocked(a, b, poly))
        assert line_of_sight(a, b, scene) == line_of_sight(b, a, scene)
        checked += 1


# ---------------------------------------------------------------------------
# project_to_polyline
# ---------------------------------------------------------------------------

def test_projection_perpendicular_drop():
    foot, dist = project_to_polyline(Point2(0, 1), [Point2(-1, 0), Point2(1, 0)])
    assert foot.dist(Point2(0, 0)) < 1e-12
    assert dist == pytest.approx(1.0)


def test_projection_point_on_path():
    _, dist = project_to_polyline(Point2(0.5, 0), [Point2(-1, 0), Point2(1, 0)])
    assert dist == pytest.approx(0.0, abs=1e-12)


def test_projection_clamps_to_endpoint():
    # Verified against dense sampling at 1e-4 m: min distance is sqrt(2).
    p = Point2(3, 1)
    path = [Point2(0, 0), Point2(2, 0)]
    expected = oracle_project_polyline(p, path)
    assert expected == pytest.approx(math.sqrt(2), abs=1e-4)
    foot, dist = project_to_polyline(p, path)
    assert foot.dist(Point2(2, 0)) < 1e-12
    assert dist == pytest.approx(math.sqrt(2))


def test_projection_empty_path_rejected():
    with pytest.raises(SceneError, match="degenerate reference path"):
        project_to_polyline(Point2(0, 0), [Point2(1, 1)])


def test_projection_never_exceeds_vertex_distance():
    rng = random.Random(42)
    for _ in range(300):
        path = [Point2(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(4)]
        p = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        _, dist = project_to_polyline(p, path)
        for v in path:
            assert dist <= p.dist(v) + 1e-12


def test_projection_randomized_against_sampling():
    rng = random.Random(55)
    for _ in range(40):
        path = [Point2(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(3)]
        p = Point2(rng.uniform(-3, 3), rng.uniform(-3, 3))
        _, dist = project_to_polyline(p, path)
        assert dist == pytest.approx(oracle_project_polyline(p, path), abs=2e-4)


# ---------------------------------------------------------------------------
# nearest_obstacle_point
# ---------------------------------------------------------------------------

def test_nearest_point_radial_projection_on_disk():
    disk = Obstacle("disk", regular_polygon(0, 0, 1.0, 64))
    q = nearest_obstacle_point(Point2(2, 0), disk)
    assert q.dist(Point2(1, 0)) < 0.01


def test_nearest_point_on_boundary_is_fixed_point():
    disk = Obstacle("disk", regular_polygon(0, 0, 1.0, 64))
    p = disk.boundary[5]
    q = nearest_obstacle_point(p, disk)
    assert q.dist(p) < 1e-12


def test_nearest_point_inside_rejected():
    disk = Obstacle("disk", regular_polygon(0, 0, 1.0, 64))
    with pytest.raises(SceneError, match="penetrates"):
        nearest_obstacle_point(Point2(0.1, 0.0), disk)


def test_nearest_point_randomized_against_sampling():
    rng = random.Random(2024)
    checked = 0
    while checked < 60:
        poly = random_convexish_polygon(rng, 0.0, 0.0)
        obstacle = Obstacle("p", tuple(poly))
        p = Point2(rng.uniform(-4, 4), rng.uniform(-4, 4))
        if point_on_polygon_boundary(p, poly, 1e-6):
            continue
        try:
            q = nearest_obstacle_point(p, obstacle)
        except SceneError:
            continue  # random point fell inside
        _, best_dist = oracle_nearest_boundary(p, poly)
        assert p.dist(q) == pytest.approx(best_dist, abs=2e-4)
        # Result must itself lie on the boundary.
        assert point_on_polygon_boundary(q, poly, 1e-9)
        checked += 1


# ---------------------------------------------------------------------------
# arc_length
# ---------------------------------------------------------------------------

def test_arc_length_l_shape():
    assert arc_length([Point2(0, 0), Point2(1, 0), Point2(1, 1)]) == pytest.approx(2.0)


def test_arc_length_single_point():
    assert arc_length([Point2(3, 4)]) == 0.0


def test_arc_length_semicircle():
    pts = [Point2(math.cos(math.radians(d)), math.sin(math.radians(d)))
           for d in range(0, 181)]
    assert arc_length(pts) == pytest.approx(math.pi, abs=1e-3)


def test_arc_length_rigid_transform_invariant():
    rng = random.Random(9)
    pts = [Point2(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(20)]
    base = arc_length(pts)
    for _ in range(20):
        theta = rng.uniform(0, 2 * math.pi)
        tx, ty = rng.uniform(-5, 5), rng.uniform(-5, 5)
        c, s = math.cos(theta), math.sin(theta)
        moved = [Point2(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty) for p in pts]
        assert arc_length(moved) == pytest.approx(base, abs=1e-9)


# ---------------------------------------------------------------------------
# types and validation
# ---------------------------------------------------------------------------

def test_point_rejects_nan():
    with pytest.raises(SceneError):
        Point2(float("nan"), 0.0)


def test_pose_normalizes_heading():
    assert Pose(Point2(0, 0), 3 * math.pi).heading == pytest.approx(-math.pi)
    assert -math.pi <= Pose(Point2(0, 0), -7.1).heading < math.pi


def test_normalize_angle_range():
    for a in [-10.0, -math.pi, 0.0, math.pi, 9.9, 100.0]:
        w = normalize_angle(a)
        assert -math.pi <= w < math.pi
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_self_intersecting_polygon_rejected():
    bowtie = (Point2(0, 0), Point2(1, 1), Point2(1, 0), Point2(0, 1))
    with pytest.raises(SceneError, match="not simple"):
        Obstacle("bowtie", bowtie)


def test_scene_rejects_missing_target():
    with pytest.raises(SceneError, match="target"):
        Scene(
            name="bad",
            bounds=Rect(0, 0, 10, 10),
            obstacles=(),
            landmarks=(Landmark("a", "sofa", Point2(5, 5)),),
            humanoid_start=Pose(Point2(1, 1), 0),
            quadruped_start=Pose(Point2(1, 2), 0),
            target="nope",
            reference_path=(Point2(1, 1), Point2(5, 5)),
        )


def test_scene_rejects_start_inside_obstacle():
    with pytest.raises(SceneError, match="inside obstacle"):
        Scene(
            name="bad",
            bounds=Rect(0, 0, 10, 10),
            obstacles=(square(1.0, 1.0, 0.5, id="blk"),),
            landmarks=(Landmark("a", "sofa", Point2(5, 5)),),
            humanoid_start=Pose(Point2(1, 1), 0),
            quadruped_start=Pose(Point2(3, 3), 0),
            target="a",
            reference_path=(Point2(1, 1), Point2(5, 5)),
        )
