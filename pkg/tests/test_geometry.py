import math

import numpy as np
import pytest

from flybs_sim.base import DomainError
from flybs_sim.geometry import (
    Circle3D,
    Relation,
    Sphere,
    circle_circle_points,
    circle_extreme_point,
    closest_point_on_circle,
    closest_point_on_sphere,
    pairwise_circles,
    sphere_plane_intersection,
    sphere_sphere_relation,
    sphere_triple_points,
    triple_points_batch,
)


def test_disjoint_spheres():
    rel = sphere_sphere_relation(Sphere.of((0, 0, 0), 2), Sphere.of((10, 0, 0), 3))
    assert rel.kind is Relation.DISJOINT
    assert rel.circle is None


def test_nested_spheres_both_orders():
    small, big = Sphere.of((0, 0, 0), 1), Sphere.of((0, 0, 0), 5)
    assert sphere_sphere_relation(small, big).kind is Relation.A_INSIDE_B
    assert sphere_sphere_relation(big, small).kind is Relation.B_INSIDE_A


def test_intersection_circle():
    rel = sphere_sphere_relation(Sphere.of((0, 0, 0), math.sqrt(2)), Sphere.of((2, 0, 0), math.sqrt(2)))
    assert rel.kind is Relation.INTERSECT
    np.testing.assert_allclose(rel.circle.center, [1, 0, 0], atol=1e-12)
    assert rel.circle.radius == pytest.approx(1.0)
    np.testing.assert_allclose(rel.circle.normal, [1, 0, 0])


def test_tangent_spheres_give_zero_radius_circle():
    rel = sphere_sphere_relation(Sphere.of((0, 0, 0), 1), Sphere.of((2, 0, 0), 1))
    assert rel.kind is Relation.INTERSECT
    assert rel.circle.radius == 0.0
    np.testing.assert_allclose(rel.circle.center, [1, 0, 0])


def test_relation_symmetric_circle(rng):
    for _ in range(20):
        a = Sphere.of(rng.uniform(-5, 5, 3), rng.uniform(2, 6))
        b = Sphere.of(rng.uniform(-5, 5, 3), rng.uniform(2, 6))
        ab, ba = sphere_sphere_relation(a, b), sphere_sphere_relation(b, a)
        swapped = {Relation.A_INSIDE_B: Relation.B_INSIDE_A, Relation.B_INSIDE_A: Relation.A_INSIDE_B}
        assert ba.kind is swapped.get(ab.kind, ab.kind)
        if ab.kind is Relation.INTERSECT:
            np.testing.assert_allclose(ab.circle.center, ba.circle.center, atol=1e-9)
            assert ab.circle.radius == pytest.approx(ba.circle.radius, abs=1e-9)


def test_sphere_plane_sections():
    unit = Sphere.of((0, 0, 0), 1)
    section = sphere_plane_intersection(unit, 0.0)
    assert section.radius == pytest.approx(1.0)
    assert sphere_plane_intersection(unit, 2.0) is None

    section = sphere_plane_intersection(Sphere.of((1, 1, 1), 2), 2.0)
    np.testing.assert_allclose(section.center, [1, 1, 2])
    assert section.radius == pytest.approx(math.sqrt(3))


def test_circle_points_tangent():
    h = 7.0
    pts = circle_circle_points(Circle3D.of((0, 0, h), 1), Circle3D.of((2, 0, h), 1))
    assert len(pts) == 1
    np.testing.assert_allclose(pts[0], [1, 0, h], atol=1e-12)


def test_circle_points_disjoint_and_concentric():
    assert circle_circle_points(Circle3D.of((0, 0, 0), 1), Circle3D.of((5, 0, 0), 1)) == []
    assert circle_circle_points(Circle3D.of((0, 0, 0), 1), Circle3D.of((0, 0, 0), 1)) == []


def test_circle_points_crossing():
    pts = circle_circle_points(Circle3D.of((0, 0, 0), 1), Circle3D.of((1, 0, 0), 1))
    assert len(pts) == 2
    got = sorted((round(p[0], 12), round(p[1], 12)) for p in pts)
    assert got[0] == pytest.approx((0.5, -math.sqrt(3) / 2))
    assert got[1] == pytest.approx((0.5, math.sqrt(3) / 2))


def test_circle_points_require_coplanar():
    with pytest.raises(DomainError):
        circle_circle_points(Circle3D.of((0, 0, 0), 1), Circle3D.of((0, 0, 1), 1))


def test_closest_point_on_sphere():
    unit = Sphere.of((0, 0, 0), 1)
    np.testing.assert_allclose(closest_point_on_sphere(unit, (2, 0, 0)), [1, 0, 0])
    np.testing.assert_allclose(closest_point_on_sphere(unit, (0, 1, 0)), [0, 1, 0])
    np.testing.assert_allclose(closest_point_on_sphere(Sphere.of((1, 1, 1), 2), (4, 1, 1)), [3, 1, 1])
    np.testing.assert_allclose(closest_point_on_sphere(unit, (0, 0, 0)), [1, 0, 0])


def test_closest_point_on_circle():
    unit = Circle3D.of((0, 0, 0), 1)
    np.testing.assert_allclose(closest_point_on_circle(unit, (3, 0, 5)), [1, 0, 0])
    on = (math.cos(0.3), math.sin(0.3), 0.0)
    np.testing.assert_allclose(closest_point_on_circle(unit, on), on, atol=1e-12)
    np.testing.assert_allclose(closest_point_on_circle(unit, (0, 0, 7)), [1, 0, 0])


def test_closest_points_beat_random_samples(rng):
    s = Sphere.of((1.0, -2.0, 3.0), 4.0)
    c = Circle3D.of((0.5, 0.5, 1.0), 2.5, (1.0, 2.0, 2.0))
    x = np.array([7.0, 1.0, -2.0])

    dirs = rng.normal(size=(100_000, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    on_sphere = s.center + s.radius * dirs
    best = np.linalg.norm(closest_point_on_sphere(s, x) - x)
    assert np.linalg.norm(on_sphere - x, axis=1).min() >= best - 1e-6

    e1, e2 = c.basis()
    t = rng.uniform(0, 2 * math.pi, 100_000)
    on_circle = c.center + c.radius * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
    best = np.linalg.norm(closest_point_on_circle(c, x) - x)
    assert np.linalg.norm(on_circle - x, axis=1).min() >= best - 1e-6


def test_triple_points_lie_on_all_spheres():
    spheres = [Sphere.of((0, 0, 0), 1.2), Sphere.of((1, 0, 0), 1.2), Sphere.of((0, 1, 0), 1.2)]
    pts = sphere_triple_points(*spheres)
    assert len(pts) == 2
    for p in pts:
        for s in spheres:
            assert np.linalg.norm(p - s.center) == pytest.approx(s.radius, abs=1e-9)


def test_batches_agree_with_scalar_ops(rng):
    centers = rng.uniform(0, 10, (5, 3))
    radii = rng.uniform(4, 7, 5)
    spheres = [Sphere.of(c, r) for c, r in zip(centers, radii)]

    circles = pairwise_circles(centers, radii)
    for k in range(len(circles)):
        rel = sphere_sphere_relation(spheres[circles.i[k]], spheres[circles.j[k]])
        assert rel.kind is Relation.INTERSECT
        np.testing.assert_allclose(circles.centers[k], rel.circle.center, atol=1e-9)
        assert circles.radii[k] == pytest.approx(rel.circle.radius, abs=1e-9)

    batch = triple_points_batch(circles, centers, radii)
    scalar = [
        p
        for a in range(5)
        for b in range(a + 1, 5)
        for c in range(b + 1, 5)
        for p in sphere_triple_points(spheres[a], spheres[b], spheres[c])
    ]
    assert len(batch) == len(scalar)
    for p in batch:
        assert min(np.linalg.norm(p - q) for q in scalar) < 1e-7


def test_circle_extreme_points():
    c = Circle3D.of((0, 0, 5), 2.0, normal=(1, 0, 0))
    np.testing.assert_allclose(circle_extreme_point(c, (0, 0, -1)), [0, 0, 3], atol=1e-12)
    np.testing.assert_allclose(circle_extreme_point(c, (0, 1, 1)), [0, math.sqrt(2), 5 + math.sqrt(2)], atol=1e-12)
    along_normal = circle_extreme_point(c, (1, 0, 0))
    assert np.linalg.norm(along_normal - c.center) == pytest.approx(2.0)
    assert along_normal[0] == pytest.approx(0.0)
