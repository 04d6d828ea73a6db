"""
Exact 3D primitives for the feasibility region: balls, horizontal sections,
circles, their intersections and closest-point queries.

Scalar operations work on single objects; the `*_batch` helpers vectorize the
same formulas over many pairs for the candidate sweeps.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .base import DomainError

TOL = 1e-9
COPLANAR_TOL = 1e-6
Z_AXIS = np.array([0.0, 0.0, 1.0])


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(3)


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    @classmethod
    def of(cls, center, radius: float) -> "Sphere":
        c = _vec(center)
        if not np.all(np.isfinite(c)):
            raise DomainError("sphere center must be finite")
        if radius < 0:
            raise DomainError(f"sphere radius must be non-negative, got {radius}")
        return cls(c, float(radius))

    def same_as(self, other: "Sphere", tol: float = TOL) -> bool:
        return bool(np.linalg.norm(self.center - other.center) <= tol and abs(self.radius - other.radius) <= tol)

    def contains(self, x, tol: float = TOL) -> bool:
        return bool(np.linalg.norm(_vec(x) - self.center) <= self.radius + tol)


@dataclass(frozen=True, eq=False)
class Circle3D:
    center: np.ndarray
    radius: float
    normal: np.ndarray

    @classmethod
    def of(cls, center, radius: float, normal=Z_AXIS) -> "Circle3D":
        n = _vec(normal)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise DomainError("circle normal must be non-zero")
        return cls(_vec(center), max(float(radius), 0.0), n / norm)

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        return plane_basis(self.normal)


class Relation(str, Enum):
    DISJOINT = "disjoint"
    A_INSIDE_B = "a_inside_b"
    B_INSIDE_A = "b_inside_a"
    INTERSECT = "intersect"


@dataclass(frozen=True)
class SphereRelation:
    kind: Relation
    circle: Optional[Circle3D] = None


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the plane orthogonal to `normal`."""
    n = _vec(normal)
    a = np.array([0.0, 1.0, 0.0]) if abs(n[0]) > 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = a - np.dot(a, n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def sphere_sphere_relation(a: Sphere, b: Sphere) -> SphereRelation:
    axis = b.center - a.center
    d = float(np.linalg.norm(axis))
    if d > a.radius + b.radius + TOL:
        return SphereRelation(Relation.DISJOINT)
    if d + a.radius <= b.radius + TOL:
        return SphereRelation(Relation.A_INSIDE_B)
    if d + b.radius <= a.radius + TOL:
        return SphereRelation(Relation.B_INSIDE_A)
    n = axis / d
    if d >= a.radius + b.radius - TOL:
        return SphereRelation(Relation.INTERSECT, Circle3D(a.center + a.radius * n, 0.0, n))
    h = (d * d + a.radius**2 - b.radius**2) / (2 * d)
    r = np.sqrt(max(a.radius**2 - h * h, 0.0))
    return SphereRelation(Relation.INTERSECT, Circle3D(a.center + h * n, float(r), n))


def sphere_plane_intersection(s: Sphere, z0: float) -> Optional[Circle3D]:
    dz = z0 - s.center[2]
    if abs(dz) > s.radius + TOL:
        return None
    r = np.sqrt(max(s.radius**2 - dz * dz, 0.0))
    return Circle3D(np.array([s.center[0], s.center[1], z0]), float(r), Z_AXIS.copy())


def circle_circle_points(a: Circle3D, b: Circle3D) -> list[np.ndarray]:
    """
    Intersection points of two coplanar circles: none, one on tangency, or two.

    Concentric circles return no points, including the coincident case.
    """
    offset = b.center - a.center
    if np.linalg.norm(np.cross(a.normal, b.normal)) > COPLANAR_TOL or abs(np.dot(offset, a.normal)) > COPLANAR_TOL:
        raise DomainError("circle_circle_points needs coplanar circles")
    e1, e2 = a.basis()
    pts = _circle_pair_points_2d(
        np.zeros((1, 2)), np.array([a.radius]),
        np.array([[np.dot(offset, e1), np.dot(offset, e2)]]), np.array([b.radius]),
    )
    return [a.center + p[0] * e1 + p[1] * e2 for p in pts]


def closest_point_on_sphere(s: Sphere, x) -> np.ndarray:
    diff = _vec(x) - s.center
    dist = np.linalg.norm(diff)
    if dist < TOL:
        return s.center + s.radius * np.array([1.0, 0.0, 0.0])
    return s.center + s.radius * diff / dist


def closest_point_on_circle(c: Circle3D, x) -> np.ndarray:
    diff = _vec(x) - c.center
    in_plane = diff - np.dot(diff, c.normal) * c.normal
    length = np.linalg.norm(in_plane)
    if length < TOL:
        return c.center + c.radius * c.basis()[0]
    return c.center + c.radius * in_plane / length


def circle_extreme_point(c: Circle3D, direction) -> np.ndarray:
    """Point of `c` furthest along `direction`; falls back to the first basis vector."""
    d = _vec(direction)
    in_plane = d - np.dot(d, c.normal) * c.normal
    length = np.linalg.norm(in_plane)
    if length < TOL:
        return c.center + c.radius * c.basis()[0]
    return c.center + c.radius * in_plane / length


def sphere_triple_points(a: Sphere, b: Sphere, c: Sphere) -> list[np.ndarray]:
    rel = sphere_sphere_relation(a, b)
    if rel.kind is not Relation.INTERSECT:
        return []
    circle = rel.circle
    t = float(np.dot(c.center - circle.center, circle.normal))
    if abs(t) > c.radius + TOL:
        return []
    section = Circle3D(c.center - t * circle.normal, float(np.sqrt(max(c.radius**2 - t * t, 0.0))), circle.normal)
    return circle_circle_points(circle, section)


def _circle_pair_points_2d(ca: np.ndarray, ra: np.ndarray, cb: np.ndarray, rb: np.ndarray) -> np.ndarray:
    """
    Vectorized circle-circle intersection in a plane.

    Args:
        ca, cb: (P, 2) centers.
        ra, rb: (P,) radii.

    Returns:
        (K, 2) points; two per crossing pair, one per tangent pair.
    """
    offset = cb - ca
    d = np.hypot(offset[:, 0], offset[:, 1])
    ok = (d > TOL) & (d <= ra + rb + TOL) & (d >= np.abs(ra - rb) - TOL)
    if not np.any(ok):
        return np.empty((0, 2))
    ca, ra, rb, offset, d = ca[ok], ra[ok], rb[ok], offset[ok], d[ok]
    u = offset / d[:, None]
    w = np.stack([-u[:, 1], u[:, 0]], axis=1)
    h = np.clip((d * d + ra * ra - rb * rb) / (2 * d), -ra, ra)
    hh = ra * ra - h * h
    tangent = (d >= ra + rb - TOL) | (d <= np.abs(ra - rb) + TOL) | (hh <= 0)
    half = np.sqrt(np.where(tangent, 0.0, hh))
    base = ca + h[:, None] * u
    plus = base + half[:, None] * w
    minus = base - half[:, None] * w
    # interleave so each pair's points stay adjacent
    out = np.stack([plus, minus], axis=1)
    keep = np.stack([np.ones_like(tangent), ~tangent], axis=1)
    return out[keep]


def plane_circle_points_batch(centers_xy: np.ndarray, radii: np.ndarray, z0: float) -> np.ndarray:
    """All pairwise intersection points of horizontal circles lying in the plane z = z0."""
    i, j = np.triu_indices(len(radii), k=1)
    if len(i) == 0:
        return np.empty((0, 3))
    pts = _circle_pair_points_2d(centers_xy[i], radii[i], centers_xy[j], radii[j])
    return np.column_stack([pts, np.full(len(pts), z0)])


@dataclass(frozen=True, eq=False)
class CircleBatch:
    """Intersection circles of sphere pairs (i[k], j[k]); zero radius on tangency."""

    i: np.ndarray
    j: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    normals: np.ndarray

    def __len__(self):
        return len(self.i)

    def extreme_points(self, direction) -> np.ndarray:
        d = _vec(direction)
        in_plane = d[None, :] - (self.normals @ d)[:, None] * self.normals
        length = np.linalg.norm(in_plane, axis=1)
        e1 = _first_basis_batch(self.normals)
        safe = np.where(length[:, None] < TOL, e1, in_plane / np.maximum(length, TOL)[:, None])
        return self.centers + self.radii[:, None] * safe

    def closest_points(self, x) -> np.ndarray:
        diff = _vec(x)[None, :] - self.centers
        in_plane = diff - np.einsum("ij,ij->i", diff, self.normals)[:, None] * self.normals
        length = np.linalg.norm(in_plane, axis=1)
        e1 = _first_basis_batch(self.normals)
        safe = np.where(length[:, None] < TOL, e1, in_plane / np.maximum(length, TOL)[:, None])
        return self.centers + self.radii[:, None] * safe

    def circle(self, k: int) -> Circle3D:
        return Circle3D(self.centers[k], float(self.radii[k]), self.normals[k])


def _first_basis_batch(normals: np.ndarray) -> np.ndarray:
    """Row-wise first vector of `plane_basis`."""
    a = np.where(np.abs(normals[:, :1]) > 0.9, [[0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0]])
    e1 = a - np.einsum("ij,ij->i", a, normals)[:, None] * normals
    return e1 / np.linalg.norm(e1, axis=1, keepdims=True)


def pairwise_circles(centers: np.ndarray, radii: np.ndarray) -> CircleBatch:
    """Vectorized `sphere_sphere_relation` restricted to the intersecting pairs."""
    i, j = np.triu_indices(len(radii), k=1)
    axis = centers[j] - centers[i]
    d = np.linalg.norm(axis, axis=1)
    ri, rj = radii[i], radii[j]
    crossing = (d <= ri + rj + TOL) & (d + ri > rj + TOL) & (d + rj > ri + TOL)
    i, j, axis, d, ri, rj = i[crossing], j[crossing], axis[crossing], d[crossing], ri[crossing], rj[crossing]
    n = axis / d[:, None] if len(d) else np.empty((0, 3))
    h = np.clip((d * d + ri * ri - rj * rj) / (2 * d), -ri, ri) if len(d) else d
    tangent = d >= ri + rj - TOL
    h = np.where(tangent, ri, h)
    r = np.sqrt(np.maximum(ri * ri - h * h, 0.0))
    return CircleBatch(i, j, centers[i] + h[:, None] * n, np.where(tangent, 0.0, r), n)


def triple_points_batch(circles: CircleBatch, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """
    Points where pair circle k meets every sphere with index above both of its pair indices.

    Each unordered triple is visited once.
    """
    out = []
    for k in range(len(circles)):
        third = np.arange(circles.j[k] + 1, len(radii))
        if len(third) == 0:
            continue
        m0, rc, n = circles.centers[k], circles.radii[k], circles.normals[k]
        t = (centers[third] - m0) @ n
        hit = np.abs(t) <= radii[third] + TOL
        if not np.any(hit):
            continue
        t, third = t[hit], third[hit]
        sec_r = np.sqrt(np.maximum(radii[third] ** 2 - t * t, 0.0))
        sec_c = centers[third] - t[:, None] * n
        e1, e2 = plane_basis(n)
        rel = sec_c - m0
        pts = _circle_pair_points_2d(
            np.zeros((len(third), 2)), np.full(len(third), rc),
            np.column_stack([rel @ e1, rel @ e2]), sec_r,
        )
        if len(pts):
            out.append(m0 + pts[:, :1] * e1 + pts[:, 1:] * e2)
    return np.concatenate(out) if out else np.empty((0, 3))
