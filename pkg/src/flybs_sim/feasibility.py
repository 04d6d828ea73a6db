"""
Constraint region of one timestep and its emptiness test.

The region is the intersection of the QoS balls, the outer speed ball, the
total-power bound ball and the altitude slab, minus the open inner speed ball.
Emptiness is decided by sweeping the finite set of points where the region's
lowest or extreme boundary points can sit.
"""

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .base import InfeasibleError, logger
from .channel import as_arrays
from .geometry import (
    TOL,
    Sphere,
    pairwise_circles,
    plane_circle_points_batch,
    triple_points_batch,
)
from .model import FeasibilityVerdict, Limits, as_vec3
from .propulsion import speed_interval

log = logger.getChild("feasibility")

BALL_RTOL = 1e-9
ABS_TOL = 1e-7
CHUNK = 4096


@dataclass(frozen=True, eq=False)
class Lemma1Quantities:
    iota: np.ndarray
    chi: float
    theta0: np.ndarray
    upsilon: float
    sigma: float
    kappa: np.ndarray
    mu: np.ndarray

    @property
    def total_iota(self) -> float:
        return float(self.iota.sum())

    @property
    def vacuous(self) -> bool:
        """No node has a QoS requirement, so the bound constrains nothing."""
        return self.total_iota <= 0

    @property
    def empty(self) -> bool:
        return math.isnan(self.upsilon)


def expansion_grid(sq_dist: np.ndarray, h_min: float, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """kappa_i and mu_i = H^2 (1 + kappa_i sigma), the grid point at or below each squared distance."""
    h2 = h_min * h_min
    kappa = np.maximum(np.floor((sq_dist - h2) / (h2 * sigma)), 0.0).astype(np.int64)
    return kappa, h2 * (1.0 + kappa * sigma)


def lemma1_quantities(anchor, nodes, p_max: float, h_min: float, sigma: float) -> Lemma1Quantities:
    """
    Tangent lower bound of the summed QoS floor powers, written as a ball.

    Each floor c_i u_i^(alpha_i/2), with u_i the squared distance, is convex in u_i and
    bounded below by its tangent at mu_i. Summed, the tangents give
    iota_total * |q - theta0|^2 + chi, so the budget p_max allows at most the ball of
    radius upsilon around theta0.
    """
    arrays = as_arrays(nodes)
    anchor = np.asarray(anchor, dtype=float)
    kappa, mu = expansion_grid(arrays.sq_distances(anchor), h_min, sigma)
    c = arrays.floor_coefficients()
    half_alpha = arrays.alpha / 2.0
    iota = c * half_alpha * mu ** (half_alpha - 1.0)
    total = float(iota.sum())
    if total <= 0:
        return Lemma1Quantities(iota, 0.0, anchor.copy(), math.inf, sigma, kappa, mu)

    theta0 = iota @ arrays.positions / total
    spread = arrays.positions - theta0
    chi = float(np.sum(c * mu**half_alpha - iota * mu) + iota @ np.einsum("ij,ij->i", spread, spread))
    upsilon = math.sqrt((p_max - chi) / total) if p_max >= chi else math.nan
    return Lemma1Quantities(iota, chi, theta0, upsilon, sigma, kappa, mu)


def lemma1_power_lower_bound(q, lq: Lemma1Quantities) -> float:
    diff = np.asarray(q, dtype=float) - lq.theta0
    return lq.total_iota * float(diff @ diff) + lq.chi


@dataclass(frozen=True, eq=False)
class ConstraintRegion:
    qos_spheres: list[Sphere]
    qos_index: np.ndarray
    speed_outer: Sphere
    speed_inner_radius: float
    lemma1_sphere: Optional[Sphere]
    h_min: float
    h_max: float
    lemma: Optional[Lemma1Quantities] = None
    empty_reason: Optional[str] = None
    _arrays: dict = field(default_factory=dict, repr=False)

    def balls(self) -> list[Sphere]:
        extra = [self.lemma1_sphere] if self.lemma1_sphere is not None else []
        return [*self.qos_spheres, self.speed_outer, *extra]

    def ball_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._arrays:
            balls = self.balls()
            self._arrays["centers"] = np.array([b.center for b in balls]).reshape(-1, 3)
            self._arrays["radii"] = np.array([b.radius for b in balls], dtype=float)
        return self._arrays["centers"], self._arrays["radii"]

    def contains(self, points) -> np.ndarray:
        """Membership of each row of `points`, with a 1e-9 relative and 1e-7 m absolute margin."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        z = pts[:, 2]
        ok = (z >= self.h_min - ABS_TOL) & (z <= self.h_max + ABS_TOL)
        if self.speed_inner_radius > 0:
            ok &= np.linalg.norm(pts - self.speed_outer.center, axis=1) >= self.speed_inner_radius - ABS_TOL
        centers, radii = self.ball_arrays()
        limit2 = (radii * (1.0 + BALL_RTOL) + ABS_TOL) ** 2
        for start in range(0, len(pts), CHUNK):
            idx = np.flatnonzero(ok[start:start + CHUNK]) + start
            if len(idx) == 0:
                continue
            diff = pts[idx, None, :] - centers[None, :, :]
            ok[idx] = np.all(np.einsum("ijk,ijk->ij", diff, diff) <= limit2, axis=1)
        return ok

    def contains_point(self, x) -> bool:
        return bool(self.contains(x)[0])


def build_region(q_prev, nodes, p, limits: Limits, sigma: float = 0.05) -> ConstraintRegion:
    arrays = as_arrays(nodes)
    q_prev = np.asarray(q_prev, dtype=float)
    p = np.asarray(p, dtype=float)
    reason = None

    radii = arrays.qos_radii(p)
    qos_index = np.flatnonzero(np.isfinite(radii))
    qos_spheres = [Sphere(arrays.positions[i].copy(), float(radii[i])) for i in qos_index]

    try:
        window = speed_interval(limits.p_pr_th, limits.v_max, limits.propulsion)
        outer, inner = window.v_hi * limits.delta_t, window.v_lo * limits.delta_t
    except InfeasibleError as e:
        reason = e.reason
        outer = inner = 0.0

    lq = lemma1_quantities(q_prev, arrays, limits.p_max_total, limits.h_min, sigma)
    lemma_sphere = None
    if lq.empty:
        reason = reason or f"total power {limits.p_max_total:.4g} W is below the QoS lower bound {lq.chi:.4g} W"
    elif not lq.vacuous:
        lemma_sphere = Sphere(lq.theta0, lq.upsilon)

    return ConstraintRegion(
        qos_spheres=qos_spheres,
        qos_index=qos_index,
        speed_outer=Sphere(q_prev.copy(), outer),
        speed_inner_radius=inner,
        lemma1_sphere=lemma_sphere,
        h_min=limits.h_min,
        h_max=limits.h_max,
        lemma=lq,
        empty_reason=reason,
    )


def prune_spheres(spheres: list[Sphere]) -> tuple[list[Sphere], Optional[str]]:
    """
    Drops duplicates and every ball that contains another one, repeating until no
    nested pair is left. Returns the remaining balls, or a reason when two are disjoint.
    """
    if not spheres:
        return [], None
    centers = np.array([s.center for s in spheres])
    radii = np.array([s.radius for s in spheres])
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    n = len(spheres)
    duplicate = np.tril((dist <= TOL) & (np.abs(radii[:, None] - radii[None, :]) <= TOL), k=-1).any(axis=1)
    alive = ~duplicate

    disjoint = (dist > radii[:, None] + radii[None, :] + TOL) & alive[:, None] & alive[None, :]
    if disjoint.any():
        i, j = np.argwhere(disjoint)[0]
        return [], f"constraint balls {i} and {j} do not intersect"

    # inside[i, j]: ball i lies in ball j
    inside = (dist + radii[:, None] <= radii[None, :] + TOL) & ~np.eye(n, dtype=bool)
    kept: list[int] = []
    for j in np.argsort(radii, kind="stable"):
        if not alive[j]:
            continue
        if kept and inside[kept, j].any():
            continue
        kept.append(int(j))
    return [spheres[j] for j in sorted(kept)], None


def _plane_heights(active: list[Sphere], h_min: float, h_max: float) -> np.ndarray:
    zs = [h_min, h_max]
    for s in active:
        zs.extend(z for z in (s.center[2] - s.radius, s.center[2] + s.radius) if h_min - TOL <= z <= h_max + TOL)
    return np.unique(np.clip(np.round(zs, 9), h_min, h_max))


def plane_sections(active: list[Sphere], z0: float) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Centers and radii of every ball's section at z0, or None when some ball misses the plane."""
    centers = np.array([s.center for s in active])
    radii = np.array([s.radius for s in active])
    dz = z0 - centers[:, 2]
    if np.any(np.abs(dz) > radii + TOL):
        return None
    return np.column_stack([centers[:, :2], np.full(len(active), z0)]), np.sqrt(np.maximum(radii**2 - dz**2, 0.0))


def _candidates(region: ConstraintRegion, active: list[Sphere]) -> Iterator[np.ndarray]:
    lo, hi = region.h_min, region.h_max
    seeds = [region.speed_outer.center.copy()]
    if region.lemma1_sphere is not None:
        seeds.append(region.lemma1_sphere.center.copy())
    seeds = np.array(seeds)
    seeds[:, 2] = np.clip(seeds[:, 2], lo, hi)
    yield seeds

    for z0 in _plane_heights(active, lo, hi):
        sections = plane_sections(active, z0)
        if sections is None:
            continue
        centers, radii = sections
        westmost = centers - radii[:, None] * np.array([1.0, 0.0, 0.0])
        yield np.concatenate([centers, westmost, plane_circle_points_batch(centers[:, :2], radii, z0)])

    centers = np.array([s.center for s in active])
    radii = np.array([s.radius for s in active])
    circles = pairwise_circles(centers, radii)
    if len(circles):
        yield np.concatenate([circles.extreme_points([0.0, 0.0, -1.0]), circles.extreme_points([0.0, 0.0, 1.0])])
        yield triple_points_batch(circles, centers, radii)


def is_feasible(region: ConstraintRegion) -> FeasibilityVerdict:
    if region.empty_reason:
        return FeasibilityVerdict(feasible=False, reason=region.empty_reason)

    active, reason = prune_spheres(region.balls())
    if reason:
        return FeasibilityVerdict(feasible=False, reason=reason)
    for s in active:
        if s.center[2] - s.radius > region.h_max + TOL or s.center[2] + s.radius < region.h_min - TOL:
            return FeasibilityVerdict(
                feasible=False, reason=f"ball at {as_vec3(s.center)} with radius {s.radius:.3f} misses the altitude slab"
            )

    checked = 0
    for pts in _candidates(region, active):
        if len(pts) == 0:
            continue
        checked += len(pts)
        ok = region.contains(pts)
        if ok.any():
            witness = pts[int(np.argmax(ok))]
            log.debug(f"feasible: {len(active)} active balls, witness after {checked} candidates")
            return FeasibilityVerdict(feasible=True, witness=as_vec3(witness))

    log.debug(f"infeasible: {len(active)} active balls, {checked} candidates rejected")
    return FeasibilityVerdict(feasible=False, reason="no candidate point satisfies every constraint")
