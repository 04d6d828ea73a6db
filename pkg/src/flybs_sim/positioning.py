"""
Radial surrogate of the sum capacity and the move of the FlyBS towards its peak.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .base import DomainError, InfeasibleError, logger
from .channel import LN2, as_arrays
from .feasibility import ABS_TOL, ConstraintRegion, expansion_grid, is_feasible, prune_spheres
from .geometry import TOL, Sphere, closest_point_on_sphere, pairwise_circles, plane_circle_points_batch, triple_points_batch

log = logger.getChild("positioning")

KKT_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class RadialApprox:
    """C_tot(q) ~ w - zeta |q - s0|^2 around `anchor`."""

    s0: np.ndarray
    zeta: float
    w: float
    phi: np.ndarray
    s_approx: np.ndarray
    xi: float
    sigma: float
    kappa: np.ndarray
    mu: np.ndarray
    anchor: np.ndarray
    no_move: bool = False

    def value(self, q) -> float:
        diff = np.asarray(q, dtype=float) - self.s0
        return self.w - self.zeta * float(diff @ diff)


def build_radial_approx(q_anchor, nodes, p, sigma: float = 0.05, xi: float = 0.05, h_min: float = 100.0) -> RadialApprox:
    """
    Linearizes d^-alpha around the expansion grid point mu_i and log(1 + x) around
    s_i * xi, which makes every node's capacity affine in its squared distance.
    """
    arrays = as_arrays(nodes)
    q = np.asarray(q_anchor, dtype=float)
    p = np.asarray(p, dtype=float)
    sq = arrays.sq_distances(q)
    if np.any(sq <= 0):
        raise DomainError(f"anchor {tuple(q)} coincides with a node")

    kappa, mu = expansion_grid(sq, h_min, sigma)
    half_alpha = arrays.alpha / 2.0
    k_gain = arrays.gain * p / arrays.noise
    snr = k_gain * sq ** (-half_alpha)
    s = np.floor(snr / sigma)
    x0 = s * xi
    bw = arrays.bandwidth

    phi = bw * k_gain * half_alpha * mu ** (-1.0 - half_alpha) / ((1.0 + x0) * LN2)
    const = bw / LN2 * (np.log1p(x0) - x0 / (1.0 + x0)) + bw * k_gain * mu**-half_alpha * (1.0 + half_alpha) / (
        (1.0 + x0) * LN2
    )
    zeta = float(phi.sum())
    if zeta <= 0:
        return RadialApprox(q.copy(), 0.0, float(const.sum()), phi, s, xi, sigma, kappa, mu, q.copy(), no_move=True)

    s0 = phi @ arrays.positions / zeta
    spread = arrays.positions - s0
    w = float(const.sum() - phi @ np.einsum("ij,ij->i", spread, spread))
    return RadialApprox(s0, zeta, w, phi, s, xi, sigma, kappa, mu, q.copy())


def _pick(points: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Nearest point to target; ties go to the lowest altitude, then smallest x, then y."""
    dist = np.round(np.linalg.norm(points - target, axis=1), 9)
    order = np.lexsort((points[:, 1], points[:, 0], points[:, 2], dist))
    return points[order[0]]


def _sphere_projections(centers: np.ndarray, radii: np.ndarray, target: np.ndarray) -> np.ndarray:
    diff = target - centers
    dist = np.linalg.norm(diff, axis=1)
    unit = np.where(dist[:, None] < TOL, [[1.0, 0.0, 0.0]], diff / np.maximum(dist, TOL)[:, None])
    return centers + radii[:, None] * unit


def _slab_section_points(centers, radii, target, z0) -> np.ndarray:
    dz = z0 - centers[:, 2]
    hit = np.abs(dz) <= radii + TOL
    if not np.any(hit):
        return np.empty((0, 3))
    c_xy, r = centers[hit, :2], np.sqrt(np.maximum(radii[hit] ** 2 - dz[hit] ** 2, 0.0))
    diff = target[:2] - c_xy
    dist = np.linalg.norm(diff, axis=1)
    unit = np.where(dist[:, None] < TOL, [[1.0, 0.0]], diff / np.maximum(dist, TOL)[:, None])
    closest = np.column_stack([c_xy + r[:, None] * unit, np.full(len(r), z0)])
    return np.concatenate([closest, plane_circle_points_batch(c_xy, r, z0)])


def _is_projection(q: np.ndarray, target: np.ndarray, region: ConstraintRegion) -> bool:
    """KKT test: target - q must be a non-negative combination of the outward normals active at q."""
    g = target - q
    g_norm = np.linalg.norm(g)
    if g_norm <= TOL:
        return True
    normals = []
    centers, radii = region.ball_arrays()
    diff = q - centers
    dist = np.linalg.norm(diff, axis=1)
    tight = (np.abs(dist - radii) <= 1e-6 * np.maximum(radii, 1.0)) & (dist > TOL)
    normals.extend(diff[tight] / dist[tight, None])
    if q[2] <= region.h_min + 1e-6:
        normals.append(np.array([0.0, 0.0, -1.0]))
    if q[2] >= region.h_max - 1e-6:
        normals.append(np.array([0.0, 0.0, 1.0]))
    if region.speed_inner_radius > 0:
        off = q - region.speed_outer.center
        off_norm = np.linalg.norm(off)
        if abs(off_norm - region.speed_inner_radius) <= 1e-6 * max(region.speed_inner_radius, 1.0) and off_norm > TOL:
            normals.append(-off / off_norm)
    if not normals:
        return False
    _, residual = nnls(np.column_stack(normals), g)
    return residual <= KKT_RTOL * g_norm


def closest_feasible_point(target, region: ConstraintRegion, witness=None) -> np.ndarray:
    """
    Point of the region nearest to `target`.

    Candidates are the nearest points of every single constraint surface, every
    pair of them and every slab-plane section, plus the triple points when the
    best of those fails the KKT test. Only surfaces passing within the distance of
    a known feasible point can be active, which bounds the enumeration.
    """
    target = np.asarray(target, dtype=float)
    if region.contains_point(target):
        return target.copy()
    if witness is None:
        verdict = is_feasible(region)
        if not verdict.feasible:
            raise InfeasibleError(verdict.reason or "empty constraint region")
        witness = verdict.witness
    witness = np.asarray(witness, dtype=float)

    active, _ = prune_spheres(region.balls())
    centers = np.array([s.center for s in active]).reshape(-1, 3)
    radii = np.array([s.radius for s in active], dtype=float)

    def relevant(reach: float) -> np.ndarray:
        return np.abs(np.linalg.norm(target - centers, axis=1) - radii) <= reach + ABS_TOL

    reach = float(np.linalg.norm(target - witness))
    near = relevant(reach)
    c_near, r_near = centers[near], radii[near]

    clamped = target.copy()
    clamped[2] = np.clip(clamped[2], region.h_min, region.h_max)
    cands = [clamped[None, :], _sphere_projections(c_near, r_near, target)]
    if region.speed_inner_radius > 0:
        inner = Sphere(region.speed_outer.center, region.speed_inner_radius)
        cands.append(closest_point_on_sphere(inner, target)[None, :])
    circles = pairwise_circles(c_near, r_near)
    if len(circles):
        cands.append(circles.closest_points(target))
    for z0 in (region.h_min, region.h_max):
        if abs(target[2] - z0) <= reach + ABS_TOL:
            cands.append(_slab_section_points(c_near, r_near, target, z0))

    pts = np.concatenate(cands)
    feasible = pts[region.contains(pts)]
    best = _pick(feasible, target) if len(feasible) else None
    log.debug(f"closest point: {len(active)} active balls, {near.sum()} near, {len(pts)} candidates, {len(feasible)} feasible")

    if best is None or not _is_projection(best, target, region):
        if best is not None:
            reach = float(np.linalg.norm(target - best))
        near = relevant(reach)
        c_near, r_near = centers[near], radii[near]
        triples = triple_points_batch(pairwise_circles(c_near, r_near), c_near, r_near)
        if len(triples):
            triples = triples[region.contains(triples)]
            if len(triples):
                pool = triples if best is None else np.vstack([best[None, :], triples])
                best = _pick(pool, target)

    if best is None:
        log.warning(f"no admissible candidate around {tuple(np.round(target, 3))}, falling back to the feasibility witness")
        return witness.copy()
    return best


def position_update(approx: RadialApprox, region: ConstraintRegion, witness: Optional[np.ndarray] = None) -> np.ndarray:
    """Moves to s0 when admissible, else to the admissible point closest to it."""
    if approx.no_move:
        return closest_feasible_point(approx.anchor, region, witness)
    return closest_feasible_point(approx.s0, region, witness)


def surrogate_error(approx: RadialApprox, q, exact: float) -> float:
    """Relative gap between the surrogate and the exact sum capacity at q."""
    if exact <= 0:
        return math.inf
    return abs(exact - approx.value(q)) / exact
