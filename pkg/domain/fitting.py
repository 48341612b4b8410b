"""
Robust edge and corner fitting for Ladartrack

At most two sides of a vehicle are visible at any time, so a cluster is
explained either by a single edge or by a perpendicular pair of edges meeting
at a corner. Hypotheses are drawn RANSAC-style (two points per line, three
points per corner), filtered by a visibility condition, scored by inlier count
and refined with Gauss-Newton on the summed squared perpendicular distances.
The refined corner is then converted into a centre measurement and covariance.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from .entities import BoxPose, CornerFit, FitKind, Measurement, PointCluster, RansacConfig, ShapeEstimate
from .exceptions import DegenerateFitError, FitFailureError
from .geometry import rotation_matrix, wrap_angle, wrap_angles

logger = logging.getLogger(__name__)

_EPS = 1e-9
QUARTER_TURNS = (0.0, math.pi / 2.0, math.pi, -math.pi / 2.0)


def corner_visibility(theta_c: float, theta_a: float, theta_b: float, s: float) -> bool:
    """True when both edges leaving a corner are visible along viewing direction theta_c.

    theta_a and theta_b are the outward directions of the edges from the corner
    and s is the minimum slant angle at which an edge still returns points.
    """
    limit = math.pi / 2.0 - s
    return abs(wrap_angle(theta_c - theta_a)) < limit and abs(wrap_angle(theta_c - theta_b)) < limit


def _residuals(points: np.ndarray, fit: CornerFit) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked residuals of both edges and their Jacobian w.r.t. (xc, yc, phi)."""
    c, s = math.cos(fit.phi), math.sin(fit.phi)
    p1 = points[list(fit.inliers_edge1)] - fit.corner
    p2 = points[list(fit.inliers_edge2)] - fit.corner

    r1 = c * p1[:, 0] + s * p1[:, 1]
    j1 = np.column_stack([
        np.full(len(p1), -c),
        np.full(len(p1), -s),
        -s * p1[:, 0] + c * p1[:, 1],
    ])
    r2 = c * p2[:, 1] - s * p2[:, 0]
    j2 = np.column_stack([
        np.full(len(p2), s),
        np.full(len(p2), -c),
        -s * p2[:, 1] - c * p2[:, 0],
    ])
    return np.concatenate([r1, r2]), np.vstack([j1, j2]).reshape(-1, 3)


def corner_cost(cluster: PointCluster, fit: CornerFit) -> float:
    """Half the summed squared perpendicular distance of the inliers to their edges."""
    if fit.inlier_count == 0:
        return 0.0
    r, _ = _residuals(cluster.points, fit)
    return float(0.5 * np.dot(r, r))


def gauss_newton_refine(cluster: PointCluster, fit: CornerFit, iterations: int = 1) -> CornerFit:
    """Refine (xc, yc, phi) with Gauss-Newton steps using the J^T J Hessian.

    A step that would increase the cost is rejected and the current fit kept.
    Edge fits leave translation along the edge unobserved, so the minimum-norm
    step is taken there.
    """
    required = 3 if fit.kind is FitKind.CORNER else 2
    expected_rank = 3 if fit.kind is FitKind.CORNER else 2
    if fit.inlier_count < required:
        return fit.flagged_degenerate()

    current = fit
    current_cost = corner_cost(cluster, current)
    for _ in range(iterations):
        r, J = _residuals(cluster.points, current)
        step, _, rank, _ = np.linalg.lstsq(J, -r, rcond=None)
        if rank < expected_rank:
            logger.debug("rank-deficient normal equations (rank %d), fit flagged degenerate", rank)
            return current.flagged_degenerate()
        candidate = current.with_params(current.xc + step[0], current.yc + step[1], current.phi + step[2])
        candidate_cost = corner_cost(cluster, candidate)
        if candidate_cost > current_cost:
            break
        current, current_cost = candidate, candidate_cost
    return current


def corner_candidates(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """The perpendicular corners defined by three non-collinear points.

    Each candidate uses one pair as the first edge and the remaining point to
    place the perpendicular second edge. Returns (corner, edge_a_out,
    edge_b_out) with unit outward directions; pairs straddling their corner are
    dropped.
    """
    triple = np.array([p1, p2, p3], dtype=float)
    corners, out_a, out_b, valid = _corner_geometry(triple[[0, 1, 2]], triple[[1, 2, 0]], triple[[2, 0, 1]])
    return [(corners[k], out_a[k], out_b[k]) for k in range(3) if valid[k]]


def _corner_geometry(A: np.ndarray, B: np.ndarray, C: np.ndarray):
    """Vectorised construction of corners with pair (A, B) and lone point C."""
    dA = B - A
    len_a = np.linalg.norm(dA, axis=1)
    valid = len_a > _EPS
    u_a = dA / np.where(valid, len_a, 1.0)[:, None]
    along = np.einsum('hk,hk->h', C - A, u_a)
    corner = A + along[:, None] * u_a
    dB = C - corner
    len_b = np.linalg.norm(dB, axis=1)
    valid &= len_b > _EPS * np.maximum(1.0, len_a)
    u_b = dB / np.where(len_b > 0, len_b, 1.0)[:, None]
    ta = np.einsum('hk,hk->h', A - corner, u_a)
    tb = np.einsum('hk,hk->h', B - corner, u_a)
    sign = np.sign(ta + tb)
    valid &= (ta * sign > 0) & (tb * sign > 0)
    return corner, u_a * sign[:, None], u_b, valid


def _sample_pairs(rng: np.random.Generator, n: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
    i = rng.integers(0, n, size=count)
    j = (i + rng.integers(1, n, size=count)) % n
    return i, j


def _line_scores(points: np.ndarray, i: np.ndarray, j: np.ndarray, threshold: float):
    a, b = points[i], points[j]
    d = b - a
    length = np.linalg.norm(d, axis=1)
    valid = length > _EPS
    u = d / np.where(valid, length, 1.0)[:, None]
    normal = np.column_stack([-u[:, 1], u[:, 0]])
    dist = np.einsum('hnk,hk->hn', points[None, :, :] - a[:, None, :], normal)
    mask = np.abs(dist) < threshold
    counts = np.where(valid, mask.sum(axis=1), 0)
    costs = 0.5 * np.where(mask, dist * dist, 0.0).sum(axis=1)
    return counts, costs, normal, a


def _corner_scores(points: np.ndarray, i: np.ndarray, j: np.ndarray, k: np.ndarray,
                   threshold: float, theta_c: float, slant: float):
    A = np.concatenate([points[i], points[j], points[k]])
    B = np.concatenate([points[j], points[k], points[i]])
    C = np.concatenate([points[k], points[i], points[j]])
    corner, out_a, out_b, valid = _corner_geometry(A, B, C)

    limit = math.pi / 2.0 - slant
    theta_a = np.arctan2(out_a[:, 1], out_a[:, 0])
    theta_b = np.arctan2(out_b[:, 1], out_b[:, 0])
    valid &= (np.abs(wrap_angles(theta_c - theta_a)) < limit) & (np.abs(wrap_angles(theta_c - theta_b)) < limit)

    rel = points[None, :, :] - corner[:, None, :]
    u = np.einsum('hnk,hk->hn', rel, out_b)  # distance to edge 1
    w = np.einsum('hnk,hk->hn', rel, out_a)  # distance to edge 2
    in1 = (np.abs(u) < threshold) & (w > -threshold)
    in2 = (np.abs(w) < threshold) & (u > -threshold)
    both = in1 & in2
    prefer1 = np.abs(u) <= np.abs(w)
    in1 &= ~both | prefer1
    in2 &= ~both | ~prefer1
    n1, n2 = in1.sum(axis=1), in2.sum(axis=1)
    valid &= (n1 >= 2) & (n2 >= 2)
    counts = np.where(valid, n1 + n2, 0)
    costs = 0.5 * (np.where(in1, u * u, 0.0).sum(axis=1) + np.where(in2, w * w, 0.0).sum(axis=1))
    return counts, costs, corner, theta_b, in1, in2


def _edge_fit_from_indices(points: np.ndarray, indices: np.ndarray, sensor_origin: np.ndarray) -> CornerFit:
    """Total-least-squares edge through the given points, normal facing away from the sensor."""
    subset = points[indices]
    mean = subset.mean(axis=0)
    _, _, vt = np.linalg.svd(subset - mean, full_matrices=False)
    direction = vt[0]
    normal = np.array([-direction[1], direction[0]])
    if np.dot(mean - sensor_origin, normal) < 0:
        normal = -normal
    proj = (subset - mean) @ direction
    anchor = mean + 0.5 * (proj.min() + proj.max()) * direction
    return CornerFit(anchor[0], anchor[1], math.atan2(normal[1], normal[0]),
                     tuple(indices), (), FitKind.EDGE)


def _collect_corner_inliers(points: np.ndarray, fit: CornerFit, threshold: float):
    """Inlier sets of a corner under its current parameters, plus edge-1 outward direction."""
    u_b = np.array([math.cos(fit.phi), math.sin(fit.phi)])
    out_a = _edge_outward(points, fit)
    rel = points - fit.corner
    u = rel @ u_b
    w = rel @ out_a
    in1 = (np.abs(u) < threshold) & (w > -threshold)
    in2 = (np.abs(w) < threshold) & (u > -threshold)
    both = in1 & in2
    prefer1 = np.abs(u) <= np.abs(w)
    in1 &= ~both | prefer1
    in2 &= ~both | ~prefer1
    return np.flatnonzero(in1), np.flatnonzero(in2), out_a


def _edge_outward(points: np.ndarray, fit: CornerFit) -> np.ndarray:
    """Unit outward direction of edge 1 from the corner."""
    u_b = np.array([math.cos(fit.phi), math.sin(fit.phi)])
    perp = np.array([-u_b[1], u_b[0]])
    if not fit.inliers_edge1:
        return perp
    side = np.sign(np.mean((points[list(fit.inliers_edge1)] - fit.corner) @ perp))
    return perp * (side if side != 0 else 1.0)


def fit_cluster(cluster: PointCluster, config: Optional[RansacConfig] = None,
                rng: Optional[np.random.Generator] = None,
                predicted: Optional[BoxPose] = None) -> CornerFit:
    """Fit an edge or corner to a cluster.

    Args:
        cluster: points of one object in the world frame
        config: RANSAC settings
        rng: random source; a fixed seed makes the fit reproducible
        predicted: optional predicted box, used to break remaining ties toward
            the hypothesis best aligned with the predicted heading

    Raises:
        FitFailureError: if no hypothesis reaches the minimum inlier fraction
    """
    config = config or RansacConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    points = cluster.points
    n = len(points)
    threshold = config.threshold
    theta_c = cluster.viewing_direction

    li, lj = _sample_pairs(rng, n, config.iterations)
    line_counts, line_costs, line_normals, line_bases = _line_scores(points, li, lj, threshold)
    line_angles = np.arctan2(line_normals[:, 1], line_normals[:, 0])
    families = [(line_counts, line_costs, line_angles)]

    corner_data = None
    if n >= 3:
        ci, cj = _sample_pairs(rng, n, config.iterations)
        ck = rng.integers(0, n, size=config.iterations)
        distinct = (ck != ci) & (ck != cj)
        ci, cj, ck = ci[distinct], cj[distinct], ck[distinct]
        if len(ci):
            corner_data = _corner_scores(points, ci, cj, ck, threshold, theta_c, config.slant_angle_s)
            families.append((corner_data[0], corner_data[1], np.asarray(corner_data[3], dtype=float)))

    counts = np.concatenate([np.asarray(f[0]) for f in families])
    costs = np.concatenate([np.asarray(f[1], dtype=float) for f in families])
    angles = np.concatenate([f[2] for f in families])
    family_of = np.concatenate([np.full(len(f[0]), i) for i, f in enumerate(families)])
    index_of = np.concatenate([np.arange(len(f[0])) for f in families])
    valid = counts > 0
    if not np.any(valid):
        raise FitFailureError("No valid edge or corner hypothesis for cluster")
    counts, costs, angles = counts[valid], costs[valid], angles[valid]
    family_of, index_of = family_of[valid], index_of[valid]

    if predicted is None:
        penalty = np.zeros(len(counts))
    else:
        # disagreement with the predicted heading modulo quarter turns
        penalty = np.abs(wrap_angles(4.0 * (angles - predicted.heading))) / 4.0
    # most inliers, then lowest cost, heading agreement, lines before corners, sample order
    order = np.lexsort((index_of, family_of, penalty, costs, -counts))
    best_count, family, h = int(counts[order[0]]), int(family_of[order[0]]), int(index_of[order[0]])
    if best_count < config.min_inlier_fraction * n:
        raise FitFailureError(
            f"Best hypothesis explains {best_count}/{n} points, below the minimum fraction "
            f"{config.min_inlier_fraction:.2f}")

    if family == 0:
        normal, base = line_normals[h], line_bases[h]
        dist = (points - base) @ normal
        fit = _edge_fit_from_indices(points, np.flatnonzero(np.abs(dist) < threshold), cluster.sensor_origin)
    else:
        _, _, corner, phis, in1, in2 = corner_data
        fit = CornerFit(corner[h][0], corner[h][1], float(phis[h]),
                        tuple(np.flatnonzero(in1[h])), tuple(np.flatnonzero(in2[h])), FitKind.CORNER)

    fit = gauss_newton_refine(cluster, fit)
    if fit.kind is FitKind.CORNER and not fit.degenerate:
        fit = _settle_corner(cluster, fit, config)
    elif not fit.degenerate:
        dist = (points - fit.corner) @ np.array([math.cos(fit.phi), math.sin(fit.phi)])
        indices = np.flatnonzero(np.abs(dist) < threshold)
        if len(indices) >= 2:
            fit = gauss_newton_refine(cluster, _edge_fit_from_indices(points, indices, cluster.sensor_origin))
    return fit


def _settle_corner(cluster: PointCluster, fit: CornerFit, config: RansacConfig) -> CornerFit:
    """Re-collect inliers around a refined corner and decide corner versus edge."""
    points = cluster.points
    in1, in2, out_a = _collect_corner_inliers(points, fit, config.threshold)
    if len(in1) >= 2 and len(in2) >= 2:
        fit = gauss_newton_refine(cluster, CornerFit(fit.xc, fit.yc, fit.phi, tuple(in1), tuple(in2),
                                                     FitKind.CORNER))
        out_a = _edge_outward(points, fit)
        theta_a = math.atan2(out_a[1], out_a[0])
        if (not fit.degenerate and len(fit.inliers_edge1) >= 2 and len(fit.inliers_edge2) >= 2
                and corner_visibility(cluster.viewing_direction, theta_a, fit.phi, config.slant_angle_s)):
            return fit
    # demote to the better-supported edge
    keep = in1 if len(in1) >= len(in2) else in2
    if len(keep) < 2:
        return fit.flagged_degenerate()
    logger.debug("corner demoted to edge (%d/%d inliers)", len(in1), len(in2))
    return gauss_newton_refine(cluster, _edge_fit_from_indices(points, keep, cluster.sensor_origin))


def edge_extents(cluster: PointCluster, fit: CornerFit) -> Tuple[float, float]:
    """Visible lengths of (edge 1, edge 2); edge fits report (span, 0)."""
    points = cluster.points
    u_b = np.array([math.cos(fit.phi), math.sin(fit.phi)])
    if fit.kind is FitKind.EDGE:
        direction = np.array([-u_b[1], u_b[0]])
        proj = (points[list(fit.inliers_edge1)] - fit.corner) @ direction
        return (float(proj.max() - proj.min()) if len(proj) else 0.0), 0.0
    out_a = _edge_outward(points, fit)
    e1 = (points[list(fit.inliers_edge1)] - fit.corner) @ out_a
    e2 = (points[list(fit.inliers_edge2)] - fit.corner) @ u_b
    return (float(max(e1.max(), 0.0)) if len(e1) else 0.0,
            float(max(e2.max(), 0.0)) if len(e2) else 0.0)


def choose_heading_offset(fit: CornerFit, dims: ShapeEstimate, extents: Tuple[float, float],
                          predicted_theta: Optional[float]) -> float:
    """Multiple of 90 degrees taking the fitted phi onto the vehicle heading."""
    if predicted_theta is not None:
        return min(QUARTER_TURNS, key=lambda tau: (abs(wrap_angle(fit.phi + tau - predicted_theta)), abs(tau)))
    if fit.kind is FitKind.CORNER:
        # edge 2 runs along phi; align the longer visible edge with the length axis
        return 0.0 if extents[1] >= extents[0] else math.pi / 2.0
    # a long single edge is a side of the vehicle, a short one its front or rear
    return math.pi / 2.0 if extents[0] > 0.5 * (dims.length + dims.width) else 0.0


def measurement_from_fit(cluster: PointCluster, fit: CornerFit, dims: ShapeEstimate,
                         predicted_theta: Optional[float] = None,
                         config: Optional[RansacConfig] = None,
                         predicted_center: Optional[np.ndarray] = None) -> Measurement:
    """Convert a refined fit into a centre measurement z = (x, y, theta) with covariance R.

    R is sigma^2 (J^T J)^-1 with the residual Jacobian taken with respect to the
    centre pose, so the corner-to-centre lever arm shows up as correlation.
    Directions the fit does not observe get the configured variance cap.

    Raises:
        DegenerateFitError: if the fit is flagged degenerate
    """
    if fit.degenerate:
        raise DegenerateFitError("Cannot build a measurement from a degenerate fit")
    config = config or RansacConfig()
    extents = edge_extents(cluster, fit)
    tau = choose_heading_offset(fit, dims, extents, predicted_theta)
    psi = wrap_angle(fit.phi + tau)
    heading_along_phi = abs(wrap_angle(2.0 * tau)) < 1e-9
    u_b = np.array([math.cos(fit.phi), math.sin(fit.phi)])

    if fit.kind is FitKind.CORNER:
        dim_b = dims.length if heading_along_phi else dims.width
        dim_a = dims.width if heading_along_phi else dims.length
        box = BoxPose(0.0, 0.0, psi, dims.length, dims.width)
        world_offsets = box.corner_offsets() @ rotation_matrix(psi).T
        implied_centers = fit.corner - world_offsets
        if predicted_center is not None:
            distances = np.linalg.norm(implied_centers - np.asarray(predicted_center, dtype=float), axis=1)
            center = implied_centers[int(np.argmin(distances))]
        else:
            # the fitted corner is the box corner nearest the sensor: the box
            # extends inward along both fitted edges
            out_a = _edge_outward(cluster.points, fit)
            center = fit.corner + 0.5 * dim_b * u_b + 0.5 * dim_a * out_a
    else:
        depth = dims.length if heading_along_phi else dims.width
        center = fit.corner + 0.5 * depth * u_b

    lever = fit.corner - center
    _, Jr = _residuals(cluster.points, fit)
    G = np.array([
        [1.0, 0.0, -lever[1]],
        [0.0, 1.0, lever[0]],
        [0.0, 0.0, 1.0],
    ])
    Jz = Jr @ G
    information = Jz.T @ Jz
    eigenvalues, eigenvectors = np.linalg.eigh(information)
    floor = 1e-9 * max(float(eigenvalues.max()), _EPS)
    variances = np.full(3, config.null_variance_cap)
    observed = eigenvalues > floor
    variances[observed] = np.minimum(config.sigma ** 2 / eigenvalues[observed], config.null_variance_cap)
    R = eigenvectors @ np.diag(variances) @ eigenvectors.T
    return Measurement(np.array([center[0], center[1], psi]), R, fit.kind)
