"""
Numerical diagnostics for sphere flow families.

Central differences in orthonormal tangent frames measure the divergence
of a truncated field, the Jacobian determinant of a flow map, the
pullback tensor g_s = phi_s* g and its parameter derivatives. A second,
independent pipeline meshes g_s and compares Dijkstra distances with the
flow-map distances.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from app.schemas.flow import DerivativeBounds, IsometryCheck, VolumeCheck
from app.services.mesh_builders import SphereMesh
from app.services.metric_core import edge_graph
from app.services.sphere_flow import DiffeoFamily, FlowSegment, TruncatedField
from app.utils.sphere_geometry import (
    exp_map,
    great_circle_distance,
    normalize,
    signed_triangle_area,
    tangent_frame,
)

logger = logging.getLogger(__name__)

S_SAMPLES = np.linspace(0.26, 0.74, 13)


def random_sphere_points(count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return normalize(rng.normal(size=(count, 3)))


def divergence_check(
    field: TruncatedField,
    samples: int = 500,
    fd_step: float = 1e-4,
    seed: int = 0,
    points: Optional[np.ndarray] = None,
) -> float:
    """
    Max |div| of the field over random sample points.

    Args:
        field: Field to test
        samples: Number of uniform random points (ignored if points given)
        fd_step: Central-difference step along tangent geodesics
        seed: Sampling seed
        points: Explicit sample points

    Returns:
        Largest absolute divergence found
    """
    z = random_sphere_points(samples, seed) if points is None else np.atleast_2d(points)
    e1, e2 = tangent_frame(z)
    div = np.zeros(len(z))
    for e in (e1, e2):
        forward = field(exp_map(z, fd_step * e))
        backward = field(exp_map(z, -fd_step * e))
        div += np.sum(e * (forward - backward), axis=-1) / (2.0 * fd_step)
    worst = float(np.max(np.abs(div)))
    logger.debug("divergence over %d points: max %.3e", len(z), worst)
    return worst


def pushforward(
    family: DiffeoFamily,
    s: float,
    points: np.ndarray,
    fd_step: float = 1e-5,
    method: Optional[str] = "exact",
) -> tuple[np.ndarray, np.ndarray]:
    """
    Images phi_s(p) and the ambient derivatives d phi_s(e1), d phi_s(e2).

    Returns:
        (images of shape (n, 3), derivatives of shape (n, 2, 3))
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    e1, e2 = tangent_frame(points)
    stencil = np.concatenate([
        points,
        exp_map(points, fd_step * e1),
        exp_map(points, -fd_step * e1),
        exp_map(points, fd_step * e2),
        exp_map(points, -fd_step * e2),
    ])
    images = family.apply(s, stencil, method=method).reshape(5, n, 3)
    d1 = (images[1] - images[2]) / (2.0 * fd_step)
    d2 = (images[3] - images[4]) / (2.0 * fd_step)
    return images[0], np.stack([d1, d2], axis=1)


def metric_tensor(
    family: DiffeoFamily,
    s: float,
    points: np.ndarray,
    fd_step: float = 1e-5,
) -> np.ndarray:
    """Pullback tensor g_s at each point in its tangent frame, shape (n, 2, 2)."""
    _, derivs = pushforward(family, s, points, fd_step)
    return np.einsum("nik,njk->nij", derivs, derivs)


def tensor_norm(tensor: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """|A|_G = sqrt(tr(G^-1 A G^-1 A)) for stacks of symmetric 2x2 matrices."""
    inv = np.linalg.inv(metric)
    product = inv @ tensor
    return np.sqrt(np.maximum(np.einsum("nij,nji->n", product, product), 0.0))


# =============================================================================
# Volume preservation
# =============================================================================


def jacobian_check(
    family: DiffeoFamily,
    s: float,
    points: np.ndarray,
    fd_step: float = 1e-5,
) -> float:
    """Max |det D phi_s - 1| over the points."""
    images, derivs = pushforward(family, s, points, fd_step)
    det = np.sum(images * np.cross(derivs[:, 0], derivs[:, 1]), axis=-1)
    return float(np.max(np.abs(det - 1.0)))


def cell_area_check(family: DiffeoFamily, s: float, mesh: SphereMesh) -> tuple[float, float]:
    """
    Geodesic cell areas before and after phi_s.

    Returns:
        (relative change of the total signed area, max relative change of one cell)
    """
    before = signed_triangle_area(*(mesh.vertices[mesh.triangles[:, k]] for k in range(3)))
    moved = family.apply(s, mesh.vertices)
    after = signed_triangle_area(*(moved[mesh.triangles[:, k]] for k in range(3)))
    total = abs(after.sum() - before.sum()) / abs(before.sum())
    per_cell = np.max(np.abs(after - before) / np.abs(before))
    return float(total), float(per_cell)


def volume_check(
    family: DiffeoFamily,
    s: float,
    mesh: SphereMesh,
    fd_step: float = 1e-5,
) -> VolumeCheck:
    total, per_cell = cell_area_check(family, s, mesh)
    return VolumeCheck(
        s=s,
        max_jacobian_error=jacobian_check(family, s, mesh.vertices, fd_step),
        total_area_change=total,
        max_cell_change=per_cell,
        points=mesh.size,
        cells=len(mesh.triangles),
    )


# =============================================================================
# Parameter derivatives of g_s
# =============================================================================


def segment_sites(segment: FlowSegment, count: int = 8) -> np.ndarray:
    """Points in the transition band eps..2 eps around a segment's circle."""
    frame = segment.field.frame
    eps = segment.field.eps
    around = frame.circle_points(count)
    offsets = eps * np.linspace(1.1, 1.9, count)
    signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
    return normalize(
        np.cos(offsets)[:, None] * around + (signs * np.sin(offsets))[:, None] * frame.axis
    )


def derivative_bounds(
    family: DiffeoFamily,
    sites: np.ndarray,
    s_values: Sequence[float],
    ds: Optional[float] = None,
    fd_step: float = 1e-4,
    grad_step: float = 1e-3,
) -> DerivativeBounds:
    """
    Measured sup of |d_s g_s|, |d_s d_s g_s| and |grad d_s g_s| in the g_s norm.

    Args:
        family: Diffeomorphism family
        sites: Sample sites on the sphere
        s_values: Parameter values to sample
        ds: Parameter step (default 1e-3 in the canonical parameter)
        fd_step: Spatial step for the pushforward
        grad_step: Spatial step for the gradient of d_s g_s

    Returns:
        DerivativeBounds
    """
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    ds = 1e-3 * family.stretch if ds is None else ds
    e1, e2 = tangent_frame(sites)
    neighbors = [
        exp_map(sites, grad_step * e1),
        exp_map(sites, -grad_step * e1),
        exp_map(sites, grad_step * e2),
        exp_map(sites, -grad_step * e2),
    ]
    everything = np.concatenate([sites] + neighbors)
    n = len(sites)
    d_s = d_ss = grad = 0.0
    for s in s_values:
        plus = metric_tensor(family, s + ds, everything, fd_step)
        minus = metric_tensor(family, s - ds, everything, fd_step)
        centre = metric_tensor(family, s, sites, fd_step)
        first = (plus - minus) / (2.0 * ds)
        second = (plus[:n] - 2.0 * centre + minus[:n]) / (ds * ds)
        d_s = max(d_s, float(np.max(tensor_norm(first[:n], centre))))
        d_ss = max(d_ss, float(np.max(tensor_norm(second, centre))))
        parts = first[n:].reshape(4, n, 2, 2)
        squared = np.zeros(n)
        for k in range(2):
            spatial = (parts[2 * k] - parts[2 * k + 1]) / (2.0 * grad_step)
            squared += tensor_norm(spatial, centre) ** 2
        grad = max(grad, float(np.max(np.sqrt(squared))))
    return DerivativeBounds(
        d_s=d_s, d_ss=d_ss, grad_d_s=grad, sites=n, s_samples=len(s_values)
    )


def schedule_derivative_bounds(
    family: DiffeoFamily,
    max_segments: int = 12,
    sites_per_segment: int = 8,
) -> DerivativeBounds:
    """Derivative bounds sampled over evenly spread segments of a schedule."""
    segments = family.segments
    if not segments:
        return DerivativeBounds(d_s=0.0, d_ss=0.0, grad_d_s=0.0)
    picks = np.unique(np.linspace(0, len(segments) - 1, min(max_segments, len(segments))).astype(int))
    d_s = d_ss = grad = 0.0
    sites = samples = 0
    for idx in picks:
        segment = segments[idx]
        s_values = family.stretch * (segment.start + S_SAMPLES)
        bounds = derivative_bounds(family, segment_sites(segment, sites_per_segment), s_values)
        d_s = max(d_s, bounds.d_s)
        d_ss = max(d_ss, bounds.d_ss)
        grad = max(grad, bounds.grad_d_s)
        sites += bounds.sites
        samples += bounds.s_samples
    logger.info(
        "derivative bounds over %d segments: d_s=%.3g d_ss=%.3g grad=%.3g",
        len(picks), d_s, d_ss, grad,
    )
    return DerivativeBounds(d_s=d_s, d_ss=d_ss, grad_d_s=grad, sites=sites, s_samples=samples)


# =============================================================================
# Isometry cross-check
# =============================================================================


def meshed_pullback_lengths(
    family: DiffeoFamily,
    s: float,
    vertices: np.ndarray,
    edges: np.ndarray,
    fd_step: float = 1e-5,
) -> np.ndarray:
    """Edge lengths sqrt(e^T g_s(mid) e) with the tensor sampled at edge midpoints."""
    a = vertices[edges[:, 0]]
    b = vertices[edges[:, 1]]
    mid = normalize(a + b)
    tensor = metric_tensor(family, s, mid, fd_step)
    e1, e2 = tangent_frame(mid)
    arc = great_circle_distance(a, b)
    direction = normalize(b - a)
    vec = np.stack([np.sum(direction * e1, axis=-1), np.sum(direction * e2, axis=-1)], axis=-1)
    vec = normalize(vec) * arc[:, None]
    return np.sqrt(np.einsum("ni,nij,nj->n", vec, tensor, vec))


def isometry_cross_check(
    family: DiffeoFamily,
    s: float,
    mesh: SphereMesh,
    sources: int = 12,
    min_distance: float = 0.5,
    rings: int = 2,
) -> IsometryCheck:
    """
    Compare d_g(phi_s y, phi_s z) with Dijkstra on the meshed tensor g_s.

    Args:
        family: Diffeomorphism family
        s: Parameter value
        mesh: Sphere mesh carrying the tensor
        sources: Number of source vertices (evenly spaced ids)
        min_distance: Pairs closer than this in g_s are skipped
        rings: Mesh stencil rings

    Returns:
        IsometryCheck with relative errors over the compared pairs
    """
    edges = mesh.stencil(rings)
    lengths = meshed_pullback_lengths(family, s, mesh.vertices, edges)
    graph = edge_graph(mesh.size, edges, lengths)
    ids = np.unique(np.linspace(0, mesh.size - 1, sources).astype(int))
    graph_dist = shortest_path(graph, method="D", directed=False, indices=ids)
    moved = family.apply(s, mesh.vertices)
    exact = great_circle_distance(moved[ids][:, None, :], moved[None, :, :])
    mask = exact >= min_distance
    relative = np.abs(graph_dist[mask] - exact[mask]) / exact[mask]
    result = IsometryCheck(
        s=s,
        pairs=int(mask.sum()),
        max_relative_error=float(relative.max()) if relative.size else 0.0,
        mean_relative_error=float(relative.mean()) if relative.size else 0.0,
    )
    logger.info(
        "isometry cross-check at s=%.3f: %d pairs, mean rel err %.4f, max %.4f",
        s, result.pairs, result.mean_relative_error, result.max_relative_error,
    )
    return result


def identity_displacement(family: DiffeoFamily, s: float, points: np.ndarray) -> float:
    """Max great-circle displacement of the points under phi_s."""
    moved = family.apply(s, points)
    return float(np.max(great_circle_distance(points, moved)))

