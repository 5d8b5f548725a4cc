"""
Mesh and sample-space builders.

Round S^2 meshes (Fibonacci points triangulated by their convex hull),
exact great-circle samples, flat lattices, flat tori, chains and random
graph metrics. Every builder returns a FiniteMetricSpace.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist

from app.core.config import settings
from app.services.metric_core import FiniteMetricSpace, ResourceCap, shortest_path_space
from app.utils.sphere_geometry import (
    fibonacci_sphere,
    great_circle_distance,
    pairwise_great_circle,
    signed_triangle_area,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SphereMesh:
    """Triangulated unit sphere with outward-oriented triangles."""

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    second_ring: np.ndarray

    @property
    def size(self) -> int:
        return len(self.vertices)

    def vertex_areas(self) -> np.ndarray:
        """One third of the adjacent geodesic triangle areas; sums to 4*pi."""
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        areas = np.abs(signed_triangle_area(a, b, c))
        out = np.zeros(self.size)
        for k in range(3):
            np.add.at(out, self.triangles[:, k], areas / 3.0)
        return out

    def stencil(self, rings: int = 2) -> np.ndarray:
        """Edge list with the first ring, plus the second ring when rings >= 2."""
        if rings >= 2 and len(self.second_ring):
            return np.vstack([self.edges, self.second_ring])
        return self.edges

    def nearest_vertex(self, point: np.ndarray) -> int:
        return int(np.argmax(self.vertices @ np.asarray(point, dtype=float)))


def sphere_mesh(point_count: int) -> SphereMesh:
    """
    Fibonacci-point mesh of the round unit sphere.

    Args:
        point_count: Number of vertices

    Returns:
        SphereMesh with one-ring edges and second-ring "diagonal" edges
    """
    vertices = fibonacci_sphere(point_count)
    hull = ConvexHull(vertices)
    triangles = hull.simplices.copy()
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    inward = np.sum(a * np.cross(b, c), axis=-1) < 0
    triangles[inward] = triangles[inward][:, [0, 2, 1]]

    pairs = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    edges = np.unique(pairs, axis=0)

    neighbors = [set() for _ in range(point_count)]
    for i, j in edges:
        neighbors[i].add(int(j))
        neighbors[j].add(int(i))
    second = set()
    for i in range(point_count):
        for j in neighbors[i]:
            for k in neighbors[j]:
                if k != i and k not in neighbors[i]:
                    second.add((min(i, k), max(i, k)))
    second_ring = np.array(sorted(second), dtype=int).reshape(-1, 2)
    logger.debug(
        "sphere mesh: %d vertices, %d triangles, %d edges, %d second-ring edges",
        point_count, len(triangles), len(edges), len(second_ring),
    )
    return SphereMesh(vertices=vertices, triangles=triangles, edges=edges, second_ring=second_ring)


def sphere_graph_space(point_count: int, rings: int = 1, n_jobs: Optional[int] = None) -> FiniteMetricSpace:
    """Dijkstra metric of a round S^2 mesh with arc-length edges and vertex-area weights."""
    mesh = sphere_mesh(point_count)
    edges = mesh.stencil(rings)
    lengths = great_circle_distance(mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]])
    return shortest_path_space(
        point_count,
        edges,
        lengths,
        weight=mesh.vertex_areas(),
        coords=mesh.vertices,
        name=f"S2-mesh-{point_count}",
        n_jobs=n_jobs,
    )


def sphere_sample_space(points: np.ndarray, name: str = "S2-sample") -> FiniteMetricSpace:
    """Exact great-circle metric on given unit vectors, equal weights summing to 4*pi."""
    points = np.asarray(points, dtype=float)
    if len(points) > settings.max_points:
        raise ResourceCap(f"{name}: {len(points)} points exceeds max_points={settings.max_points}")
    weight = np.full(len(points), 4.0 * np.pi / len(points))
    return FiniteMetricSpace(
        dist=pairwise_great_circle(points),
        weight=weight,
        coords=points,
        name=name,
    )


def euclidean_space(points: np.ndarray, weight: Optional[np.ndarray] = None, name: str = "euclidean",
                    boundary: Optional[np.ndarray] = None) -> FiniteMetricSpace:
    """Exact Euclidean distances between coordinate rows."""
    points = np.asarray(points, dtype=float)
    if len(points) > settings.max_points:
        raise ResourceCap(f"{name}: {len(points)} points exceeds max_points={settings.max_points}")
    weight = np.ones(len(points)) if weight is None else weight
    return FiniteMetricSpace(
        dist=cdist(points, points),
        weight=weight,
        coords=points,
        boundary=boundary,
        name=name,
    )


def lattice_points(dim: int, per_axis: int, spacing: float = 1.0) -> np.ndarray:
    """Cubic lattice in lexicographic order, centered at the origin."""
    axis = (np.arange(per_axis) - (per_axis - 1) / 2.0) * spacing
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def flat_lattice_space(dim: int, per_axis: int, spacing: float = 1.0) -> FiniteMetricSpace:
    """Flat R^dim lattice mesh with cell-volume weights and the outer layer flagged as boundary."""
    points = lattice_points(dim, per_axis, spacing)
    half = (per_axis - 1) / 2.0 * spacing
    boundary = np.any(np.isclose(np.abs(points), half), axis=1)
    return euclidean_space(
        points,
        weight=np.full(len(points), spacing ** dim),
        name=f"R{dim}-lattice-{per_axis}",
        boundary=boundary,
    )


def flat_torus_space(per_axis: int, length: float = 1.0) -> FiniteMetricSpace:
    """Square flat torus R^2 / (length Z)^2 sampled on a grid, exact minimum-image distances."""
    if per_axis ** 2 > settings.max_points:
        raise ResourceCap(f"torus grid {per_axis}^2 exceeds max_points={settings.max_points}")
    step = length / per_axis
    axis = np.arange(per_axis) * step
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel()])
    delta = np.abs(points[:, None, :] - points[None, :, :])
    delta = np.minimum(delta, length - delta)
    dist = np.sqrt(np.sum(delta ** 2, axis=-1))
    return FiniteMetricSpace(
        dist=dist,
        weight=np.full(len(points), step * step),
        coords=points,
        name=f"torus-{per_axis}",
    )


def chain_space(point_count: int, spacing: float = 1.0) -> FiniteMetricSpace:
    """Path graph with equal spacing; geodesics are the unique index intervals."""
    edges = np.column_stack([np.arange(point_count - 1), np.arange(1, point_count)])
    return shortest_path_space(
        point_count,
        edges,
        np.full(point_count - 1, spacing),
        weight=np.full(point_count, spacing),
        coords=(np.arange(point_count) * spacing)[:, None],
        name=f"chain-{point_count}",
        n_jobs=1,
    )


def random_graph_space(
    point_count: int,
    seed: int = 0,
    extra_edges: Optional[int] = None,
    length_range: tuple[float, float] = (0.5, 1.5),
) -> FiniteMetricSpace:
    """
    Connected random graph metric: a random spanning tree plus random chords.

    Args:
        point_count: Vertex count
        seed: RNG seed
        extra_edges: Chords beyond the tree (default 2 * point_count)
        length_range: Uniform edge length range

    Returns:
        Shortest-path FiniteMetricSpace with stored geodesics
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(point_count)
    tree = [(int(order[k]), int(order[rng.integers(0, k)])) for k in range(1, point_count)]
    extra = 2 * point_count if extra_edges is None else extra_edges
    chords = rng.integers(0, point_count, size=(extra, 2))
    edges = np.vstack([np.array(tree, dtype=int).reshape(-1, 2), chords])
    lengths = rng.uniform(*length_range, size=len(edges))
    return shortest_path_space(
        point_count, edges, lengths, name=f"random-graph-{point_count}-{seed}", n_jobs=1
    )
