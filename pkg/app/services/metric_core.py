"""
Finite Metric Space Core

Dense finite metric spaces with measure weights and optional stored
geodesics, plus the metric-axiom validator, the comparison angle, pointed
balls, farthest-point nets and the reverse-triangle propagation check.
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import sparse
from scipy.sparse.csgraph import shortest_path

from app.core.config import settings
from app.core.errors import ResourceLimitError, ValidationFailure
from app.schemas.metric import (
    NetResult,
    PropagationPoint,
    PropagationReport,
    ValidationReport,
)

logger = logging.getLogger(__name__)

SAMPLED_TRIPLES = 100_000


class NonFiniteEntry(ValidationFailure):
    """A distance entry is NaN or infinite."""
    pass


class DegenerateVertex(ValidationFailure):
    """An angle was requested at a vertex with a zero-length side."""
    pass


class NonMetricTriple(ValidationFailure):
    """Side lengths miss the triangle inequality by more than the clamp tolerance."""
    pass


class HypothesisViolated(ValidationFailure):
    """Caller passed a triple/path that does not satisfy the propagation hypotheses."""
    pass


class MissingGeodesics(ValidationFailure):
    """The operation needs stored geodesics and the space has none."""
    pass


class ResourceCap(ResourceLimitError):
    """Point count exceeds the configured limit."""
    pass


class EmptyBall(UserWarning):
    """A ball contains only its center because the radius is below the nearest-neighbor gap."""
    pass


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """
    Symmetric distance matrix over points 0..n-1 with per-point weights.

    Geodesics are either reconstructed from a shortest-path predecessor
    matrix or looked up in `paths`, keyed by (i, j).
    """

    dist: np.ndarray
    weight: np.ndarray
    coords: Optional[np.ndarray] = None
    predecessors: Optional[np.ndarray] = None
    paths: dict = field(default_factory=dict)
    boundary: Optional[np.ndarray] = None
    name: str = "space"

    def __post_init__(self):
        dist = np.asarray(self.dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {dist.shape}")
        weight = np.asarray(self.weight, dtype=float)
        if weight.shape != (dist.shape[0],):
            raise ValueError("one weight per point is required")
        if np.any(weight < 0) or weight.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive total")
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "weight", weight)

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    @property
    def has_geodesics(self) -> bool:
        return self.predecessors is not None or bool(self.paths)

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.size else 0.0

    def geodesic(self, i: int, j: int) -> list[int]:
        """Ordered point ids from i to j realizing dist[i, j]."""
        if i == j:
            return [i]
        if (i, j) in self.paths:
            return list(self.paths[(i, j)])
        if (j, i) in self.paths:
            return list(reversed(self.paths[(j, i)]))
        if self.predecessors is None:
            raise MissingGeodesics(f"{self.name} stores no geodesics")
        path = [j]
        node = j
        while node != i:
            node = int(self.predecessors[i, node])
            if node < 0:
                raise MissingGeodesics(f"no path from {i} to {j} in {self.name}")
            path.append(node)
        return path[::-1]

    def path_length(self, path: Sequence[int]) -> float:
        path = np.asarray(path, dtype=int)
        if len(path) < 2:
            return 0.0
        return float(self.dist[path[:-1], path[1:]].sum())

    def subspace(self, indices: Sequence[int], name: Optional[str] = None) -> "FiniteMetricSpace":
        """Restriction to the given points; stored geodesics are dropped."""
        idx = np.asarray(indices, dtype=int)
        return FiniteMetricSpace(
            dist=self.dist[np.ix_(idx, idx)],
            weight=self.weight[idx],
            coords=None if self.coords is None else self.coords[idx],
            boundary=None if self.boundary is None else self.boundary[idx],
            name=name or f"{self.name}[{len(idx)}]",
        )

    def scaled(self, factor: float) -> "FiniteMetricSpace":
        return FiniteMetricSpace(
            dist=self.dist * factor,
            weight=self.weight,
            coords=None if self.coords is None else self.coords * factor,
            predecessors=self.predecessors,
            paths=self.paths,
            boundary=self.boundary,
            name=f"{self.name}*{factor:g}",
        )


@dataclass(frozen=True, eq=False)
class PointedBall:
    """Closed ball B_radius(center) inside a parent space."""

    parent: FiniteMetricSpace
    center: int
    radius: float
    members: np.ndarray

    @property
    def center_local(self) -> int:
        return int(np.flatnonzero(self.members == self.center)[0])

    def as_space(self) -> FiniteMetricSpace:
        return self.parent.subspace(self.members, name=f"B_{self.radius:g}({self.center})")


# =============================================================================
# Axioms and angles
# =============================================================================


def validate_metric(
    space: FiniteMetricSpace,
    tol: float,
    exhaustive_limit: int = 60,
    seed: int = 0,
) -> ValidationReport:
    """
    Check symmetry, zero diagonal and the triangle inequality.

    Args:
        space: Space to validate
        tol: Allowed slack for every axiom
        exhaustive_limit: Largest size checked over all triples
        seed: Seed for sampled triples above the limit

    Returns:
        ValidationReport with the worst violations found
    """
    dist = space.dist
    if not np.all(np.isfinite(dist)):
        bad = np.argwhere(~np.isfinite(dist))[0]
        raise NonFiniteEntry(f"non-finite distance at {tuple(int(i) for i in bad)}")

    n = space.size
    asymmetry = float(np.max(np.abs(dist - dist.T))) if n else 0.0
    diag = np.abs(np.diag(dist))
    nonzero_diag = [int(i) for i in np.flatnonzero(diag > tol)]
    negatives = int(np.sum(dist < -tol))

    worst = 0.0
    worst_triple = None
    if n <= exhaustive_limit:
        exhaustive = True
        triples = n ** 3
        for k in range(n):
            excess = dist - (dist[:, k, None] + dist[None, k, :])
            flat = int(np.argmax(excess))
            value = float(excess.flat[flat])
            if value > worst:
                i, j = divmod(flat, n)
                worst, worst_triple = value, (int(i), int(j), int(k))
    else:
        exhaustive = False
        rng = np.random.default_rng(seed)
        i, j, k = rng.integers(0, n, size=(3, SAMPLED_TRIPLES))
        triples = SAMPLED_TRIPLES
        excess = dist[i, j] - dist[i, k] - dist[k, j]
        pos = int(np.argmax(excess))
        if excess[pos] > 0:
            worst = float(excess[pos])
            worst_triple = (int(i[pos]), int(j[pos]), int(k[pos]))

    passed = worst <= tol and asymmetry <= tol and not nonzero_diag and negatives == 0
    logger.debug(
        "validate_metric %s: n=%d worst=%.3e asym=%.3e passed=%s",
        space.name, n, worst, asymmetry, passed,
    )
    return ValidationReport(
        point_count=n,
        tol=tol,
        passed=passed,
        worst_triangle_violation=worst,
        worst_triangle=worst_triple,
        worst_asymmetry=asymmetry,
        nonzero_diagonal=nonzero_diag,
        negative_entries=negatives,
        triples_checked=triples,
        exhaustive=exhaustive,
    )


def angle(d_xy: float, d_yz: float, d_xz: float, tol_clamp: Optional[float] = None) -> float:
    """
    Comparison angle at y of the Euclidean triangle with the given sides.

    Raises:
        DegenerateVertex: if d_xy or d_yz is zero
        NonMetricTriple: if the cosine leaves [-1, 1] by more than tol_clamp
    """
    tol_clamp = settings.tol_clamp if tol_clamp is None else tol_clamp
    if d_xy <= 0.0 or d_yz <= 0.0:
        raise DegenerateVertex(f"zero side at vertex: d_xy={d_xy}, d_yz={d_yz}")
    quotient = (d_xy * d_xy + d_yz * d_yz - d_xz * d_xz) / (2.0 * d_xy * d_yz)
    if abs(quotient) - 1.0 > tol_clamp:
        raise NonMetricTriple(
            f"sides ({d_xy}, {d_yz}, {d_xz}) give cosine {quotient}, outside clamp tolerance"
        )
    return float(np.arccos(np.clip(quotient, -1.0, 1.0)))


def check_reverse_triangle(
    space: FiniteMetricSpace,
    x: int,
    y: int,
    z: int,
    geodesic: Sequence[int],
    eps: float,
    slack: float = 0.0,
    tol_geodesic: Optional[float] = None,
) -> PropagationReport:
    """
    Propagate |d(x,z) - d(z,y)| >= eps d(x,y) to every later point of a geodesic.

    Args:
        space: Ambient space
        x, y, z: Point ids
        geodesic: Path starting at x and passing through z
        eps: Reverse-triangle ratio
        slack: Allowance subtracted from the required gap (approximate meshes)
        tol_geodesic: Tolerance for the path realizing distances

    Returns:
        PropagationReport with one entry per point from z to the path end
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tol = settings.tol_geodesic if tol_geodesic is None else tol_geodesic
    path = [int(p) for p in geodesic]
    if not path or path[0] != x:
        raise HypothesisViolated("geodesic must start at x")
    if z not in path:
        raise HypothesisViolated("geodesic must pass through z")

    d = space.dist
    arc = np.concatenate([[0.0], np.cumsum(d[path[:-1], path[1:]])])
    realized = np.abs(arc - d[x, path])
    if np.max(realized) > tol:
        raise HypothesisViolated(
            f"path is not a geodesic from x: max |arc - d(x, .)| = {np.max(realized):.3e}"
        )
    d_xy = d[x, y]
    if d[x, z] < d[z, y]:
        raise HypothesisViolated("requires d(x,z) >= d(z,y)")
    if abs(d[x, z] - d[z, y]) < eps * d_xy - tol:
        raise HypothesisViolated("requires |d(x,z) - d(z,y)| >= eps d(x,y)")

    start = path.index(z)
    required = eps * d_xy - slack
    points = []
    for k in range(start, len(path)):
        p = path[k]
        gap = float(abs(d[x, p] - d[p, y]))
        points.append(
            PropagationPoint(
                point=p,
                arc_length=float(arc[k]),
                gap=gap,
                required=float(required),
                passed=bool(gap >= required - 1e-12),
            )
        )
    return PropagationReport(x=x, y=y, z=z, eps=eps, slack=slack, points=points)


# =============================================================================
# Balls and nets
# =============================================================================


def restrict_ball(space: FiniteMetricSpace, center: int, radius: float) -> PointedBall:
    """Closed ball of the given radius; warns with EmptyBall if only the center qualifies."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    row = space.dist[center]
    members = np.flatnonzero(row <= radius)
    if len(members) == 1 and space.size > 1:
        others = np.delete(row, center)
        if radius < others.min():
            message = f"ball of radius {radius:g} around {center} contains only its center"
            logger.warning(message)
            warnings.warn(message, EmptyBall, stacklevel=2)
    return PointedBall(parent=space, center=center, radius=radius, members=members)


def farthest_point_sample(space: FiniteMetricSpace, count: int, seed_point: int = 0) -> NetResult:
    """
    Greedy farthest-point net.

    Args:
        space: Space to sample
        count: Net size (capped at the point count)
        seed_point: First net point

    Returns:
        NetResult with the chosen ids and the covering radius
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    count = min(count, space.size)
    chosen = [seed_point]
    nearest = space.dist[seed_point].copy()
    while len(chosen) < count:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, space.dist[nxt])
    return NetResult(indices=chosen, covering_radius=float(nearest.max()))


def net_for_radius(space: FiniteMetricSpace, radius: float, seed_point: int = 0) -> NetResult:
    """Smallest greedy net whose covering radius is at most `radius`."""
    chosen = [seed_point]
    nearest = space.dist[seed_point].copy()
    while nearest.max() > radius:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, space.dist[nxt])
    return NetResult(indices=chosen, covering_radius=float(nearest.max()))


def eccentricity(space: FiniteMetricSpace, i: int) -> float:
    return float(space.dist[i].max())


def ball_weight(space: FiniteMetricSpace, center: int, radius: float) -> float:
    return float(space.weight[space.dist[center] <= radius].sum())


def interior_points(space: FiniteMetricSpace, margin: float) -> np.ndarray:
    """Ids farther than `margin` from every flagged boundary point."""
    if space.boundary is None or not np.any(space.boundary):
        return np.arange(space.size)
    to_boundary = space.dist[:, np.asarray(space.boundary, dtype=bool)].min(axis=1)
    return np.flatnonzero(to_boundary > margin)


def euclidean_ball_volume(radius: float, dim: int) -> float:
    from scipy.special import gamma

    return float(np.pi ** (dim / 2.0) / gamma(dim / 2.0 + 1.0) * radius ** dim)


def volume_ratio(space: FiniteMetricSpace, center: int, radius: float, dim: int) -> float:
    """w(B_radius(center)) / Vol(B_radius(0^dim)), the measured volume-pinching echo."""
    ratio = ball_weight(space, center, radius) / euclidean_ball_volume(radius, dim)
    logger.debug("volume ratio at %d, radius %.4g: %.4f", center, radius, ratio)
    return ratio


# =============================================================================
# Shortest-path spaces
# =============================================================================


def _dijkstra_rows(graph, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return shortest_path(graph, method="D", directed=False, return_predecessors=True, indices=rows)


def shortest_path_space(
    point_count: int,
    edges: np.ndarray,
    lengths: np.ndarray,
    weight: Optional[np.ndarray] = None,
    coords: Optional[np.ndarray] = None,
    boundary: Optional[np.ndarray] = None,
    name: str = "graph",
    n_jobs: Optional[int] = None,
) -> FiniteMetricSpace:
    """
    All-pairs Dijkstra metric of an undirected weighted graph.

    Rows are computed in parallel over source chunks and stacked in order,
    so the result does not depend on n_jobs.
    """
    if point_count > settings.max_points:
        raise ResourceCap(f"{name}: {point_count} points exceeds max_points={settings.max_points}")
    graph = edge_graph(point_count, edges, lengths)
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    chunks = np.array_split(np.arange(point_count), max(1, min(point_count, 4 * max(n_jobs, 1))))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_dijkstra_rows)(graph, chunk) for chunk in chunks if len(chunk)
    )
    dist = np.vstack([r[0] for r in results])
    pred = np.vstack([r[1] for r in results])
    if not np.all(np.isfinite(dist)):
        raise NonFiniteEntry(f"{name}: graph is disconnected")
    dist = 0.5 * (dist + dist.T)
    weight = np.ones(point_count) if weight is None else weight
    logger.info("built %s: %d points, %d edges", name, point_count, len(edges))
    return FiniteMetricSpace(
        dist=dist,
        weight=weight,
        coords=coords,
        predecessors=pred,
        boundary=boundary,
        name=name,
    )


def edge_graph(point_count: int, edges: np.ndarray, lengths: np.ndarray) -> sparse.csr_matrix:
    """Symmetric sparse adjacency matrix; duplicate edges keep the shortest length."""
    edges = np.asarray(edges, dtype=int)
    lengths = np.asarray(lengths, dtype=float)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keep = lo != hi
    lo, hi, lengths = lo[keep], hi[keep], lengths[keep]
    order = np.lexsort((lengths, hi, lo))
    lo, hi, lengths = lo[order], hi[order], lengths[order]
    first = np.ones(len(lo), dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    lo, hi, lengths = lo[first], hi[first], lengths[first]
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    data = np.concatenate([lengths, lengths])
    return sparse.csr_matrix((data, (rows, cols)), shape=(point_count, point_count))
