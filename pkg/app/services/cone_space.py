"""
Meshed warped cone over the round S^2.

The cone (0, inf) x S^2 carries dr^2 + r^2 h(r)^2 g_{f(r)} with
g_s = phi_s* g. Shell k at radius r_k stores the images phi_{f(r_k)}(v)
of a fixed sphere mesh. Every vertex pair on a shell, and between a shell
and the next `shell_window` shells, is joined by the law-of-cosines chord
of the local cone over (S^2, h^2 g_s), with the pullback distance read off
the images. A virtual tip p joins the innermost shell radially.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from app.core.config import settings
from app.core.errors import ValidationFailure
from app.schemas.cone import AnglePoint, ConeSummary, LevelHits, TargetAttainment
from app.services.mesh_builders import SphereMesh, sphere_mesh
from app.services.metric_core import FiniteMetricSpace, ResourceCap, angle, edge_graph, shortest_path_space
from app.services.sphere_flow import DiffeoFamily
from app.services.warp_profile import WarpProfile
from app.utils.sphere_geometry import great_circle_distance

logger = logging.getLogger(__name__)

TIP = 0


class OutOfMeshRange(ValidationFailure):
    """Requested radius lies outside the meshed shells."""
    pass


@dataclass(frozen=True, eq=False)
class AngleMeasurement:
    t: float
    s: float
    angle_mesh: float
    angle_chord: float


@dataclass(frozen=True, eq=False)
class ConeSpace:
    """Shell graph of the warped cone with a virtual tip at id 0."""

    profile: WarpProfile
    family: DiffeoFamily
    mesh: SphereMesh
    radii: np.ndarray
    shell_images: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    radial_spacing: str = "geometric"
    _graph: Optional[sparse.csr_matrix] = None
    _rows: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_graph", edge_graph(self.size, self.edges, self.lengths))

    @property
    def shells(self) -> int:
        return len(self.radii)

    @property
    def size(self) -> int:
        return 1 + self.shells * self.mesh.size

    @property
    def r_min(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def reference(self) -> str:
        return "flat" if self.profile.identity and not self.family.segments else "warped"

    def node(self, shell: int, vertex: int) -> int:
        return 1 + shell * self.mesh.size + vertex

    def shell_of(self, node: int) -> tuple[int, int]:
        if node == TIP:
            raise ValueError("the tip belongs to no shell")
        return divmod(node - 1, self.mesh.size)

    def nearest_shell(self, t: float) -> int:
        if not self.r_min * (1.0 - 1e-12) <= t <= self.r_max * (1.0 + 1e-12):
            raise OutOfMeshRange(f"t={t:g} outside mesh range [{self.r_min:g}, {self.r_max:g}]")
        if self.radial_spacing == "geometric":
            return int(np.argmin(np.abs(np.log(self.radii) - math.log(t))))
        return int(np.argmin(np.abs(self.radii - t)))

    def distances_from(self, node: int, limit: float = np.inf) -> np.ndarray:
        """Single-source Dijkstra row, cached per (node, limit)."""
        key = (int(node), float(limit))
        if key not in self._rows:
            self._rows[key] = dijkstra(self._graph, directed=False, indices=int(node), limit=limit)
        return self._rows[key]

    def distance(self, u: int, v: int) -> float:
        return float(self.distances_from(u)[v])

    def coords(self) -> np.ndarray:
        """Chart coordinates r * v (the round-cone embedding of the nodes)."""
        shells = self.radii[:, None, None] * self.mesh.vertices[None, :, :]
        return np.vstack([np.zeros((1, 3)), shells.reshape(-1, 3)])

    def weights(self) -> np.ndarray:
        """Riemannian volume r^2 h^2 dr dA lumped to the nodes; phi_s preserves dA."""
        r = self.radii
        if self.shells > 1:
            widths = np.gradient(r)
        else:
            widths = np.array([r[0]])
        shell_factor = r ** 2 * self.profile.h(r) ** 2 * widths
        areas = self.mesh.vertex_areas()
        tip = 4.0 * math.pi * self.r_min ** 3 / 3.0
        return np.concatenate([[tip], (shell_factor[:, None] * areas[None, :]).ravel()])

    def to_metric_space(self, n_jobs: Optional[int] = None) -> FiniteMetricSpace:
        """All-pairs metric with stored geodesics; outermost shell flagged as boundary."""
        if self.size > settings.max_points:
            raise ResourceCap(f"cone has {self.size} points, max_points={settings.max_points}")
        boundary = np.zeros(self.size, dtype=bool)
        boundary[self.node(self.shells - 1, 0):] = True
        return shortest_path_space(
            self.size,
            self.edges,
            self.lengths,
            weight=self.weights(),
            coords=self.coords(),
            boundary=boundary,
            name=f"cone-{self.reference}",
            n_jobs=n_jobs,
        )

    def radial_error(self) -> float:
        """max |d(p, (r_k, v)) - r_k| over all nodes."""
        row = self.distances_from(TIP)[1:].reshape(self.shells, self.mesh.size)
        return float(np.max(np.abs(row - self.radii[:, None])))

    def summary(self) -> ConeSummary:
        return ConeSummary(
            points=self.size,
            shells=self.shells,
            sphere_res=self.mesh.size,
            r_min=self.r_min,
            r_max=self.r_max,
            radial_spacing=self.radial_spacing,
            h_inf=self.profile.h_inf,
            freeze_radius=self.profile.freeze_radius,
            reference=self.reference,
            max_radial_error=self.radial_error(),
        )


def shell_radii(r_min: float, r_max: float, shells: int, spacing: str = "geometric") -> np.ndarray:
    if not 0.0 < r_min < r_max:
        raise ValidationFailure(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    if shells < 2:
        raise ValidationFailure("at least two shells are required")
    if spacing == "geometric":
        return np.geomspace(r_min, r_max, shells)
    if spacing == "uniform":
        return np.linspace(r_min, r_max, shells)
    raise ValidationFailure(f"unknown radial spacing {spacing!r}")


def mesh_cone(
    profile: WarpProfile,
    family: DiffeoFamily,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None,
    shells: Optional[int] = None,
    sphere_res: Optional[int] = None,
    radial_spacing: Optional[str] = None,
    shell_window: Optional[int] = None,
) -> ConeSpace:
    """
    Mesh the warped cone on [r_min, r_max] x S^2.

    Args:
        profile: Warp profile (h, f)
        family: Sphere diffeomorphism family, evaluated at s = f(r)
        r_min: Innermost shell radius
        r_max: Outermost shell radius
        shells: Number of shells
        sphere_res: Sphere mesh vertex count
        radial_spacing: "geometric" or "uniform"
        shell_window: Each shell is joined to this many outer shells

    Returns:
        ConeSpace

    Raises:
        ResourceCap: if the node count exceeds max_points
    """
    r_min = settings.r_min if r_min is None else r_min
    r_max = settings.r_max if r_max is None else r_max
    shells = settings.shells if shells is None else shells
    sphere_res = settings.sphere_res if sphere_res is None else sphere_res
    radial_spacing = settings.radial_spacing if radial_spacing is None else radial_spacing
    shell_window = settings.shell_window if shell_window is None else shell_window
    if sphere_res < 12:
        raise ValidationFailure("sphere_res must be at least 12")
    if shell_window < 1:
        raise ValidationFailure("shell_window must be at least 1")
    size = 1 + shells * sphere_res
    if size > settings.max_points:
        raise ResourceCap(f"cone mesh would have {size} points, max_points={settings.max_points}")

    radii = shell_radii(r_min, r_max, shells, radial_spacing)
    mesh = sphere_mesh(sphere_res)
    n = mesh.size

    images = np.stack([family.apply(float(profile.f(r)), mesh.vertices) for r in radii])
    edges = [np.column_stack([np.full(n, TIP), 1 + np.arange(n)])]
    lengths = [np.full(n, radii[0])]

    # Pairs at spread >= pi are left out: the path through the tip has the same length r1 + r2.
    iu, ju = np.triu_indices(n, k=1)
    for k, r in enumerate(radii):
        spread = float(profile.h(r)) * great_circle_distance(images[k][iu], images[k][ju])
        keep = spread < math.pi
        edges.append(1 + k * n + np.column_stack([iu[keep], ju[keep]]))
        lengths.append(2.0 * r * np.sin(0.5 * spread[keep]))

    ii, jj = np.divmod(np.arange(n * n), n)
    for k in range(shells - 1):
        for j in range(k + 1, min(k + shell_window, shells - 1) + 1):
            r1, r2 = radii[k], radii[j]
            mid = 0.5 * (r1 + r2)
            mid_images = family.apply(float(profile.f(mid)), mesh.vertices)
            spread = float(profile.h(mid)) * great_circle_distance(mid_images[ii], mid_images[jj])
            keep = spread < math.pi
            chord = np.sqrt(np.maximum(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * np.cos(spread[keep]), 0.0))
            edges.append(np.column_stack([1 + k * n + ii[keep], 1 + j * n + jj[keep]]))
            lengths.append(np.maximum(chord, r2 - r1))

    cone = ConeSpace(
        profile=profile,
        family=family,
        mesh=mesh,
        radii=radii,
        shell_images=images,
        edges=np.vstack(edges),
        lengths=np.concatenate(lengths),
        radial_spacing=radial_spacing,
    )
    logger.info(
        "cone mesh: %d shells x %d vertices (%s), r in [%.3g, %.3g], %d edges",
        shells, n, radial_spacing, r_min, r_max, len(cone.edges),
    )
    return cone


# =============================================================================
# Angles
# =============================================================================


def angle_at_scale(cone: ConeSpace, y: np.ndarray, z: np.ndarray, t: float) -> AngleMeasurement:
    """
    Comparison angle at the tip between the radial geodesics through y and z at radius t.

    The mesh value uses Dijkstra distances; the chord value uses the cone
    over (S^2, h(t)^2 g_{f(t)}) evaluated exactly through the flow maps.

    Raises:
        OutOfMeshRange: if t lies outside [r_min, r_max]
    """
    k = cone.nearest_shell(t)
    t_k = float(cone.radii[k])
    s = float(cone.profile.f(t_k))
    vy = cone.mesh.nearest_vertex(y)
    vz = cone.mesh.nearest_vertex(z)
    if vy == vz:
        return AngleMeasurement(t=t_k, s=s, angle_mesh=0.0, angle_chord=0.0)

    # The path through the tip bounds every same-shell distance by 2 t.
    row = cone.distances_from(cone.node(k, vy), limit=2.0 * t_k * (1.0 + 1e-9))
    d_mesh = min(float(row[cone.node(k, vz)]), 2.0 * t_k)
    images = cone.shell_images[k]
    d_sphere = float(great_circle_distance(images[vy], images[vz]))
    spread = min(float(cone.profile.h(t_k)) * d_sphere, math.pi)
    chord = 2.0 * t_k * math.sin(spread / 2.0)
    return AngleMeasurement(
        t=t_k,
        s=s,
        angle_mesh=angle(t_k, t_k, d_mesh, tol_clamp=1e-6),
        angle_chord=angle(t_k, t_k, chord, tol_clamp=1e-6),
    )


def angle_trace(
    cone: ConeSpace,
    y: np.ndarray,
    z: np.ndarray,
    t_grid: Optional[Sequence[float]] = None,
) -> list[AnglePoint]:
    """
    Angle at the tip along a decreasing radius grid (default: every shell, outside in).

    Rows carry the target of the segment whose plateau holds at s = f(t).
    """
    t_grid = cone.radii[::-1] if t_grid is None else t_grid
    rows = []
    for t in t_grid:
        measured = angle_at_scale(cone, y, z, float(t))
        segment = cone.family.segment_at(measured.s)
        target = level = None
        if segment is not None:
            sigma = cone.family.canonical(measured.s) - segment.start
            if 0.375 <= sigma <= 0.625:
                target, level = segment.target, segment.level
        rows.append(
            AnglePoint(
                t=measured.t,
                s=measured.s,
                angle_mesh=measured.angle_mesh,
                angle_chord=measured.angle_chord,
                active_target=target,
                level=level,
            )
        )
    logger.info("angle trace: %d radii from %.3g down to %.3g", len(rows), rows[0].t, rows[-1].t)
    return rows


def attainment(
    trace: Sequence[AnglePoint],
    targets: Sequence[float],
    tol: float = 0.1,
    column: str = "angle_chord",
    levels: Sequence[int] = (),
) -> list[TargetAttainment]:
    """
    For each target, the radii whose angle lies within tol, grouped by schedule level.

    Levels listed in `levels` without a hit are reported as missing.
    """
    results = []
    for target in targets:
        hits = [row for row in trace if abs(getattr(row, column) - target) <= tol]
        grouped: dict = {}
        for row in hits:
            grouped.setdefault(row.level, []).append(row.t)
        grouped_levels = [
            LevelHits(level=level, t_values=values)
            for level, values in sorted(grouped.items(), key=lambda item: (item[0] is None, item[0] or 0))
        ]
        results.append(
            TargetAttainment(
                target=float(target),
                tol=tol,
                column=column,
                hits=[row.t for row in hits],
                levels=grouped_levels,
                missing_levels=[int(level) for level in levels if level not in grouped],
            )
        )
    return results


def oscillation(trace: Sequence[AnglePoint], column: str = "angle_chord") -> float:
    """max - min of the angle over the trace."""
    values = [getattr(row, column) for row in trace]
    return float(max(values) - min(values)) if values else 0.0


def levels_in_range(cone: ConeSpace) -> list[int]:
    """Schedule levels with at least one segment plateau midpoint inside the mesh range."""
    levels = set()
    for segment in cone.family.segments:
        s_mid = cone.family.midpoint(segment)
        r_mid = float(cone.profile.f_inverse(s_mid))
        if cone.r_min <= r_mid <= cone.r_max:
            levels.add(segment.level)
    return sorted(levels)


def flat_chord_error(cone: ConeSpace, shell: int, pairs: Sequence[tuple[int, int]]) -> float:
    """max |d_mesh - 2 t sin(d_g / 2)| / t over vertex pairs on one shell."""
    t = float(cone.radii[shell])
    worst = 0.0
    for a, b in pairs:
        d_mesh = cone.distances_from(cone.node(shell, a))[cone.node(shell, b)]
        d_g = float(great_circle_distance(cone.mesh.vertices[a], cone.mesh.vertices[b]))
        worst = max(worst, abs(d_mesh - 2.0 * t * math.sin(d_g / 2.0)) / t)
    return worst
