"""
(eps, r)-Reifenberg classification of points in finite metric spaces.

A point y passes at (eps, r) when every tested ball B_s(y), s = r 2^-k with k >= 1,
has d_GH(B_s(y), B_s(0^n)) < eps s. The GH distance is bracketed by
gh_distance, so a scale can also come out INCONCLUSIVE when the bracket
straddles the threshold.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from app.core.config import settings
from app.core.errors import ValidationFailure
from app.schemas.reifenberg import ReifenbergProfile, ScaleVerdict, UniformProfileRow, Verdict
from app.services.gh_distance import gh_lower, gh_upper
from app.services.mesh_builders import euclidean_space, lattice_points
from app.services.metric_core import (
    FiniteMetricSpace,
    ResourceCap,
    euclidean_ball_volume,
    farthest_point_sample,
    interior_points,
    restrict_ball,
)

logger = logging.getLogger(__name__)


class ScaleBelowResolution(ValidationFailure):
    """No tested scale is at least resolution_factor times the mesh spacing."""
    pass


# =============================================================================
# Reference balls and model spaces
# =============================================================================


def mesh_spacing(space: FiniteMetricSpace) -> float:
    """Median nearest-neighbor distance."""
    if space.size < 2:
        return 0.0
    dist = space.dist.copy()
    np.fill_diagonal(dist, np.inf)
    return float(np.median(dist.min(axis=1)))


def euclidean_reference_ball(
    dim: int,
    radius: float,
    spacing: Optional[float] = None,
    count: Optional[int] = None,
    kind: Optional[str] = None,
    seed: int = 0,
) -> FiniteMetricSpace:
    """
    Finite model of the closed ball B_radius(0^dim) with the origin as point 0.

    Args:
        dim: Euclidean dimension
        radius: Ball radius
        spacing: Lattice spacing ("lattice" kind)
        count: Point count ("sampled" kind)
        kind: "lattice" (cubic lattice points inside the ball) or
            "sampled" (uniform rejection sample thinned by farthest points)
        seed: Sampling seed

    Raises:
        ValueError: if the parameters for the chosen kind are missing
    """
    kind = kind or settings.reference_kind
    if kind == "lattice":
        if spacing is None or spacing <= 0:
            raise ValueError("lattice reference needs a positive spacing")
        per_axis = 2 * int(math.ceil(radius / spacing)) + 1
        if per_axis ** dim > 50 * settings.max_points:
            raise ResourceCap(f"reference lattice with {per_axis}^{dim} points is too large")
        points = lattice_points(dim, per_axis, spacing)
        points = points[np.linalg.norm(points, axis=1) <= radius * (1.0 + 1e-12)]
        order = np.argsort(np.linalg.norm(points, axis=1), kind="stable")
        points = points[order]
    elif kind == "sampled":
        if count is None or count < 1:
            raise ValueError("sampled reference needs a positive count")
        rng = np.random.default_rng(seed)
        pool = []
        while sum(len(p) for p in pool) < 4 * count:
            cube = rng.uniform(-radius, radius, size=(8 * count, dim))
            pool.append(cube[np.linalg.norm(cube, axis=1) <= radius])
        points = np.vstack([np.zeros((1, dim))] + pool)
        if len(points) > settings.max_points:
            points = points[: settings.max_points]
        dense = euclidean_space(points, name="reference-pool")
        net = farthest_point_sample(dense, count, seed_point=0)
        points = points[net.indices]
    else:
        raise ValueError(f"unknown reference kind {kind!r}")
    return euclidean_space(points, name=f"B_{radius:g}(0^{dim})-{kind}")


def sharp_cone_space(
    h_inf: float,
    rings: int = 40,
    angular: int = 64,
    r_max: float = 1.0,
) -> FiniteMetricSpace:
    """
    Cone over a circle of length 2 pi h_inf with exact distances.

    Points at radii r_max k / rings and angles 2 pi j / angular are joined
    by the unrolled law of cosines; once h_inf * dphi reaches pi the shortest
    path runs through the tip and the distance is r1 + r2. Point 0 is the tip
    and the outer ring is flagged as boundary.
    """
    if not 0.0 < h_inf <= 1.0:
        raise ValidationFailure(f"h_inf must lie in (0, 1], got {h_inf}")
    count = 1 + rings * angular
    if count > settings.max_points:
        raise ResourceCap(f"sharp cone with {count} points exceeds max_points={settings.max_points}")
    radii = np.concatenate([[0.0], np.repeat(r_max * np.arange(1, rings + 1) / rings, angular)])
    phi = np.concatenate([[0.0], np.tile(2.0 * np.pi * np.arange(angular) / angular, rings)])
    gap = np.abs(phi[:, None] - phi[None, :])
    gap = np.minimum(gap, 2.0 * np.pi - gap)
    opening = np.minimum(h_inf * gap, np.pi)
    r1, r2 = radii[:, None], radii[None, :]
    dist = np.sqrt(np.maximum(r1 ** 2 + r2 ** 2 - 2.0 * r1 * r2 * np.cos(opening), 0.0))
    np.fill_diagonal(dist, 0.0)
    dr = r_max / rings
    weight = np.concatenate([[0.25 * np.pi * h_inf * dr ** 2], radii[1:] * dr * 2.0 * np.pi * h_inf / angular])
    coords = np.column_stack([radii * np.cos(phi), radii * np.sin(phi)])
    return FiniteMetricSpace(
        dist=dist,
        weight=weight,
        coords=coords,
        boundary=radii >= r_max * (1.0 - 1e-12),
        name=f"sharp-cone-{h_inf:g}",
    )


# =============================================================================
# Classification
# =============================================================================


def scale_grid(r: float, scale_count: int) -> list[float]:
    """r/2, r/4, ..., r 2^-scale_count; every tested scale lies strictly below r."""
    if r <= 0 or scale_count < 1:
        raise ValueError("need r > 0 and scale_count >= 1")
    return [r * 2.0 ** (-k) for k in range(1, scale_count + 1)]


def _ball_bounds(
    space: FiniteMetricSpace,
    y: int,
    s: float,
    euclid_dim: int,
    reference_kind: str,
    seed: int,
) -> tuple[float, float, int, int]:
    ball = restrict_ball(space, y, s)
    cap = settings.gh_size_cap
    members = ball.members
    if len(members) > cap:
        net = farthest_point_sample(ball.as_space(), cap, seed_point=ball.center_local)
        members = members[net.indices]
    else:
        members = np.concatenate([[y], members[members != y]])
    local = space.subspace(members, name=f"B_{s:g}({y})")

    if reference_kind == "lattice":
        spacing = mesh_spacing(local)
        if spacing <= 0 or euclidean_ball_volume(s, euclid_dim) / spacing ** euclid_dim > cap:
            spacing = 1.1 * (euclidean_ball_volume(s, euclid_dim) / cap) ** (1.0 / euclid_dim)
        reference = euclidean_reference_ball(euclid_dim, s, spacing=spacing, kind="lattice")
        if reference.size > cap:
            net = farthest_point_sample(reference, cap, seed_point=0)
            reference = reference.subspace(net.indices, name=reference.name)
    else:
        reference = euclidean_reference_ball(euclid_dim, s, count=local.size, kind="sampled", seed=seed)

    lower = gh_lower(local, reference)
    upper, _ = gh_upper(local, reference, seed=seed, centers=(0, 0), n_jobs=1)
    return lower, max(upper, lower), local.size, reference.size


def _verdict(lower: float, upper: float, threshold: float) -> Verdict:
    if lower >= threshold:
        return Verdict.FAIL
    if upper < threshold:
        return Verdict.PASS
    return Verdict.INCONCLUSIVE


def _combine(verdicts: Sequence[Verdict]) -> Verdict:
    if any(v == Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if verdicts and all(v == Verdict.PASS for v in verdicts):
        return Verdict.PASS
    return Verdict.INCONCLUSIVE


def sample_net(space: FiniteMetricSpace, count: int, margin: float = 0.0, seed_point: int = 0) -> list[int]:
    """
    Farthest-point net over the points farther than `margin` from the boundary.

    The net starts at seed_point when it is interior, so cones keep their tip.

    Raises:
        ValidationFailure: if no point lies farther than margin from the boundary
    """
    candidates = interior_points(space, margin)
    if len(candidates) == 0:
        raise ValidationFailure(f"no point of {space.name} lies farther than {margin:g} from the boundary")
    start = np.flatnonzero(candidates == seed_point)
    net = farthest_point_sample(space.subspace(candidates), count, seed_point=int(start[0]) if len(start) else 0)
    logger.info(
        "net of %d points over %d interior points, covering radius %.4g",
        len(net.indices), len(candidates), net.covering_radius,
    )
    return [int(candidates[i]) for i in net.indices]


def _resolvable(scales: Sequence[float], spacing: float) -> tuple[list[float], list[float]]:
    floor = settings.resolution_factor * spacing
    kept = [s for s in scales if s >= floor]
    skipped = [s for s in scales if s < floor]
    if not kept:
        raise ScaleBelowResolution(
            f"largest scale {max(scales):g} is below {settings.resolution_factor:g} x spacing {spacing:g}"
        )
    return kept, skipped


def reifenberg_classify(
    space: FiniteMetricSpace,
    y: int,
    eps: float,
    r: float,
    scale_count: int = 4,
    euclid_dim: int = 3,
    reference_kind: Optional[str] = None,
    seed: int = 0,
    n_jobs: Optional[int] = None,
) -> ReifenbergProfile:
    """
    Classify y at (eps, r) over the dyadic scales r 2^-k, k = 1..scale_count.

    Scales below resolution_factor times the mesh spacing are skipped and
    listed in the profile.

    Raises:
        ScaleBelowResolution: if every requested scale is below resolution
        SizeCap: if a reference ball cannot be thinned below gh_size_cap
    """
    if eps <= 0:
        raise ValidationFailure("eps must be positive")
    reference_kind = reference_kind or settings.reference_kind
    spacing = mesh_spacing(space)
    scales, skipped = _resolvable(scale_grid(r, scale_count), spacing)
    if skipped:
        logger.info("point %d: skipping %d scales below resolution", y, len(skipped))

    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    bounds = Parallel(n_jobs=n_jobs)(
        delayed(_ball_bounds)(space, y, s, euclid_dim, reference_kind, seed) for s in scales
    )
    rows = []
    for s, (lower, upper, ball_size, ref_size) in zip(scales, bounds):
        threshold = eps * s
        rows.append(ScaleVerdict(
            scale=s,
            threshold=threshold,
            lower=lower,
            upper=upper,
            ball_size=ball_size,
            reference_size=ref_size,
            verdict=_verdict(lower, upper, threshold),
        ))
    profile = ReifenbergProfile(
        point=y,
        eps=eps,
        r=r,
        euclid_dim=euclid_dim,
        spacing=spacing,
        reference_kind=reference_kind,
        scales=rows,
        skipped_scales=skipped,
        verdict=_combine([row.verdict for row in rows]),
    )
    logger.info("point %d at (eps=%g, r=%g): %s", y, eps, r, profile.verdict.value)
    return profile


def uniform_profile(
    space: FiniteMetricSpace,
    eps_grid: Sequence[float],
    r_grid: Sequence[float],
    points: Sequence[int],
    euclid_dim: int = 3,
    scale_count: int = 3,
    reference_kind: Optional[str] = None,
    seed: int = 0,
    n_jobs: Optional[int] = None,
) -> tuple[list[UniformProfileRow], list[ReifenbergProfile]]:
    """
    For each eps, the largest r in r_grid at which every point passes.

    GH brackets depend only on (point, scale), so they are computed once
    and reused across the whole (eps, r) grid.

    Returns:
        (one row per eps, the per-point profiles at each eps and its passing r)
    """
    reference_kind = reference_kind or settings.reference_kind
    spacing = mesh_spacing(space)
    floor = settings.resolution_factor * spacing
    all_scales = sorted({s for r in r_grid for s in scale_grid(r, scale_count) if s >= floor}, reverse=True)
    if not all_scales:
        raise ScaleBelowResolution(f"every scale in r_grid is below {floor:g}")

    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    jobs = [(y, s) for y in points for s in all_scales]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_ball_bounds)(space, y, s, euclid_dim, reference_kind, seed) for y, s in jobs
    )
    cache = dict(zip(jobs, results))

    def profile_at(y: int, eps: float, r: float) -> Optional[ReifenbergProfile]:
        scales = [s for s in scale_grid(r, scale_count) if s >= floor]
        if not scales:
            return None
        rows = []
        for s in scales:
            lower, upper, ball_size, ref_size = cache[(y, s)]
            rows.append(ScaleVerdict(
                scale=s, threshold=eps * s, lower=lower, upper=upper,
                ball_size=ball_size, reference_size=ref_size,
                verdict=_verdict(lower, upper, eps * s),
            ))
        return ReifenbergProfile(
            point=y, eps=eps, r=r, euclid_dim=euclid_dim, spacing=spacing,
            reference_kind=reference_kind, scales=rows,
            skipped_scales=[s for s in scale_grid(r, scale_count) if s < floor],
            verdict=_combine([row.verdict for row in rows]),
        )

    table = []
    profiles = []
    for eps in sorted(eps_grid):
        best = None
        best_profiles = []
        for r in sorted(r_grid, reverse=True):
            found = [profile_at(y, eps, r) for y in points]
            if all(p is not None and p.verdict == Verdict.PASS for p in found):
                best = r
                best_profiles = found
                break
        table.append(UniformProfileRow(eps=eps, r=best, points=len(points)))
        profiles.extend(best_profiles)
        logger.info("uniform profile eps=%g: r=%s", eps, best)
    return table, profiles
