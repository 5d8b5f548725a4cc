"""
Volume-preserving diffeomorphism families of the round S^2.

A segment rotates the sphere about an axis, damped by a cutoff of the
distance to the rotated great circle. The cutoff only depends on that
distance, so it is invariant under the rotation and the damped field is
divergence free. Segments live on unit parameter intervals, are the
identity on the outer quarters, and are concatenated into a family.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import ResourceLimitError, ValidationFailure
from app.schemas.flow import ScheduleEntry, ScheduleSummary, SkippedPair
from app.services.mesh_builders import sphere_sample_space
from app.services.metric_core import net_for_radius
from app.utils.smooth import cutoff, plateau_profile
from app.utils.sphere_geometry import (
    fibonacci_sphere,
    great_circle_distance,
    normalize,
    rotate,
)

logger = logging.getLogger(__name__)

MAX_EPS = math.pi / 16.0


class ClearanceInfeasible(ValidationFailure):
    """No great circle through y sits at the requested distance from x."""
    pass


class ScheduleOverflow(ResourceLimitError):
    """The schedule would exceed the configured parameter length or pair count."""
    pass


# =============================================================================
# Frame and field
# =============================================================================


@dataclass(frozen=True, eq=False)
class GreatCircleFrame:
    """Great circle {z : z . axis = 0} through `through`, at distance `clearance` from `anchor`."""

    axis: np.ndarray
    anchor: np.ndarray
    through: np.ndarray
    clearance: float

    def distance_to_circle(self, z: np.ndarray) -> np.ndarray:
        return np.arcsin(np.clip(np.abs(np.asarray(z) @ self.axis), 0.0, 1.0))

    def circle_points(self, count: int) -> np.ndarray:
        angles = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return rotate(np.broadcast_to(self.through, (count, 3)), self.axis, angles)


@dataclass(frozen=True, eq=False)
class TruncatedField:
    """b(z) K(z) with K(z) = axis x z and b = cutoff(d(z, circle), eps)."""

    frame: GreatCircleFrame
    eps: float
    amplitude: float = 1.0
    truncated: bool = True

    @property
    def axis(self) -> np.ndarray:
        return self.frame.axis

    def bump(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if not self.truncated:
            return np.ones(z.shape[:-1])
        return cutoff(self.frame.distance_to_circle(z), self.eps)

    def killing(self, z: np.ndarray) -> np.ndarray:
        return np.cross(self.axis, np.asarray(z, dtype=float))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.amplitude * self.bump(z)[..., None] * self.killing(z)

    def untruncated(self) -> "TruncatedField":
        return replace(self, truncated=False)

    def with_amplitude(self, amplitude: float) -> "TruncatedField":
        return replace(self, amplitude=amplitude)


def build_field(
    x: np.ndarray,
    y: np.ndarray,
    eps: float,
    amplitude: Optional[float] = None,
) -> TruncatedField:
    """
    Field whose circle passes through y at distance 4*eps from x.

    Args:
        x: Anchor point kept fixed (with its eps-ball)
        y: Point carried rigidly along the circle
        eps: Cutoff scale, 0 < eps < pi/16
        amplitude: Rotation speed multiplier

    Returns:
        TruncatedField

    Raises:
        ClearanceInfeasible: if d(x, y) is not in [4 eps, pi - 4 eps]
    """
    if not 0.0 < eps < MAX_EPS:
        raise ValueError(f"eps must lie in (0, pi/16), got {eps}")
    x = normalize(x)
    y = normalize(y)
    clearance = 4.0 * eps
    x_perp = x - float(x @ y) * y
    sin_d = float(np.linalg.norm(x_perp))
    sin_c = math.sin(clearance)
    if sin_d < sin_c * (1.0 - 1e-12):
        raise ClearanceInfeasible(
            f"d(x,y)={float(great_circle_distance(x, y)):.4f} leaves no circle through y "
            f"at distance {clearance:.4f} from x"
        )
    u = x_perp / sin_d
    v = np.cross(y, u)
    cos_phi = min(1.0, sin_c / sin_d)
    sin_phi = math.sqrt(max(0.0, 1.0 - cos_phi * cos_phi))
    axis = normalize(cos_phi * u + sin_phi * v)
    frame = GreatCircleFrame(axis=axis, anchor=x, through=y, clearance=clearance)
    amplitude = settings.flow_amplitude if amplitude is None else amplitude
    return TruncatedField(frame=frame, eps=eps, amplitude=amplitude)


# =============================================================================
# Flow
# =============================================================================


def flow(field: TruncatedField, z: np.ndarray, s: float, step: Optional[float] = None) -> np.ndarray:
    """
    Fixed-step RK4 integration of dz/ds = field(z), renormalized every step.

    Args:
        field: Generating field
        z: Point(s) on the sphere, shape (..., 3)
        s: Flow time (may be negative)
        step: Step size bound (default eps * flow_step_ratio)

    Returns:
        Image points with the same shape as z
    """
    z = np.array(z, dtype=float)
    if s == 0.0:
        return z
    step = field.eps * settings.flow_step_ratio if step is None else step
    if step <= 0:
        raise ValueError("step must be positive")
    n_steps = max(1, int(math.ceil(abs(s) / step)))
    h = s / n_steps
    for _ in range(n_steps):
        k1 = field(z)
        k2 = field(z + 0.5 * h * k1)
        k3 = field(z + 0.5 * h * k2)
        k4 = field(z + h * k3)
        z = normalize(z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    return z


def exact_flow(field: TruncatedField, z: np.ndarray, s: float) -> np.ndarray:
    """Closed-form flow: rotation about the axis by amplitude * b(z) * s."""
    z = np.asarray(z, dtype=float)
    return rotate(z, field.axis, field.amplitude * field.bump(z) * s)


def rotation_for_target(field: TruncatedField, theta: float) -> tuple[float, float]:
    """
    Rotation angle carrying `through` to distance closest to theta from `anchor`.

    Distances reachable along the circle fill [clearance, pi - clearance];
    targets outside are clamped to the nearest end.

    Returns:
        (angle, achieved distance)
    """
    frame = field.frame
    x, y, a = frame.anchor, frame.through, frame.axis
    c1 = float(x @ y)
    c2 = float(x @ np.cross(a, y))
    radius = math.hypot(c1, c2)
    base = math.atan2(c2, c1)
    ratio = max(-1.0, min(1.0, math.cos(theta) / radius))
    delta = math.acos(ratio)
    candidates = [_wrap(base + delta), _wrap(base - delta)]
    angle = min(candidates, key=abs)
    achieved = math.acos(max(-1.0, min(1.0, radius * math.cos(angle - base))))
    return angle, achieved


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


# =============================================================================
# Families
# =============================================================================


@dataclass(frozen=True, eq=False)
class FlowSegment:
    """Segment of a diffeomorphism family on the canonical interval [start, start + 1]."""

    field: TruncatedField
    start: float
    peak_time: float
    target: float
    achieved: float
    level: int = 1
    pair: Optional[tuple[int, int]] = None
    sample_ids: Optional[tuple[int, int]] = None

    def local_time(self, u: float) -> float:
        sigma = u - self.start
        if sigma <= 0.0 or sigma >= 1.0:
            return 0.0
        return float(self.peak_time * plateau_profile(sigma))


@dataclass(frozen=True, eq=False)
class DiffeoFamily:
    """
    Concatenated segments phi_s, s in R.

    `stretch` reparametrizes the family as phi_{s / stretch}; `freeze`
    (alpha) makes phi_s the identity for s <= -alpha.
    """

    segments: tuple = ()
    freeze: Optional[float] = None
    stretch: float = 1.0
    method: str = "rk4"
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.stretch < 1.0:
            raise ValueError("stretch must be >= 1")
        index = {}
        for segment in self.segments:
            key = int(math.floor(segment.start))
            if key in index:
                raise ValueError(f"two segments share the unit interval starting at {key}")
            index[key] = segment
        object.__setattr__(self, "_index", index)

    def canonical(self, s: float) -> float:
        return s / self.stretch

    def segment_at(self, s: float) -> Optional[FlowSegment]:
        if self.freeze is not None and s <= -self.freeze:
            return None
        u = self.canonical(s)
        return self._index.get(int(math.floor(u)))

    def local_time(self, s: float) -> float:
        segment = self.segment_at(s)
        return 0.0 if segment is None else segment.local_time(self.canonical(s))

    def is_identity(self, s: float) -> bool:
        return self.local_time(s) == 0.0

    def apply(self, s: float, points: np.ndarray, method: Optional[str] = None) -> np.ndarray:
        """phi_s applied to points of shape (..., 3)."""
        points = np.asarray(points, dtype=float)
        segment = self.segment_at(s)
        if segment is None:
            return points.copy()
        time = segment.local_time(self.canonical(s))
        if time == 0.0:
            return points.copy()
        if (method or self.method) == "exact":
            return exact_flow(segment.field, points, time)
        return flow(segment.field, points, time)

    def frozen(self, alpha: float) -> "DiffeoFamily":
        return replace(self, freeze=alpha, _index={})

    def stretched(self, stretch: float) -> "DiffeoFamily":
        return replace(self, stretch=stretch, _index={})

    def with_method(self, method: str) -> "DiffeoFamily":
        return replace(self, method=method, _index={})

    def interval(self, segment: FlowSegment) -> tuple[float, float]:
        return segment.start * self.stretch, (segment.start + 1.0) * self.stretch

    def midpoint(self, segment: FlowSegment) -> float:
        return (segment.start + 0.5) * self.stretch

    @property
    def total_length(self) -> float:
        return len(self.segments) * self.stretch


def identity_family() -> DiffeoFamily:
    return DiffeoFamily(segments=())


def pullback_distance(family: DiffeoFamily, s: float, y: np.ndarray, z: np.ndarray) -> float:
    """d_{g_s}(y, z) = d_g(phi_s(y), phi_s(z))."""
    images = family.apply(s, np.stack([np.asarray(y, float), np.asarray(z, float)]))
    return float(great_circle_distance(images[0], images[1]))


def make_segment(
    x: np.ndarray,
    y: np.ndarray,
    theta: float,
    eps: float,
    start: float,
    level: int = 1,
    pair: Optional[tuple[int, int]] = None,
    sample_ids: Optional[tuple[int, int]] = None,
) -> FlowSegment:
    """Segment whose plateau carries y to distance theta (within 4 eps) from x."""
    field = build_field(x, y, eps)
    angle, achieved = rotation_for_target(field, theta)
    return FlowSegment(
        field=field,
        start=start,
        peak_time=angle / field.amplitude,
        target=theta,
        achieved=achieved,
        level=level,
        pair=pair,
        sample_ids=sample_ids,
    )


def level_eps(level: int) -> float:
    """Cutoff scale at covering level N: 2^-N, capped below pi/16."""
    return min(2.0 ** (-level), 0.95 * MAX_EPS)


def theta_values(theta_grid: int) -> np.ndarray:
    """Midpoint grid of theta_grid targets on [0, pi]."""
    return (np.arange(theta_grid) + 0.5) * math.pi / theta_grid


def build_pair_schedule(
    y: np.ndarray,
    z: np.ndarray,
    targets: Sequence[float],
    levels: int,
    origin: float = 0.0,
    first_level: int = 1,
) -> DiffeoFamily:
    """
    Family that drives d(y, z) through every target once per level.

    Levels run from first_level to first_level + levels - 1; a target theta
    is reachable to within rounding when 4 eps <= theta <= pi - 4 eps.

    Segments march from `origin` toward -infinity, so finer levels sit at
    smaller parameters (smaller cone radii once s = f(r)).
    """
    if levels < 1 or first_level < 1:
        raise ValueError("levels and first_level must be >= 1")
    segments = []
    k = 0
    for level in range(first_level, first_level + levels):
        eps = level_eps(level)
        for theta in targets:
            segments.append(make_segment(y, z, float(theta), eps, origin - k - 1, level=level))
            k += 1
    logger.info("pair schedule: %d segments over %d levels", len(segments), levels)
    return DiffeoFamily(segments=tuple(segments))


def build_schedule(
    levels: int,
    theta_grid: int,
    sample_count: Optional[int] = None,
    origin: float = 0.0,
    reparametrize: bool = True,
) -> tuple[DiffeoFamily, list[ScheduleEntry], list[SkippedPair], ScheduleSummary]:
    """
    Covering schedule over all net pairs and a theta grid, level by level.

    Args:
        levels: Finest covering level N (nets of radius 2^-N for N = 1..levels)
        theta_grid: Targets per pair
        sample_count: Size of the exact great-circle sample the nets are drawn from
        origin: Canonical parameter where the first segment ends
        reparametrize: Stretch the parameter until measured derivative bounds are <= 1

    Returns:
        (family, entries, skipped pairs, summary)

    Raises:
        ScheduleOverflow: if the pair count or parameter length exceeds the caps
    """
    from app.services.flow_diagnostics import schedule_derivative_bounds

    if levels < 1 or theta_grid < 1:
        raise ValueError("levels and theta_grid must be >= 1")
    sample_count = settings.sphere_net_samples if sample_count is None else sample_count
    points = fibonacci_sphere(sample_count)
    space = sphere_sample_space(points, name="net-sample")
    thetas = theta_values(theta_grid)

    nets = {}
    planned = 0
    for level in range(1, levels + 1):
        net = net_for_radius(space, 2.0 ** (-level))
        nets[level] = net.indices
        m = len(net.indices)
        planned += m * (m - 1) // 2 * theta_grid
    if planned > settings.schedule_pair_cap:
        raise ScheduleOverflow(
            f"{planned} planned segments exceed schedule_pair_cap={settings.schedule_pair_cap}"
        )
    if planned > settings.schedule_length_cap:
        raise ScheduleOverflow(
            f"parameter length {planned} exceeds schedule_length_cap={settings.schedule_length_cap}"
        )

    segments: list[FlowSegment] = []
    skipped: list[SkippedPair] = []
    k = 0
    for level in range(1, levels + 1):
        eps = level_eps(level)
        ids = nets[level]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                x, y = points[ids[i]], points[ids[j]]
                for theta in thetas:
                    try:
                        segment = make_segment(
                            x, y, float(theta), eps, origin - k - 1,
                            level=level, pair=(i, j), sample_ids=(ids[i], ids[j]),
                        )
                    except ClearanceInfeasible:
                        skipped.append(
                            SkippedPair(
                                level=level,
                                pair=(i, j),
                                distance=float(space.dist[ids[i], ids[j]]),
                                reason="no great circle at clearance 4*eps",
                            )
                        )
                        break
                    segments.append(segment)
                    k += 1
        logger.info("level %d: %d net points, eps=%.4f", level, len(ids), eps)
    if skipped:
        logger.warning("%d net pairs skipped for clearance; finer levels cover them", len(skipped))

    family = DiffeoFamily(segments=tuple(segments))
    raw_bounds = None
    after = None
    if reparametrize and segments:
        raw_bounds = schedule_derivative_bounds(family)
        stretch = max(1.0, raw_bounds.d_s, math.sqrt(raw_bounds.d_ss), raw_bounds.grad_d_s)
        family = family.stretched(stretch)
        after = schedule_derivative_bounds(family)
    if family.total_length > settings.schedule_length_cap:
        raise ScheduleOverflow(
            f"parameter length {family.total_length:.1f} exceeds "
            f"schedule_length_cap={settings.schedule_length_cap}"
        )

    entries = []
    worst_error = 0.0
    for segment in segments:
        mid = family.midpoint(segment)
        x, y = points[segment.sample_ids[0]], points[segment.sample_ids[1]]
        achieved = pullback_distance(family, mid, x, y)
        error = abs(achieved - segment.target)
        worst_error = max(worst_error, error)
        entries.append(
            ScheduleEntry(
                level=segment.level,
                pair=segment.pair,
                sample_ids=segment.sample_ids,
                theta=segment.target,
                eps=segment.field.eps,
                interval=family.interval(segment),
                midpoint=mid,
                achieved=achieved,
                error=error,
            )
        )
    summary = ScheduleSummary(
        levels=levels,
        theta_grid=theta_grid,
        segments=len(segments),
        skipped=len(skipped),
        stretch=family.stretch,
        total_length=family.total_length,
        raw_bounds=raw_bounds,
        bounds_after=after,
        max_target_error=worst_error,
    )
    logger.info(
        "schedule: %d segments, %d skipped, stretch %.2f, worst target error %.4f",
        summary.segments, summary.skipped, summary.stretch, worst_error,
    )
    return family, entries, skipped, summary
