"""
Angle drift of geodesics from the origin under Holder-continuous metrics.

Test metrics are radially symmetric conformal metrics g = lambda(|x|) delta
on the unit ball of R^dim, so the geodesics from 0 are radial lines and
their arc length is a one-dimensional quadrature. The distance between
two points at equal parameter t is found by shooting with finite-difference
Christoffel symbols.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, root

from app.core.errors import ValidationFailure
from app.schemas.cone import HolderDriftReport
from app.services.curvature import christoffel
from app.services.metric_core import angle

logger = logging.getLogger(__name__)

ESCAPE_RADIUS = 0.5


class ShootingDivergence(ValidationFailure):
    """Shooting left the half ball or failed to converge."""
    pass


@dataclass(frozen=True)
class HolderTestMetric:
    """g_ij = (1 + coefficient * |x|^beta) delta_ij; coefficient 0 gives the flat metric."""

    beta: float
    coefficient: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValidationFailure(f"beta must lie in (0, 1), got {self.beta}")
        if self.coefficient < 0:
            raise ValidationFailure("coefficient must be nonnegative")

    def conformal(self, radius):
        return 1.0 + self.coefficient * np.abs(radius) ** self.beta

    def tensor(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        lam = self.conformal(np.linalg.norm(points, axis=-1))
        return lam[:, None, None] * np.eye(self.dim)[None, :, :]

    def holder_norm(self, samples: int = 2000, seed: int = 0) -> float:
        """Sampled sup|lambda| + sup|lambda(x) - lambda(y)| / |x - y|^beta on the half ball."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1.0, 1.0, size=(samples, self.dim)) * ESCAPE_RADIUS / math.sqrt(self.dim)
        y = rng.uniform(-1.0, 1.0, size=(samples, self.dim)) * ESCAPE_RADIUS / math.sqrt(self.dim)
        lx = self.conformal(np.linalg.norm(x, axis=-1))
        ly = self.conformal(np.linalg.norm(y, axis=-1))
        gap = np.linalg.norm(x - y, axis=-1)
        keep = gap > 0
        seminorm = np.max(np.abs(lx - ly)[keep] / gap[keep] ** self.beta)
        return float(max(lx.max(), ly.max()) + seminorm)

    def radial_length(self, radius: float) -> float:
        value, _ = quad(lambda u: math.sqrt(self.conformal(u)), 0.0, radius)
        return value

    def radius_at(self, t: float) -> float:
        """Euclidean radius of the radial geodesic point at arc length t."""
        if t <= 0:
            return 0.0
        return brentq(lambda rho: self.radial_length(rho) - t, 0.0, t, xtol=1e-15, rtol=1e-13)


def _christoffel_at(metric: HolderTestMetric, x: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    dim = metric.dim
    h = max(rel_step * float(np.linalg.norm(x)), 1e-12)
    offsets = np.vstack([np.eye(dim) * h, -np.eye(dim) * h])
    values = metric.tensor(np.vstack([x[None, :], x + offsets]))
    dg = (values[1:1 + dim] - values[1 + dim:]) / (2.0 * h)
    return christoffel(np.linalg.inv(values[0]), dg)


def _geodesic_rhs(metric: HolderTestMetric, state: np.ndarray) -> np.ndarray:
    dim = metric.dim
    x, v = state[:dim], state[dim:]
    gamma = _christoffel_at(metric, x)
    return np.concatenate([v, -np.einsum("kij,i,j->k", gamma, v, v)])


def integrate_geodesic(
    metric: HolderTestMetric,
    start: np.ndarray,
    velocity: np.ndarray,
    steps: int = 100,
) -> np.ndarray:
    """
    RK4 integration of the geodesic equation on parameter [0, 1].

    Returns:
        Positions along the path, shape (steps + 1, dim)

    Raises:
        ShootingDivergence: if the path leaves the ball of radius 1/2
    """
    state = np.concatenate([start, velocity]).astype(float)
    h = 1.0 / steps
    path = [state[: metric.dim].copy()]
    for _ in range(steps):
        k1 = _geodesic_rhs(metric, state)
        k2 = _geodesic_rhs(metric, state + 0.5 * h * k1)
        k3 = _geodesic_rhs(metric, state + 0.5 * h * k2)
        k4 = _geodesic_rhs(metric, state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.linalg.norm(state[: metric.dim]) > ESCAPE_RADIUS or not np.all(np.isfinite(state)):
            raise ShootingDivergence("geodesic left the ball of radius 1/2")
        path.append(state[: metric.dim].copy())
    return np.array(path)


def shoot(
    metric: HolderTestMetric,
    p: np.ndarray,
    q: np.ndarray,
    steps: int = 100,
    tol: float = 1e-12,
) -> float:
    """
    Geodesic distance from p to q by shooting over (direction, length).

    Planar problems (dim 2) solve for (angle, length); higher dimensions
    shoot inside the plane spanned by p and q, which the radial symmetry
    keeps invariant.

    Raises:
        ShootingDivergence: if the iteration does not converge or escapes
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    chord = q - p
    scale = float(np.linalg.norm(chord))
    if scale == 0.0:
        return 0.0
    e1 = chord / scale
    normal = p - float(p @ e1) * e1
    if np.linalg.norm(normal) < 1e-14:
        return math.sqrt(metric.conformal(np.linalg.norm(0.5 * (p + q)))) * scale
    e2 = normal / np.linalg.norm(normal)

    def endpoint(params: np.ndarray) -> np.ndarray:
        direction, length = params
        unit = math.cos(direction) * e1 + math.sin(direction) * e2
        speed = length / math.sqrt(float(metric.conformal(np.linalg.norm(p))))
        end = integrate_geodesic(metric, p, speed * unit, steps)[-1]
        miss = end - q
        return np.array([miss @ e1, miss @ e2]) / scale

    guess = np.array([0.0, math.sqrt(float(metric.conformal(np.linalg.norm(0.5 * (p + q))))) * scale])
    solution = root(endpoint, guess, method="hybr", tol=tol)
    if not solution.success or np.max(np.abs(solution.fun)) > 1e-8:
        raise ShootingDivergence(f"shooting did not converge: {solution.message}")
    return float(abs(solution.x[1]))


def dyadic_grid(t_max: float = 0.05, levels: int = 10) -> list[float]:
    """t_max * 2^-k for k = 0..levels."""
    return [t_max * 2.0 ** (-k) for k in range(levels + 1)]


def holder_angle_drift(
    metric: HolderTestMetric,
    y: Sequence[float],
    z: Sequence[float],
    t_grid: Optional[Sequence[float]] = None,
) -> HolderDriftReport:
    """
    Dyadic angle drifts |angle(t) - angle(t/2)| and their log-log fit.

    Args:
        metric: Test metric
        y, z: Unit directions of the two radial geodesics
        t_grid: Dyadic arc-length grid t_0 > t_0/2 > ... (default 0.05 * 2^-k)

    Returns:
        HolderDriftReport; exponent and constant are None when every drift vanishes
    """
    y = np.asarray(y, dtype=float) / np.linalg.norm(y)
    z = np.asarray(z, dtype=float) / np.linalg.norm(z)
    t_grid = dyadic_grid() if t_grid is None else list(t_grid)
    angles = []
    for t in t_grid:
        rho = metric.radius_at(t)
        d = shoot(metric, rho * y, rho * z)
        angles.append(angle(t, t, d, tol_clamp=1e-6))
    drifts = [abs(a - b) for a, b in zip(angles[:-1], angles[1:])]
    report = HolderDriftReport(
        beta=metric.beta,
        amplitude=metric.coefficient,
        t_grid=list(t_grid),
        angles=angles,
        drifts=drifts,
    )
    ts = np.array(t_grid[:-1])
    ds = np.array(drifts)
    usable = ds > 1e-13
    if usable.sum() >= 2:
        slope, intercept = np.polyfit(np.log(ts[usable]), np.log(ds[usable]), 1)
        report.exponent = float(slope)
        report.constant = float(math.exp(intercept))
        report.extra["envelope"] = float(np.max(ds[usable] / ts[usable] ** slope))
        logger.info(
            "holder drift beta=%.2f: fitted exponent %.3f, constant %.3g",
            metric.beta, slope, report.constant,
        )
    else:
        logger.info("holder drift beta=%.2f: no measurable drift", metric.beta)
    return report


def dyadic_cauchy_bound(report: HolderDriftReport, i: int, j: int) -> float:
    """
    envelope * sum_{k=i}^{j} t_k^exponent, which bounds |angle(t_i) - angle(t_{j+1})|.

    The envelope is the smallest C with drift_k <= C t_k^exponent on the grid.
    """
    if report.exponent is None:
        return 0.0
    if not 0 <= i <= j < len(report.drifts):
        raise ValueError("need 0 <= i <= j < number of drifts")
    envelope = report.extra["envelope"]
    return float(sum(envelope * report.t_grid[k] ** report.exponent for k in range(i, j + 1)))
