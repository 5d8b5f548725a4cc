"""
Gromov-Hausdorff bounds between finite metric spaces.

Upper bounds come from explicit correspondences: every point of X is sent
to Y by f and every point of Y is sent back by g, and d_GH <= dis / 2.
Seeds (identity, coordinate matching, distance-profile matching) are
refined by reassigning the pair that realizes the distortion. Lower bounds
compare diameters, eccentricity sets and distance-value sets, each of which
moves by at most the distortion of any correspondence.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial import cKDTree

from app.core.config import settings
from app.core.errors import ResourceLimitError
from app.schemas.reifenberg import GHBounds
from app.services.metric_core import FiniteMetricSpace

logger = logging.getLogger(__name__)

PROFILE_QUANTILES = np.linspace(0.0, 1.0, 9)


class SizeCap(ResourceLimitError):
    """A space exceeds the configured GH size cap."""
    pass


@dataclass(frozen=True, eq=False)
class Correspondence:
    """Relation {(i, f[i])} union {(g[j], j)}; total and surjective by construction."""

    f: np.ndarray
    g: np.ndarray
    distortion: float

    @property
    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.concatenate([np.arange(len(self.f)), self.g])
        b = np.concatenate([self.f, np.arange(len(self.g))])
        return a, b


def correspondence_distortion(
    dx: np.ndarray,
    dy: np.ndarray,
    pairs: tuple[np.ndarray, np.ndarray],
) -> float:
    """max over related pairs (x, y), (x', y') of |d_X(x, x') - d_Y(y, y')|."""
    a, b = (np.asarray(p, dtype=int) for p in pairs)
    if len(a) == 0:
        raise ValueError("a correspondence needs at least one pair")
    return float(np.max(np.abs(dx[np.ix_(a, a)] - dy[np.ix_(b, b)])))


def _profiles(dist: np.ndarray) -> np.ndarray:
    return np.quantile(dist, PROFILE_QUANTILES, axis=1).T


def _profile_seed(dx: np.ndarray, dy: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Match distance-to-anchor plus distance-profile quantiles around a random anchor pair."""
    px, py = _profiles(dx), _profiles(dy)
    anchor_x = int(rng.integers(len(dx)))
    anchor_y = int(np.argmin(np.max(np.abs(py - px[anchor_x]), axis=1)))
    fx = np.column_stack([dx[anchor_x], px])
    fy = np.column_stack([dy[anchor_y], py])
    f = cKDTree(fy).query(fx, p=np.inf)[1]
    g = cKDTree(fx).query(fy, p=np.inf)[1]
    return np.asarray(f, dtype=int), np.asarray(g, dtype=int)


def _coordinate_seed(cx: np.ndarray, cy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f = cKDTree(cy).query(cx)[1]
    g = cKDTree(cx).query(cy)[1]
    return np.asarray(f, dtype=int), np.asarray(g, dtype=int)


def _local_search(
    dx: np.ndarray,
    dy: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    rounds: int,
    candidates: int = 5,
) -> Correspondence:
    """Reassign the endpoint of a worst pair while that lowers its row maximum."""
    nx = len(f)
    f = f.copy()
    g = g.copy()
    a = np.concatenate([np.arange(nx), g])
    b = np.concatenate([f, np.arange(len(g))])
    table = np.abs(dx[np.ix_(a, a)] - dy[np.ix_(b, b)])
    for _ in range(rounds):
        row_max = table.max(axis=1)
        improved = False
        for p in np.argsort(row_max)[::-1][:candidates]:
            current = row_max[p]
            if p < nx:
                cost = np.max(np.abs(dx[a[p], a][None, :] - dy[:, b]), axis=1)
                best = int(np.argmin(cost))
                if cost[best] < current - 1e-15:
                    b[p] = f[p] = best
                    improved = True
            else:
                cost = np.max(np.abs(dx[:, a] - dy[b[p], b][None, :]), axis=1)
                best = int(np.argmin(cost))
                if cost[best] < current - 1e-15:
                    a[p] = g[p - nx] = best
                    improved = True
            if improved:
                row = np.abs(dx[a[p], a] - dy[b[p], b])
                table[p, :] = row
                table[:, p] = row
                break
        if not improved:
            break
    return Correspondence(f=f, g=g, distortion=float(table.max()))


def _check_size(space: FiniteMetricSpace) -> None:
    if space.size > settings.gh_size_cap:
        raise SizeCap(f"{space.name}: {space.size} points exceeds gh_size_cap={settings.gh_size_cap}")


def gh_upper(
    X: FiniteMetricSpace,
    Y: FiniteMetricSpace,
    restarts: Optional[int] = None,
    seed: int = 0,
    rounds: Optional[int] = None,
    centers: Optional[tuple[int, int]] = None,
    n_jobs: Optional[int] = None,
) -> tuple[float, Correspondence]:
    """
    Heuristic upper bound dis(R) / 2 over seeded correspondences.

    Args:
        X, Y: Spaces no larger than gh_size_cap
        restarts: Random profile seeds
        seed: Base seed; restart k uses seed + k
        rounds: Local search rounds per seed
        centers: Base points used to center coordinates for the coordinate seed
        n_jobs: joblib workers over seeds

    Returns:
        (bound, best correspondence)

    Raises:
        SizeCap: if either space is larger than gh_size_cap
    """
    _check_size(X)
    _check_size(Y)
    restarts = settings.gh_restarts if restarts is None else restarts
    rounds = settings.gh_local_search_rounds if rounds is None else rounds
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    dx, dy = X.dist, Y.dist

    seeds = []
    if X.size == Y.size:
        seeds.append((np.arange(X.size), np.arange(Y.size)))
    if X.coords is not None and Y.coords is not None and X.coords.shape[1] == Y.coords.shape[1]:
        cx, cy = X.coords, Y.coords
        if centers is not None:
            cx = cx - cx[centers[0]]
            cy = cy - cy[centers[1]]
        seeds.append(_coordinate_seed(cx, cy))
    for k in range(restarts):
        seeds.append(_profile_seed(dx, dy, np.random.default_rng(seed + k)))

    results = Parallel(n_jobs=n_jobs)(
        delayed(_local_search)(dx, dy, f, g, rounds) for f, g in seeds
    )
    best = min(range(len(results)), key=lambda k: (results[k].distortion, k))
    corr = results[best]
    logger.debug(
        "gh upper %s vs %s: %d seeds, best distortion %.4g", X.name, Y.name, len(seeds), corr.distortion
    )
    return 0.5 * corr.distortion, corr


def _hausdorff_1d(u: np.ndarray, v: np.ndarray) -> float:
    u = np.unique(u)
    v = np.unique(v)

    def one_side(p, q):
        idx = np.clip(np.searchsorted(q, p), 1, len(q) - 1) if len(q) > 1 else np.zeros(len(p), dtype=int)
        left = np.abs(p - q[np.maximum(idx - 1, 0)])
        right = np.abs(p - q[idx])
        return float(np.max(np.minimum(left, right)))

    return max(one_side(u, v), one_side(v, u))


def gh_lower_parts(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> tuple[float, float, float]:
    """(diameter, eccentricity-set, distance-value-set) lower bounds."""
    diameter = 0.5 * abs(X.diameter - Y.diameter)
    eccentricity = 0.5 * _hausdorff_1d(X.dist.max(axis=1), Y.dist.max(axis=1))
    values = 0.5 * _hausdorff_1d(X.dist[np.triu_indices(X.size)], Y.dist[np.triu_indices(Y.size)])
    return diameter, eccentricity, values


def gh_lower(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """Largest of the three certified lower bounds."""
    return max(gh_lower_parts(X, Y))


def gh_bounds(
    X: FiniteMetricSpace,
    Y: FiniteMetricSpace,
    seed: int = 0,
    centers: Optional[tuple[int, int]] = None,
    n_jobs: Optional[int] = None,
) -> GHBounds:
    diameter, eccentricity, values = gh_lower_parts(X, Y)
    upper, _ = gh_upper(X, Y, seed=seed, centers=centers, n_jobs=n_jobs)
    lower = max(diameter, eccentricity, values)
    return GHBounds(
        lower=lower,
        upper=max(upper, lower),
        diameter_bound=diameter,
        eccentricity_bound=eccentricity,
        value_set_bound=values,
        seeds=settings.gh_restarts,
    )
