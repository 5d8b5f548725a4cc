"""
Truncated-distance embedding x -> rho_x into L^2 of a weighted finite space.

The L^2 pairing is the weighted sum over points, assembled once into a Gram
matrix; embedded distances follow from the Gram identity. Two truncations
are available: "hard" keeps d(y, z) up to 10 r and drops it beyond, "tent"
uses max(0, 10 r - d(y, z)), whose differences agree with those of
min(d, 10 r).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import eigh

from app.core.config import settings
from app.core.errors import ValidationFailure
from app.schemas.embedding import (
    BoundCheck,
    DistortionReport,
    NearPairEstimate,
    ProjectionReport,
)
from app.services.metric_core import FiniteMetricSpace, MissingGeodesics, interior_points

logger = logging.getLogger(__name__)

SUPPORT = 10.0


class RankDeficient(ValidationFailure):
    """The Gram matrix has no positive spectrum to capture."""
    pass


def rho(base: FiniteMetricSpace, y: int, r: float) -> np.ndarray:
    """rho_y(z) = d(y, z) if d(y, z) <= 10 r, else 0."""
    if r <= 0:
        raise ValueError("r must be positive")
    row = base.dist[y]
    return np.where(row <= SUPPORT * r, row, 0.0)


def tent_rho(base: FiniteMetricSpace, y: int, r: float) -> np.ndarray:
    """max(0, 10 r - d(y, z))."""
    if r <= 0:
        raise ValueError("r must be positive")
    return np.maximum(SUPPORT * r - base.dist[y], 0.0)


def rho_matrix(base: FiniteMetricSpace, r: float, truncation: str) -> np.ndarray:
    """Rows rho_y for every point y."""
    if r <= 0:
        raise ValueError("r must be positive")
    if truncation == "hard":
        return np.where(base.dist <= SUPPORT * r, base.dist, 0.0)
    if truncation == "tent":
        return np.maximum(SUPPORT * r - base.dist, 0.0)
    raise ValueError(f"unknown truncation {truncation!r}")


def _gram_rows(rows: np.ndarray, values: np.ndarray, weight: np.ndarray) -> np.ndarray:
    return (values[rows] * weight) @ values.T


@dataclass(frozen=True, eq=False)
class EmbeddingGram:
    """G(x, y) = sum_z w(z) rho_x(z) rho_y(z) with its spectrum computed on demand."""

    base: FiniteMetricSpace
    r: float
    truncation: str
    gram: np.ndarray

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    def squared_distances(self) -> np.ndarray:
        diag = np.diag(self.gram)
        return np.maximum(diag[:, None] - 2.0 * self.gram + diag[None, :], 0.0)

    def distances(self) -> np.ndarray:
        return np.sqrt(self.squared_distances())

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues in decreasing order with matching eigenvector columns."""
        values, vectors = eigh(self.gram)
        order = np.argsort(values)[::-1]
        return values[order], vectors[:, order]

    def min_eigenvalue(self) -> float:
        return float(eigh(self.gram, eigvals_only=True)[0])


def build_gram(
    base: FiniteMetricSpace,
    r: float,
    truncation: Optional[str] = None,
    n_jobs: Optional[int] = None,
) -> EmbeddingGram:
    """
    Assemble the weighted Gram matrix of the truncated distance functions.

    Args:
        base: Weighted finite metric space
        r: Truncation scale
        truncation: "tent" (default from settings) or "hard"
        n_jobs: joblib workers over row chunks

    Returns:
        EmbeddingGram
    """
    truncation = settings.rho_truncation if truncation is None else truncation
    n_jobs = settings.n_jobs if n_jobs is None else n_jobs
    values = rho_matrix(base, r, truncation)
    chunks = [c for c in np.array_split(np.arange(base.size), max(1, 4 * max(n_jobs, 1))) if len(c)]
    blocks = Parallel(n_jobs=n_jobs)(delayed(_gram_rows)(c, values, base.weight) for c in chunks)
    gram = np.vstack(blocks)
    gram = 0.5 * (gram + gram.T)
    logger.info("gram for %s: %d points, r=%.4g, %s truncation", base.name, base.size, r, truncation)
    return EmbeddingGram(base=base, r=r, truncation=truncation, gram=gram)


def l2_distance(gram: EmbeddingGram, x: int, y: int) -> float:
    g = gram.gram
    return float(np.sqrt(max(g[x, x] - 2.0 * g[x, y] + g[y, y], 0.0)))


def default_subset(gram: EmbeddingGram) -> np.ndarray:
    """Points whose 10 r ball stays clear of the boundary; all points if none qualify."""
    subset = interior_points(gram.base, SUPPORT * gram.r)
    if len(subset) == 0:
        logger.warning("no interior points at margin %.4g; using every point", SUPPORT * gram.r)
        return np.arange(gram.size)
    return subset


def _distortion_from(embedded: np.ndarray, dist: np.ndarray, subset: np.ndarray) -> DistortionReport:
    n = len(subset)
    if n < 2:
        return DistortionReport(subset_size=n, pairs=0, c_up=1.0, c_lo=1.0)
    iu, ju = np.triu_indices(n, k=1)
    a, b = subset[iu], subset[ju]
    d = dist[a, b]
    e = embedded[a, b]
    keep = d > 0
    a, b, d, e = a[keep], b[keep], d[keep], e[keep]
    up = e / d
    with np.errstate(divide="ignore"):
        lo = np.where(e > 0, np.minimum(d, 1.0) / e, np.inf)
    i_up = int(np.argmax(up))
    i_lo = int(np.argmax(lo))
    return DistortionReport(
        subset_size=n,
        pairs=len(d),
        c_up=float(up[i_up]),
        c_lo=float(lo[i_lo]),
        up_witness=(int(a[i_up]), int(b[i_up])),
        lo_witness=(int(a[i_lo]), int(b[i_lo])),
    )


def distortion(gram: EmbeddingGram, subset: Optional[Sequence[int]] = None) -> DistortionReport:
    """
    Exact C_up and C_lo over all pairs of the subset.

    Args:
        gram: Embedding Gram
        subset: Point ids (default: boundary-clear interior points)

    Returns:
        DistortionReport; a single point gives C_up = C_lo = 1
    """
    subset = default_subset(gram) if subset is None else np.asarray(subset, dtype=int)
    if len(subset) == 0:
        raise ValueError("subset must be nonempty")
    report = _distortion_from(gram.distances(), gram.base.dist, subset)
    logger.info(
        "distortion over %d points: C_up=%.4g C_lo=%.4g", report.subset_size, report.c_up, report.c_lo
    )
    return report


def project(
    gram: EmbeddingGram,
    energy: Optional[float] = None,
    subset: Optional[Sequence[int]] = None,
    tol: float = 1e-9,
) -> tuple[np.ndarray, ProjectionReport]:
    """
    Keep the leading eigenvectors holding at least `energy` of the positive spectrum.

    Args:
        gram: Embedding Gram
        energy: Fraction in (0, 1]
        subset: Points for the before/after distortion (default interior)
        tol: Allowed increase of any pairwise distance, relative to the trace

    Returns:
        (coordinates of shape (n, N), ProjectionReport)

    Raises:
        RankDeficient: if the Gram matrix has no positive eigenvalue
    """
    energy = settings.projection_energy if energy is None else energy
    if not 0.0 < energy <= 1.0:
        raise ValueError("energy must lie in (0, 1]")
    values, vectors = gram.spectrum()
    positive = values > 0
    total = float(values[positive].sum())
    if total <= 0.0:
        raise RankDeficient("gram matrix has no positive spectrum")
    captured = np.cumsum(values[positive]) / total
    dimension = int(min(np.searchsorted(captured, energy - 1e-15) + 1, positive.sum()))
    coords = vectors[:, :dimension] * np.sqrt(values[:dimension])

    kept = coords @ coords.T
    sq = np.diag(kept)
    after = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * kept, 0.0))
    np.fill_diagonal(after, 0.0)
    before = gram.distances()
    slack = tol * max(float(np.trace(gram.gram)), 1.0)
    increase = float(np.max(after ** 2 - before ** 2))
    if increase > slack:
        logger.warning("projection increased a squared distance by %.3e", increase)

    subset = default_subset(gram) if subset is None else np.asarray(subset, dtype=int)
    report = ProjectionReport(
        energy=energy,
        dimension=dimension,
        captured=float(captured[dimension - 1]),
        max_increase=increase,
        before=_distortion_from(before, gram.base.dist, subset),
        after=_distortion_from(after, gram.base.dist, subset),
    )
    logger.info(
        "projection: N=%d of %d points, energy %.4f, C_lo %.4g -> %.4g",
        dimension, gram.size, report.captured, report.before.c_lo, report.after.c_lo,
    )
    return coords, report


# =============================================================================
# Lipschitz bounds
# =============================================================================


def check_upper_bound(gram: EmbeddingGram, subset: Optional[Sequence[int]] = None, tol: float = 1e-9) -> BoundCheck:
    """||rho_x - rho_y||^2 <= (w(B_20r(x)) + w(B_20r(y))) d(x, y)^2 over all pairs."""
    base = gram.base
    subset = np.arange(gram.size) if subset is None else np.asarray(subset, dtype=int)
    ball = (base.dist[subset] <= 2.0 * SUPPORT * gram.r) @ base.weight
    iu, ju = np.triu_indices(len(subset), k=1)
    a, b = subset[iu], subset[ju]
    lhs = gram.squared_distances()[a, b]
    rhs = (ball[iu] + ball[ju]) * base.dist[a, b] ** 2
    return _bound_check("upper", lhs - rhs, lhs, rhs, a, b, tol)


def check_far_pair_bound(gram: EmbeddingGram, subset: Optional[Sequence[int]] = None, tol: float = 1e-9) -> BoundCheck:
    """||rho_x - rho_y||^2 >= max(w(B_r/4(x)), w(B_r/4(y))) (r/2)^2 for d(x, y) > r."""
    base = gram.base
    r = gram.r
    subset = np.arange(gram.size) if subset is None else np.asarray(subset, dtype=int)
    ball = (base.dist[subset] <= 0.25 * r) @ base.weight
    iu, ju = np.triu_indices(len(subset), k=1)
    far = base.dist[subset[iu], subset[ju]] > r
    iu, ju = iu[far], ju[far]
    a, b = subset[iu], subset[ju]
    lhs = gram.squared_distances()[a, b]
    rhs = np.maximum(ball[iu], ball[ju]) * (0.5 * r) ** 2
    return _bound_check("far_pair", rhs - lhs, rhs, lhs, a, b, tol)


def _bound_check(name, excess, big, small, a, b, tol) -> BoundCheck:
    if len(excess) == 0:
        return BoundCheck(bound=name, pairs=0, violations=0, worst_ratio=0.0)
    scale = np.maximum(np.abs(big), 1.0)
    violations = int(np.sum(excess > tol * scale))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(small > 0, big / small, np.inf)
    worst = int(np.argmax(ratio))
    check = BoundCheck(
        bound=name,
        pairs=len(excess),
        violations=violations,
        worst_ratio=float(ratio[worst]),
        worst_pair=(int(a[worst]), int(b[worst])),
    )
    if violations:
        logger.warning("%s bound violated on %d of %d pairs", name, violations, len(excess))
    return check


# =============================================================================
# Contraction and expansion sets
# =============================================================================


def contraction_point(base: FiniteMetricSpace, x: int, z: int, s: float) -> int:
    """Vertex of the stored geodesic from x to z nearest to arc length s d(x, z)."""
    if not base.has_geodesics:
        raise MissingGeodesics(f"{base.name} stores no geodesics")
    path = base.geodesic(x, z)
    if len(path) == 1:
        return path[0]
    arc = np.concatenate([[0.0], np.cumsum(base.dist[path[:-1], path[1:]])])
    return int(path[int(np.argmin(np.abs(arc - s * base.dist[x, z])))])


def contraction_map(base: FiniteMetricSpace, x: int, s: float, t: float) -> dict[int, int]:
    """z -> contraction point, for every z in the closed ball B_t(x)."""
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    members = np.flatnonzero(base.dist[x] <= t)
    return {int(z): contraction_point(base, x, int(z), s) for z in members}


def contraction_set(base: FiniteMetricSpace, x: int, s: float, t: float) -> np.ndarray:
    """C^s_t(x): geodesic points at fraction s toward each z in B_t(x)."""
    return np.array(sorted(set(contraction_map(base, x, s, t).values())), dtype=int)


def expansion_set(base: FiniteMetricSpace, x: int, s: float, t: float, target: Sequence[int]) -> np.ndarray:
    """E^s_t(x, U): the z in B_t(x) whose contraction point lies in U."""
    target = set(int(u) for u in target)
    mapping = contraction_map(base, x, s, t)
    return np.array(sorted(z for z, c in mapping.items() if c in target), dtype=int)


def contraction_volume_ratio(base: FiniteMetricSpace, x: int, s: float, r: float) -> float:
    """w(C^s_10r(x)) / w(B_10r s(x))."""
    contracted = contraction_set(base, x, s, SUPPORT * r)
    ball = base.dist[x] <= SUPPORT * r * s
    return float(base.weight[contracted].sum() / base.weight[ball].sum())


def near_pair_lower_estimate(gram: EmbeddingGram, x: int, y: int) -> NearPairEstimate:
    """
    w(E^{d/r}_{10r}(x, B_{d/4}(y))) d^2 / 4 against ||rho_x - rho_y||^2, for 0 < d(x, y) <= r.

    Reported as a diagnostic; the estimate is not asserted.
    """
    base = gram.base
    d = float(base.dist[x, y])
    if not 0.0 < d <= gram.r:
        raise ValueError("near-pair estimate needs 0 < d(x, y) <= r")
    near_y = np.flatnonzero(base.dist[y] <= 0.25 * d)
    expanded = expansion_set(base, x, d / gram.r, SUPPORT * gram.r, near_y)
    weight = float(base.weight[expanded].sum())
    return NearPairEstimate(
        x=x,
        y=y,
        distance=d,
        expansion_weight=weight,
        estimate=weight * d * d / 4.0,
        measured=l2_distance(gram, x, y) ** 2,
    )
