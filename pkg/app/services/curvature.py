"""
Finite-difference curvature of metrics given in coordinates.

A metric is a callable mapping points of shape (m, dim) to tensors of
shape (m, dim, dim). Derivatives come from one vectorized stencil
evaluation; Christoffel, Riemann and Ricci follow by einsum.
"""
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh

from app.core.errors import ValidationFailure
from app.schemas.cone import RicciReport, RicciSample
from app.services.sphere_flow import DiffeoFamily
from app.services.warp_profile import WarpProfile
from app.utils.sphere_geometry import from_spherical

logger = logging.getLogger(__name__)

MetricField = Callable[[np.ndarray], np.ndarray]

POLE_GUARD = 0.1


class ChartSingularity(ValidationFailure):
    """A sample sits too close to a coordinate pole of the spherical chart."""
    pass


def metric_jet(metric: MetricField, x: np.ndarray, steps: np.ndarray):
    """
    Metric with first and second derivatives at x by central differences.

    Returns:
        (g, dg, ddg) with dg[a, b, c] = d_a g_bc and ddg[a, b, c, d] = d_a d_b g_cd
    """
    x = np.asarray(x, dtype=float)
    steps = np.asarray(steps, dtype=float)
    dim = len(x)
    eye = np.eye(dim) * steps[:, None]
    offsets = [np.zeros(dim)]
    for a in range(dim):
        offsets += [eye[a], -eye[a]]
    pairs = [(a, b) for a in range(dim) for b in range(a + 1, dim)]
    for a, b in pairs:
        offsets += [eye[a] + eye[b], eye[a] - eye[b], -eye[a] + eye[b], -eye[a] - eye[b]]
    values = metric(x + np.array(offsets))

    g = values[0]
    dg = np.zeros((dim, dim, dim))
    ddg = np.zeros((dim, dim, dim, dim))
    for a in range(dim):
        plus, minus = values[1 + 2 * a], values[2 + 2 * a]
        dg[a] = (plus - minus) / (2.0 * steps[a])
        ddg[a, a] = (plus - 2.0 * g + minus) / steps[a] ** 2
    base = 1 + 2 * dim
    for k, (a, b) in enumerate(pairs):
        pp, pm, mp, mm = values[base + 4 * k: base + 4 * k + 4]
        mixed = (pp - pm - mp + mm) / (4.0 * steps[a] * steps[b])
        ddg[a, b] = ddg[b, a] = mixed
    return g, dg, ddg


def christoffel(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma[c, a, b] = 1/2 g^cd (d_a g_bd + d_b g_ad - d_d g_ab)."""
    return 0.5 * (
        np.einsum("cd,abd->cab", g_inv, dg)
        + np.einsum("cd,bad->cab", g_inv, dg)
        - np.einsum("cd,dab->cab", g_inv, dg)
    )


def christoffel_derivative(g_inv: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """dGamma[e, c, a, b] = d_e Gamma^c_ab."""
    dg_inv = -np.einsum("cf,efg,gd->ecd", g_inv, dg, g_inv)
    lowered = (
        dg
        + np.einsum("bad->abd", dg)
        - np.einsum("dab->abd", dg)
    )
    second = (
        ddg
        + np.einsum("ebad->eabd", ddg)
        - np.einsum("edab->eabd", ddg)
    )
    return 0.5 * (
        np.einsum("ecd,abd->ecab", dg_inv, lowered)
        + np.einsum("cd,eabd->ecab", g_inv, second)
    )


def riemann(gamma: np.ndarray, d_gamma: np.ndarray) -> np.ndarray:
    """R[a, b, c, d] = R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb."""
    return (
        np.einsum("cadb->abcd", d_gamma)
        - np.einsum("dacb->abcd", d_gamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )


def ricci(metric: MetricField, x: np.ndarray, steps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Ricci tensor and metric at x.

    Args:
        metric: Vectorized metric field
        x: Coordinates
        steps: Per-coordinate finite-difference steps

    Returns:
        (Ric, g), both (dim, dim)
    """
    g, dg, ddg = metric_jet(metric, x, steps)
    g_inv = np.linalg.inv(g)
    gamma = christoffel(g_inv, dg)
    d_gamma = christoffel_derivative(g_inv, dg, ddg)
    ric = np.einsum("abad->bd", riemann(gamma, d_gamma))
    return 0.5 * (ric + ric.T), g


def ricci_eigenvalues(metric: MetricField, x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Eigenvalues of Ric relative to g (generalized symmetric problem)."""
    ric, g = ricci(metric, x, steps)
    return eigh(ric, g, eigvals_only=True)


# =============================================================================
# Metrics in spherical charts
# =============================================================================


def round_sphere_metric(points: np.ndarray) -> np.ndarray:
    """Unit S^2 in (theta, phi): diag(1, sin^2 theta)."""
    theta = points[:, 0]
    out = np.zeros((len(points), 2, 2))
    out[:, 0, 0] = 1.0
    out[:, 1, 1] = np.sin(theta) ** 2
    return out


def cone_metric(profile: WarpProfile, family: DiffeoFamily, inner_step: float = 1e-5) -> MetricField:
    """
    dr^2 + r^2 h(r)^2 g_{f(r)} in (r, theta, phi), with g_s pulled back through phi_s.

    Points sharing a radius are pushed through one family evaluation.
    """
    exact = family.with_method("exact")

    def metric(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if np.any(np.sin(points[:, 1]) < POLE_GUARD):
            raise ChartSingularity("sample within the pole guard of the spherical chart")
        out = np.zeros((len(points), 3, 3))
        out[:, 0, 0] = 1.0
        for r in np.unique(points[:, 0]):
            rows = np.flatnonzero(points[:, 0] == r)
            theta, phi = points[rows, 1], points[rows, 2]
            stencil = np.concatenate([
                from_spherical(theta + inner_step, phi),
                from_spherical(theta - inner_step, phi),
                from_spherical(theta, phi + inner_step),
                from_spherical(theta, phi - inner_step),
            ])
            images = exact.apply(float(profile.f(r)), stencil).reshape(4, len(rows), 3)
            d_theta = (images[0] - images[1]) / (2.0 * inner_step)
            d_phi = (images[2] - images[3]) / (2.0 * inner_step)
            jac = np.stack([d_theta, d_phi], axis=1)
            scale = (r * float(profile.h(r))) ** 2
            out[rows, 1:, 1:] = scale * np.einsum("nik,njk->nij", jac, jac)
        return out

    return metric


def sphere_ricci_check(samples: int = 20, fd_step: float = 1e-3, seed: int = 0) -> RicciReport:
    """Ricci eigenvalues of the unit round S^2 (all equal to 1 analytically)."""
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(samples):
        theta = rng.uniform(0.3, math.pi - 0.3)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        values.extend(ricci_eigenvalues(round_sphere_metric, np.array([theta, phi]), np.full(2, fd_step)))
    return RicciReport(
        samples=samples,
        fd_step=fd_step,
        min_eigenvalue=float(min(values)),
        max_eigenvalue=float(max(values)),
    )


def ricci_spot_check(
    profile: WarpProfile,
    family: DiffeoFamily,
    r_min: float,
    r_max: float,
    samples: int = 100,
    fd_step: float = 1e-3,
    seed: int = 0,
    max_resamples: Optional[int] = None,
) -> RicciReport:
    """
    Min and max Ricci eigenvalue of the warped cone at random samples.

    Radii are log-uniform in [r_min, r_max]; the radial step is fd_step * r.
    Samples inside the pole guard are redrawn.

    Returns:
        RicciReport (reported, not asserted)
    """
    rng = np.random.default_rng(seed)
    metric = cone_metric(profile, family)
    max_resamples = 10 * samples if max_resamples is None else max_resamples
    points: list[RicciSample] = []
    resampled = 0
    while len(points) < samples:
        r = math.exp(rng.uniform(math.log(r_min), math.log(r_max)))
        theta = math.acos(rng.uniform(-1.0, 1.0))
        phi = rng.uniform(0.0, 2.0 * math.pi)
        x = np.array([r, theta, phi])
        try:
            eigen = ricci_eigenvalues(metric, x, np.array([fd_step * r, fd_step, fd_step]))
        except ChartSingularity:
            resampled += 1
            if resampled > max_resamples:
                raise
            logger.debug("resampling near pole at theta=%.3f", theta)
            continue
        points.append(
            RicciSample(
                r=r, theta=theta, phi=phi,
                min_eigenvalue=float(np.min(eigen)), max_eigenvalue=float(np.max(eigen)),
            )
        )
    if resampled:
        logger.warning("ricci spot-check resampled %d points near the chart poles", resampled)
    report = RicciReport(
        samples=samples,
        fd_step=fd_step,
        min_eigenvalue=min(p.min_eigenvalue for p in points),
        max_eigenvalue=max(p.max_eigenvalue for p in points),
        resampled=resampled,
        points=points,
    )
    logger.info(
        "ricci spot-check: %d samples, eigenvalues in [%.4g, %.4g]",
        samples, report.min_eigenvalue, report.max_eigenvalue,
    )
    return report
