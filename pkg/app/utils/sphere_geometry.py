"""
Round unit-sphere helpers.

Points are rows of an (..., 3) array with unit norm. All functions are
vectorized over leading axes.
"""
import numpy as np

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale vectors to unit length along the last axis."""
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def great_circle_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Round-sphere distance, stable near 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)


def pairwise_great_circle(points: np.ndarray) -> np.ndarray:
    """Dense matrix of great-circle distances between unit vectors."""
    gram = np.clip(points @ points.T, -1.0, 1.0)
    dist = np.arccos(gram)
    np.fill_diagonal(dist, 0.0)
    return 0.5 * (dist + dist.T)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Nearly uniform deterministic point set on the unit sphere."""
    if n < 4:
        raise ValueError(f"fibonacci_sphere needs at least 4 points, got {n}")
    k = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * (k + 0.5) / n
    radius = np.sqrt(1.0 - z * z)
    phi = GOLDEN_ANGLE * k
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])


def tangent_frame(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal tangent frame (e1, e2) at each point, with e1 x e2 = z.

    The helper axis is the coordinate axis least aligned with z, so the
    frame is deterministic and smooth away from the switching set.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    helper = np.zeros_like(z)
    idx = np.argmin(np.abs(z), axis=-1)
    helper[np.arange(len(z)), idx] = 1.0
    e1 = normalize(helper - np.sum(helper * z, axis=-1, keepdims=True) * z)
    e2 = np.cross(z, e1)
    return e1, e2


def exp_map(z: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Round-sphere exponential map at z applied to tangent vector v."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(norm > 0.0, norm, 1.0)
    return np.cos(norm) * z + np.sin(norm) * v / safe


def rotate(points: np.ndarray, axis: np.ndarray, angle) -> np.ndarray:
    """
    Rodrigues rotation of points about a unit axis.

    Args:
        points: (..., 3) array
        axis: unit 3-vector
        angle: scalar or array broadcastable to points[..., 0]

    Returns:
        Rotated points
    """
    points = np.asarray(points, dtype=float)
    angle = np.asarray(angle, dtype=float)[..., None]
    cos_a = np.cos(angle)
    sin_a = np.sin(angle)
    cross = np.cross(axis, points)
    dot = np.sum(points * axis, axis=-1, keepdims=True)
    return points * cos_a + cross * sin_a + axis * dot * (1.0 - cos_a)


def signed_triangle_area(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed area of geodesic triangles (Van Oosterom-Strackee solid angle)."""
    numerator = np.sum(a * np.cross(b, c), axis=-1)
    denominator = (
        1.0
        + np.sum(a * b, axis=-1)
        + np.sum(b * c, axis=-1)
        + np.sum(c * a, axis=-1)
    )
    return 2.0 * np.arctan2(numerator, denominator)


def from_spherical(theta, phi) -> np.ndarray:
    """Polar angle theta, azimuth phi to unit vectors."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sin_t = np.sin(theta)
    return np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)], axis=-1)

