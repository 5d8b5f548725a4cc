"""
Warp profiles (h, f) for the cone metric dr^2 + r^2 h(r)^2 g(f(r)).

h runs from 1 at the tip to h_inf at infinity; f sends (0, inf) onto the
whole line with r f'(r) -> 0 at both ends, so every schedule segment of
the sphere family is visited on a dyadic band of radii.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.errors import ValidationFailure
from app.schemas.cone import ProfileCheck
from app.utils.smooth import smoothstep, smoothstep_derivative

logger = logging.getLogger(__name__)


class ConstraintViolated(ValidationFailure):
    """A warp profile misses one of its asymptotic constraints."""
    pass


@dataclass(frozen=True)
class WarpProfile:
    """h(r) = 1 - (1 - h_inf) sigma(ln r) psi(r), f(r) = sign(ln r) sqrt|ln r|."""

    h_inf: float
    freeze_radius: Optional[float] = None
    identity: bool = False

    def __post_init__(self):
        if not 0.0 < self.h_inf <= 1.0:
            raise ConstraintViolated(f"h_inf must lie in (0, 1), got {self.h_inf}")
        if self.freeze_radius is not None and self.freeze_radius <= 0:
            raise ConstraintViolated("freeze_radius must be positive")

    def f(self, r):
        log_r = np.log(np.asarray(r, dtype=float))
        return np.sign(log_r) * np.sqrt(np.abs(log_r))

    def f_prime(self, r):
        r = np.asarray(r, dtype=float)
        log_r = np.abs(np.log(r))
        with np.errstate(divide="ignore"):
            return np.where(log_r > 0, 1.0 / (2.0 * r * np.sqrt(log_r)), np.inf)

    def f_inverse(self, s):
        s = np.asarray(s, dtype=float)
        return np.exp(np.sign(s) * s * s)

    def _freeze(self, r):
        r = np.asarray(r, dtype=float)
        if self.freeze_radius is None:
            return np.ones_like(r)
        return smoothstep((r - self.freeze_radius) / self.freeze_radius)

    def _freeze_prime(self, r):
        r = np.asarray(r, dtype=float)
        if self.freeze_radius is None:
            return np.zeros_like(r)
        return smoothstep_derivative((r - self.freeze_radius) / self.freeze_radius) / self.freeze_radius

    def h(self, r):
        r = np.asarray(r, dtype=float)
        if self.identity:
            return np.ones_like(r)
        sigma = 0.5 * (1.0 + np.tanh(np.log(r)))
        return 1.0 - (1.0 - self.h_inf) * sigma * self._freeze(r)

    def h_prime(self, r):
        r = np.asarray(r, dtype=float)
        if self.identity:
            return np.zeros_like(r)
        log_r = np.log(r)
        sigma = 0.5 * (1.0 + np.tanh(log_r))
        sigma_prime = 0.5 / (np.cosh(log_r) ** 2) / r
        return -(1.0 - self.h_inf) * (sigma_prime * self._freeze(r) + sigma * self._freeze_prime(r))

    def check(self, log_span: float = 30.0, grid_points: int = 241, tol: float = 1e-6) -> ProfileCheck:
        """
        Numerical asymptotic checks on r = exp(t), t in [-log_span, log_span].

        Returns:
            ProfileCheck; `passed` is False when any constraint fails
        """
        r = np.exp(np.linspace(-log_span, log_span, grid_points))
        h = self.h(r)
        f = self.f(r)
        rf = r * self.f_prime(r)
        failures = []
        if np.any(h <= 0.0) or np.any(h > 1.0 + tol):
            failures.append("h leaves (0, 1]")
        if abs(h[0] - 1.0) > tol:
            failures.append(f"h(r) does not tend to 1 at the tip: h={h[0]:.6g}")
        target_inf = 1.0 if self.identity else self.h_inf
        if abs(h[-1] - target_inf) > tol:
            failures.append(f"h(r) does not tend to h_inf: h={h[-1]:.6g}")
        if np.any(np.diff(f) <= 0.0):
            failures.append("f is not increasing")
        half = grid_points // 2
        left, right = rf[: half - 1], rf[half + 2:]
        if np.any(np.diff(left) <= 0.0) or np.any(np.diff(right) >= 0.0):
            failures.append("r f'(r) does not decay toward both ends")
        if max(rf[0], rf[-1]) > 1.0 / (2.0 * math.sqrt(0.9 * log_span)):
            failures.append("r f'(r) too large at the ends")
        if self.freeze_radius is not None:
            inner = r[r <= self.freeze_radius]
            if inner.size and np.any(self.h(inner) != 1.0):
                failures.append("h is not identically 1 below freeze_radius")
        report = ProfileCheck(
            grid_points=grid_points,
            h_small=float(h[0]),
            h_large=float(h[-1]),
            rf_small=float(rf[0]),
            rf_large=float(rf[-1]),
            f_small=float(f[0]),
            f_large=float(f[-1]),
            passed=not failures,
            failures=failures,
        )
        for failure in failures:
            logger.warning("warp profile: %s", failure)
        return report


def default_profile(h_inf: float, freeze_radius: Optional[float] = None) -> WarpProfile:
    """
    Build the default warp profile and verify its asymptotics.

    Args:
        h_inf: Limit of h at infinity, 0 < h_inf < 1
        freeze_radius: Radius below which h is identically 1

    Returns:
        WarpProfile

    Raises:
        ConstraintViolated: if h_inf is out of range or a numeric check fails
    """
    if not 0.0 < h_inf < 1.0:
        raise ConstraintViolated(f"h_inf must lie in (0, 1), got {h_inf}")
    profile = WarpProfile(h_inf=h_inf, freeze_radius=freeze_radius)
    report = profile.check()
    if not report.passed:
        raise ConstraintViolated("; ".join(report.failures))
    return profile


def flat_profile() -> WarpProfile:
    """h identically 1: with an identity family the cone is flat R^3."""
    return WarpProfile(h_inf=1.0, identity=True)
