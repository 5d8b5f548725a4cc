"""Smooth step and cutoff profiles shared by the flow and warp constructions."""
import numpy as np


def smoothstep(x):
    """
    Quintic smooth step: 0 for x <= 0, 1 for x >= 1, C^2 at both ends.

    Args:
        x: Scalar or array

    Returns:
        Array of the same shape with values in [0, 1]
    """
    t = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_derivative(x):
    """Derivative of `smoothstep` with respect to x."""
    x = np.asarray(x, dtype=float)
    t = np.clip(x, 0.0, 1.0)
    d = 30.0 * t * t * (t - 1.0) ** 2
    return np.where((x <= 0.0) | (x >= 1.0), 0.0, d)


def cutoff(t, eps: float):
    """
    Cutoff equal to 1 for t <= eps and 0 for t >= 2*eps.

    Args:
        t: Distance values
        eps: Inner radius of the transition

    Returns:
        Array of cutoff values
    """
    return 1.0 - smoothstep((np.asarray(t, dtype=float) - eps) / eps)


def plateau_profile(sigma):
    """
    Segment time profile on the unit parameter interval.

    Zero on [0, 1/4] and [3/4, 1], rises on [1/4, 3/8], holds 1 on
    [3/8, 5/8], falls on [5/8, 3/4].
    """
    sigma = np.asarray(sigma, dtype=float)
    rise = smoothstep((sigma - 0.25) * 8.0)
    fall = smoothstep((0.75 - sigma) * 8.0)
    return rise * fall


def plateau_profile_derivative(sigma):
    """Derivative of `plateau_profile` with respect to sigma."""
    sigma = np.asarray(sigma, dtype=float)
    rise = smoothstep((sigma - 0.25) * 8.0)
    fall = smoothstep((0.75 - sigma) * 8.0)
    d_rise = 8.0 * smoothstep_derivative((sigma - 0.25) * 8.0)
    d_fall = -8.0 * smoothstep_derivative((0.75 - sigma) * 8.0)
    return d_rise * fall + rise * d_fall
