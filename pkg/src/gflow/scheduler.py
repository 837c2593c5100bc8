"""Affine Gaussian-path schedulers and per-time path coefficients.

A scheduler is the pair (alpha_t, sigma_t) defining the conditional path
N(alpha_t * x1, sigma_t^2 I). Two closed-form choices are provided:

    ot:     alpha_t = t,           sigma_t = 1 - t
    cosine: alpha_t = sin(pi t/2), sigma_t = cos(pi t/2)

Both satisfy alpha_0 = 0, alpha_1 = 1, sigma_0 = 1, sigma_1 = 0. Derivatives
are exact closed forms, never finite differences.

The derived coefficients tie velocities to scores:

    u_t(x) = a_t x + b_t * score_t(x),
    a_t = alpha_dot / alpha,
    b_t = (alpha_dot * sigma - alpha * sigma_dot) * sigma / alpha.

The probability-flow form uses f_t = a_t and g_sq_t = -2 b_t, chosen so that
f_t x - (1/2) g_sq_t * score equals a_t x + b_t * score identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SingularityError

SCHEDULER_KINDS = ("ot", "cosine")

# Score<->velocity conversions are only exposed on [EPS_T, 1 - EPS_T]; the
# coefficients a_t and 1/sigma_t diverge at the endpoints for both kinds.
EPS_T = 1e-5


class SchedulerValues(NamedTuple):
    alpha: np.ndarray
    sigma: np.ndarray
    alpha_dot: np.ndarray
    sigma_dot: np.ndarray


class PathCoefficients(NamedTuple):
    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    g_sq: np.ndarray


def _check_time(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    return t


@dataclass(frozen=True)
class Scheduler:
    """Closed-form scheduler, one of the kinds in SCHEDULER_KINDS."""

    kind: str

    def __post_init__(self):
        if self.kind not in SCHEDULER_KINDS:
            raise ValueError(f"unknown scheduler kind {self.kind!r}")

    def __call__(self, t) -> SchedulerValues:
        """Evaluate (alpha, sigma, alpha_dot, sigma_dot) at t in [0, 1].

        Accepts scalars or arrays; derivatives are analytic.
        """
        t = _check_time(t)
        if self.kind == "ot":
            one = np.ones_like(t)
            return SchedulerValues(t, 1.0 - t, one, -one)
        half_pi = 0.5 * math.pi
        s = np.sin(half_pi * t)
        # cos(pi t / 2) written as sin(pi (1-t) / 2) so sigma hits 0 and 1
        # exactly at the endpoints; cos(pi/2) itself rounds to 6.1e-17 and
        # would defeat the sigma == 0 singularity checks
        c = np.sin(half_pi * (1.0 - t))
        return SchedulerValues(s, c, half_pi * c, -half_pi * s)

    def coefficients(self, t) -> PathCoefficients:
        """Per-time coefficients a, b, f, g_sq. Requires alpha_t > 0."""
        alpha, sigma, alpha_dot, sigma_dot = self(t)
        if np.any(alpha == 0.0):
            raise SingularityError(
                f"path coefficients undefined where alpha_t = 0 (kind={self.kind}, t={t!r})"
            )
        a = alpha_dot / alpha
        b = (alpha_dot * sigma - alpha * sigma_dot) * sigma / alpha
        return PathCoefficients(a, b, a, -2.0 * b)

    def conditional_velocity(self, t, x, x1):
        """Velocity of the single-point path toward x1, evaluated at x.

        u_t(x | x1) = (sigma_dot/sigma) (x - alpha x1) + alpha_dot x1.
        Requires sigma_t > 0.
        """
        alpha, sigma, alpha_dot, sigma_dot = self(t)
        if np.any(sigma == 0.0):
            raise SingularityError(
                f"conditional velocity undefined where sigma_t = 0 (kind={self.kind}, t={t!r})"
            )
        x = np.asarray(x, dtype=np.float64)
        x1 = np.asarray(x1, dtype=np.float64)
        return (sigma_dot / sigma) * (x - alpha * x1) + alpha_dot * x1


def make_scheduler(kind: str) -> Scheduler:
    return Scheduler(kind)
