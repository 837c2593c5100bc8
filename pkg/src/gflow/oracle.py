"""Closed-form Gaussian-mixture ground truth.

Every component is isotropic, so marginal paths, scores and velocity
fields all reduce to finite mixture algebra:

  * the path of component (w_i, mu_i, s_i^2) at time t is
    N(alpha_t mu_i, c_i I) with c_i = alpha_t^2 s_i^2 + sigma_t^2;
  * the velocity field of a single Gaussian component is the affine map
    (sigma_dot/sigma) (x - alpha e_i(x)) + alpha_dot e_i(x), where e_i(x)
    is the posterior mean of the data point given x;
  * the mixture field is the responsibility-weighted combination of the
    per-component fields.

Conditioning on a label selects the single component carrying it; the
null condition selects the full mixture.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import NumericError, SingularityError
from .scheduler import Scheduler


@dataclass(frozen=True)
class GmmSpec:
    """Isotropic Gaussian mixture with one class label per component."""

    weights: np.ndarray  # (n,)
    means: np.ndarray  # (n, d)
    variances: np.ndarray  # (n,)
    labels: tuple  # n distinct ints

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        v = np.asarray(self.variances, dtype=np.float64)
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)
        object.__setattr__(self, "labels", labels)
        n = w.shape[0]
        if m.shape[0] != n or v.shape[0] != n or len(labels) != n:
            raise ValueError("component count mismatch between weights/means/variances/labels")
        if np.any(w <= 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(v < 0.0):
            raise ValueError("variances must be nonnegative")
        if len(set(labels)) != n:
            raise ValueError("labels must be distinct")

    @property
    def n_components(self):
        return self.weights.shape[0]

    @property
    def d(self):
        return self.means.shape[1]

    def component(self, label: int) -> "GmmSpec":
        i = self.labels.index(int(label))
        return GmmSpec(np.array([1.0]), self.means[i : i + 1], self.variances[i : i + 1], (self.labels[i],))

    def select(self, y: Optional[int]) -> "GmmSpec":
        return self if y is None else self.component(y)

    def log_density(self, x) -> np.ndarray:
        """Log mixture density at x, shape (B,). Requires positive variances."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        lw = self._log_joint(x)
        mx = lw.max(axis=1, keepdims=True)
        return (mx + np.log(np.exp(lw - mx).sum(axis=1, keepdims=True)))[:, 0]

    def _log_joint(self, x):
        # log w_i + log N(x; mu_i, v_i I), shape (B, n)
        v = self.variances
        if np.any(v <= 0.0):
            raise SingularityError("density undefined for point-mass components")
        d = self.d
        sq = ((x[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        return np.log(self.weights)[None, :] - 0.5 * (d * np.log(2.0 * np.pi * v)[None, :] + sq / v[None, :])

    def responsibilities(self, x) -> np.ndarray:
        lw = self._log_joint(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        lw = lw - lw.max(axis=1, keepdims=True)
        r = np.exp(lw)
        return r / r.sum(axis=1, keepdims=True)

    def score(self, x) -> np.ndarray:
        """Gradient of log density, shape matching x."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        xb = np.atleast_2d(x)
        r = self.responsibilities(xb)
        per = -(xb[:, None, :] - self.means[None, :, :]) / self.variances[None, :, None]
        out = (r[:, :, None] * per).sum(axis=1)
        return out[0] if single else out

    def sample(self, rng: np.random.Generator, n: int):
        """Draw (x, labels): components by weight, then component Gaussians."""
        idx = rng.choice(self.n_components, size=n, p=self.weights)
        x = self.means[idx] + np.sqrt(self.variances[idx])[:, None] * rng.standard_normal((n, self.d))
        labels = np.array([self.labels[i] for i in idx], dtype=np.int64)
        return x, labels

    def asdict(self):
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "labels": list(self.labels),
        }

    @classmethod
    def fromdict(cls, dd):
        return cls(np.array(dd["weights"]), np.array(dd["means"]), np.array(dd["variances"]), tuple(dd["labels"]))


def ring_spec(n_components: int = 8, radius: float = 3.0, variance: float = 0.05) -> GmmSpec:
    """Equally weighted components on a circle, one label per component."""
    angles = 2.0 * np.pi * np.arange(n_components) / n_components
    means = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return GmmSpec(
        np.full(n_components, 1.0 / n_components),
        means,
        np.full(n_components, variance),
        tuple(range(n_components)),
    )


def marginal_path(spec: GmmSpec, scheduler: Scheduler, t, y: Optional[int] = None) -> GmmSpec:
    """Mixture of N(alpha_t mu_i, (alpha_t^2 s_i^2 + sigma_t^2) I) at time t."""
    spec = spec.select(y)
    alpha, sigma, _, _ = scheduler(t)
    alpha = float(alpha)
    sigma = float(sigma)
    return GmmSpec(
        spec.weights,
        alpha * spec.means,
        alpha * alpha * spec.variances + sigma * sigma,
        spec.labels,
    )


def oracle_score(spec: GmmSpec, scheduler: Scheduler, t, x, y: Optional[int] = None) -> np.ndarray:
    """Score of the marginal path density at (t, x)."""
    return marginal_path(spec, scheduler, t, y).score(x)


def oracle_velocity(spec: GmmSpec, scheduler: Scheduler, t, x, y: Optional[int] = None) -> np.ndarray:
    """Target velocity field at (t, x): posterior-weighted component fields.

    Valid wherever sigma_t > 0 (every t in [0, 1)).
    """
    spec = spec.select(y)
    alpha, sigma, alpha_dot, sigma_dot = scheduler(t)
    alpha, sigma = float(alpha), float(sigma)
    if sigma == 0.0:
        raise SingularityError(f"oracle velocity undefined at sigma_t = 0 (t={t!r})")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = np.atleast_2d(x)

    path = marginal_path(spec, scheduler, t)
    r = path.responsibilities(xb)  # (B, n)
    c = path.variances  # (B-free,) per component
    # posterior mean of the data point x1 given x under component i
    shift = (alpha * spec.variances / c)[None, :, None] * (xb[:, None, :] - path.means[None, :, :])
    e_post = spec.means[None, :, :] + shift  # (B, n, d)
    u_comp = (float(sigma_dot) / sigma) * (xb[:, None, :] - alpha * e_post) + float(alpha_dot) * e_post
    out = (r[:, :, None] * u_comp).sum(axis=1)
    return out[0] if single else out


@dataclass(frozen=True)
class GaussianPair:
    """Explicit (marginal, conditional) Gaussian pair for exact guidance checks.

    Represents q(x) = N(mu_uncond, var_uncond I) and q(x|y) = N(mu_cond,
    var_cond I) directly; with shared covariance the tempered target
    q(x)^(1-omega) q(x|y)^omega is exactly N((1-omega) mu_uncond +
    omega mu_cond, var I).
    """

    mu_uncond: np.ndarray
    mu_cond: np.ndarray
    var_uncond: float
    var_cond: float

    def __post_init__(self):
        object.__setattr__(self, "mu_uncond", np.atleast_1d(np.asarray(self.mu_uncond, dtype=np.float64)))
        object.__setattr__(self, "mu_cond", np.atleast_1d(np.asarray(self.mu_cond, dtype=np.float64)))
        if self.var_uncond <= 0.0 or self.var_cond <= 0.0:
            raise ValueError("variances must be positive")

    @property
    def d(self):
        return self.mu_uncond.shape[0]

    def _single(self, mu, var):
        return GmmSpec(np.array([1.0]), mu[None, :], np.array([var]), (0,))

    def velocity(self, scheduler: Scheduler, t, x, conditional: bool) -> np.ndarray:
        spec = self._single(self.mu_cond, self.var_cond) if conditional else self._single(self.mu_uncond, self.var_uncond)
        return oracle_velocity(spec, scheduler, t, x)

    def guided_velocity(self, scheduler: Scheduler, t, x, omega: float) -> np.ndarray:
        return (1.0 - omega) * self.velocity(scheduler, t, x, False) + omega * self.velocity(scheduler, t, x, True)

    def tempered_gaussian(self, omega: float):
        """Mean and variance of the tempered target; precision must be positive."""
        precision = (1.0 - omega) / self.var_uncond + omega / self.var_cond
        if precision <= 0.0:
            raise NumericError(f"tempered target is not normalizable at omega={omega}")
        var = 1.0 / precision
        mean = var * ((1.0 - omega) / self.var_uncond * self.mu_uncond + omega / self.var_cond * self.mu_cond)
        return mean, var


@dataclass(frozen=True)
class TemperedTarget:
    """q_tilde(x|y) proportional to q(x)^(1-omega) q(x|y)^omega."""

    base: Union[GmmSpec, GaussianPair]
    label: Optional[int]
    omega: float

    def _marginal_and_conditional(self):
        if isinstance(self.base, GaussianPair):
            b = self.base
            return b._single(b.mu_uncond, b.var_uncond), b._single(b.mu_cond, b.var_cond)
        return self.base, self.base.component(self.label)

    def _check_normalizable(self):
        marg, cond = self._marginal_and_conditional()
        tail = (1.0 - self.omega) / marg.variances.max() + self.omega / cond.variances[0]
        if tail <= 0.0:
            raise NumericError(f"tempered target is not normalizable at omega={self.omega}")
        return marg, cond

    def log_density_unnormalized(self, x) -> np.ndarray:
        marg, cond = self._check_normalizable()
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return (1.0 - self.omega) * marg.log_density(x) + self.omega * cond.log_density(x)

    def density_unnormalized(self, x) -> np.ndarray:
        return np.exp(self.log_density_unnormalized(x))

    def gaussian(self):
        """Exact Gaussian (mean, var), available when both factors are single
        Gaussians; raises otherwise."""
        if isinstance(self.base, GaussianPair):
            return self.base.tempered_gaussian(self.omega)
        if self.base.n_components == 1:
            return self.base.means[0].copy(), float(self.base.variances[0])
        raise NumericError("tempered target has no closed Gaussian form for a multi-component base")
