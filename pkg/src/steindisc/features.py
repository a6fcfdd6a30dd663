"""Feature functions Phi(x, z) = A(x - m) F(x - z), their Stein-operated
versions, and sample averages of those.

F is either a product sech kernel or an inverse multiquadric; both have
analytic log-derivatives, so the Stein-operated feature is
(b_d(x) + dlog A + dlog F) * Phi with no numerical differentiation.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backends import KIND_IMQ, KIND_SECH, stein_feature_sums
from .kernels import SECH_RATE, TiltFunction
from .models import SampleSet, ScoreModel

__all__ = ["FeatureSpec", "feature_eval", "stein_feature_eval", "applied_feature"]


@dataclass
class FeatureSpec:
    """Stationary part "imq" (c_prime, beta_prime) or "sech" (a, meaning
    F(u) = prod_d sech(sqrt(pi/2) a u_d)), times a tilt."""

    stationary: str
    c_prime: float = 1.0
    beta_prime: float = -0.5
    a: float = 1.0
    tilt: TiltFunction = field(default_factory=TiltFunction)

    def __post_init__(self):
        if self.stationary not in ("imq", "sech"):
            raise ValueError(f"unknown feature family {self.stationary!r}")
        if self.stationary == "imq" and (self.c_prime <= 0 or self.beta_prime >= 0):
            raise ValueError("imq feature needs c_prime > 0 and beta_prime < 0")
        if self.stationary == "sech" and self.a <= 0:
            raise ValueError("sech feature needs a > 0")

    def backend_args(self):
        if self.stationary == "imq":
            return KIND_IMQ, self.c_prime * self.c_prime, self.beta_prime
        return KIND_SECH, SECH_RATE * self.a, 0.0

    def log_stationary(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.stationary == "imq":
            s2 = self.c_prime ** 2 + (u * u).sum(axis=-1)
            return self.beta_prime * np.log(s2)
        t = SECH_RATE * self.a * u
        at = np.abs(t)
        return (np.log(2.0) - at - np.log1p(np.exp(-2.0 * at))).sum(axis=-1)

    def dlog_stationary(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.stationary == "imq":
            s2 = self.c_prime ** 2 + (u * u).sum(axis=-1)
            return 2.0 * self.beta_prime * u / s2[..., None]
        s = SECH_RATE * self.a
        return -s * np.tanh(s * u)


def feature_eval(spec: FeatureSpec, x, z) -> float:
    """Phi(x, z) = A(x) F(x - z)."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return float(np.exp(spec.tilt.log_value(x) + spec.log_stationary(x - z)))


def stein_feature_eval(spec: FeatureSpec, model: ScoreModel, x, z) -> np.ndarray:
    """(T_d Phi)(x, z) for every coordinate d."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    phi = np.exp(spec.tilt.log_value(x) + spec.log_stationary(x - z))
    coef = model.score(x) + spec.tilt.dlog(x) + spec.dlog_stationary(x - z)
    return coef * phi


def applied_feature(sample: SampleSet, model: ScoreModel, spec: FeatureSpec,
                    z) -> np.ndarray:
    """Sample average of the Stein-operated feature at one location z.

    The tilt is centered at the sample mean of the evaluated sample; rows
    are reduced in canonical order.
    """
    pts = sample.canonical_points()
    scores = np.ascontiguousarray(model.score(pts), dtype=np.float64)
    kind, p1, p2 = spec.backend_args()
    zz = np.atleast_2d(np.asarray(z, dtype=np.float64))
    sums = stein_feature_sums(pts, scores, zz, sample.mean, kind, p1, p2,
                              spec.tilt.backend_a())
    return sums[0] / sample.n
