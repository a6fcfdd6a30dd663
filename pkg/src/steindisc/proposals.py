"""Normalized importance distributions over feature locations.

Two families: a multivariate t written in inverse-multiquadric form,
density proportional to (c'^2 + |z - center|^2)^(-(df+D)/2), and a product
of hyperbolic-secant coordinates with an exact inverse-CDF sampler.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = ["Proposal", "mvt_proposal", "sech_proposal", "log_density", "sample"]

_V_CLIP = 1e-16


@dataclass
class Proposal:
    kind: str  # "mvt" | "product_sech"
    dim: int
    center: np.ndarray
    df: float = 1.0      # mvt only
    scale: float = 1.0   # mvt only: the IMQ offset c'
    kappa: float = 1.0   # product_sech only: per-coordinate rate

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).ravel()
        if self.center.size != self.dim:
            raise ValueError("center length must match dim")
        self._lognorm = None  # cached mvt normalizer


def mvt_proposal(df: float, c_prime: float, center, dim: int) -> Proposal:
    """Multivariate t: density Gamma((df+D)/2) / (Gamma(df/2) pi^{D/2} c'^D)
    * (1 + |z-center|^2/c'^2)^(-(df+D)/2)."""
    if df <= 0 or c_prime <= 0:
        raise ValueError("mvt proposal needs df > 0 and c_prime > 0")
    return Proposal(kind="mvt", dim=dim, center=center, df=df, scale=c_prime)


def sech_proposal(kappa: float, center, dim: int) -> Proposal:
    """Product of sech coordinates: f(u) = (kappa/pi) sech(kappa u) per
    dimension, CDF (2/pi) arctan(e^{kappa u})."""
    if kappa <= 0:
        raise ValueError("sech proposal needs kappa > 0")
    return Proposal(kind="product_sech", dim=dim, center=center, kappa=kappa)


def _mvt_log_normalizer(df, c, d):
    return float(gammaln((df + d) / 2.0) - gammaln(df / 2.0)
                 - 0.5 * d * np.log(np.pi) - d * np.log(c))


def log_density(prop: Proposal, z) -> np.ndarray:
    """Exact log density at z (a point or (m, D) rows)."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    zz = np.atleast_2d(z) - prop.center
    d = prop.dim
    if prop.kind == "mvt":
        df, c = prop.df, prop.scale
        if prop._lognorm is None:
            prop._lognorm = _mvt_log_normalizer(df, c, d)
        out = prop._lognorm - 0.5 * (df + d) * np.log1p((zz * zz).sum(axis=-1) / (c * c))
    else:
        k = prop.kappa
        t = np.abs(k * zz)
        logsech = np.log(2.0) - t - np.log1p(np.exp(-2.0 * t))
        out = d * np.log(k / np.pi) + logsech.sum(axis=-1)
    return out[0] if single else out


def sample(prop: Proposal, m: int, seed) -> np.ndarray:
    """m reproducible draws; seed may be an int or a Generator."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if prop.kind == "mvt":
        g = rng.standard_normal((m, prop.dim))
        # chi^2 via gamma(df/2, 2); numpy's gamma sampler covers shape < 1
        w = 2.0 * rng.standard_gamma(prop.df / 2.0, size=(m, 1))
        return prop.center + prop.scale * g / np.sqrt(w)
    v = np.clip(rng.random((m, prop.dim)), _V_CLIP, 1.0 - _V_CLIP)
    return prop.center + np.log(np.tan(0.5 * np.pi * v)) / prop.kappa
