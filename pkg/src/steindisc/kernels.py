"""Base kernels, their analytic partials, the Langevin Stein kernel, and
the quadratic-time kernel Stein discrepancy.

Three families: the inverse multiquadric IMQ(c, beta)(u) = (c^2+|u|^2)^beta,
the product hyperbolic-secant kernel with per-coordinate argument
sqrt(pi/2)*a*u_d, and tilted variants A(x-m) Psi(x-y) A(y-m) for a positive
tilt A.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backends import KIND_IMQ, KIND_SECH, stein_kernel_total
from .models import SampleSet, ScoreModel

__all__ = [
    "TiltFunction",
    "BaseKernel",
    "imq_kernel",
    "sech_kernel",
    "tilted_kernel",
    "kernel_eval",
    "kernel_grad_x",
    "kernel_dxdy_diag",
    "stein_kernel_eval",
    "ksd_squared",
    "kernel_from_spec",
]

SECH_RATE = np.sqrt(np.pi / 2.0)


@dataclass
class TiltFunction:
    """Positive weight A(x - center); "unit" is A = 1, "sech_exp" is
    prod_d exp(a * sqrt(1 + (x_d - center_d)^2))."""

    kind: str = "unit"
    a: float = 1.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if self.kind not in ("unit", "sech_exp"):
            raise ValueError(f"unknown tilt kind {self.kind!r}")
        if self.kind == "sech_exp" and self.a <= 0:
            raise ValueError("sech_exp tilt needs a > 0")
        self.center = np.asarray(self.center, dtype=np.float64)

    def log_value(self, x):
        if self.kind == "unit":
            return 0.0
        xt = np.asarray(x, dtype=np.float64) - self.center
        return self.a * np.sqrt(1.0 + xt * xt).sum(axis=-1)

    def value(self, x):
        return np.exp(self.log_value(x))

    def dlog(self, x):
        """Coordinate-wise derivative of log A at x."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "unit":
            return np.zeros_like(x)
        xt = x - self.center
        return self.a * xt / np.sqrt(1.0 + xt * xt)

    def backend_a(self) -> float:
        return 0.0 if self.kind == "unit" else self.a


@dataclass
class BaseKernel:
    """Kernel spec: family "imq" (c, beta), "sech" (a), or "tilted"
    (stationary "imq"/"sech" with the same parameters plus a tilt)."""

    family: str
    c: float = 1.0
    beta: float = -0.5
    a: float = 1.0
    stationary: str = "sech"
    tilt: Optional[TiltFunction] = None

    def __post_init__(self):
        if self.family not in ("imq", "sech", "tilted"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "imq" or (self.family == "tilted" and self.stationary == "imq"):
            if self.c <= 0 or self.beta >= 0:
                raise ValueError("imq kernel needs c > 0 and beta < 0")
            if self.beta <= -1.0:
                warnings.warn(
                    "imq beta <= -1: the discrepancy is defined but convergence "
                    "detection is only guaranteed for beta in (-1, 0)",
                    stacklevel=2,
                )
        if self.family == "sech" or (self.family == "tilted" and self.stationary == "sech"):
            if self.a <= 0:
                raise ValueError("sech kernel needs a > 0")
        if self.family == "tilted" and self.tilt is None:
            self.tilt = TiltFunction()

    def _stationary_kind(self):
        if self.family == "tilted":
            return KIND_IMQ if self.stationary == "imq" else KIND_SECH
        return KIND_IMQ if self.family == "imq" else KIND_SECH

    def backend_args(self):
        """(kind, p1, p2, tilt_a) for the array backends."""
        kind = self._stationary_kind()
        if kind == KIND_IMQ:
            p1, p2 = self.c * self.c, self.beta
        else:
            p1, p2 = SECH_RATE * self.a, 0.0
        tilt_a = self.tilt.backend_a() if (self.family == "tilted" and self.tilt) else 0.0
        return kind, p1, p2, tilt_a


def imq_kernel(c: float = 1.0, beta: float = -0.5) -> BaseKernel:
    return BaseKernel(family="imq", c=c, beta=beta)


def sech_kernel(a: float) -> BaseKernel:
    return BaseKernel(family="sech", a=a)


def tilted_kernel(stationary: str, tilt: TiltFunction, **params) -> BaseKernel:
    return BaseKernel(family="tilted", stationary=stationary, tilt=tilt, **params)


def _log_sech(t):
    at = np.abs(t)
    return np.log(2.0) - at - np.log1p(np.exp(-2.0 * at))


def _stationary_parts(kern: BaseKernel, u):
    """(psi, psi1, psi2): the stationary value, its gradient, and the
    diagonal of its Hessian, at the difference vector u."""
    u = np.asarray(u, dtype=np.float64)
    if kern._stationary_kind() == KIND_IMQ:
        c2, b = kern.c * kern.c, kern.beta
        s2 = c2 + (u * u).sum(axis=-1)
        psi = s2 ** b
        psi1 = 2.0 * b * u * (s2 ** (b - 1.0))[..., None]
        psi2 = (2.0 * b * s2 ** (b - 1.0))[..., None] \
            + 4.0 * b * (b - 1.0) * u * u * (s2 ** (b - 2.0))[..., None]
    else:
        s = SECH_RATE * kern.a
        t = s * u
        psi = np.exp(_log_sech(t).sum(axis=-1))
        th = np.tanh(t)
        psi1 = -s * th * psi[..., None]
        psi2 = s * s * (2.0 * th * th - 1.0) * psi[..., None]
    return psi, psi1, psi2


def kernel_eval(kern: BaseKernel, x, y) -> float:
    """k(x, y) for a single pair of points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    psi, _, _ = _stationary_parts(kern, x - y)
    if kern.family == "tilted":
        return float(np.exp(kern.tilt.log_value(x) + kern.tilt.log_value(y)) * psi)
    return float(psi)


def kernel_grad_x(kern: BaseKernel, x, y) -> np.ndarray:
    """Vector of d k(x, y) / d x_d."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    psi, psi1, _ = _stationary_parts(kern, x - y)
    if kern.family != "tilted":
        return psi1
    amp = np.exp(kern.tilt.log_value(x) + kern.tilt.log_value(y))
    return amp * (kern.tilt.dlog(x) * psi + psi1)


def kernel_dxdy_diag(kern: BaseKernel, x, y) -> np.ndarray:
    """Vector of d^2 k(x, y) / d x_d d y_d."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    psi, psi1, psi2 = _stationary_parts(kern, x - y)
    if kern.family != "tilted":
        return -psi2
    amp = np.exp(kern.tilt.log_value(x) + kern.tilt.log_value(y))
    lx = kern.tilt.dlog(x)
    ly = kern.tilt.dlog(y)
    return amp * (lx * ly * psi + (ly - lx) * psi1 - psi2)


def stein_kernel_eval(model: ScoreModel, kern: BaseKernel, x, y) -> float:
    """The Langevin Stein kernel k0(x, y) for the given target."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    bx = model.score(x)
    by = model.score(y)
    kxy = kernel_eval(kern, x, y)
    gx = kernel_grad_x(kern, x, y)
    gy = kernel_grad_x(kern, y, x)  # d k / d y_d by symmetry of k
    dd = kernel_dxdy_diag(kern, x, y)
    return float((bx * by * kxy + bx * gy + by * gx + dd).sum())


def ksd_squared(sample: SampleSet, model: ScoreModel, kern: BaseKernel) -> float:
    """Squared kernel Stein discrepancy of the empirical measure.

    The double sum runs over lexicographically ordered rows, so any
    permutation of the same points gives identical bits.  Tilted kernels
    are re-centered at the sample mean on every call.
    """
    pts = sample.canonical_points()
    scores = np.ascontiguousarray(model.score(pts), dtype=np.float64)
    kind, p1, p2, tilt_a = kern.backend_args()
    total = stein_kernel_total(pts, scores, kind, p1, p2, tilt_a, sample.mean)
    return total / float(sample.n) ** 2


def kernel_from_spec(spec) -> BaseKernel:
    """Build a kernel from {"family": "imq", "c": 1.0, "beta": -0.5} etc."""
    spec = dict(spec)
    family = spec.pop("family")
    if family == "imq":
        return imq_kernel(c=spec.get("c", 1.0), beta=spec.get("beta", -0.5))
    if family == "sech":
        return sech_kernel(a=spec["a"])
    if family == "tilted":
        tilt_spec = spec.get("tilt", {"kind": "unit"})
        tilt = TiltFunction(kind=tilt_spec.get("kind", "unit"),
                            a=tilt_spec.get("a", 1.0),
                            center=np.asarray(tilt_spec.get("center", [0.0])))
        stationary = spec.get("stationary", "sech")
        params = {k: spec[k] for k in ("c", "beta", "a") if k in spec}
        return BaseKernel(family="tilted", stationary=stationary, tilt=tilt, **params)
    raise ValueError(f"unknown kernel family {family!r}")
