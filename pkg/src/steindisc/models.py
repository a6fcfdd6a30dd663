"""Score models for target distributions and samplers for experiment data.

A target is only ever accessed through its score function grad log p; no
normalizing constants are needed anywhere downstream.
"""

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._backends import rbm_gibbs

__all__ = [
    "ScoreModel",
    "SampleSet",
    "gaussian_model",
    "GmmHyperparams",
    "welling_teh_data",
    "gmm_posterior_model",
    "rbm_model",
    "default_rbm_params",
    "perturb_matrix",
    "sample_alternative",
    "model_from_spec",
    "load_rbm_matrix_csv",
    "read_sample_csv",
    "write_sample_csv",
]


@dataclass
class ScoreModel:
    """A target distribution P seen through its score function.

    score maps (..., dim) points to (..., dim) values of grad log p.
    stochastic_score(x, idx) gives an unbiased minibatch estimate for
    targets with a dataset (used by SGLD).  log_density is optional and
    unnormalized; it exists so tests can finite-difference the score.
    sampler(n, rng) draws from P itself when that is tractable (used for
    test calibration).
    """

    dim: int
    score: Callable[[np.ndarray], np.ndarray]
    label: str = "model"
    stochastic_score: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    log_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sampler: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    n_data: int = 0


class SampleSet:
    """N points in R^D together with their empirical mean.

    Rows are kept in the order given.  All reductions over the sample
    (the mean here, and the discrepancy sums downstream) run over rows in
    lexicographic order, so any permutation of the same points produces
    bit-identical results.
    """

    def __init__(self, points):
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("SampleSet needs an (N, D) array with N >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("SampleSet entries must be finite")
        self.points = pts
        order = np.lexsort(pts.T[::-1])
        self._canonical = np.ascontiguousarray(pts[order])
        self.mean = np.add.reduce(self._canonical, axis=0) / pts.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def canonical_points(self) -> np.ndarray:
        """Rows sorted lexicographically; the order used by reductions."""
        return self._canonical


def gaussian_model(dim: int) -> ScoreModel:
    """Standard multivariate Gaussian N(0, I)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")

    def score(x):
        return -np.asarray(x, dtype=np.float64)

    def log_density(x):
        x = np.atleast_2d(x)
        return -0.5 * (x * x).sum(axis=-1) - 0.5 * dim * np.log(2.0 * np.pi)

    def sampler(n, rng):
        return rng.standard_normal((n, dim))

    return ScoreModel(dim=dim, score=score, label=f"gaussian(d={dim})",
                      log_density=log_density, sampler=sampler)


@dataclass
class GmmHyperparams:
    """Constants of the bimodal mixture posterior used in the SGLD study."""

    sigma1_sq: float = 10.0
    sigma2_sq: float = 1.0
    sigmax_sq: float = 2.0
    weight: float = 0.5


def welling_teh_data(n: int = 100, seed: int = 0, theta=(0.0, 1.0),
                     hyper: GmmHyperparams = GmmHyperparams()) -> np.ndarray:
    """Dataset for the mixture posterior: n draws at the given theta."""
    rng = np.random.default_rng(seed)
    comp = rng.random(n) < hyper.weight
    mu = np.where(comp, theta[0], theta[0] + theta[1])
    return mu + np.sqrt(hyper.sigmax_sq) * rng.standard_normal(n)


def gmm_posterior_model(data, hyper: GmmHyperparams = GmmHyperparams()) -> ScoreModel:
    """Posterior over (theta1, theta2) for the two-component location mixture.

    Likelihood of a datum: w N(theta1, sx^2) + (1-w) N(theta1+theta2, sx^2);
    independent centered Gaussian priors on the two coordinates.
    """
    data = np.asarray(data, dtype=np.float64).ravel()
    if data.size == 0:
        raise ValueError("gmm posterior needs a nonempty dataset")
    n_data = data.size
    s1, s2, sx = hyper.sigma1_sq, hyper.sigma2_sq, hyper.sigmax_sq
    logw1 = np.log(hyper.weight)
    logw2 = np.log1p(-hyper.weight)

    def _lik_grads(theta, x):
        # theta (..., 2), x (k,) -> per-datum grads (..., k, 2)
        t1 = theta[..., 0:1]
        t2 = theta[..., 1:2]
        e1 = x - t1
        e2 = x - t1 - t2
        # responsibility of component 2, computed stably
        logit = (logw2 - logw1) + (e1 * e1 - e2 * e2) / (2.0 * sx)
        w2 = 1.0 / (1.0 + np.exp(-logit))
        g1 = ((1.0 - w2) * e1 + w2 * e2) / sx
        g2 = w2 * e2 / sx
        return np.stack([g1, g2], axis=-1)

    def score(theta):
        theta = np.asarray(theta, dtype=np.float64)
        single = theta.ndim == 1
        th = np.atleast_2d(theta)
        prior = np.stack([-th[..., 0] / s1, -th[..., 1] / s2], axis=-1)
        out = prior + _lik_grads(th, data).sum(axis=-2)
        return out[0] if single else out

    def stochastic_score(theta, idx):
        theta = np.asarray(theta, dtype=np.float64)
        idx = np.asarray(idx)
        prior = np.array([-theta[0] / s1, -theta[1] / s2])
        g = _lik_grads(theta[None, :], data[idx]).sum(axis=-2)[0]
        return prior + (n_data / idx.size) * g

    def log_density(theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
        t1 = theta[..., 0:1]
        t2 = theta[..., 1:2]
        e1 = data - t1
        e2 = data - t1 - t2
        la = logw1 - e1 * e1 / (2.0 * sx)
        lb = logw2 - e2 * e2 / (2.0 * sx)
        hi = np.maximum(la, lb)
        loglik = (hi + np.log(np.exp(la - hi) + np.exp(lb - hi))).sum(axis=-1)
        logprior = -theta[..., 0] ** 2 / (2.0 * s1) - theta[..., 1] ** 2 / (2.0 * s2)
        return loglik + logprior

    return ScoreModel(dim=2, score=score, label="gmm-posterior",
                      stochastic_score=stochastic_score,
                      log_density=log_density, n_data=n_data)


def _softplus(t):
    # log(1 + e^t) with the overflow guard at t > 30
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > 30.0, t, np.log1p(np.exp(np.minimum(t, 30.0))))


def _sigmoid(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def rbm_model(B, b, c) -> ScoreModel:
    """Gauss-Bernoulli restricted Boltzmann machine with hiddens summed out.

    log p(x) = b'x - |x|^2/2 + sum_h softplus((B'x + c)_h) + const, so the
    score is b - x + B sigma(B'x + c).
    """
    B = np.asarray(B, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    if B.ndim != 2 or B.shape[0] != b.size or B.shape[1] != c.size:
        raise ValueError("rbm_model: B must be (dx, dh) with b (dx,) and c (dh,)")
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("rbm_model: parameters must be finite")
    dx, dh = B.shape

    def score(x):
        x = np.asarray(x, dtype=np.float64)
        act = x @ B + c
        return b - x + _sigmoid(act) @ B.T

    def log_density(x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return x @ b - 0.5 * (x * x).sum(axis=-1) + _softplus(x @ B + c).sum(axis=-1)

    def sampler(n, rng):
        return _rbm_gibbs_draws(B, b, c, n, rng)

    return ScoreModel(dim=dx, score=score, label=f"rbm({dx}x{dh})",
                      log_density=log_density, sampler=sampler)


def default_rbm_params(dx: int = 50, dh: int = 40, seed: int = 0):
    """Random RBM parameters: Rademacher weights, standard normal biases."""
    rng = np.random.default_rng(seed)
    B = rng.choice([-1.0, 1.0], size=(dx, dh))
    b = rng.standard_normal(dx)
    c = rng.standard_normal(dh)
    return B, b, c


def perturb_matrix(B, sigma_per: float, seed: int = 0) -> np.ndarray:
    """Entrywise additive Gaussian noise; sigma_per = 0 returns B unchanged."""
    if sigma_per == 0.0:
        return np.array(B, dtype=np.float64)
    rng = np.random.default_rng(seed)
    return np.asarray(B, dtype=np.float64) + sigma_per * rng.standard_normal(np.shape(B))


def _rbm_gibbs_draws(B, b, c, n, rng, burn_in: int = 2000, thin: int = 50):
    dx, dh = B.shape
    steps = burn_in + (n - 1) * thin + 1
    uniforms = rng.random((steps, dh))
    normals = rng.standard_normal((steps, dx))
    x0 = rng.standard_normal(dx)
    return rbm_gibbs(np.asarray(B, dtype=np.float64), np.asarray(b, dtype=np.float64),
                     np.asarray(c, dtype=np.float64), x0, n, burn_in, thin,
                     uniforms, normals)


def _gmm_posterior_grid_draws(model, n, rng, box=(-3.0, 3.0, -4.0, 4.0), res=512):
    """Reference draws from a 2-D posterior via grid inverse-CDF sampling."""
    t1 = np.linspace(box[0], box[1], res)
    t2 = np.linspace(box[2], box[3], res)
    g1, g2 = np.meshgrid(t1, t2, indexing="ij")
    grid = np.column_stack([g1.ravel(), g2.ravel()])
    logp = model.log_density(grid)
    p = np.exp(logp - logp.max())
    p /= p.sum()
    cells = rng.choice(p.size, size=n, p=p)
    h1 = t1[1] - t1[0]
    h2 = t2[1] - t2[0]
    jitter = (rng.random((n, 2)) - 0.5) * np.array([h1, h2])
    return grid[cells] + jitter


def sample_alternative(kind: str, params: dict, n: int, seed: int = 0) -> SampleSet:
    """Seeded draws from the data distributions used in the experiments."""
    if n < 1:
        raise ValueError("n must be >= 1")
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        dim = int(params.get("dim", 1))
        loc = params.get("mean", 0.0)
        scale = params.get("std", 1.0)
        pts = loc + scale * rng.standard_normal((n, dim))
    elif kind == "laplace_product":
        dim = int(params.get("dim", 1))
        scale = params.get("scale", 1.0 / np.sqrt(2.0))
        pts = rng.laplace(0.0, scale, size=(n, dim))
    elif kind == "student_t":
        dim = int(params.get("dim", 1))
        df = params.get("df", 5.0)
        w = rng.chisquare(df, size=(n, 1))
        pts = rng.standard_normal((n, dim)) * np.sqrt(df / w)
    elif kind == "gmm_sgld_target":
        data = params.get("data")
        if data is None:
            data = welling_teh_data(params.get("n_data", 100), params.get("data_seed", 0))
        model = gmm_posterior_model(data)
        pts = _gmm_posterior_grid_draws(model, n, rng)
    elif kind == "rbm_gibbs":
        if "B" in params:
            B = np.asarray(params["B"], dtype=np.float64)
            b = np.asarray(params["b"], dtype=np.float64)
            c = np.asarray(params["c"], dtype=np.float64)
        else:
            B, b, c = default_rbm_params(params.get("dx", 50), params.get("dh", 40),
                                         params.get("param_seed", 0))
        B = perturb_matrix(B, params.get("sigma_per", 0.0), params.get("perturb_seed", seed))
        pts = _rbm_gibbs_draws(B, b, c, n, rng,
                               burn_in=params.get("burn_in", 2000),
                               thin=params.get("thin", 50))
    else:
        raise ValueError(f"unknown sampler kind {kind!r}")
    return SampleSet(pts)


def load_rbm_matrix_csv(path) -> np.ndarray:
    """CSV matrix, one row per visible unit, comma separated, no header."""
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def model_from_spec(spec) -> ScoreModel:
    """Build a model from {"kind": ..., "params": {...}} or a JSON file path."""
    if isinstance(spec, str):
        if spec == "gaussian":
            raise ValueError("gaussian spec needs a dimension; pass a JSON document")
        with open(spec, encoding="utf-8") as fh:
            spec = json.load(fh)
    kind = spec.get("kind")
    params = dict(spec.get("params", {}))
    if kind == "gaussian":
        return gaussian_model(int(params["dim"]))
    if kind == "gmm_posterior":
        data = params.get("data")
        if data is None:
            data = welling_teh_data(params.get("n_data", 100), params.get("data_seed", 0))
        return gmm_posterior_model(np.asarray(data, dtype=np.float64))
    if kind == "rbm":
        if "B_csv" in params:
            B = load_rbm_matrix_csv(params["B_csv"])
            b = np.asarray(params["b"], dtype=np.float64)
            c = np.asarray(params["c"], dtype=np.float64)
        elif "B" in params:
            B, b, c = (np.asarray(params[k], dtype=np.float64) for k in ("B", "b", "c"))
        else:
            B, b, c = default_rbm_params(params.get("dx", 50), params.get("dh", 40),
                                         params.get("param_seed", 0))
        return rbm_model(B, b, c)
    raise ValueError(f"unknown model kind {kind!r}")


def read_sample_csv(path) -> SampleSet:
    """Read one point per row; an optional header row is detected and skipped."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValueError(f"{path}: empty sample file")
        try:
            [float(tok) for tok in first.strip().split(",")]
            skip = 0
        except ValueError:
            skip = 1
    pts = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2, dtype=np.float64)
    return SampleSet(pts)


def write_sample_csv(path, sample: SampleSet) -> None:
    """Write points with 17 significant digits so a round-trip is exact."""
    np.savetxt(path, sample.points, delimiter=",", fmt="%.17g", newline="\n")
