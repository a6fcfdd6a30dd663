"""Vectorized numpy implementations of the hot kernels.

Mirrors ``_numba`` function-for-function.  The feature fills stream over
proposal columns in chunks (STEINDISC_CHUNK_M caps the block, column
sums are chunk-invariant); the pairwise kernel sum uses a fixed row
block so its reduction grouping, and hence its bits, never move.
"""

import os

import numpy as np

# Stationary-part codes shared with the numba backend.
KIND_IMQ = 0
KIND_SECH = 1

_CHUNK_M = max(1, int(os.environ.get("STEINDISC_CHUNK_M", "128")))
_CHUNK_ROWS = 64


def _tilt_terms(X, center, tilt_a):
    """Per-point log tilt and its coordinate log-derivatives.

    Returns (logA, dlogA) with shapes (N,) and (N, D).  tilt_a == 0 means
    the unit tilt.
    """
    n, d = X.shape
    if tilt_a == 0.0:
        return np.zeros(n), np.zeros((n, d))
    xt = X - center
    q = np.sqrt(1.0 + xt * xt)
    return tilt_a * q.sum(axis=1), tilt_a * xt / q


def _log_sech(t):
    # sech(t) = 2 e^{-|t|} / (1 + e^{-2|t|}), safe for large |t|
    a = np.abs(t)
    return np.log(2.0) - a - np.log1p(np.exp(-2.0 * a))


def _stationary_terms(U, kind, p1, p2):
    """log F(u) and d/du_d log F(u) for a block of differences U (..., D)."""
    if kind == KIND_IMQ:
        s2 = p1 + (U * U).sum(axis=-1)
        logf = p2 * np.log(s2)
        dlogf = (2.0 * p2) * U / s2[..., None]
    else:
        t = p1 * U
        logf = _log_sech(t).sum(axis=-1)
        dlogf = -p1 * np.tanh(t)
    return logf, dlogf


def stein_feature_sums(X, B, Z, center, kind, p1, p2, tilt_a):
    """Sum over sample rows of the Stein-operated feature at each z.

    Returns an (M, D) array whose [m, d] entry is
    sum_n (b_d(x_n) + dlog A(x_n) + dlog F(x_n - z_m)) * A(x_n) F(x_n - z_m).
    """
    n, d = X.shape
    m = Z.shape[0]
    loga, dloga = _tilt_terms(X, center, tilt_a)
    coef = B + dloga
    out = np.empty((m, d))
    for m0 in range(0, m, _CHUNK_M):
        m1 = min(m0 + _CHUNK_M, m)
        u = X[:, None, :] - Z[None, m0:m1, :]
        logf, dlogf = _stationary_terms(u, kind, p1, p2)
        phi = np.exp(loga[:, None] + logf)
        out[m0:m1] = ((coef[:, None, :] + dlogf) * phi[..., None]).sum(axis=0)
    return out


def stein_feature_block(X, B, Z, center, kind, p1, p2, tilt_a):
    """Full (N, M, D) block of Stein-operated feature evaluations."""
    n, d = X.shape
    m = Z.shape[0]
    loga, dloga = _tilt_terms(X, center, tilt_a)
    coef = B + dloga
    out = np.empty((n, m, d))
    for m0 in range(0, m, _CHUNK_M):
        m1 = min(m0 + _CHUNK_M, m)
        u = X[:, None, :] - Z[None, m0:m1, :]
        logf, dlogf = _stationary_terms(u, kind, p1, p2)
        phi = np.exp(loga[:, None] + logf)
        out[:, m0:m1, :] = (coef[:, None, :] + dlogf) * phi[..., None]
    return out


def stein_kernel_total(X, B, kind, p1, p2, tilt_a, center):
    """Sum of the Langevin Stein kernel over all ordered row pairs."""
    n, d = X.shape
    loga, dloga = _tilt_terms(X, center, tilt_a)
    beta = B + dloga
    total = 0.0
    for i0 in range(0, n, _CHUNK_ROWS):
        i1 = min(i0 + _CHUNK_ROWS, n)
        u = X[i0:i1, None, :] - X[None, :, :]
        if kind == KIND_IMQ:
            s2 = p1 + (u * u).sum(axis=-1)
            logpsi = p2 * np.log(s2)
            psi1 = (2.0 * p2) * u / s2[..., None]
            psi2 = (2.0 * p2) / s2[..., None] \
                + (4.0 * p2 * (p2 - 1.0)) * u * u / (s2 * s2)[..., None]
        else:
            t = p1 * u
            logpsi = _log_sech(t).sum(axis=-1)
            th = np.tanh(t)
            psi1 = -p1 * th
            psi2 = (p1 * p1) * (2.0 * th * th - 1.0)
        kval = np.exp(loga[i0:i1, None] + loga[None, :] + logpsi)
        bi = beta[i0:i1, None, :]
        bj = beta[None, :, :]
        inner = (bi * bj + (bj - bi) * psi1 - psi2).sum(axis=-1)
        total += float((kval * inner).sum())
    return total


def rbm_gibbs(W, bv, bh, x0, n_keep, burn_in, thin, U, G):
    """Blocked Gibbs chain for a Gauss-Bernoulli RBM.

    U and G hold pre-drawn uniforms (steps, dh) and normals (steps, dx) so
    the chain is identical for every backend.
    """
    x = x0.copy()
    dx = x0.shape[0]
    out = np.empty((n_keep, dx))
    kept = 0
    steps = burn_in + (n_keep - 1) * thin + 1
    for t in range(steps):
        act = x @ W + bh
        p = 1.0 / (1.0 + np.exp(-act))
        h = (U[t] < p).astype(np.float64)
        x = bv + W @ h + G[t]
        if t >= burn_in and (t - burn_in) % thin == 0:
            out[kept] = x
            kept += 1
    return out
