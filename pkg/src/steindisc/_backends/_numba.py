"""numba-jitted implementations of the hot kernels.

Loops accumulate in a fixed order (rows, then proposal columns), so a
given input array order always produces the same bits; threads never
split a reduction.
"""

import math

import numpy as np
from numba import njit

KIND_IMQ = 0
KIND_SECH = 1


@njit(cache=True, nogil=True)
def _log_sech(t):
    a = abs(t)
    return math.log(2.0) - a - math.log1p(math.exp(-2.0 * a))


@njit(cache=True, nogil=True)
def _tilt_terms(X, center, tilt_a):
    n, d = X.shape
    loga = np.zeros(n)
    dloga = np.zeros((n, d))
    if tilt_a != 0.0:
        for i in range(n):
            acc = 0.0
            for k in range(d):
                xt = X[i, k] - center[k]
                q = math.sqrt(1.0 + xt * xt)
                acc += q
                dloga[i, k] = tilt_a * xt / q
            loga[i] = tilt_a * acc
    return loga, dloga


@njit(cache=True, nogil=True)
def stein_feature_sums(X, B, Z, center, kind, p1, p2, tilt_a):
    n, d = X.shape
    m = Z.shape[0]
    loga, dloga = _tilt_terms(X, center, tilt_a)
    out = np.zeros((m, d))
    dlogf = np.empty(d)
    for j in range(m):
        for i in range(n):
            logf = 0.0
            if kind == KIND_IMQ:
                s2 = p1
                for k in range(d):
                    u = X[i, k] - Z[j, k]
                    s2 += u * u
                logf = p2 * math.log(s2)
                for k in range(d):
                    u = X[i, k] - Z[j, k]
                    dlogf[k] = 2.0 * p2 * u / s2
            else:
                for k in range(d):
                    t = p1 * (X[i, k] - Z[j, k])
                    logf += _log_sech(t)
                    dlogf[k] = -p1 * math.tanh(t)
            phi = math.exp(loga[i] + logf)
            for k in range(d):
                out[j, k] += (B[i, k] + dloga[i, k] + dlogf[k]) * phi
    return out


@njit(cache=True, nogil=True)
def stein_feature_block(X, B, Z, center, kind, p1, p2, tilt_a):
    n, d = X.shape
    m = Z.shape[0]
    loga, dloga = _tilt_terms(X, center, tilt_a)
    out = np.empty((n, m, d))
    dlogf = np.empty(d)
    for i in range(n):
        for j in range(m):
            logf = 0.0
            if kind == KIND_IMQ:
                s2 = p1
                for k in range(d):
                    u = X[i, k] - Z[j, k]
                    s2 += u * u
                logf = p2 * math.log(s2)
                for k in range(d):
                    u = X[i, k] - Z[j, k]
                    dlogf[k] = 2.0 * p2 * u / s2
            else:
                for k in range(d):
                    t = p1 * (X[i, k] - Z[j, k])
                    logf += _log_sech(t)
                    dlogf[k] = -p1 * math.tanh(t)
            phi = math.exp(loga[i] + logf)
            for k in range(d):
                out[i, j, k] = (B[i, k] + dloga[i, k] + dlogf[k]) * phi
    return out


@njit(cache=True, nogil=True)
def stein_kernel_total(X, B, kind, p1, p2, tilt_a, center):
    n, d = X.shape
    loga, dloga = _tilt_terms(X, center, tilt_a)
    total = 0.0
    for i in range(n):
        for j in range(i, n):
            logpsi = 0.0
            inner = 0.0
            if kind == KIND_IMQ:
                s2 = p1
                for k in range(d):
                    u = X[i, k] - X[j, k]
                    s2 += u * u
                logpsi = p2 * math.log(s2)
                for k in range(d):
                    u = X[i, k] - X[j, k]
                    psi1 = 2.0 * p2 * u / s2
                    psi2 = 2.0 * p2 / s2 + 4.0 * p2 * (p2 - 1.0) * u * u / (s2 * s2)
                    bi = B[i, k] + dloga[i, k]
                    bj = B[j, k] + dloga[j, k]
                    inner += bi * bj + (bj - bi) * psi1 - psi2
            else:
                for k in range(d):
                    t = p1 * (X[i, k] - X[j, k])
                    logpsi += _log_sech(t)
                for k in range(d):
                    t = p1 * (X[i, k] - X[j, k])
                    th = math.tanh(t)
                    psi1 = -p1 * th
                    psi2 = p1 * p1 * (2.0 * th * th - 1.0)
                    bi = B[i, k] + dloga[i, k]
                    bj = B[j, k] + dloga[j, k]
                    inner += bi * bj + (bj - bi) * psi1 - psi2
            k0 = math.exp(loga[i] + loga[j] + logpsi) * inner
            if i == j:
                total += k0
            else:
                total += 2.0 * k0
    return total


@njit(cache=True, nogil=True)
def rbm_gibbs(W, bv, bh, x0, n_keep, burn_in, thin, U, G):
    dx, dh = W.shape
    x = x0.copy()
    h = np.empty(dh)
    out = np.empty((n_keep, dx))
    kept = 0
    steps = burn_in + (n_keep - 1) * thin + 1
    for t in range(steps):
        for c in range(dh):
            act = bh[c]
            for r in range(dx):
                act += W[r, c] * x[r]
            p = 1.0 / (1.0 + math.exp(-act))
            h[c] = 1.0 if U[t, c] < p else 0.0
        for r in range(dx):
            mu = bv[r]
            for c in range(dh):
                mu += W[r, c] * h[c]
            x[r] = mu + G[t, r]
        if t >= burn_in and (t - burn_in) % thin == 0:
            out[kept] = x
            kept += 1
    return out
