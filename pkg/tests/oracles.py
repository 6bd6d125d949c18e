"""Slow, obviously-correct reference implementations used only by the tests."""

import math

import numpy as np


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w_bisect(x, branch):
    f = lambda w: w * math.exp(w) - x
    if branch == 0:
        return bisect(f, -1.0, max(1.0, math.log1p(x) + 1))
    return bisect(f, -800.0, -1.0)


def throughput_direct(m, n, alpha, gamma):
    tar = sum(alpha**k for k in range(int(gamma) + 1)) if float(gamma).is_integer() else \
        (1 - alpha ** (gamma + 1)) / (1 - alpha)
    return tar / (2 * (m + gamma * n))


def gamma_scan(m, n, alpha, hi=50.0, step=1e-3):
    g = np.arange(0.0, hi + step, step)
    t = (1 - alpha ** (g + 1)) / (2 * (m + g * n) * (1 - alpha))
    return float(g[np.argmax(t)])


def hc3_dense(X, y):
    """Sandwich covariance with explicit n-by-n hat matrix and inverses."""
    X = np.asarray(X, float)
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ X.T @ y
    e = y - X @ beta
    H = X @ xtx_inv @ X.T
    h = np.diag(H)
    omega = np.diag(e**2 / (1 - h) ** 2)
    return beta, xtx_inv @ X.T @ omega @ X @ xtx_inv


def truncated_geometric_mean(alpha, gamma):
    probs = [alpha**k * (1 - alpha) for k in range(gamma)] + [alpha**gamma]
    return sum(k * p for k, p in enumerate(probs)), probs


def enumerate_acceptance(p, q, gamma):
    """Exact pmf of the accepted count by enumerating every draft sequence."""
    import itertools

    v = len(p)
    pmf = np.zeros(gamma + 1)
    accept = [min(1.0, p[x] / q[x]) if q[x] > 0 else 0.0 for x in range(v)]
    for seq in itertools.product(range(v), repeat=gamma):
        w = math.prod(q[x] for x in seq)
        if w == 0:
            continue
        alive = w
        for k, x in enumerate(seq):
            pmf[k] += alive * (1 - accept[x])
            alive *= accept[x]
        pmf[gamma] += alive
    return pmf
