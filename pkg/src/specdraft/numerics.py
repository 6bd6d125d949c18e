"""Special functions and small numerical utilities.

The Lambert W implementation covers the two real branches. Every routine
accepts scalars or numpy arrays and returns the same shape; scalar inputs
give back plain floats.
"""

from __future__ import annotations

import enum
import math
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError

INV_E = math.exp(-1.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

_MAX_ITER = 100
_STEP_TOL = 1e-14
# inputs this close to -1/e are snapped onto the branch point
_BRANCH_SLACK = 4.0 * np.finfo(float).eps


class LambertBranch(enum.Enum):
    PRINCIPAL = 0
    NEGATIVE_ONE = -1


def _as_output(arr: np.ndarray, shape: tuple):
    return float(arr[0]) if shape == () else arr.reshape(shape)


def _branch_series(p: np.ndarray) -> np.ndarray:
    # expansion of W about -1/e in p = +-sqrt(2(1 + e x))
    return -1.0 + p - p**2 / 3.0 + (11.0 / 72.0) * p**3 - (43.0 / 540.0) * p**4


def _halley(w, g_fn, label):
    """Vectorised Halley iteration; ``g_fn(w)`` returns (g, g', g'')."""
    w = np.array(w, dtype=float)
    active = np.ones(w.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            return w
        wa = w[active]
        g, g1, g2 = g_fn(wa, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = g1 - 0.5 * g * g2 / g1
            step = np.where(g == 0.0, 0.0, g / denom)
        step = np.where(np.isfinite(step), step, 0.0)
        w_new = wa - step
        w[active] = w_new
        done = np.abs(step) <= _STEP_TOL * (1.0 + np.abs(w_new))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    if active.any():
        raise ConvergenceError(f"Lambert W ({label}) did not converge in {_MAX_ITER} iterations")
    return w


def lambert_wm1_exp(s):
    """W_{-1}(-exp(s)) for s <= -1, computed without forming exp(s).

    Solves ``w + log(-w) = s`` on w <= -1, which stays well conditioned when
    ``exp(s)`` underflows (s far below -700).
    """
    shape = np.shape(s)
    s = np.asarray(s, dtype=float).ravel()
    if np.any(np.isnan(s)) or np.any(s > -1.0 + _BRANCH_SLACK):
        bad = s[np.isnan(s) | (s > -1.0 + _BRANCH_SLACK)]
        raise DomainError(f"lambert_wm1_exp needs s <= -1, got {bad[0]!r}")
    s = np.minimum(s, -1.0)

    t = -np.expm1(s + 1.0)  # 1 + e*x, >= 0
    near = s > -1.25
    w0 = np.empty_like(s)
    w0[near] = _branch_series(-np.sqrt(2.0 * t[near]))
    far = ~near
    ls = np.log(-s[far])
    w0[far] = s[far] - ls + ls / s[far]

    at_point = t == 0.0
    w0[at_point] = -1.0
    w0 = np.minimum(w0, -1.0 - 1e-300)

    def g_fn(w, active):
        sa = s[active]
        return w + np.log(-w) - sa, 1.0 + 1.0 / w, -1.0 / w**2

    w = _halley(w0, g_fn, "W-1")
    w[at_point] = -1.0
    w = np.minimum(w, -1.0)
    return _as_output(w, shape)


def _principal(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    at_point = x <= -INV_E
    w[at_point] = -1.0

    big = x > 1.0
    if big.any():
        lx = np.log(x[big])
        L2 = np.log(lx + 1.0)
        w0 = np.maximum(lx - L2 + L2 / np.maximum(lx, 1.0), 0.5)

        def g_big(wa, active):
            la = lx[active]
            return wa + np.log(wa) - la, 1.0 + 1.0 / wa, -1.0 / wa**2

        w[big] = _halley(w0, g_big, "W0")

    rest = ~big & ~at_point
    if rest.any():
        xr = x[rest]
        t = np.maximum(1.0 + math.e * xr, 0.0)
        near = xr < -0.32
        w0 = np.empty_like(xr)
        w0[near] = _branch_series(np.sqrt(2.0 * t[near]))
        lp = np.log1p(xr[~near])
        w0[~near] = lp * (1.0 - np.log1p(lp) / (2.0 + lp))

        def g_small(wa, active):
            ea = np.exp(wa)
            f = wa * ea - xr[active]
            f1 = ea * (wa + 1.0)
            f2 = ea * (wa + 2.0)
            return f, f1, f2

        w[rest] = np.maximum(_halley(w0, g_small, "W0"), -1.0)
    return w


def lambert_w(branch: LambertBranch, x):
    """Real Lambert W on the requested branch.

    ``PRINCIPAL`` is defined on x >= -1/e and returns w >= -1;
    ``NEGATIVE_ONE`` is defined on -1/e <= x < 0 and returns w <= -1.
    """
    shape = np.shape(x)
    x = np.asarray(x, dtype=float).ravel()
    lower = -INV_E * (1.0 + _BRANCH_SLACK)
    if np.any(np.isnan(x)) or np.any(x < lower):
        raise DomainError(f"Lambert W undefined below -1/e (got {x[np.isnan(x) | (x < lower)][0]!r})")
    x = np.maximum(x, -INV_E)

    if branch is LambertBranch.PRINCIPAL:
        return _as_output(_principal(x), shape)
    if branch is LambertBranch.NEGATIVE_ONE:
        if np.any(x >= 0.0):
            raise DomainError("W_{-1} is only defined on [-1/e, 0)")
        s = np.minimum(np.log(-x), -1.0)
        return _as_output(lambert_wm1_exp(s).ravel(), shape)
    raise TypeError(f"unknown branch {branch!r}")


def finite_difference(f: Callable[[float], float], x: float, h: float) -> float:
    """Central difference (f(x+h) - f(x-h)) / 2h."""
    if not h > 0:
        raise DomainError("step h must be positive")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def golden_section_minimize(f: Callable[[float], float], lo: float, hi: float,
                            tol: float = 1e-12, max_iter: int = 500) -> float:
    """Minimise a unimodal scalar function on [lo, hi] by golden-section search.

    Returns the midpoint of the final bracket, whose width is at most ``tol``
    (absolute).
    """
    if not lo < hi:
        raise DomainError("golden_section_minimize needs lo < hi")
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    else:
        raise ConvergenceError("golden-section search exhausted its iteration budget")
    return 0.5 * (a + b)
