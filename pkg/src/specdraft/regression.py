"""Least-squares engines: classical and HC3 OLS, the acceptance plane, draft curves."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .errors import ConvergenceError, DomainError, InsufficientData, LeverageOne, RankDeficient
from .scaling_models import PlaneCoefficients

COND_LIMIT = 1e12  # on the (column-equilibrated) normal matrix
Z_95 = 1.96


@dataclass
class FitResult:
    """Point estimates with standard errors and two-sided 95% intervals.

    ``critical_value`` is the multiplier used for ``margins``; it is the
    Student-t quantile on n - p degrees of freedom unless a fixed value was
    requested.
    """

    names: list[str]
    estimates: np.ndarray
    std_errors: np.ndarray
    margins: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    mse: float
    r_squared: float
    n_obs: int
    dof: int
    critical_value: float
    cov_type: str = "classical"
    cov: np.ndarray = field(default=None, repr=False)
    residuals: np.ndarray = field(default=None, repr=False)

    @property
    def rss(self) -> float:
        return float(self.mse * self.n_obs)

    @property
    def adj_r_squared(self) -> float:
        p = len(self.estimates)
        if self.n_obs - p <= 0:
            return float("nan")
        return 1 - (1 - self.r_squared) * (self.n_obs - 1) / (self.n_obs - p)

    def __getitem__(self, name: str) -> float:
        return float(self.estimates[self.names.index(name)])

    def to_dict(self) -> dict:
        params = {
            name: {
                "estimate": float(self.estimates[i]),
                "std_error": float(self.std_errors[i]),
                "margin": float(self.margins[i]),
                "ci_low": float(self.ci_low[i]),
                "ci_high": float(self.ci_high[i]),
            }
            for i, name in enumerate(self.names)
        }
        return {
            "parameters": params,
            "mse": float(self.mse),
            "r_squared": float(self.r_squared),
            "adj_r_squared": float(self.adj_r_squared),
            "n_obs": int(self.n_obs),
            "dof": int(self.dof),
            "critical_value": float(self.critical_value),
            "cov_type": self.cov_type,
        }


def critical_value(dof: int, critical="t") -> float:
    if critical == "t":
        return float(stats.t.ppf(0.975, dof)) if dof > 0 else float("inf")
    if critical == "z":
        return Z_95
    return float(critical)


def _r_squared(y, rss):
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        return 1.0 if rss == 0.0 else float("nan")
    return 1.0 - rss / tss


def _build(names, beta, cov, resid, y, crit, cov_type):
    n, p = len(y), len(beta)
    dof = n - p
    cv = critical_value(dof, crit)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    margin = cv * se
    rss = float(resid @ resid)
    return FitResult(
        names=list(names), estimates=beta, std_errors=se, margins=margin,
        ci_low=beta - margin, ci_high=beta + margin, mse=rss / n,
        r_squared=_r_squared(y, rss), n_obs=n, dof=dof, critical_value=cv,
        cov_type=cov_type, cov=cov, residuals=resid)


class _QR:
    """Thin QR of the column-equilibrated design, with a rank guard."""

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DomainError("design matrix must be two-dimensional")
        n, p = X.shape
        if n < p:
            raise InsufficientData(f"need at least {p} rows, got {n}")
        if not np.all(np.isfinite(X)):
            raise DomainError("design matrix has non-finite entries")
        scale = np.linalg.norm(X, axis=0)
        if np.any(scale == 0):
            raise RankDeficient("design matrix has an all-zero column")
        self.X, self.scale = X, scale
        self.Q, self.R = np.linalg.qr(X / scale)
        sv = np.linalg.svd(self.R, compute_uv=False)
        if sv[-1] == 0 or (sv[0] / sv[-1]) ** 2 > COND_LIMIT:
            raise RankDeficient("design matrix is (numerically) rank deficient")
        self.R_inv = linalg.solve_triangular(self.R, np.eye(p))

    def solve(self, y):
        return linalg.solve_triangular(self.R, self.Q.T @ y) / self.scale

    def xtx_inv(self):
        # (X'X)^-1 = D^-1 R^-1 R^-T D^-1
        inner = self.R_inv @ self.R_inv.T
        return inner / np.outer(self.scale, self.scale)

    def leverage(self):
        return np.sum(self.Q**2, axis=1)


def _default_names(p):
    return [f"x{i}" for i in range(p)]


def ols(X, y, *, names: Sequence[str] | None = None, critical="t", weights=None) -> FitResult:
    """Ordinary (or weighted) least squares with classical standard errors.

    sigma^2 is estimated as RSS / (n - p); ``mse`` is RSS / n.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(~(w > 0)):
            raise DomainError("weights must be positive, one per observation")
        w = np.sqrt(w)
        Xw, yw = X * w[:, None], y * w
    else:
        Xw, yw = X, y
    qr = _QR(Xw)
    beta = qr.solve(yw)
    resid_w = yw - Xw @ beta
    n, p = X.shape
    s2 = float(resid_w @ resid_w) / (n - p) if n > p else float("nan")
    cov = s2 * qr.xtx_inv()
    return _build(names or _default_names(p), beta, cov, y - X @ beta, y, critical,
                  "classical" if weights is None else "weighted")


def ols_hc3(X, y, *, names: Sequence[str] | None = None, critical="t") -> FitResult:
    """OLS point estimates with HC3 heteroskedasticity-robust covariance."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    qr = _QR(X)
    beta = qr.solve(y)
    resid = y - X @ beta
    h = qr.leverage()
    if np.any(h >= 1 - 1e-10):
        raise LeverageOne(f"observation {int(np.argmax(h))} has leverage 1")
    bread = qr.xtx_inv()
    omega = (resid / (1 - h)) ** 2
    meat = (X * omega[:, None]).T @ X
    cov = bread @ meat @ bread
    return _build(names or _default_names(X.shape[1]), beta, cov, resid, y, critical, "HC3")


# -- acceptance plane ------------------------------------------------------


@dataclass(frozen=True)
class AlphaObservation:
    draft_id: str
    target_id: str
    draft_ppl: float
    target_ppl: float
    alpha: float
    alpha_ci: float = float("nan")

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.draft_ppl > 1 and self.target_ppl > 1):
            raise DomainError("perplexities must exceed 1")


def fit_alpha_plane(obs: Sequence[AlphaObservation], *, weighted: bool = False,
                    critical="t") -> tuple[PlaneCoefficients, FitResult]:
    """Regress alpha on (draft_ppl, target_ppl, 1).

    ``weighted`` uses inverse squared CI half-widths as weights; the default
    is the unweighted fit.
    """
    if len(obs) < 4:
        raise InsufficientData("plane fit needs at least 4 observations")
    x = np.array([o.draft_ppl for o in obs])
    y = np.array([o.target_ppl for o in obs])
    alpha = np.array([o.alpha for o in obs])
    if len(np.unique(x)) < 2 or len(np.unique(y)) < 2:
        raise RankDeficient("need at least two distinct draft and target perplexities")
    X = np.column_stack([x, y, np.ones_like(x)])
    weights = None
    if weighted:
        ci = np.array([o.alpha_ci for o in obs])
        if np.any(~(ci > 0)):
            raise DomainError("weighted plane fit needs positive alpha_ci on every row")
        weights = 1.0 / ci**2
    res = ols(X, alpha, names=["A", "B", "C"], critical=critical, weights=weights)
    a, b, c = res.estimates
    return PlaneCoefficients(float(a), float(b), float(c)), res


# -- single-variable draft curves -----------------------------------------


class CurveForm(enum.Enum):
    LINEAR = "linear"
    LOGARITHMIC = "logarithmic"
    POWER_LAW = "power-law"


def _gauss_newton_power(x, alpha, p0, max_iter=200, tol=1e-13):
    """Fit alpha = p1 * x**p2 by damped Gauss-Newton; returns (params, J)."""
    lx = np.log(x)
    p = np.array(p0, dtype=float)

    def resid(q):
        return q[0] * x ** q[1] - alpha

    r = resid(p)
    rss = r @ r
    for _ in range(max_iter):
        xp = x ** p[1]
        J = np.column_stack([xp, p[0] * xp * lx])
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        t = 1.0
        while True:
            cand = p + t * step
            rc = resid(cand)
            rss_c = rc @ rc
            if rss_c <= rss:
                break
            if t < 1e-10:
                # no descent left at floating-point resolution
                return p, J
            t *= 0.5
        converged = np.all(np.abs(cand - p) <= tol * (1 + np.abs(p)))
        p, r, rss = cand, rc, rss_c
        if converged or rss == 0.0:
            xp = x ** p[1]
            return p, np.column_stack([xp, p[0] * xp * lx])
    raise ConvergenceError("power-law Gauss-Newton did not converge")


def fit_draft_curve(form: CurveForm, points, *, critical="t") -> FitResult:
    """Two-parameter fit of alpha against draft perplexity.

    Linear: alpha = p1 * x + p2; Logarithmic: alpha = p1 * ln(x) + p2;
    PowerLaw: alpha = p1 * x**p2 (nonlinear least squares started from the
    log-log OLS solution).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be (x, alpha) pairs")
    x, alpha = pts[:, 0], pts[:, 1]
    if len(x) < 3:
        raise InsufficientData("curve fit needs at least 3 points")
    if len(np.unique(x)) != len(x):
        raise RankDeficient("curve fit needs distinct x values")
    form = CurveForm(form)
    names = ["p1", "p2"]
    if form is CurveForm.LINEAR:
        return ols(np.column_stack([x, np.ones_like(x)]), alpha, names=names, critical=critical)
    if np.any(x <= 0):
        raise DomainError(f"{form.value} fit needs positive x")
    if form is CurveForm.LOGARITHMIC:
        return ols(np.column_stack([np.log(x), np.ones_like(x)]), alpha, names=names,
                   critical=critical)
    if np.any(alpha <= 0):
        raise DomainError("power-law fit needs positive alpha")
    init = ols(np.column_stack([np.ones_like(x), np.log(x)]), np.log(alpha), critical=critical)
    p0 = [np.exp(init.estimates[0]), init.estimates[1]]
    p, J = _gauss_newton_power(x, alpha, p0)
    resid = alpha - p[0] * x ** p[1]
    n = len(x)
    s2 = float(resid @ resid) / (n - 2)
    try:
        cov = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("singular Jacobian in power-law fit") from exc
    return _build(names, p, cov, resid, alpha, critical, "nls")
