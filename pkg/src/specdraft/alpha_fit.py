"""Estimate the expected acceptance rate from measured tokens-per-iteration.

Observations are (lookahead, mean tokens per iteration) pairs; the model is
TAR(gamma) = (1 - alpha**(gamma+1)) / (1 - alpha), fitted by least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateFit, DomainError, EmptyInput, InsufficientData
from .numerics import golden_section_minimize
from .scaling_models import expected_tar

Z_95 = 1.96
ALPHA_LO = 1e-6
ALPHA_HI = 1 - 1e-6


@dataclass(frozen=True)
class TarObservation:
    lookahead: int
    measured_tar: float

    def __post_init__(self):
        if self.lookahead < 0 or int(self.lookahead) != self.lookahead:
            raise DomainError(f"lookahead must be a non-negative integer, got {self.lookahead!r}")
        if not 1 <= self.measured_tar <= self.lookahead + 1:
            raise DomainError(
                f"measured TAR {self.measured_tar!r} outside [1, {self.lookahead + 1}]")


@dataclass(frozen=True)
class AlphaEstimate:
    alpha: float
    std_error: float
    ci_low: float
    ci_high: float
    residual_variance: float
    dof: int

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def _unpack(alpha, obs):
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if len(obs) == 0:
        raise EmptyInput("no TAR observations")
    gam = np.array([o.lookahead for o in obs], dtype=float)
    b = np.array([o.measured_tar for o in obs], dtype=float)
    return gam, b


def tar_residuals(alpha: float, obs: Sequence[TarObservation]) -> np.ndarray:
    gam, b = _unpack(alpha, obs)
    return expected_tar(alpha, gam) - b


def tar_jacobian(alpha: float, obs: Sequence[TarObservation]) -> np.ndarray:
    """d r_i / d alpha.

    Evaluated as sum_{k=1}^{gamma} k alpha^(k-1), which equals
    [(1 - alpha^(g+1)) - (g+1) alpha^g (1 - alpha)] / (1 - alpha)^2 without
    the cancellation near alpha = 1.
    """
    gam, _ = _unpack(alpha, obs)
    out = np.empty_like(gam)
    for i, g in enumerate(gam.astype(int)):
        k = np.arange(1, g + 1, dtype=float)
        out[i] = np.sum(k * alpha ** (k - 1))
    return out


def estimate_alpha(obs: Sequence[TarObservation]) -> AlphaEstimate:
    """Least-squares alpha with a normal-approximation 95% interval.

    The residual variance uses dof = n - 1; the interval is
    alpha +- 1.96 * sqrt(sigma^2 / (J'J)), clipped to [0, 1].
    """
    if len(obs) == 0:
        raise EmptyInput("no TAR observations")
    if all(o.lookahead == 0 for o in obs):
        raise DegenerateFit("all lookaheads are 0; TAR does not depend on alpha")
    if len(obs) < 2:
        raise InsufficientData("alpha estimation needs at least 2 observations")
    # canonical order makes the result exactly permutation invariant
    obs = sorted(obs, key=lambda o: (o.lookahead, o.measured_tar))

    def rss(a):
        r = tar_residuals(a, obs)
        return float(r @ r)

    # coarse scan guards against a non-unimodal objective on odd data
    grid = np.linspace(ALPHA_LO, ALPHA_HI, 101)
    k = int(np.argmin([rss(a) for a in grid]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    alpha = golden_section_minimize(rss, lo, hi, tol=1e-12)

    r = tar_residuals(alpha, obs)
    J = tar_jacobian(alpha, obs)
    jtj = float(J @ J)
    if jtj > 0:
        cand = alpha - float(J @ r) / jtj
        if ALPHA_LO <= cand <= ALPHA_HI and rss(cand) <= rss(alpha):
            alpha = cand
            r = tar_residuals(alpha, obs)
            J = tar_jacobian(alpha, obs)
            jtj = float(J @ J)
    if not math.isfinite(alpha) or jtj <= 0:
        raise ConvergenceError("alpha minimisation failed")

    dof = len(obs) - 1
    sigma2 = float(r @ r) / dof
    se = math.sqrt(sigma2 / jtj)
    return AlphaEstimate(
        alpha=alpha,
        std_error=se,
        ci_low=max(0.0, alpha - Z_95 * se),
        ci_high=min(1.0, alpha + Z_95 * se),
        residual_variance=sigma2,
        dof=dof,
    )
