"""Closed-form models: pre-training loss, the acceptance plane, TAR and throughput.

Throughput is expressed in tokens per FLOP with the architecture constant
dropped. All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AlphaOutOfRange, DomainError
from .numerics import lambert_wm1_exp


@dataclass(frozen=True)
class ChinchillaParams:
    """Constants of L(N, D) = E + A / N**nu + B / D**delta (loss in nats)."""

    irreducible: float
    coef_model: float
    coef_data: float
    exp_model: float
    exp_data: float

    def __post_init__(self):
        if not (self.coef_model > 0 and self.coef_data > 0):
            raise DomainError("Chinchilla coefficients must be positive")
        if not (0 < self.exp_model < 1 and 0 < self.exp_data < 1):
            raise DomainError("Chinchilla exponents must lie in (0, 1)")


@dataclass(frozen=True)
class PlaneCoefficients:
    """alpha = a * draft_ppl + b * target_ppl + c."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a < 0 and self.b > 0):
            warnings.warn(
                f"plane coefficients a={self.a:g}, b={self.b:g} fall outside the usual "
                "regime (a < 0, b > 0)", stacklevel=3)


@dataclass(frozen=True)
class SpecSystem:
    target_size: float
    draft_size: float

    def __post_init__(self):
        if not (self.target_size > self.draft_size > 0):
            raise DomainError(
                f"need target_size > draft_size > 0, got M={self.target_size!r}, "
                f"N={self.draft_size!r}")


@dataclass(frozen=True)
class TrainingBudgets:
    draft_tokens: float
    target_tokens: float

    def __post_init__(self):
        if not (self.draft_tokens > 0 and self.target_tokens > 0):
            raise DomainError("token budgets must be positive")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(~((a > 0) & (a < 1))):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return a


def chinchilla_loss(n, d, p: ChinchillaParams):
    n = np.asarray(n, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(~(n > 0)) or np.any(~(d > 0)):
        raise DomainError("model size and token count must be positive")
    return _out(p.irreducible + p.coef_model * n ** -p.exp_model + p.coef_data * d ** -p.exp_data)


def perplexity_of(n, d, p: ChinchillaParams):
    return _out(np.exp(chinchilla_loss(n, d, p)))


def alpha_plane(x, y, plane: PlaneCoefficients, *, check: bool = True):
    """Affine acceptance law. With ``check`` any value outside (0, 1) raises."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("perplexities must be non-negative")
    alpha = plane.a * x + plane.b * y + plane.c
    if check and np.any(~((alpha > 0) & (alpha < 1))):
        raise AlphaOutOfRange(f"plane gives alpha={alpha!r}, outside (0, 1)")
    return _out(alpha)


def improvement_factor(alpha, gamma, c):
    """Expected wall-clock improvement over target-only decoding."""
    a = _check_alpha(alpha)
    gamma = np.asarray(gamma, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(gamma < 0) or np.any(c < 0):
        raise DomainError("gamma and c must be non-negative")
    return _out(-np.expm1((gamma + 1) * np.log(a)) / ((1 - a) * (gamma * c + 1)))


def expected_tar(alpha, gamma):
    """Mean tokens produced per iteration, (1 - alpha**(gamma+1)) / (1 - alpha)."""
    a = np.asarray(alpha, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(~((a > 0) & (a < 1))):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if np.any(gamma < 0):
        raise DomainError("gamma must be non-negative")
    near_one = np.abs(1 - a) < 1e-12
    safe = np.where(near_one, 0.5, a)
    val = -np.expm1((gamma + 1) * np.log(safe)) / (1 - safe)
    # the exact value lies in [1, gamma + 1]; clip away last-ulp rounding
    val = np.clip(val, 1.0, gamma + 1)
    return _out(np.where(near_one, gamma + 1, val))


def throughput(system: SpecSystem, alpha, gamma):
    a = _check_alpha(alpha)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise DomainError("gamma must be non-negative")
    m, n = system.target_size, system.draft_size
    return _out(-np.expm1((gamma + 1) * np.log(a)) / (2 * (m + gamma * n) * (1 - a)))


def _optimum(m, n, alpha):
    """(gamma_opt, throughput at gamma_opt) with clamping at gamma = 0."""
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    log_a = np.log(alpha)
    # argument of W is -alpha**(M/N - 1) / e, formed in log space
    w = lambert_wm1_exp((m / n - 1) * log_a - 1)
    gamma = -m / n + (w + 1) / log_a
    tput = -log_a / (2 * n * (alpha - 1) * w)
    clamp = gamma <= 0
    gamma = np.where(clamp, 0.0, gamma)
    tput = np.where(clamp, 1 / (2 * m), tput)
    return gamma, tput


def gamma_opt(system: SpecSystem, alpha):
    """Throughput-maximising (possibly fractional) lookahead, clamped at 0."""
    a = _check_alpha(alpha)
    return _out(_optimum(system.target_size, system.draft_size, a)[0])


def throughput_at_opt(system: SpecSystem, alpha):
    a = _check_alpha(alpha)
    return _out(_optimum(system.target_size, system.draft_size, a)[1])


def throughput_from_hparams(n, budgets: TrainingBudgets, m, plane: PlaneCoefficients,
                            p_draft: ChinchillaParams, p_target: ChinchillaParams) -> float:
    """Throughput at optimal lookahead from sizes and token budgets.

    Raises AlphaOutOfRange when the plane extrapolates outside (0, 1).
    """
    system = SpecSystem(m, n)
    x = perplexity_of(n, budgets.draft_tokens, p_draft)
    y = perplexity_of(m, budgets.target_tokens, p_target)
    alpha = alpha_plane(x, y, plane)
    return throughput_at_opt(system, alpha)


@dataclass
class ThroughputCurve:
    """Throughput along a draft-size grid; infeasible points hold NaN."""

    n: np.ndarray
    throughput: np.ndarray
    alpha: np.ndarray
    gamma_opt: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.throughput)


def throughput_curve(n_grid, m: float, budgets: TrainingBudgets, plane: PlaneCoefficients,
                     p_draft: ChinchillaParams, p_target: ChinchillaParams) -> ThroughputCurve:
    """Vectorised throughput_from_hparams over a grid of draft sizes.

    Points with N >= M or with the plane value outside (0, 1) are marked
    infeasible instead of raising.
    """
    n = np.asarray(n_grid, dtype=float)
    if not m > 0:
        raise DomainError("target size must be positive")
    # per-point alpha is scalar-exact with throughput_from_hparams
    x = perplexity_of(n, budgets.draft_tokens, p_draft)
    y = perplexity_of(m, budgets.target_tokens, p_target)
    alpha = np.asarray(alpha_plane(x, y, plane, check=False), dtype=float)
    ok = (n > 0) & (n < m) & (alpha > 0) & (alpha < 1)
    tput = np.full(n.shape, np.nan)
    gam = np.full(n.shape, np.nan)
    if ok.any():
        g, t = _optimum(m, n[ok], alpha[ok])
        gam[ok] = g
        tput[ok] = t
    return ThroughputCurve(n=n, throughput=tput, alpha=np.where(ok, alpha, np.nan), gamma_opt=gam)
