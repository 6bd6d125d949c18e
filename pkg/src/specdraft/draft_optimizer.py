"""Grid search for the throughput-optimal draft size and the fits built on it."""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InsufficientData, NoFeasiblePoint
from .numerics import golden_section_minimize
from .regression import FitResult, ols_hc3
from .scaling_models import (
    ChinchillaParams,
    PlaneCoefficients,
    TrainingBudgets,
    throughput_curve,
)


def _log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    g = np.logspace(math.log10(lo), math.log10(hi), points)
    # pin the endpoints so configured values appear exactly in the records
    g[0] = lo
    if points > 1:
        g[-1] = hi
    return g


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced ranges (endpoints included) for N, M, D and D'."""

    n_range: tuple[float, float]
    n_points: int
    m_range: tuple[float, float]
    m_points: int
    d_range: tuple[float, float]
    d_points: int
    dprime_range: tuple[float, float]
    dprime_points: int
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing != "log":
            raise DomainError(f"unsupported grid spacing {self.spacing!r}")
        for name in ("n", "m", "d", "dprime"):
            lo, hi = getattr(self, f"{name}_range")
            pts = getattr(self, f"{name}_points")
            if not (lo > 0 and pts >= 1):
                raise DomainError(f"{name} grid needs a positive range and >= 1 point")
            if pts == 1 and not lo <= hi:
                raise DomainError(f"{name} range must satisfy low <= high")
            if pts > 1 and not lo < hi:
                raise DomainError(f"{name} range must satisfy low < high")

    def n_grid(self) -> np.ndarray:
        return _log_grid(*self.n_range, self.n_points)

    def m_grid(self) -> np.ndarray:
        return _log_grid(*self.m_range, self.m_points)

    def d_grid(self) -> np.ndarray:
        return _log_grid(*self.d_range, self.d_points)

    def dprime_grid(self) -> np.ndarray:
        return _log_grid(*self.dprime_range, self.dprime_points)

    def cells(self) -> list[tuple[float, float, float]]:
        """(M, D, D') combinations in lexicographic order."""
        return list(itertools.product(self.m_grid(), self.d_grid(), self.dprime_grid()))


@dataclass(frozen=True)
class OptimalDraftRecord:
    target_size: float
    draft_tokens: float
    target_tokens: float
    optimal_draft: float
    best_throughput: float
    alpha_at_opt: float
    gamma_at_opt: float

    def to_dict(self) -> dict:
        return asdict(self)


def optimal_draft_size(m: float, budgets: TrainingBudgets, plane: PlaneCoefficients,
                       p_draft: ChinchillaParams, p_target: ChinchillaParams,
                       grid: GridSpec | np.ndarray, *, polish: bool = False) -> OptimalDraftRecord:
    """Argmax of throughput over the draft-size grid.

    Infeasible points (N >= M, plane outside (0, 1)) are skipped. ``polish``
    refines the discrete argmax by golden-section search in log N between its
    grid neighbours.
    """
    n = grid.n_grid() if isinstance(grid, GridSpec) else np.asarray(grid, dtype=float)
    curve = throughput_curve(n, m, budgets, plane, p_draft, p_target)
    if not curve.feasible.any():
        raise NoFeasiblePoint(f"no feasible draft size for M={m:g}, D={budgets.draft_tokens:g}, "
                              f"D'={budgets.target_tokens:g}")
    t = np.where(curve.feasible, curve.throughput, -np.inf)
    i = int(np.argmax(t))
    n_star, t_star = float(n[i]), float(t[i])
    alpha, gamma = float(curve.alpha[i]), float(curve.gamma_opt[i])

    if polish and len(n) > 1:
        lo, hi = n[max(i - 1, 0)], n[min(i + 1, len(n) - 1)]

        def neg(log_n):
            c = throughput_curve(np.array([math.exp(log_n)]), m, budgets, plane, p_draft, p_target)
            return -c.throughput[0] if c.feasible[0] else math.inf

        log_best = golden_section_minimize(neg, math.log(lo), math.log(hi), tol=1e-10)
        c = throughput_curve(np.array([math.exp(log_best)]), m, budgets, plane, p_draft, p_target)
        if c.feasible[0] and c.throughput[0] >= t_star:
            n_star, t_star = float(c.n[0]), float(c.throughput[0])
            alpha, gamma = float(c.alpha[0]), float(c.gamma_opt[0])

    return OptimalDraftRecord(
        target_size=float(m), draft_tokens=float(budgets.draft_tokens),
        target_tokens=float(budgets.target_tokens), optimal_draft=n_star,
        best_throughput=t_star, alpha_at_opt=alpha, gamma_at_opt=gamma)


def sweep_grid(grid: GridSpec, plane: PlaneCoefficients, p_draft: ChinchillaParams,
               p_target: ChinchillaParams, *, workers: int = 1,
               polish: bool = False) -> list[OptimalDraftRecord]:
    """One optimal-draft record per (M, D, D') cell, in lexicographic order.

    Cells without any feasible draft size are dropped with a warning.
    """
    n = grid.n_grid()

    def solve(cell):
        m, d, dp = cell
        try:
            return optimal_draft_size(m, TrainingBudgets(d, dp), plane, p_draft, p_target, n,
                                      polish=polish)
        except NoFeasiblePoint:
            return None

    cells = grid.cells()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(solve, cells))
    else:
        out = [solve(c) for c in cells]
    skipped = [c for c, r in zip(cells, out) if r is None]
    if skipped:
        warnings.warn(f"{len(skipped)} of {len(cells)} cells had no feasible draft size",
                      stacklevel=2)
    return [r for r in out if r is not None]


def skipped_cells(grid: GridSpec, records: Sequence[OptimalDraftRecord]) -> list[tuple]:
    have = {(r.target_size, r.draft_tokens, r.target_tokens) for r in records}
    return [c for c in grid.cells() if tuple(float(v) for v in c) not in have]


@dataclass
class AnsatzFit:
    """N*/M = mu + m0 / M + log_draft_data_coef ln D + log_target_data_coef ln D'."""

    mu: float
    m0: float
    log_draft_data_coef: float
    log_target_data_coef: float
    diagnostics: FitResult

    def predict_ratio(self, m, d, dprime):
        return (self.mu + self.m0 / np.asarray(m) + self.log_draft_data_coef * np.log(d)
                + self.log_target_data_coef * np.log(dprime))


@dataclass
class PooledFit:
    """N* = mu M + m0."""

    mu: float
    m0: float
    diagnostics: FitResult

    def predict(self, m):
        return self.mu * np.asarray(m) + self.m0


def _columns(records):
    r = np.array([[x.target_size, x.draft_tokens, x.target_tokens, x.optimal_draft]
                  for x in records], dtype=float)
    return r.T


def fit_ansatz(records: Sequence[OptimalDraftRecord]) -> AnsatzFit:
    if len(records) < 5:
        raise InsufficientData("ansatz fit needs at least 5 records")
    m, d, dp, n_star = _columns(records)
    X = np.column_stack([np.ones_like(m), 1 / m, np.log(d), np.log(dp)])
    res = ols_hc3(X, n_star / m, names=["mu", "M0", "gamma", "gamma_prime"])
    mu, m0, g, gp = (float(v) for v in res.estimates)
    return AnsatzFit(mu, m0, g, gp, res)


def fit_pooled(records: Sequence[OptimalDraftRecord]) -> PooledFit:
    m, _, _, n_star = _columns(records) if records else (np.array([]),) * 4
    if len(np.unique(m)) < 2:
        raise InsufficientData("pooled fit needs at least two distinct target sizes")
    res = ols_hc3(np.column_stack([m, np.ones_like(m)]), n_star, names=["mu", "M0"])
    return PooledFit(float(res.estimates[0]), float(res.estimates[1]), res)
