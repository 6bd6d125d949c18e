"""Monte-Carlo simulation of speculative acceptance over categorical distributions.

Each iteration draws ``gamma`` i.i.d. draft tokens from q and accepts them left to
right while ``r_i <= p(x_i) / q(x_i)``; the count of accepted draft tokens
is recorded. With the same (p, q) at every position the per-token acceptance
probability is exactly sum_x min(p(x), q(x)).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats.sampling import DiscreteAliasUrn

from .alpha_fit import TarObservation
from .errors import DomainError

_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class CategoricalPair:
    p: np.ndarray  # target
    q: np.ndarray  # draft

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.ndim != 1 or p.shape != q.shape or p.size < 1:
            raise DomainError("p and q must be 1-d vectors of equal length")
        for name, v in (("p", p), ("q", q)):
            if np.any(v < 0) or abs(v.sum() - 1) > 1e-12:
                raise DomainError(f"{name} is not a probability vector")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def vocab_size(self) -> int:
        return self.p.size


@dataclass
class SimResult:
    lookahead: int
    iterations: int
    mean_accepted: float
    accept_histogram: np.ndarray

    def to_tar_observation(self) -> TarObservation:
        # TAR also counts the corrected / bonus token emitted every iteration
        return TarObservation(self.lookahead, min(self.mean_accepted + 1.0, self.lookahead + 1.0))

    def to_dict(self) -> dict:
        return {
            "lookahead": self.lookahead,
            "iterations": self.iterations,
            "mean_accepted": self.mean_accepted,
            "accept_histogram": [int(c) for c in self.accept_histogram],
        }


def exact_alpha(pair: CategoricalPair) -> float:
    return float(np.minimum(pair.p, pair.q).sum())


def accepted_count_pmf(alpha: float, gamma: int) -> np.ndarray:
    """P(n = k), k = 0..gamma: alpha^k (1 - alpha) below gamma, alpha^gamma at gamma."""
    k = np.arange(gamma + 1, dtype=float)
    pmf = alpha**k * (1 - alpha)
    pmf[gamma] = alpha**gamma
    return pmf


def _run_block(pair: CategoricalPair, gamma: int, iterations: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    # alias-urn sampling is O(1) per draw; zero-probability tokens are never drawn
    sampler = DiscreteAliasUrn(pair.q, random_state=rng)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pair.q > 0, pair.p / pair.q, 1.0)
    hist = np.zeros(gamma + 1, dtype=np.int64)
    done = 0
    while done < iterations:
        c = min(_CHUNK, iterations - done)
        tok = sampler.rvs((c, gamma))
        accept = rng.random((c, gamma)) <= ratio[tok]
        n = np.where(accept.all(axis=1), gamma, np.argmin(accept, axis=1))
        hist += np.bincount(n, minlength=gamma + 1)
        done += c
    return hist


def simulate_tar(pair: CategoricalPair, gamma: int, iterations: int, seed: int, *,
                 partitions: int = 1, workers: int = 1) -> SimResult:
    """Simulate ``iterations`` speculative steps with lookahead ``gamma``.

    Iterations are split into ``partitions`` blocks with child seeds spawned
    from ``seed``; the result depends only on (seed, partitions), not on
    ``workers``.
    """
    if gamma < 1 or iterations < 1 or partitions < 1:
        raise DomainError("gamma, iterations and partitions must be positive")
    children = np.random.SeedSequence(seed).spawn(partitions)
    sizes = [iterations // partitions + (i < iterations % partitions) for i in range(partitions)]
    jobs = [(pair, gamma, s, ch) for s, ch in zip(sizes, children) if s > 0]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hists = list(pool.map(lambda a: _run_block(*a), jobs))
    else:
        hists = [_run_block(*a) for a in jobs]
    hist = np.sum(hists, axis=0)
    mean = float(hist @ np.arange(gamma + 1)) / iterations
    return SimResult(lookahead=gamma, iterations=iterations, mean_accepted=mean,
                     accept_histogram=hist)


def synth_pair(vocab: int, divergence_knob: float, seed: int) -> CategoricalPair:
    """Random target p and draft q = (1 - k) p + k r with r independent of p."""
    if vocab < 2:
        raise DomainError("vocab must be at least 2")
    if not 0 <= divergence_knob <= 1:
        raise DomainError("divergence_knob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(vocab))
    r = rng.dirichlet(np.ones(vocab))
    q = (1 - divergence_knob) * p + divergence_knob * r
    return CategoricalPair(p / p.sum(), q / q.sum())
