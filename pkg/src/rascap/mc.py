"""Monte-Carlo engines for the exact bounds and the selected capacity.

Each trial draws from its own counter-based substream (see streams), so a
sample is fully determined by (config, estimator, trials, seed) no matter
how many workers execute the trial loop.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import streams
from .bounds import DensityGrid, NormalDensity
from .channel import SystemConfig, capacity, sample_channel
from .selection import exhaustive_select, greedy_select

__all__ = [
    "EmpiricalSample",
    "sample_bub_exact",
    "sample_mub_exact",
    "sample_selected_capacity",
    "ks_distance",
    "summarize",
    "resolve_workers",
]

DEFAULT_TRIALS = 50_000
WORKERS_ENV = "RASCAP_WORKERS"
_CHUNK = 1024


def resolve_workers(workers: int | None) -> int:
    """Explicit argument, else the RASCAP_WORKERS variable, else 1."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted Monte-Carlo draws plus the identity of the run that made them."""

    values: np.ndarray
    n: int
    seed: int
    config_fingerprint: str

    @classmethod
    def from_draws(cls, draws: np.ndarray, seed: int, fingerprint: str):
        values = np.sort(np.asarray(draws, dtype=float))
        return cls(values, values.size, seed, fingerprint)

    def cdf_at(self, x):
        """Right-continuous empirical CDF."""
        return np.searchsorted(self.values, np.asarray(x, dtype=float),
                               side="right") / self.n

    def mean(self) -> float:
        return float(self.values.mean())

    def variance(self) -> float:
        return float(self.values.var(ddof=1)) if self.n > 1 else 0.0

    def standard_error(self) -> float:
        return float(np.sqrt(self.variance() / self.n))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))


def _fingerprint(estimator: str, cfg: SystemConfig, trials: int, seed: int) -> str:
    text = "|".join([estimator, str(cfg.n_t), str(cfg.n_r), str(cfg.l),
                     float(cfg.rho_bar).hex(), str(trials), str(seed)])
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _run_trials(trial_fn, trials: int, workers: int) -> np.ndarray:
    """Fill one output slot per trial, optionally across worker threads.

    Chunk boundaries are fixed (independent of the worker count) and every
    trial only touches its own slot, so the result is identical for any
    number of workers.
    """
    out = np.empty(trials)

    def run_chunk(lo: int, hi: int):
        for t in range(lo, hi):
            out[t] = trial_fn(t)

    bounds = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]
    if workers == 1:
        for lo, hi in bounds:
            run_chunk(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_chunk, lo, hi) for lo, hi in bounds]
            for f in futures:
                f.result()
    return out


def sample_bub_exact(cfg: SystemConfig, trials: int = DEFAULT_TRIALS,
                     seed: int = 0, workers: int | None = None) -> EmpiricalSample:
    """Exact BUB draws: per trial, the sum of log2(1 + rho_bar*g) over the
    cfg.l largest of n_r i.i.d. Gamma(n_t, 1) row gains.

    Gains are drawn directly rather than through full channel matrices;
    the distribution is identical and the cost is n_t times lower.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    workers = resolve_workers(workers)
    nt, nr, l, rho = cfg.n_t, cfg.n_r, cfg.l, cfg.rho_bar

    def one_trial(t: int) -> float:
        rng = streams.trial_generator(seed, streams.TAG_BUB_GAINS, t)
        gains = rng.standard_gamma(nt, size=nr)
        top = np.partition(gains, nr - l)[nr - l:] if l < nr else gains
        return float(np.log2(1.0 + rho * top).sum())

    draws = _run_trials(one_trial, trials, workers)
    return EmpiricalSample.from_draws(draws, seed,
                                      _fingerprint("bub_exact", cfg, trials, seed))


def sample_mub_exact(cfg: SystemConfig, trials: int = DEFAULT_TRIALS,
                     seed: int = 0, workers: int | None = None) -> EmpiricalSample:
    """Exact MUB draws: per trial and per transmit antenna, the top-l sum of
    n_r unit-exponential entry gains, accumulated as sum of log2(1 + rho*s)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    workers = resolve_workers(workers)
    nt, nr, l, rho = cfg.n_t, cfg.n_r, cfg.l, cfg.rho_bar

    def one_trial(t: int) -> float:
        rng = streams.trial_generator(seed, streams.TAG_MUB_GAINS, t)
        gains = rng.standard_exponential((nt, nr))
        if l < nr:
            part = np.partition(gains, nr - l, axis=1)[:, nr - l:]
        else:
            part = gains
        return float(np.log2(1.0 + rho * part.sum(axis=1)).sum())

    draws = _run_trials(one_trial, trials, workers)
    return EmpiricalSample.from_draws(draws, seed,
                                      _fingerprint("mub_exact", cfg, trials, seed))


def sample_selected_capacity(cfg: SystemConfig, trials: int = DEFAULT_TRIALS,
                             seed: int = 0, method: str = "greedy",
                             workers: int | None = None) -> EmpiricalSample:
    """Capacity of the selected subset per channel realization.

    method is "exhaustive" (exact, budget permitting) or "greedy".  Channels
    are regenerable from (seed, trial) via sample_channel, which is how
    paired per-trial comparisons against the bounds are done.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if method not in ("exhaustive", "greedy"):
        raise ValueError(f"unknown method {method!r}")
    workers = resolve_workers(workers)
    select = exhaustive_select if method == "exhaustive" else greedy_select

    def one_trial(t: int) -> float:
        h = sample_channel(cfg, seed, trial=t)
        return select(h, cfg).capacity

    draws = _run_trials(one_trial, trials, workers)
    return EmpiricalSample.from_draws(
        draws, seed, _fingerprint(f"selected_{method}", cfg, trials, seed))


def _cdf_pair(obj):
    """(evaluation knots, right-continuous CDF callable) for a KS operand."""
    if isinstance(obj, EmpiricalSample):
        return obj.values, obj.cdf_at
    if isinstance(obj, (DensityGrid, NormalDensity)):
        knots = obj.x if isinstance(obj, DensityGrid) else np.array([])
        return knots, obj.cdf_at
    raise TypeError(f"cannot interpret {type(obj)!r} as a distribution")


def ks_distance(a, b) -> float:
    """Supremum CDF distance between two distributions.

    Operands may be EmpiricalSamples, DensityGrids or NormalDensity laws.
    The supremum is scanned over every sample point and grid knot, taking
    both one-sided limits at empirical jumps.
    """
    knots_a, cdf_a = _cdf_pair(a)
    knots_b, cdf_b = _cdf_pair(b)
    xs = np.concatenate([knots_a, knots_b])
    if xs.size == 0:
        raise ValueError("KS distance needs at least one evaluation point")
    xs = np.unique(xs)
    d = np.abs(cdf_a(xs) - cdf_b(xs)).max()
    # left limits matter where an empirical CDF jumps
    left = np.nextafter(xs, -np.inf)
    d_left = np.abs(cdf_a(left) - cdf_b(left)).max()
    return float(max(d, d_left))


def summarize(s: EmpiricalSample) -> dict:
    """Unbiased mean/variance, the mean's standard error and tail quantiles."""
    return {
        "mean": s.mean(),
        "variance": s.variance(),
        "standard_error": s.standard_error(),
        "q01": s.quantile(0.01),
        "q50": s.quantile(0.50),
        "q99": s.quantile(0.99),
    }
