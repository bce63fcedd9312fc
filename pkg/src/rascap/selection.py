"""Receive-antenna subset optimisation.

Exhaustive search enumerates all C(n_r, l) row subsets (exact, exponential);
greedy search adds one row at a time using a rank-one determinant update and
is the standard near-optimal baseline for large arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelMatrix, SystemConfig, capacity, capacity_batch

__all__ = [
    "SelectionResult",
    "SearchBudgetError",
    "exhaustive_select",
    "greedy_select",
]

DEFAULT_SUBSET_BUDGET = 2_000_000
_ENUM_CHUNK = 8192


class SearchBudgetError(RuntimeError):
    """Exhaustive enumeration would exceed the configured subset budget."""


@dataclass(frozen=True)
class SelectionResult:
    """A selected row index set and the capacity it achieves."""

    subset: tuple
    capacity: float
    step_capacities: tuple = field(default=(), repr=False, compare=False)
    """Capacity after each incremental step (greedy only); empty otherwise."""


def _as_channel(h) -> ChannelMatrix:
    return h if isinstance(h, ChannelMatrix) else ChannelMatrix(h)


def exhaustive_select(h, cfg: SystemConfig,
                      budget: int = DEFAULT_SUBSET_BUDGET) -> SelectionResult:
    """Maximise capacity over every size-l row subset.

    Ties are broken toward the lexicographically smallest index list (the
    enumeration order).  Raises SearchBudgetError with guidance when
    C(n_r, l) exceeds the budget.
    """
    m = _as_channel(h)
    n_subsets = math.comb(cfg.n_r, cfg.l)
    if n_subsets > budget:
        raise SearchBudgetError(
            f"C({cfg.n_r}, {cfg.l}) = {n_subsets} subsets exceeds the budget "
            f"of {budget}; use greedy_select for arrays this large")

    best_cap = -np.inf
    best_subset = None
    combos = itertools.combinations(range(cfg.n_r), cfg.l)
    while True:
        chunk = np.array(list(itertools.islice(combos, _ENUM_CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        caps = capacity_batch(m.h[chunk], cfg.rho_bar)
        k = int(np.argmax(caps))
        if caps[k] > best_cap:  # strict: first (lex-smallest) subset wins ties
            best_cap = float(caps[k])
            best_subset = tuple(int(i) for i in chunk[k])
    return SelectionResult(best_subset, capacity(m.h[list(best_subset)], cfg.rho_bar))


def greedy_select(h, cfg: SystemConfig, refresh_every: int = 32) -> SelectionResult:
    """Incremental selection: at each of l steps add the row with the largest
    capacity increment.

    The increment for candidate row v given current inverse M^-1 of
    M = I + rho_bar * H_S^dagger H_S is log2(1 + rho_bar * v M^-1 v^dagger)
    (matrix determinant lemma on the n_t x n_t Gram form).  M^-1 is updated
    by Sherman-Morrison and rebuilt from scratch every `refresh_every` steps
    to cap error drift.  Ties break toward the lowest row index.
    """
    m = _as_channel(h)
    rho = cfg.rho_bar
    n_r, n_t = m.n_r, m.n_t
    rows = m.h
    remaining = np.arange(n_r)
    minv = np.eye(n_t, dtype=np.complex128)
    chosen: list[int] = []
    steps: list[float] = []
    total = 0.0
    for step in range(cfg.l):
        cand = rows[remaining]  # (k, n_t)
        t = cand @ minv
        quad = rho * np.einsum("ij,ij->i", t, cand.conj()).real
        k = int(np.argmax(quad))  # first occurrence = lowest index on ties
        idx = int(remaining[k])
        v = rows[idx]
        gain = 1.0 + quad[k]
        total += float(np.log2(gain))
        chosen.append(idx)
        steps.append(total)
        remaining = np.delete(remaining, k)
        if (step + 1) % refresh_every == 0:
            sel = rows[chosen]
            minv = np.linalg.inv(np.eye(n_t) + rho * sel.conj().T @ sel)
        else:
            u = minv @ v.conj()
            minv = minv - rho * np.outer(u, v @ minv) / gain
    return SelectionResult(tuple(chosen), capacity(rows[chosen], rho),
                           step_capacities=tuple(steps))
