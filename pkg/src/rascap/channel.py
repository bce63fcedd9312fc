"""Rayleigh channel generation and per-realization capacity quantities.

The channel is an n_r x n_t matrix of i.i.d. CN(0,1) entries (real and
imaginary parts each N(0, 1/2)).  Row gains ||h_i||^2 then follow a
unit-scale gamma law with integer shape n_t (the normalised chi-squared
with 2*n_t degrees of freedom), and per-entry gains |h_ij|^2 are unit
exponentials.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import streams

__all__ = [
    "SystemConfig",
    "ChannelMatrix",
    "CapacityError",
    "sample_channel",
    "capacity",
    "bub_of_channel",
    "mub_of_channel",
]

_LN2 = np.log(2.0)


class CapacityError(RuntimeError):
    """Log-det evaluation hit a non-positive-definite Gram matrix, which is
    impossible for I + rho*G in exact arithmetic and signals corrupt input."""


@dataclass(frozen=True)
class SystemConfig:
    """One simulation scenario: antenna counts and normalised SNR.

    rho_bar is the per-selected-antenna SNR (total SNR divided by the
    number of selected antennas l).  Figure-style dB values map directly
    onto rho_bar = 10**(dB/10).
    """

    n_t: int
    n_r: int
    l: int
    rho_bar: float

    def __post_init__(self):
        if self.n_t < 1:
            raise ValueError(f"n_t must be >= 1, got {self.n_t}")
        if self.n_r < 1:
            raise ValueError(f"n_r must be >= 1, got {self.n_r}")
        if not 1 <= self.l <= self.n_r:
            raise ValueError(f"l must satisfy 1 <= l <= n_r, got l={self.l}")
        if not self.rho_bar > 0:
            raise ValueError(f"rho_bar must be positive, got {self.rho_bar}")

    @classmethod
    def from_db(cls, n_t: int, n_r: int, l: int, snr_db: float) -> "SystemConfig":
        return cls(n_t, n_r, l, 10.0 ** (snr_db / 10.0))

    @property
    def beta(self) -> float:
        """Selection fraction l / n_r."""
        return self.l / self.n_r

    @property
    def is_bub_regime(self) -> bool:
        """True when l <= n_t, where the beamforming-style bound is tight."""
        return self.l <= self.n_t

    @property
    def rho(self) -> float:
        """Total SNR rho = rho_bar * l."""
        return self.rho_bar * self.l


@dataclass(eq=False)
class ChannelMatrix:
    """One channel realization with cached derived gains."""

    h: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.complex128)
        if self.h.ndim != 2:
            raise ValueError("channel matrix must be two-dimensional")

    @property
    def n_r(self) -> int:
        return self.h.shape[0]

    @property
    def n_t(self) -> int:
        return self.h.shape[1]

    @cached_property
    def row_gains(self) -> np.ndarray:
        """||h_i||^2 for each receive antenna (row)."""
        return np.einsum("ij,ij->i", self.h, self.h.conj()).real

    @cached_property
    def entry_gains(self) -> np.ndarray:
        """|h_ij|^2 elementwise."""
        return (self.h * self.h.conj()).real

    def rows(self, subset) -> np.ndarray:
        return self.h[np.asarray(subset, dtype=np.intp)]


def sample_channel(cfg: SystemConfig, seed: int, trial: int = 0) -> ChannelMatrix:
    """Draw one n_r x n_t matrix of i.i.d. CN(0,1) entries.

    Deterministic in (matrix dims, seed, trial); independent of cfg.l and
    cfg.rho_bar so sweeps over those share channel realizations.
    """
    rng = streams.trial_generator(seed, streams.TAG_CHANNEL, trial)
    parts = rng.standard_normal((2, cfg.n_r, cfg.n_t))
    h = (parts[0] + 1j * parts[1]) / np.sqrt(2.0)
    return ChannelMatrix(h)


def _as_matrix(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=np.complex128)


def capacity(sub, rho_bar: float) -> float:
    """log2 det(I + rho_bar * H H^dagger) for a row-subset matrix.

    Evaluated through a Cholesky factorisation of whichever Gram form
    (rows x rows or columns x columns) is smaller; both forms agree because
    the nonzero eigenvalues of H H^dagger and H^dagger H coincide.
    """
    m = _as_matrix(sub)
    if m.shape[0] == 0:
        raise ValueError("row subset must be nonempty")
    if m.shape[0] <= m.shape[1]:
        gram = m @ m.conj().T
    else:
        gram = m.conj().T @ m
    a = np.eye(gram.shape[0]) + rho_bar * gram
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise CapacityError("Gram matrix not positive definite; "
                            "input is corrupt or non-finite") from exc
    value = float(2.0 * np.sum(np.log(np.diag(chol).real)) / _LN2)
    if not math.isfinite(value):
        raise CapacityError("log-det evaluated non-finite; "
                            "input is corrupt or non-finite")
    return value


def capacity_batch(subs: np.ndarray, rho_bar: float) -> np.ndarray:
    """Vectorised capacity over a stack of row-subset matrices (k, L, n_t)."""
    if subs.shape[1] <= subs.shape[2]:
        gram = subs @ subs.conj().transpose(0, 2, 1)
    else:
        gram = subs.conj().transpose(0, 2, 1) @ subs
    n = gram.shape[1]
    a = np.eye(n) + rho_bar * gram
    chol = np.linalg.cholesky(a)
    diags = np.diagonal(chol, axis1=1, axis2=2).real
    return 2.0 * np.log(diags).sum(axis=1) / _LN2


def bub_of_channel(h, cfg: SystemConfig) -> float:
    """Beamforming-style upper bound: sum of log2(1 + rho_bar * g) over the
    cfg.l largest row gains g of the realization."""
    m = h if isinstance(h, ChannelMatrix) else ChannelMatrix(h)
    _check_dims(m, cfg)
    gains = m.row_gains
    top = np.sort(gains)[m.n_r - cfg.l:]
    return float(np.log2(1.0 + cfg.rho_bar * top).sum())


def mub_of_channel(h, cfg: SystemConfig) -> float:
    """Combining-style upper bound: for each transmit antenna (column), sum
    the cfg.l largest entry gains, then accumulate log2(1 + rho_bar * sum).

    Columns order their gains independently, so this dominates any single
    choice of l shared rows."""
    m = h if isinstance(h, ChannelMatrix) else ChannelMatrix(h)
    _check_dims(m, cfg)
    gains = m.entry_gains  # (n_r, n_t)
    top = np.sort(gains, axis=0)[m.n_r - cfg.l:, :]
    return float(np.log2(1.0 + cfg.rho_bar * top.sum(axis=0)).sum())


def _check_dims(m: ChannelMatrix, cfg: SystemConfig):
    if (m.n_r, m.n_t) != (cfg.n_r, cfg.n_t):
        raise ValueError(
            f"channel is {m.n_r}x{m.n_t} but config expects {cfg.n_r}x{cfg.n_t}")
