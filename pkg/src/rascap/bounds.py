"""Asymptotic laws for the two selection upper bounds.

BUB regime (l <= n_t): the bound is the sum of the l largest of n_r i.i.d.
variables log2(1 + rho_bar * g) with g ~ Gamma(n_t, 1).  As n_r grows this
trimmed sum tends to a normal law whose moments reduce to one-dimensional
integrals against the gamma density above the tail threshold u solving
Q(n_t, u) = l/n_r.

MUB regime (l > n_t): per transmit antenna the trimmed sum of the l largest
of n_r unit exponentials is asymptotically N(mu_t, sigma_t^2) with the
closed forms mu_t = l*(1 + ln(n_r/l)), sigma_t^2 = l*(2 - l/n_r).  The bound
sums n_t i.i.d. transformed copies log2(1 + rho_bar * t), so its density is
recovered by raising the single-term characteristic function to the n_t-th
power and inverting with an FFT.

Moment convention for the trimmed-sum normal law: with conditional moments
m1 = E[y | y > xi] and m2 = E[y^2 | y > xi] of the summand y above its
threshold xi (both expressed in the summand's own units),

    sigma^2_total = l * ( (m2 - m1^2) + (xi - m1)^2 * (1 - l/n_r) ).

The centred second moment and the threshold measured in summand units are
what make the general expression reproduce the closed-form exponential case
exactly; Monte-Carlo trimmed sums arbitrate this choice (see the test
suite's moment checks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import SystemConfig
from .numerics import (
    DEFAULT_QUADRATURE,
    ComplexSeries,
    QuadratureError,
    QuadratureSpec,
    _integrate_finite,
    fft_forward,
    integrate_complex,
    integrate_semi_infinite,
    inverse_survival_threshold,
    regularized_upper_gamma,
)

__all__ = [
    "REGIME_BUB",
    "REGIME_MUB",
    "GaussianApprox",
    "DensityGrid",
    "CharacteristicGrid",
    "NormalDensity",
    "AliasingError",
    "bub_gaussian",
    "bub_gaussian_direct",
    "bub_density",
    "mub_moments",
    "mub_characteristic",
    "mub_characteristic_power_form",
    "mub_characteristic_grid",
    "mub_density",
    "mub_ergodic_moments",
    "asymptotic_ergodic",
]

_LN2 = math.log(2.0)

REGIME_BUB = "bub-trimmed-capacity"
REGIME_MUB = "mub-trimmed-gain"


class AliasingError(RuntimeError):
    """Characteristic function has not decayed at the sampling edge."""


@dataclass(frozen=True)
class GaussianApprox:
    """Normal law N(mu, sigma_sq) for a trimmed sum, with its threshold u.

    For the BUB regime the units are bits (capacity sum); for the MUB regime
    they are linear gain (per-column trimmed gain sum).
    """

    mu: float
    sigma_sq: float
    u: float
    regime: str

    def __post_init__(self):
        if self.sigma_sq < 0:
            raise ValueError("sigma_sq must be nonnegative")
        if self.u < 0:
            raise ValueError("u must be nonnegative")
        if self.regime not in (REGIME_BUB, REGIME_MUB):
            raise ValueError(f"unknown regime {self.regime!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)


class NormalDensity:
    """Callable pdf/cdf pair for a nondegenerate normal law."""

    def __init__(self, mu: float, sigma_sq: float):
        if sigma_sq <= 0:
            raise ValueError("degenerate law: sigma_sq must be positive")
        self.mu = float(mu)
        self.sigma = math.sqrt(sigma_sq)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def cdf_at(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return special.ndtr(z)

    def to_grid(self, span_sigmas: float = 8.0, n: int = 4096) -> "DensityGrid":
        x0 = self.mu - span_sigmas * self.sigma
        dx = 2.0 * span_sigmas * self.sigma / (n - 1)
        x = x0 + dx * np.arange(n)
        return DensityGrid.from_pdf(x0, dx, self.pdf(x))


@dataclass
class DensityGrid:
    """Uniformly spaced tabulated density with its running CDF."""

    x0: float
    dx: float
    pdf: np.ndarray
    cdf: np.ndarray

    @classmethod
    def from_pdf(cls, x0: float, dx: float, raw_pdf: np.ndarray) -> "DensityGrid":
        """Validate, clamp ringing and integrate a raw tabulated density.

        Entries more negative than 1e-6 of the density scale (max(1, peak))
        are rejected; smaller inversion ripple is clamped to zero.  Total
        mass must land within 1e-3 of one.
        """
        if dx <= 0:
            raise ValueError("dx must be positive")
        raw = np.asarray(raw_pdf, dtype=float)
        if raw.size == 0:
            raise ValueError("pdf must be non-empty")
        ripple_floor = -1e-6 * max(1.0, float(raw.max()))
        if raw.min() < ripple_floor:
            raise ValueError(
                f"density has entries below {ripple_floor:.3e} (min {raw.min():.3e})")
        pdf = np.clip(raw, 0.0, None)
        cdf = np.minimum(np.cumsum(pdf) * dx, 1.0)
        mass = float(pdf.sum() * dx)
        if not (1.0 - 1e-3 <= mass <= 1.0 + 1e-3):
            raise ValueError(f"density mass {mass:.6f} deviates from 1 by more than 1e-3")
        return cls(float(x0), float(dx), pdf, cdf)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.pdf.size)

    def mass(self) -> float:
        return float(self.pdf.sum() * self.dx)

    def cdf_at(self, x):
        return np.interp(np.asarray(x, dtype=float), self.x, self.cdf,
                         left=0.0, right=1.0)

    def mean(self) -> float:
        w = self.pdf / self.pdf.sum()
        return float(np.sum(w * self.x))

    def variance(self) -> float:
        w = self.pdf / self.pdf.sum()
        mu = np.sum(w * self.x)
        return float(np.sum(w * (self.x - mu) ** 2))


@dataclass
class CharacteristicGrid:
    """Characteristic function sampled at omega_k = -omega_max + k * dw."""

    omega_max: float
    n_samples: int
    values: np.ndarray

    def __post_init__(self):
        n = self.n_samples
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError("n_samples must be a power of two")
        if self.values.shape != (n,):
            raise ValueError("values length must equal n_samples")

    @property
    def d_omega(self) -> float:
        return 2.0 * self.omega_max / self.n_samples

    @property
    def omegas(self) -> np.ndarray:
        return -self.omega_max + self.d_omega * np.arange(self.n_samples)


# --------------------------------------------------------------------------
# BUB regime: trimmed capacity sum over gamma row gains
# --------------------------------------------------------------------------

def _bub_tail_integrals(cfg: SystemConfig, u: float, spec: QuadratureSpec):
    """Tail moments of log2(1 + rho_bar*x) against the Gamma(n_t, 1) density,
    via integration by parts on the gamma survival function.

    Returns (integral of g*f, integral of g^2*f) over [u, inf).  Each reduces
    to a boundary term at u plus n_t one-dimensional integrals whose
    integrands decay like e^(-x)/(1 + rho_bar*x).
    """
    rho = cfg.rho_bar
    sbar = regularized_upper_gamma(cfg.n_t, u)
    xi_u = math.log1p(rho * u) / _LN2

    def poisson_term(k, extra=None):
        # x^k e^(-x) / k! / (1 + rho*x), evaluated in log space
        lgk = math.lgamma(k + 1)

        def f(x):
            with np.errstate(divide="ignore", invalid="ignore"):
                logx = np.where(x > 0, np.log(np.maximum(x, 1e-300)), -np.inf)
            base = np.exp(k * logx - x - lgk) / (1.0 + rho * x)
            if extra is not None:
                base = base * extra(x)
            return base

        return integrate_semi_infinite(f, u, spec)

    tail1 = sum(poisson_term(k) for k in range(cfg.n_t))
    tail2 = sum(poisson_term(k, extra=lambda x: np.log1p(rho * x) / _LN2)
                for k in range(cfg.n_t))
    int_g = xi_u * sbar + (rho / _LN2) * tail1
    int_g2 = xi_u ** 2 * sbar + (2.0 * rho / _LN2) * tail2
    return int_g, int_g2


def _bub_assemble(cfg: SystemConfig, u: float, int_g: float, int_g2: float) -> GaussianApprox:
    beta = cfg.beta
    mu_g = cfg.n_r * int_g
    m1 = mu_g / cfg.l
    m2 = cfg.n_r * int_g2 / cfg.l
    xi_u = math.log1p(cfg.rho_bar * u) / _LN2
    var_cond = max(m2 - m1 * m1, 0.0)
    sigma_sq = cfg.l * (var_cond + (xi_u - m1) ** 2 * (1.0 - beta))
    return GaussianApprox(mu_g, sigma_sq, u, REGIME_BUB)


def bub_gaussian(cfg: SystemConfig,
                 spec: QuadratureSpec = DEFAULT_QUADRATURE) -> GaussianApprox:
    """Normal law for the trimmed capacity sum in the BUB regime.

    The defining tail integrals are evaluated in their expanded
    integration-by-parts form; bub_gaussian_direct integrates the raw
    moment integrands and serves as the algebra cross-check.
    """
    u = inverse_survival_threshold(cfg.n_t, cfg.beta)
    int_g, int_g2 = _bub_tail_integrals(cfg, u, spec)
    return _bub_assemble(cfg, u, int_g, int_g2)


def bub_gaussian_direct(cfg: SystemConfig,
                        spec: QuadratureSpec = DEFAULT_QUADRATURE) -> GaussianApprox:
    """Same law as bub_gaussian, with the tail moments integrated directly
    against the gamma density (no integration by parts)."""
    u = inverse_survival_threshold(cfg.n_t, cfg.beta)
    rho = cfg.rho_bar
    lg = math.lgamma(cfg.n_t)

    def gamma_pdf(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            logx = np.where(x > 0, np.log(np.maximum(x, 1e-300)), -np.inf)
        return np.exp((cfg.n_t - 1) * logx - x - lg)

    int_g = integrate_semi_infinite(
        lambda x: np.log1p(rho * x) / _LN2 * gamma_pdf(x), u, spec)
    int_g2 = integrate_semi_infinite(
        lambda x: (np.log1p(rho * x) / _LN2) ** 2 * gamma_pdf(x), u, spec)
    return _bub_assemble(cfg, u, int_g, int_g2)


def bub_density(approx: GaussianApprox) -> NormalDensity:
    """Normal pdf/cdf evaluators for a BUB law; raises on a degenerate law."""
    return NormalDensity(approx.mu, approx.sigma_sq)


# --------------------------------------------------------------------------
# MUB regime: trimmed exponential gain sums per transmit antenna
# --------------------------------------------------------------------------

def mub_moments(cfg: SystemConfig) -> GaussianApprox:
    """Closed-form normal law for the per-column trimmed gain sum.

    mu_t = l*(1 + ln(n_r/l)), sigma_t^2 = l*(2 - l/n_r), threshold
    u = ln(n_r/l).  Independent of n_t and rho_bar.
    """
    u = math.log(cfg.n_r / cfg.l)
    mu_t = cfg.l * (1.0 + u)
    sigma_t_sq = cfg.l * (2.0 - cfg.beta)
    return GaussianApprox(mu_t, sigma_t_sq, u, REGIME_MUB)


def _gain_normal_pdf(approx: GaussianApprox):
    mu, sig = approx.mu, approx.sigma
    norm = 1.0 / (sig * math.sqrt(2.0 * math.pi))

    def pdf(x):
        z = (x - mu) / sig
        return norm * np.exp(-0.5 * z * z)

    return pdf


def mub_characteristic(cfg: SystemConfig, approx: GaussianApprox, omega: float,
                       spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """Characteristic value E[exp(j*omega*log2(1 + rho_bar*t))] of one
    transformed gain term, with t the trimmed-gain normal law truncated at 0.

    The truncation keeps the raw normal weight on [0, inf) without
    renormalising; the missing mass is Phi(-mu_t/sigma_t), negligible for
    any configuration of interest.  Quadrature runs in the standardised
    variable t = (x - mu_t)/sigma_t over its ten-sigma support (clipped at
    x = 0), which keeps the integrand well scaled however concentrated the
    gain law is.
    """
    rho = cfg.rho_bar
    mu, sig = approx.mu, approx.sigma
    norm = 1.0 / math.sqrt(2.0 * math.pi)

    def f(t):
        return np.exp(1j * omega * np.log1p(rho * (mu + sig * t)) / _LN2
                      - 0.5 * t * t) * norm

    return integrate_complex(f, max(-mu / sig, -10.0), 10.0, spec)


def mub_characteristic_power_form(cfg: SystemConfig, approx: GaussianApprox,
                                  omega: float,
                                  spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """Standardised-variable form of the same characteristic value.

    Substituting t = (x - mu_t)/sigma_t turns the integrand into
    (rho*sigma_t)^zeta (t + a)^zeta e^(-t^2/2)/sqrt(2 pi) with
    zeta = j*omega/ln 2 and a = (1 + rho*mu_t)/(rho*sigma_t); used as a
    cross-check of mub_characteristic at selected omega.
    """
    rho = cfg.rho_bar
    sig, mu = approx.sigma, approx.mu
    zeta = 1j * omega / _LN2
    a = (1.0 + rho * mu) / (rho * sig)

    def f(t):
        return np.exp(zeta * np.log(t + a) - 0.5 * t * t)

    val = integrate_complex(f, max(-mu / sig, -10.0), 10.0, spec)
    return complex(np.exp(zeta * math.log(rho * sig)) * val / math.sqrt(2.0 * math.pi))


def _xi_moments(cfg: SystemConfig, approx: GaussianApprox,
                spec: QuadratureSpec):
    """Mean and variance of log2(1 + rho_bar*t) under the zero-truncated,
    renormalised trimmed-gain normal law."""
    rho = cfg.rho_bar
    pdf = _gain_normal_pdf(approx)
    lo = max(0.0, approx.mu - 12.0 * approx.sigma)
    hi = approx.mu + 12.0 * approx.sigma
    mass = _integrate_finite(pdf, lo, hi, spec)
    m1 = _integrate_finite(lambda x: np.log1p(rho * x) / _LN2 * pdf(x), lo, hi, spec) / mass
    m2 = _integrate_finite(lambda x: (np.log1p(rho * x) / _LN2) ** 2 * pdf(x),
                           lo, hi, spec) / mass
    return m1, max(m2 - m1 * m1, 0.0)


def mub_ergodic_moments(cfg: SystemConfig,
                        spec: QuadratureSpec = DEFAULT_QUADRATURE,
                        approx: GaussianApprox | None = None):
    """Quadrature mean/variance of the full MUB law: n_t independent
    transformed-gain terms, so both moments scale by n_t."""
    if approx is None:
        approx = mub_moments(cfg)
    m1, var1 = _xi_moments(cfg, approx, spec)
    return cfg.n_t * m1, cfg.n_t * var1


# walk-out truncation floor for the sampled CF: above the quadrature noise
# level (rel_tol * unit mass ~ 1e-8), below the aliasing limit
_CF_FLOOR = 1e-7
_CF_EDGE_LIMIT = 1e-6


def mub_characteristic_grid(cfg: SystemConfig,
                            spec: QuadratureSpec = DEFAULT_QUADRATURE,
                            n_samples: int = 2 ** 14,
                            span_sigmas: float = 12.0,
                            approx: GaussianApprox | None = None):
    """Sample the full-bound characteristic function on an FFT-ready grid.

    The capacity axis [x_lo, x_hi] covers span_sigmas standard deviations
    around the quadrature mean (clipped at zero); its conjugate frequency
    grid has spacing d_omega = 2 pi / (n_samples * dx).  The per-term value
    is raised to the n_t-th power (the bound sums n_t i.i.d. terms), sampled
    outward from omega = 0 until it falls below an internal floor, and
    mirrored by Hermitian symmetry.  If the magnitude has not decayed below
    1e-6 by the grid edge the sampling would alias and an AliasingError
    asks for a larger omega_max or more samples.

    Returns (CharacteristicGrid, x_lo, dx).
    """
    if approx is None:
        approx = mub_moments(cfg)
    m1, var1 = _xi_moments(cfg, approx, spec)
    mu_est = cfg.n_t * m1
    sig_est = math.sqrt(cfg.n_t * var1)
    x_lo = max(0.0, mu_est - span_sigmas * sig_est)
    x_hi = mu_est + span_sigmas * sig_est
    if not x_hi > x_lo:
        raise ValueError("degenerate capacity span")
    dx = (x_hi - x_lo) / n_samples
    d_omega = 2.0 * math.pi / (n_samples * dx)
    omega_max = 0.5 * n_samples * d_omega

    half_n = n_samples // 2
    half = np.zeros(half_n + 1, dtype=np.complex128)
    consecutive_low = 0
    decayed = False
    for k in range(half_n + 1):
        val = mub_characteristic(cfg, approx, k * d_omega, spec) ** cfg.n_t
        half[k] = val
        if abs(val) < _CF_FLOOR:
            consecutive_low += 1
            if consecutive_low >= 3:
                decayed = True
                break
        else:
            consecutive_low = 0
    if not decayed and abs(half[half_n]) > _CF_EDGE_LIMIT:
        raise AliasingError(
            f"|CF| = {abs(half[half_n]):.3e} at the grid edge omega = "
            f"{omega_max:.3f}; increase omega_max or samples")

    values = np.zeros(n_samples, dtype=np.complex128)
    values[half_n:] = half[:half_n]
    values[:half_n + 1] = np.conj(half[::-1])  # omega < 0 by Hermitian symmetry
    return CharacteristicGrid(omega_max, n_samples, values), x_lo, dx


def mub_density(cfg: SystemConfig,
                spec: QuadratureSpec = DEFAULT_QUADRATURE,
                n_samples: int = 2 ** 14,
                span_sigmas: float = 12.0,
                approx: GaussianApprox | None = None) -> DensityGrid:
    """Density of the full MUB bound by FFT inversion of its characteristic
    function.

    p(x_m) = (d_omega / 2 pi) * sum_k CF(omega_k) e^(-j omega_k x_m) with
    omega_k = -omega_max + k*d_omega and x_m = x_lo + m*dx on conjugate
    grids (dx * d_omega = 2 pi / N), which reduces to one forward DFT plus
    phase factors.  The result is validated and clamped by DensityGrid.
    """
    grid, x_lo, dx = mub_characteristic_grid(cfg, spec, n_samples, span_sigmas, approx)
    n = grid.n_samples
    d_omega = grid.d_omega
    phased = grid.values * np.exp(-1j * d_omega * x_lo * np.arange(n))
    transformed = fft_forward(ComplexSeries(0.0, d_omega, phased)).values
    x = x_lo + dx * np.arange(n)
    raw_pdf = (d_omega / (2.0 * math.pi)) * (np.exp(1j * grid.omega_max * x)
                                             * transformed).real
    return DensityGrid.from_pdf(x_lo, dx, raw_pdf)


def asymptotic_ergodic(obj):
    """Mean and variance of an asymptotic bound law.

    A BUB GaussianApprox passes through directly; a DensityGrid (the MUB
    inversion output) reports its discrete moments.  A MUB GaussianApprox
    describes the per-column gain sum, not the bound, so it is rejected
    with guidance.
    """
    if isinstance(obj, GaussianApprox):
        if obj.regime == REGIME_BUB:
            return obj.mu, obj.sigma_sq
        raise ValueError("a MUB gain law has no direct capacity moments; "
                         "build the density with mub_density or use "
                         "mub_ergodic_moments")
    if isinstance(obj, DensityGrid):
        return obj.mean(), obj.variance()
    raise TypeError(f"expected GaussianApprox or DensityGrid, got {type(obj)!r}")
