"""Shared numerical kernels: gamma survival functions, adaptive quadrature
and DFT plumbing used by the statistical modules.

All routines are pure and hold no mutable state, so they are safe to call
from multiple threads.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureSpec",
    "ComplexSeries",
    "QuadratureError",
    "regularized_upper_gamma",
    "inverse_survival_threshold",
    "integrate_semi_infinite",
    "integrate_complex",
    "fft_forward",
    "fft_inverse",
]


class QuadratureError(RuntimeError):
    """Raised when an adaptive integration or root solve fails to converge
    within its panel/iteration budget."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy contract for the adaptive integrators.

    abs_tol / rel_tol bound the final error as max(abs_tol, rel_tol*|I|).
    tail_cutoff is the relative-to-peak magnitude below which the
    semi-infinite integrator treats the integrand as exhausted.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    tail_cutoff: float = 1e-16

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.tail_cutoff <= 0:
            raise ValueError("QuadratureSpec tolerances must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass
class ComplexSeries:
    """Uniformly sampled complex sequence: values[n] taken at start + n*step."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.values.size == 0:
            raise ValueError("values must be non-empty")


# --------------------------------------------------------------------------
# Gamma survival function and its inverse
# --------------------------------------------------------------------------

def regularized_upper_gamma(a: int, x):
    """Survival function Q(a, x) of a unit-scale gamma with integer shape a.

    Q(a, x) = int_x^inf t^(a-1) e^(-t) / (a-1)! dt
            = e^(-x) * sum_{k=0}^{a-1} x^k / k!

    which is the tail mass of the normalised chi-squared law with 2a degrees
    of freedom and mean a. Accepts scalar or ndarray x.
    """
    if not isinstance(a, (int, np.integer)) or a < 1:
        raise ValueError(f"shape a must be a positive integer, got {a!r}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise ValueError("x must be nonnegative")
    term = np.exp(-xs)
    total = term.copy()
    for k in range(1, a):
        term = term * xs / k
        total += term
    total = np.clip(total, 0.0, 1.0)
    return float(total) if np.isscalar(x) or xs.ndim == 0 else total


def _gamma_pdf(a: int, x: float) -> float:
    """Unit-scale gamma density x^(a-1) e^(-x) / (a-1)!, computed in log space."""
    if x <= 0.0:
        return 0.0 if (x < 0.0 or a > 1) else 1.0
    return math.exp((a - 1) * math.log(x) - x - math.lgamma(a))


def inverse_survival_threshold(a: int, p: float) -> float:
    """Solve Q(a, u) = p for the threshold u >= 0.

    Safeguarded Newton iteration on the bracket [0, a + 40*sqrt(a)];
    converges to |Q(a, u) - p| <= 1e-12. p = 1 returns u = 0 exactly.
    """
    if not isinstance(a, (int, np.integer)) or a < 1:
        raise ValueError(f"shape a must be a positive integer, got {a!r}")
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if p == 1.0:
        return 0.0

    tol = 1e-12
    lo, hi = 0.0, a + 40.0 * math.sqrt(a)
    if regularized_upper_gamma(a, hi) > p:
        raise QuadratureError(
            f"target tail mass {p:g} lies beyond the solver bracket [0, {hi:g}]"
        )
    u = float(a)  # start at the mean
    for _ in range(200):
        q = regularized_upper_gamma(a, u)
        err = q - p
        if err > 0:
            lo = u  # Q decreasing: root is to the right
        else:
            hi = u
        dq = _gamma_pdf(a, u)
        step = err / dq if dq > 0.0 else math.inf  # Q' = -pdf
        u_new = u + step
        if not lo < u_new < hi:
            u_new = 0.5 * (lo + hi)
        # converged once the tail-mass defect is met and u has settled
        # (the latter keeps the solve sharp where Q is nearly flat)
        if abs(err) <= tol and abs(u_new - u) <= 1e-12 * max(1.0, u):
            return u
        u = u_new
    raise QuadratureError(f"threshold solve did not reach |Q-p| <= {tol:g}")


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# --------------------------------------------------------------------------

# 15-point Kronrod nodes on [-1, 1] with the embedded 7-point Gauss rule.
_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])


def _gk15(f: Callable, a: float, b: float):
    """One Gauss-Kronrod 15(7) panel.

    Returns (kronrod value, error estimate |K15-G7|, max |f| over the nodes,
    kronrod value of |f|).  The integrand is called once on the 15-node array.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _XGK))
    k15 = half * np.sum(_WGK * fx)
    g7 = half * np.sum(_WG * fx[_GAUSS_IDX])
    absf = np.abs(fx)
    return k15, abs(k15 - g7), float(absf.max()), half * float(np.sum(_WGK * absf))


def _adaptive_gk(f, a, b, abs_tol, rel_tol, max_intervals=4096):
    """Adaptively bisected GK15 on [a, b]; returns (integral, error, peak|f|).

    The relative tolerance is measured against the integrand's L1 mass,
    which equals |integral| for one-signed integrands and keeps oscillatory
    integrals from chasing rounding noise when the result nearly cancels.
    Raises QuadratureError when the interval budget is exhausted before the
    requested accuracy is certified.
    """
    val, err, peak, l1 = _gk15(f, a, b)
    heap = [(-err, 0, a, b, val, l1)]
    count = 1
    total, toterr, total_l1 = val, err, l1
    while toterr > max(abs_tol, rel_tol * max(abs(total), total_l1)):
        if count >= max_intervals:
            raise QuadratureError(
                f"quadrature on [{a:g}, {b:g}] did not converge within "
                f"{max_intervals} intervals (error {toterr:.3e})"
            )
        neg_e0, _, lo, hi, v0, m0 = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1, p1, m1 = _gk15(f, lo, mid)
        v2, e2, p2, m2 = _gk15(f, mid, hi)
        peak = max(peak, p1, p2)
        heapq.heappush(heap, (-e1, 2 * count, lo, mid, v1, m1))
        heapq.heappush(heap, (-e2, 2 * count + 1, mid, hi, v2, m2))
        count += 1
        total += v1 + v2 - v0
        toterr += e1 + e2 + neg_e0
        total_l1 += m1 + m2 - m0
    return total, toterr, peak


def integrate_semi_infinite(f: Callable, lower: float,
                            spec: QuadratureSpec = DEFAULT_QUADRATURE,
                            panel_width: float = 8.0,
                            max_panels: int = 512) -> float:
    """Integrate a decaying integrand on [lower, inf).

    Marches fixed-width panels to the right, integrating each adaptively,
    and stops once the integrand magnitude stays below
    spec.tail_cutoff * (running peak) for two consecutive panels.  Fails
    loudly when either the panel budget or a panel's interval budget is
    exhausted; the requested tolerance is never silently relaxed.
    """
    total = 0.0
    toterr = 0.0
    peak = 0.0
    quiet = 0
    a = float(lower)
    for _ in range(max_panels):
        b = a + panel_width
        val, err, pmax = _adaptive_gk(
            f, a, b, abs_tol=spec.abs_tol / 16.0, rel_tol=spec.rel_tol / 4.0)
        total += val
        toterr += err
        peak = max(peak, pmax)
        quiet = quiet + 1 if pmax <= spec.tail_cutoff * peak else 0
        if quiet >= 2:
            if toterr > max(spec.abs_tol, spec.rel_tol * abs(total)):
                raise QuadratureError(
                    f"accumulated error {toterr:.3e} exceeds requested tolerance")
            return total
        a = b
    raise QuadratureError(
        f"integrand did not fall below the tail cutoff within {max_panels} panels")


def integrate_complex(f: Callable, lower: float, upper: float,
                      spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """Adaptive complex-valued quadrature on the finite interval [lower, upper].

    Real and imaginary parts share the panel subdivision; the error metric is
    the complex modulus, so each part meets the spec tolerances.
    """
    if not lower < upper:
        raise ValueError("require lower < upper")
    val, _, _ = _adaptive_gk(f, float(lower), float(upper),
                             abs_tol=spec.abs_tol, rel_tol=spec.rel_tol)
    return complex(val)


def _integrate_finite(f: Callable, lower: float, upper: float,
                      spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Real-valued finite-interval companion to integrate_complex."""
    val, _, _ = _adaptive_gk(f, float(lower), float(upper),
                             abs_tol=spec.abs_tol, rel_tol=spec.rel_tol)
    return float(np.real(val))


# --------------------------------------------------------------------------
# DFT convention: forward kernel e^(-j 2 pi k n / N), unnormalised;
# the inverse carries the 1/N factor.
# --------------------------------------------------------------------------

def _require_pow2(n: int):
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"series length must be a power of two, got {n}")


def fft_forward(series: ComplexSeries) -> ComplexSeries:
    """Forward DFT of a power-of-two series: X[k] = sum_n x[n] e^(-j2pi kn/N).

    The output axis is the bin frequency in cycles per input-axis unit,
    starting at 0 with spacing 1/(N*step).  No phase correction for the
    input start is applied; callers handle their own shift factors.
    """
    n = series.values.size
    _require_pow2(n)
    return ComplexSeries(0.0, 1.0 / (n * series.step), np.fft.fft(series.values))


def fft_inverse(series: ComplexSeries) -> ComplexSeries:
    """Inverse DFT (with 1/N) matching the fft_forward convention."""
    n = series.values.size
    _require_pow2(n)
    return ComplexSeries(0.0, 1.0 / (n * series.step), np.fft.ifft(series.values))
