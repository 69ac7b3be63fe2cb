"""Low-SNR rates of SIMO channels with delay spread and receive correlation.

Rates are per channel use and scale as ``(2/pi)^2 rho^2`` times a
coefficient built from two coherence statistics of a :class:`SimoSpec`:

* ``mu = tr(R^2) sum_{k>=1} r(k)^2``  (temporal)
* ``sigma = 1/2 tr(nondiag(R)^2)``    (spatial)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .asymptotic import QUANTIZATION_GAIN, nondiag
from .channel import SimoSpec, autocorrelation, receive_correlation, uniform_profile
from .report import Method, RateReport

TAIL_TOL = 1e-10
MAX_LAG = 10 ** 7
_BLOCK = 4096


class SquareSummabilityError(ValueError):
    pass


@dataclass(frozen=True)
class CoherenceStats:
    mu: float
    sigma: float
    mu_n: float
    horizon: Optional[int] = None
    tail: float = 0.0  # size of the last summed block of r(k)^2


def _r_squared(spec, lags):
    return np.array([spec.r(int(k)) for k in lags], dtype=float) ** 2


def _sum_r_squared(spec):
    """Sum of ``r(k)^2`` over ``k >= 1`` and the size of the last block added."""
    limit = spec.horizon if spec.horizon is not None else MAX_LAG
    total, start, last = 0.0, 1, 0.0
    while start <= limit:
        stop = min(start + _BLOCK, limit + 1)
        last = float(_r_squared(spec, range(start, stop)).sum())
        total += last
        start = stop
        if last <= TAIL_TOL * max(1.0, total):
            return total, last
    if spec.horizon is None:
        raise SquareSummabilityError(
            f"sum of r(k)^2 has not settled by lag {MAX_LAG} (last block adds {last:.3g})")
    return total, last


def coherence_stats(spec: SimoSpec, n: Optional[int] = None) -> CoherenceStats:
    """``mu``, ``sigma`` and the block-``n`` value
    ``mu_n = tr(R^2) sum_{k=1}^{n-1} (1 - k/n) r(k)^2``.

    Without ``n``, ``mu_n`` is the limit ``mu``.
    """
    tr_r2 = float(np.sum(np.abs(spec.R) ** 2))
    sigma = 0.5 * float(np.sum(np.abs(nondiag(spec.R)) ** 2))
    s, tail = _sum_r_squared(spec)
    mu = tr_r2 * s
    if n is None:
        return CoherenceStats(mu, sigma, mu, None, tail)
    k = np.arange(1, n)
    mu_n = tr_r2 * float(np.sum((1 - k / n) * _r_squared(spec, k)))
    return CoherenceStats(mu, sigma, mu_n, n, tail)


def peak_bound(mu: float, sigma: float, beta: float) -> float:
    """Limiting coefficient ``U(beta)`` (without the ``(2/pi)^2 rho^2`` factor)."""
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if beta * (mu + sigma) >= 2 * sigma:
        return beta * mu + (beta - 1) * sigma
    return beta ** 2 * (mu + sigma) ** 2 / (4 * sigma)


def prop1_upper_bound(stats: CoherenceStats, beta: float, rho: float) -> RateReport:
    """Per-use upper bound ``(2/pi)^2 rho^2 U(beta)`` on the limiting rate."""
    u = peak_bound(stats.mu, stats.sigma, beta)
    return RateReport(QUANTIZATION_GAIN * rho ** 2 * u, 0.0, Method.UPPER_BOUND_PROP1, rho, False)


def gamma_opt(stats: CoherenceStats, beta: float) -> float:
    """Average power maximizing ``g beta mu + g (beta - g) sigma`` over ``[0, 1]``."""
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if stats.sigma == 0:
        return 1.0
    return min(1.0, beta * (stats.mu + stats.sigma) / (2 * stats.sigma))


def _max_quadratic(a, b):
    """``max_{0<=g<=1} a g^2 + b g`` and its maximizer."""
    candidates = [0.0, 1.0]
    if a < 0:
        candidates.append(min(max(-b / (2 * a), 0.0), 1.0))
    values = [a * g * g + b * g for g in candidates]
    i = int(np.argmax(values))
    return values[i], candidates[i]


def iid_objective(mu_n: float, sigma: float, beta: float, alpha_sq: float):
    """``max_g g^2 mu_n alpha_sq + g (beta - g) sigma``; returns ``(value, gamma)``."""
    return _max_quadratic(mu_n * alpha_sq - sigma, beta * sigma)


def iid_rate(spec: SimoSpec, stats: CoherenceStats, beta: float, rho: float,
             n: Optional[int] = None) -> RateReport:
    """Per-use low-SNR rate of i.i.d. ternary inputs ``{-sqrt(beta), 0, sqrt(beta)}``.

    Uses ``stats.mu_n``; passing ``n`` recomputes it for that block length.
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if n is not None and n != stats.horizon:
        stats = coherence_stats(spec, n)
    alpha_sq = float(np.sum(spec.alpha ** 2))
    value, _ = iid_objective(stats.mu_n, stats.sigma, beta, alpha_sq)
    return RateReport(QUANTIZATION_GAIN * rho ** 2 * value, 0.0, Method.IID_CLOSED_FORM, rho, False)


def geometric_family(sigma_over_mu: float, T: int, c: float = 0.9) -> SimoSpec:
    """Two-antenna spec with ``R = [[1, c], [c, 1]]`` and ``r(k) = a**|k|``,
    ``a`` chosen so that ``sigma / mu`` hits the requested value; ``inf``
    gives ``a = 0``."""
    R = receive_correlation(2, "constant", c)
    sigma = abs(c) ** 2
    tr_r2 = 2 + 2 * abs(c) ** 2
    if not sigma_over_mu > 0:
        raise ValueError("sigma/mu must be positive")
    mu = sigma / sigma_over_mu  # inf -> mu = 0, memoryless fading
    a = np.sqrt(mu / (tr_r2 + mu))
    return SimoSpec(2, T, R, autocorrelation("geometric", a), uniform_profile(T),
                    description={"family": "geometric", "c": c, "a": float(a)})


@dataclass(frozen=True)
class RatioRow:
    sigma_over_mu: float
    T: int
    beta: float
    ratio: float  # nan when the bound is zero

    @property
    def defined(self) -> bool:
        return bool(np.isfinite(self.ratio))


def ratio_point(stats: CoherenceStats, spec: SimoSpec, beta: float, rho: float = 1.0) -> float:
    """i.i.d. rate over the peak-power upper bound; ``nan`` if the bound is zero."""
    bound = prop1_upper_bound(stats, beta, rho).value
    if bound == 0:
        return float("nan")
    return iid_rate(spec, stats, beta, rho).value / bound


def ratio_sweep(sigma_over_mu: Iterable[float], T_values: Iterable[int], beta: float,
                rho: float = 1.0, family=geometric_family) -> list[RatioRow]:
    """Ratio of the i.i.d. rate to the upper bound over a ``sigma/mu`` grid.

    Limiting statistics (``n -> inf``) are used on both sides, so ``rho``
    cancels.  Rows are ordered by ``T`` then by grid position.
    """
    rows = []
    grid = list(sigma_over_mu)
    for T in T_values:
        for s in grid:
            spec = family(s, T)
            stats = coherence_stats(spec)
            rows.append(RatioRow(float(s), int(T), float(beta), ratio_point(stats, spec, beta, rho)))
    return rows
