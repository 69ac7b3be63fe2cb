"""Mutual information between a finite input ensemble and the sign outputs.

``P(y|x)`` is the orthant probability of ``CN(0, I + rho E[Hxx^H H^H | x])``
under the sign pattern of ``y``.  Three estimators are available:

``mc``          indicator Monte Carlo, all 4**N patterns from one stream per
                input point (the reference estimator)
``qmc``         Genz separation of variables, one integral per (x, y) pair
``quadrature``  ``E_H[P(y|x,H)]`` by Gauss-Hermite quadrature over ``H``; only
                for laws exposing a quadrature rule

Logarithms are natural throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .channel import ChannelLaw, EnumerationBudgetError, InputEnsemble, all_sign_patterns, enum_budget, pattern_signs
from .gauss import OrthantEstimate, complex_to_real_cov, orthant_probability, orthant_table, rng_for, CHUNK
from .report import Method, RateReport

DEFAULT_ORDER = 32
MAX_ORDER = 256
DRIFT_TOL = 1e-6


class MCQualityError(RuntimeError):
    """Monte Carlo estimate is outside what its own error bars allow."""


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class MCSettings:
    samples: int = 200_000
    seed: int = 0


def _cond_cov(law, x, rho):
    C = law.cond_cov(np.asarray(x, dtype=complex))
    return np.eye(law.n_rx) + rho * C


def cond_prob_given_x(law: ChannelLaw, x, y, rho: float, mc: MCSettings = MCSettings(),
                      method: str = "mc") -> OrthantEstimate:
    """``P(y|x)`` at SNR ``rho`` as an orthant probability."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    cov = complex_to_real_cov(_cond_cov(law, x, rho))
    return orthant_probability(cov, pattern_signs(y), mc.samples, mc.seed, method=method)


def cond_prob_given_x_H(H, x, y, rho: float) -> float:
    """``P(y|x,H) = prod_{c,i} Phi(y_ci [Hx]_ci sqrt(2 rho))``, exact."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    s = pattern_signs(y)
    hx = np.asarray(H, dtype=complex) @ np.asarray(x, dtype=complex)
    u = np.concatenate([hx.real, hx.imag]) * np.sqrt(2 * rho)
    return float(np.exp(np.sum(log_ndtr(s * u))))


def _patterns_given_H(Hx, rho):
    """``P(y|x,H)`` for all patterns; ``Hx`` has shape ``(K, N)``, result ``(4**N, K)``."""
    N = Hx.shape[1]
    u = np.concatenate([Hx.real, Hx.imag], axis=1) * np.sqrt(2 * rho)  # (K, 2N)
    bits = (np.arange(4 ** N)[:, None] >> np.arange(2 * N)) & 1
    pos = (bits == 0).astype(float)
    return np.exp(pos @ log_ndtr(u).T + (1.0 - pos) @ log_ndtr(-u).T)


def _check_budget(law, ens):
    cost = 4 ** law.n_rx * len(ens)
    budget = enum_budget()
    if cost > budget:
        raise EnumerationBudgetError(
            f"exact enumeration needs 4^{law.n_rx} * {len(ens)} = {cost} terms, budget is {budget}"
            " (raise ONEBIT_ENUM_BUDGET to allow it)")


def cond_prob_table(law: ChannelLaw, ens: InputEnsemble, rho: float, mc: MCSettings = MCSettings(),
                    estimator: str = "mc", order: int = DEFAULT_ORDER):
    """Matrix ``P[x, y]`` of conditional probabilities and its standard errors.

    Pattern columns follow :func:`onebit.channel.all_sign_patterns`.  With the
    ``mc`` estimator row ``k`` uses the stream ``(seed, k)``.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    _check_budget(law, ens)
    K, Y = len(ens), 4 ** law.n_rx
    P = np.empty((K, Y))
    err = np.zeros((K, Y))
    if estimator == "quadrature":
        if law.quadrature is None:
            raise ValueError(f"law {law.name!r} has no quadrature rule")
        H, w = law.quadrature(order)
        for k, x in enumerate(ens.symbols):
            P[k] = _patterns_given_H(H @ x, rho) @ w
        return P, err
    if estimator == "mc":
        for k, x in enumerate(ens.symbols):
            P[k], err[k] = orthant_table(complex_to_real_cov(_cond_cov(law, x, rho)), mc.samples, rng_seed(mc.seed, k))
        return P, err
    if estimator == "qmc":
        patterns = all_sign_patterns(law.n_rx)
        for k, x in enumerate(ens.symbols):
            cov = complex_to_real_cov(_cond_cov(law, x, rho))
            for j, y in enumerate(patterns):
                est = orthant_probability(cov, pattern_signs(y), mc.samples, rng_seed(mc.seed, k, j), method="qmc")
                P[k, j], err[k, j] = est.value, est.std_error
        return P, err
    raise ValueError(f"unknown estimator {estimator!r}")


def rng_seed(seed, *key) -> int:
    """Derived 63-bit integer seed for sub-stream ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _xlogy_ratio(a, b):
    # a * ln(a / b) with 0 ln 0 = 0
    out = np.zeros_like(a)
    m = a > 0
    out[m] = a[m] * np.log(a[m] / b[m])
    return out


def mi_from_table(P, px) -> float:
    Py = px @ P
    return float(px @ _xlogy_ratio(P, np.broadcast_to(Py, P.shape)).sum(axis=1))


def mutual_info_exact(law: ChannelLaw, ens: InputEnsemble, rho: float, mc: MCSettings = MCSettings(),
                      estimator: str = "mc", order: int = DEFAULT_ORDER, bias_correct: bool = True) -> RateReport:
    """``I(x; y)`` per block by full enumeration over inputs and sign patterns.

    For the ``mc`` estimator the standard error is propagated from the
    multinomial covariance of each row by the delta method, using
    ``dI/dP(y|x) = p(x) ln(P(y|x) / P(y))``.  ``bias_correct`` subtracts the
    leading ``O(1/samples)`` bias of the plug-in estimate.  For
    ``quadrature`` the order is doubled until the estimate moves by less
    than 1e-6 nats and the last change is reported as the error.
    """
    px = ens.probs
    if rho == 0:
        _check_budget(law, ens)
        return RateReport(0.0, 0.0, Method.EXACT_ENUM, rho, True, law.block_len)
    if estimator == "quadrature":
        value, drift = _converge(lambda o: mi_from_table(cond_prob_table(law, ens, rho, estimator="quadrature", order=o)[0], px), order)
        return RateReport(value, drift, Method.EXACT_ENUM, rho, True, law.block_len)

    P, err = cond_prob_table(law, ens, rho, mc, estimator)
    value = mi_from_table(P, px)
    correction = 0.0
    Py = px @ P
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(P > 0, np.log(P / Py), 0.0) * px[:, None]
    if estimator == "mc":
        S = mc.samples
        noisy = err.any(axis=1)  # rows answered in closed form carry no sampling error
        var = np.sum(noisy * (np.sum(P * g ** 2, axis=1) - np.sum(P * g, axis=1) ** 2) / S)
        if bias_correct:
            support = np.count_nonzero(P, axis=1)
            cond_bias = (px * noisy) @ (support - 1) / (2 * S)
            marg_var = (px ** 2 * noisy) @ (P * (1 - P)) / S
            with np.errstate(divide="ignore", invalid="ignore"):
                marg_bias = 0.5 * np.sum(np.where(Py > 0, marg_var / Py, 0.0))
            correction = cond_bias - marg_bias
            value -= correction
    else:
        var = np.sum((g * err) ** 2)
    std = float(np.sqrt(max(var, 0.0)))
    # the bias correction is itself uncertain to about its own size
    if value < -3 * std - abs(correction) - 1e-12:
        raise MCQualityError(f"mutual information estimate {value:.3e} is negative beyond its error {std:.1e}")
    return RateReport(value, std, Method.EXACT_ENUM, rho, True, law.block_len)


def _converge(fn, order, tol=DRIFT_TOL):
    prev = fn(order)
    while order < MAX_ORDER:
        order *= 2
        cur = fn(order)
        drift = abs(cur - prev)
        if drift < tol:
            return cur, drift
        prev = cur
    raise QuadratureError(f"quadrature did not settle to {tol} nats by order {MAX_ORDER}")


def mutual_info_lower_bound(law: ChannelLaw, ens: InputEnsemble, rho: float, order: int = DEFAULT_ORDER,
                            mc: MCSettings | None = None) -> RateReport:
    """Chain-rule lower bound ``I(x;y|H) - I(H;y|x)``.

    Expectations over ``H`` use the law's quadrature rule (order doubled
    until the bound moves by less than 1e-6 nats) or, for laws without one
    or when ``mc`` is given, ``mc.samples`` sampled realizations.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    _check_budget(law, ens)
    if rho == 0:
        return RateReport(0.0, 0.0, Method.LOWER_BOUND, rho, True, law.block_len)
    if law.quadrature is not None and mc is None:
        value, drift = _converge(lambda o: _lower_bound_terms(ens, rho, *law.quadrature(o))[0], order)
        return RateReport(value, drift, Method.LOWER_BOUND, rho, True, law.block_len)
    mc = mc or MCSettings()
    H = law.sample(mc.samples, mc.seed)
    w = np.full(mc.samples, 1.0 / mc.samples)
    value, contrib = _lower_bound_terms(ens, rho, H, w)
    std = float(np.std(contrib, ddof=1) / np.sqrt(mc.samples)) if mc.samples > 1 else 0.0
    return RateReport(value, std, Method.LOWER_BOUND, rho, True, law.block_len)


def _lower_bound_terms(ens, rho, H, w):
    # E_{x,H} sum_y P(y|x,H) ln(E_H[P(y|x,H)] / E_x[P(y|x,H)]); returns value and per-node terms
    px = ens.probs
    Pyh = None
    Pyx = []
    for p, x in zip(px, ens.symbols):
        T = _patterns_given_H(H @ x, rho)
        Pyx.append(T @ w)
        Pyh = p * T if Pyh is None else Pyh + p * T
    per_node = np.zeros(len(w))
    for p, x, pyx in zip(px, ens.symbols, Pyx):
        T = _patterns_given_H(H @ x, rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(T > 0, T * np.log(pyx[:, None] / Pyh), 0.0)
        per_node += p * t.sum(axis=0)
    return float(per_node @ w), per_node


def cond_prob_slope(law: ChannelLaw, x, y, drho: float, mc: MCSettings) -> tuple[float, float]:
    """Finite-difference slope ``[P(y|x; drho) - P(y|x; 0)] / drho`` with
    common random numbers; returns ``(slope, std_error)``."""
    s = pattern_signs(y)
    A1 = np.linalg.cholesky(complex_to_real_cov(_cond_cov(law, x, drho)).matrix)
    d = s.size
    A0 = np.sqrt(0.5) * np.eye(d)
    rng = rng_for(mc.seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < mc.samples:
        m = min(CHUNK, mc.samples - done)
        w = rng.standard_normal((m, d))
        hit1 = np.all((w @ A1.T) * s >= 0, axis=1)
        hit0 = np.all((w @ A0.T) * s >= 0, axis=1)
        diff = hit1.astype(float) - hit0
        total += diff.sum()
        total_sq += (diff ** 2).sum()
        done += m
    n = mc.samples
    mean = total / n
    var = max(total_sq / n - mean ** 2, 0.0) * n / max(n - 1, 1)
    return mean / drho, float(np.sqrt(var / n) / drho)
