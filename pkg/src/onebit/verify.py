"""Self-checks of the closed forms against independent oracles.

``identities``: sign-pattern identity by enumeration, conservation of the
first-order probabilities, the (2/pi)^2 quantization penalty.
``oracles``: first-order probabilities against Monte Carlo finite
differences, the peak-constrained bound and its maximizer against a grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotic import (QUANTIZATION_GAIN, lemma1_derivative, lemma1_derivatives, sign_identity_check,
                         theorem1_coefficient, unquantized_coefficient)
from .channel import block_fading_siso, ensemble_qpsk_block
from .mi_exact import MCSettings, cond_prob_slope
from .simo import CoherenceStats, gamma_opt, peak_bound

SUITES = ("identities", "oracles", "all")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{tag}  {self.name}: measured {self.measured:.3g}, tolerated {self.tolerance:.3g}{extra}"


def random_zero_diag_hermitian(N, rng):
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    P = A + A.conj().T
    np.fill_diagonal(P, 0)
    return P


def check_sign_identity(count=50, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        N = 2 + k % 2
        worst = max(worst, sign_identity_check(random_zero_diag_hermitian(N, rng), N).error)
    return Check(f"sign identity, {count} random P with N in {{2,3}}", worst <= 1e-9, worst, 1e-9)


def check_derivative_conservation(count=20, seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        n = 2 + k % 3
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        worst = max(worst, abs(lemma1_derivatives(block_fading_siso(n), x).sum()))
    return Check("sum over y of dP(y|x)/drho vanishes", worst <= 1e-12, worst, 1e-12)


def check_quantization_penalty():
    worst = 0.0
    for n in (2, 3, 4):
        law, ens = block_fading_siso(n), ensemble_qpsk_block(n)
        ratio = theorem1_coefficient(law, ens).kappa / unquantized_coefficient(law, ens).kappa
        worst = max(worst, abs(ratio - QUANTIZATION_GAIN))
    return Check("quantized / unquantized coefficient = (2/pi)^2, n in {2,3,4}", worst <= 1e-12, worst, 1e-12)


def check_lemma1_fd(n, cases=10, samples=10 ** 7, drho=2e-3, seed=7, need=9):
    """Finite-difference slope (common random numbers) against the closed form."""
    rng = np.random.default_rng([seed, n])
    law = block_fading_siso(n)
    hits, worst_z = 0, 0.0
    for k in range(cases):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x) / np.sqrt(n)
        y = rng.choice([-1.0, 1.0], n) + 1j * rng.choice([-1.0, 1.0], n)
        slope, err = cond_prob_slope(law, x, y, drho, MCSettings(samples, int(rng.integers(2 ** 62))))
        z = abs(slope - lemma1_derivative(law, x, y)) / err
        worst_z = max(worst_z, z)
        hits += z <= 3
    return Check(f"dP/drho finite difference, block n={n}, {cases} cases",
                 hits >= need, float(hits), float(need), f"{hits}/{cases} within 3 sigma, worst {worst_z:.2f} sigma")


def grid_peak_bound(mu, sigma, beta, step=1e-4):
    g = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    f = g * beta * mu + g * (beta - g) * sigma
    i = int(np.argmax(f))
    return float(f[i]), float(g[i])


def check_peak_bound(count=100, seed=3):
    rng = np.random.default_rng(seed)
    worst_rel, worst_arg = 0.0, 0.0
    for _ in range(count):
        mu, sigma = rng.uniform(0, 2, 2)
        beta = rng.uniform(1, 4)
        best, arg = grid_peak_bound(mu, sigma, beta)
        u = peak_bound(mu, sigma, beta)
        worst_rel = max(worst_rel, abs(best - u) / u)
        worst_arg = max(worst_arg, abs(arg - gamma_opt(CoherenceStats(mu, sigma, mu), beta)))
    return [
        Check(f"U(beta) vs grid maximum, {count} draws", worst_rel <= 1e-6, worst_rel, 1e-6),
        Check(f"gamma_opt vs grid argmax, {count} draws", worst_arg <= 2e-4, worst_arg, 2e-4),
    ]


def run_suite(suite: str, samples: int = 10 ** 7) -> list[Check]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    checks = []
    if suite in ("identities", "all"):
        checks += [check_sign_identity(), check_derivative_conservation(), check_quantization_penalty()]
    if suite in ("oracles", "all"):
        checks += [check_lemma1_fd(2, samples=samples), check_lemma1_fd(3, samples=samples)]
        checks += check_peak_bound()
    return checks
