"""Second-order (in rho) behaviour of the mutual information at low SNR.

All expectations over the input are exact sums over the finite
constellation.  Coefficients are per block; use
:meth:`QuadraticCoefficient.per_symbol` to normalize by the block length.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelLaw, InputEnsemble, all_sign_patterns
from .report import Method, RateReport

QUANTIZATION_GAIN = (2 / np.pi) ** 2


def nondiag(A) -> np.ndarray:
    """Copy of ``A`` with its diagonal set to zero."""
    A = np.array(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("nondiag needs a square matrix")
    np.fill_diagonal(A, 0)
    return A


def _tr_sq(A):
    # tr(A^2) for Hermitian A
    return float(np.sum(np.abs(A) ** 2))


@dataclass(frozen=True)
class QuadraticCoefficient:
    """``I ~ kappa * rho**2`` with ``kappa = scale * (first_term - second_term)``."""

    kappa: float
    first_term: float
    second_term: float
    per_block: bool = True
    block_len: int = 1
    quantized: bool = True

    def per_symbol(self) -> "QuadraticCoefficient":
        if not self.per_block:
            return self
        n = self.block_len
        return replace(self, kappa=self.kappa / n, first_term=self.first_term / n,
                       second_term=self.second_term / n, per_block=False)

    def rate(self, rho: float) -> RateReport:
        method = Method.QUADRATIC if self.quantized else Method.UNQUANTIZED_QUADRATIC
        return RateReport(self.kappa * rho ** 2, 0.0, method, rho, self.per_block, self.block_len)


def _covariances(law, ens):
    return np.array([law.cond_cov(x) for x in ens.symbols])


def theorem1_coefficient(law: ChannelLaw, ens: InputEnsemble) -> QuadraticCoefficient:
    """Low-SNR coefficient of the sign-quantized channel.

    ``kappa = 1/2 (2/pi)^2 [E tr(nondiag(C_x)^2) - tr(nondiag(E C_x)^2)]`` with
    ``C_x = E[H x x^H H^H | x]``.
    """
    C = _covariances(law, ens)
    p = ens.probs
    first = float(sum(pk * _tr_sq(nondiag(Ck)) for pk, Ck in zip(p, C)))
    second = _tr_sq(nondiag(np.tensordot(p, C, axes=1)))
    return QuadraticCoefficient(0.5 * QUANTIZATION_GAIN * (first - second), first, second,
                                True, law.block_len, True)


def unquantized_coefficient(law: ChannelLaw, ens: InputEnsemble) -> QuadraticCoefficient:
    """Same expansion for the unquantized output: no ``nondiag``, no ``(2/pi)^2``."""
    C = _covariances(law, ens)
    p = ens.probs
    first = float(sum(pk * _tr_sq(Ck) for pk, Ck in zip(p, C)))
    second = _tr_sq(np.tensordot(p, C, axes=1))
    return QuadraticCoefficient(0.5 * (first - second), first, second, True, law.block_len, False)


def _real_form(y, P):
    v = np.vdot(y, P @ y)
    if abs(v.imag) > 1e-10 * max(1.0, abs(v.real)):
        raise ValueError("quadratic form is not real; matrix is not Hermitian")
    return v.real


def lemma1_derivative(law: ChannelLaw, x, y) -> float:
    """``dP(y|x)/drho`` at ``rho = 0``: ``4**-N / pi * y^H nondiag(C_x) y``."""
    y = np.asarray(y, dtype=complex)
    P = nondiag(law.cond_cov(np.asarray(x, dtype=complex)))
    return _real_form(y, P) / (np.pi * 4 ** law.n_rx)


def lemma1_derivatives(law: ChannelLaw, x) -> np.ndarray:
    """:func:`lemma1_derivative` for every sign pattern, in pattern-index order."""
    Y = all_sign_patterns(law.n_rx)
    P = nondiag(law.cond_cov(np.asarray(x, dtype=complex)))
    forms = np.einsum("ki,ij,kj->k", Y.conj(), P, Y)
    return forms.real / (np.pi * 4 ** law.n_rx)


@dataclass(frozen=True)
class SignIdentity:
    lhs: float
    rhs: float

    @property
    def error(self) -> float:
        return abs(self.lhs - self.rhs)


def sign_identity_check(P, N: int | None = None) -> SignIdentity:
    """Compare ``4**-N sum_y (y^H P y)^2`` over ``y in {+-1 +- j}^N`` with ``4 tr(P^2)``.

    The two agree for every zero-diagonal Hermitian ``P``.
    """
    P = np.asarray(P, dtype=complex)
    N = P.shape[0] if N is None else N
    if P.shape != (N, N):
        raise ValueError(f"P must be {N}x{N}")
    if N > 4:
        raise ValueError("enumeration is limited to N <= 4")
    if np.any(np.abs(np.diag(P)) > 0):
        raise ValueError("P must have a zero diagonal")
    if np.max(np.abs(P - P.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(P), initial=0.0)):
        raise ValueError("P must be Hermitian")
    Y = all_sign_patterns(N)
    forms = np.einsum("ki,ij,kj->k", Y.conj(), P, Y).real
    lhs = float(np.sum(forms ** 2) / 4 ** N)
    return SignIdentity(lhs, 4 * _tr_sq(P))


def moment_condition_check(ens: InputEnsemble, epsilon: float) -> float:
    """``E[||x||_4^(4+eps)]`` with ``||x||_4^4 = sum_{i,c} x_ic^4`` over real and
    imaginary parts.  Finite for any finite ensemble; informational only."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    s = ens.symbols
    norm4 = np.sum(s.real ** 4 + s.imag ** 4, axis=1)
    return float(ens.probs @ norm4 ** ((4 + epsilon) / 4))
