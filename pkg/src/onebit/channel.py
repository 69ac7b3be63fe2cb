"""Channel and input models for the sign-quantized system ``y = Q(sqrt(rho) H x + eta)``.

A :class:`ChannelLaw` is described entirely by the conditional covariance
map ``x -> E[H x x^H H^H | x]`` plus a sampler of ``H`` realizations; that is
all the mutual-information code needs.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .gauss import rng_for

#: Default cap on ``4**N * |X|`` for exact enumeration; override with ONEBIT_ENUM_BUDGET.
DEFAULT_ENUM_BUDGET = 4 ** 6
#: Largest constellation any constructor will enumerate.
MAX_SYMBOLS = 4 ** 6

_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


class EnumerationBudgetError(RuntimeError):
    pass


def enum_budget() -> int:
    raw = os.environ.get("ONEBIT_ENUM_BUDGET")
    if raw is None:
        return DEFAULT_ENUM_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"ONEBIT_ENUM_BUDGET must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("ONEBIT_ENUM_BUDGET must be positive")
    return value


# -- output alphabet -------------------------------------------------------

def quantize(r) -> np.ndarray:
    """Componentwise sign of real and imaginary parts; ``sign(0) = +1``."""
    r = np.asarray(r, dtype=complex)
    re = np.where(r.real < 0, -1.0, 1.0)
    im = np.where(r.imag < 0, -1.0, 1.0)
    return re + 1j * im


def pattern_signs(y) -> np.ndarray:
    """Real sign vector ``(Re y, Im y)`` of a sign pattern."""
    y = np.asarray(y, dtype=complex)
    s = np.concatenate([y.real, y.imag])
    if not np.all(np.abs(s) == 1):
        raise ValueError("sign pattern components must be +-1 +- 1j")
    return s


def all_sign_patterns(N: int) -> np.ndarray:
    """All ``4**N`` patterns in ``{+-1 +- 1j}^N``, shape ``(4**N, N)``.

    Row ``k`` is the pattern whose real sign vector has index ``k`` under
    :func:`onebit.gauss.pattern_index`.
    """
    idx = np.arange(4 ** N)[:, None]
    bits = (idx >> np.arange(2 * N)) & 1
    s = 1.0 - 2.0 * bits
    return s[:, :N] + 1j * s[:, N:]


# -- input ensembles -------------------------------------------------------

@dataclass(frozen=True)
class InputEnsemble:
    """Finite input constellation with probability masses.

    ``symbols`` has shape ``(K, n)``: one row per constellation point, ``n``
    channel uses per block.  Zero-probability points are dropped.
    """

    symbols: np.ndarray
    probs: np.ndarray
    avg_power: float
    peak_power: float
    name: str = ""

    def __post_init__(self):
        sym = np.atleast_2d(np.asarray(self.symbols, dtype=complex))
        p = np.asarray(self.probs, dtype=float).ravel()
        if sym.shape[0] != p.size:
            raise ValueError("one probability per symbol required")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        keep = p > 0
        sym, p = sym[keep], p[keep]
        n = sym.shape[1]
        energy = np.sum(np.abs(sym) ** 2, axis=1)
        if p @ energy / n > self.avg_power + 1e-12:
            raise ValueError("ensemble violates its average power constraint")
        if np.max(np.abs(sym) ** 2, initial=0.0) > self.peak_power + 1e-12:
            raise ValueError("ensemble violates its peak power constraint")
        sym.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "symbols", sym)
        object.__setattr__(self, "probs", p)

    @property
    def block_len(self) -> int:
        return self.symbols.shape[1]

    def __len__(self):
        return self.symbols.shape[0]

    def second_moment(self) -> np.ndarray:
        """``E[x x^H]``."""
        return np.einsum("k,ki,kj->ij", self.probs, self.symbols, self.symbols.conj())


def _guard(count, what):
    if count > MAX_SYMBOLS:
        raise EnumerationBudgetError(f"{what} has {count} symbols, above the cap of {MAX_SYMBOLS}")


def ensemble_qpsk_block(n: int) -> InputEnsemble:
    """Uniform i.i.d. QPSK over a block of ``n`` uses, unit power per use."""
    if not 1 <= n <= 6:
        raise ValueError(f"QPSK block length must be in 1..6, got {n}")
    sym = np.array(list(itertools.product(_QPSK, repeat=n)))
    return InputEnsemble(sym, np.full(len(sym), 1.0 / len(sym)), 1.0, 1.0, f"qpsk-block(n={n})")


def _check_duty(beta, gamma):
    if beta < 1:
        raise ValueError(f"peak power beta must be >= 1, got {beta}")
    if not 0 <= gamma <= 1:
        raise ValueError(f"average power gamma must lie in [0, 1], got {gamma}")
    if gamma > beta:
        raise ValueError("gamma / beta must not exceed 1")


def ensemble_oofsk(n: int, beta: float, gamma: float, include_zero: bool = False) -> InputEnsemble:
    """On-off frequency-shift keying over a block of ``n`` uses.

    ``x_k = Z exp(j k Omega)`` with ``Z = sqrt(beta)`` w.p. ``gamma/beta`` and 0
    otherwise; ``Omega`` uniform on ``{2 pi m / n : m = 1, ..., n-1}``.

    With the default nonzero tone set ``E[x x^H] = gamma (n I - 1 1^T)/(n-1)``,
    which tends to ``gamma I`` as ``n`` grows.  ``include_zero=True`` adds
    ``Omega = 0`` (all ``n`` tones) and gives ``E[x x^H] = gamma I`` exactly.
    """
    if n < 2:
        raise ValueError("OOFSK needs a block length of at least 2")
    _check_duty(beta, gamma)
    tones = np.arange(0 if include_zero else 1, n)
    k = np.arange(n)
    on = np.sqrt(beta) * np.exp(2j * np.pi * np.outer(tones, k) / n)
    duty = gamma / beta
    sym = np.vstack([np.zeros((1, n)), on])
    probs = np.concatenate([[1.0 - duty], np.full(len(tones), duty / len(tones))])
    return InputEnsemble(sym, probs, gamma, beta, f"oofsk(n={n}, beta={beta}, gamma={gamma})")


def ensemble_ternary_iid(n: int, beta: float, gamma: float) -> InputEnsemble:
    """I.i.d. symbols from ``{-sqrt(beta), 0, sqrt(beta)}`` with ``E|x_k|^2 = gamma``."""
    if n < 1:
        raise ValueError("block length must be positive")
    _check_duty(beta, gamma)
    _guard(3 ** n, "ternary ensemble")
    a = np.sqrt(beta)
    q = gamma / beta
    points = np.array([-a, 0.0, a])
    pmf = np.array([q / 2, 1 - q, q / 2])
    sym = np.array(list(itertools.product(points, repeat=n)), dtype=complex)
    probs = np.array([np.prod(c) for c in itertools.product(pmf, repeat=n)])
    return InputEnsemble(sym, probs / probs.sum(), gamma, beta, f"ternary-iid(n={n}, beta={beta}, gamma={gamma})")


# -- channel laws ----------------------------------------------------------

@dataclass(frozen=True)
class ChannelLaw:
    """Distribution of ``H`` as seen by the mutual-information code.

    ``cond_cov(x)`` returns ``E[H x x^H H^H]``; ``sampler(count, rng)`` returns
    ``count`` realizations of shape ``(n_rx, n_tx)``.  ``quadrature(order)``,
    when available, returns ``(H_nodes, weights)`` for deterministic
    expectations over ``H``.
    """

    n_rx: int
    n_tx: int
    cond_cov: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[int, np.random.Generator], np.ndarray]
    quadrature: Optional[Callable[[int], tuple]] = None
    block_len: int = 1
    name: str = ""

    def sample(self, count: int, seed: int) -> np.ndarray:
        return self.sampler(count, rng_for(seed))


def _gauss_hermite_complex(order):
    # nodes/weights for h ~ CN(0, 1) on an order x order tensor grid
    t, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    a, b = np.meshgrid(t, t, indexing="ij")
    return ((a + 1j * b) / np.sqrt(2.0)).ravel(), np.outer(w, w).ravel()


def block_fading_siso(n: int) -> ChannelLaw:
    """``H = h I_n`` with ``h ~ CN(0, 1)``, so ``E[H x x^H H^H] = x x^H``."""
    if n < 1:
        raise ValueError("block length must be positive")
    eye = np.eye(n)

    def cond_cov(x):
        x = np.asarray(x, dtype=complex)
        return np.outer(x, x.conj())

    def sampler(count, rng):
        h = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / np.sqrt(2.0)
        return h[:, None, None] * eye

    def quadrature(order):
        h, w = _gauss_hermite_complex(order)
        return h[:, None, None] * eye, w

    return ChannelLaw(n, n, cond_cov, sampler, quadrature, block_len=n, name=f"block-siso(n={n})")


@dataclass(frozen=True)
class SimoSpec:
    """Separable space-time correlation ``E[h_k[t] h_k'[t']^H] = R r(k-k') alpha_t delta[t-t']``.

    ``r`` is an autocorrelation function of the integer lag.  ``horizon``
    bounds the lag used when summing ``r(k)**2``; ``None`` extends the sum
    until the tail is negligible.
    """

    N: int
    T: int
    R: np.ndarray
    r: Callable[[int], float]
    alpha: np.ndarray
    horizon: Optional[int] = None
    description: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=complex))
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        if R.shape != (self.N, self.N):
            raise ValueError(f"R must be {self.N}x{self.N}, got {R.shape}")
        if np.max(np.abs(R - R.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(R))):
            raise ValueError("R must be Hermitian")
        if np.linalg.eigvalsh(R)[0] < -1e-10:
            raise ValueError("R must be positive semidefinite")
        if abs(np.trace(R).real - self.N) > 1e-9:
            raise ValueError(f"tr(R) must equal N = {self.N}, got {np.trace(R).real:.12g}")
        if abs(self.r(0) - 1.0) > 1e-12:
            raise ValueError("autocorrelation must satisfy r(0) = 1")
        if alpha.size != self.T or np.any(alpha < 0):
            raise ValueError(f"alpha must hold {self.T} nonnegative entries")
        if abs(alpha.sum() - 1.0) > 1e-12:
            raise ValueError("delay profile alpha must sum to 1")
        R.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "alpha", alpha)


def simo_block_law(spec: SimoSpec, n: int) -> ChannelLaw:
    """Block-cyclic space-time model over ``n`` uses.

    Receive index ``N*k + i`` is antenna ``i`` at time ``k``.  Row block ``k``
    of ``H`` carries ``h_k[t]`` in column ``(k - t) mod n``, so the
    conditional covariance entry is
    ``R[i,i'] r(k-k') sum_t alpha_t x[(k-t)%n] conj(x[(k'-t)%n])``.
    """
    if n <= spec.T:
        raise ValueError(f"block length n={n} must exceed the number of taps T={spec.T}")
    N, T = spec.N, spec.T
    lags = np.arange(n)[:, None] - np.arange(n)[None, :]
    toep = np.vectorize(lambda d: float(spec.r(int(d))))(lags)
    shift = (np.arange(n)[:, None] - np.arange(T)[None, :]) % n  # (k, t) -> column

    def cond_cov(x):
        x = np.asarray(x, dtype=complex).ravel()
        xs = x[shift]  # (n, T): x[(k-t)%n]
        mix = np.einsum("t,kt,lt->kl", spec.alpha, xs, xs.conj())
        return np.kron(toep * mix, spec.R)

    lt = _psd_sqrt(toep)
    lr = _psd_sqrt(spec.R)
    amp = np.sqrt(spec.alpha)

    def sampler(count, rng):
        w = (rng.standard_normal((count, T, n, N)) + 1j * rng.standard_normal((count, T, n, N))) / np.sqrt(2.0)
        # h[c, t, k, :] = sqrt(alpha_t) * (Lt W_t Lr^T)[k, :]
        h = amp[None, :, None, None] * np.einsum("ka,ctab,ib->ctki", lt, w, lr)
        H = np.zeros((count, N * n, n), dtype=complex)
        for k in range(n):
            for t in range(T):
                H[:, N * k:N * (k + 1), shift[k, t]] += h[:, t, k, :]
        return H

    return ChannelLaw(N * n, n, cond_cov, sampler, None, block_len=n,
                      name=f"simo-spread(N={N}, T={T}, n={n})")


def _psd_sqrt(M):
    lam, vec = np.linalg.eigh(np.asarray(M))
    return vec * np.sqrt(np.clip(lam, 0.0, None))


# -- named correlation families -------------------------------------------

def receive_correlation(N: int, family: str = "identity", c: complex = 0.0) -> np.ndarray:
    """Receive correlation matrix with unit diagonal (so ``tr R = N``).

    ``identity``: uncorrelated; ``constant``: all off-diagonal entries ``c``;
    ``exponential``: ``R[i, j] = c**|i-j|`` (``c`` real in [0, 1]).
    """
    if family == "identity":
        return np.eye(N, dtype=complex)
    if family == "constant":
        R = np.full((N, N), complex(c))
        R[np.tril_indices(N, -1)] = np.conj(c)
        np.fill_diagonal(R, 1.0)
        return R
    if family == "exponential":
        i = np.arange(N)
        return (float(np.real(c)) ** np.abs(i[:, None] - i[None, :])).astype(complex)
    raise ValueError(f"unknown receive correlation family {family!r}")


def autocorrelation(family: str = "delta", a: float = 0.0, values: Sequence[float] = ()):
    """Autocorrelation ``r(k)`` with ``r(0) = 1``.

    ``delta``: memoryless; ``geometric``: ``a**|k|``; ``finite``: ``values``
    gives ``r(1), r(2), ...`` and ``r`` vanishes beyond them.
    """
    if family == "delta":
        return lambda k: 1.0 if k == 0 else 0.0
    if family == "geometric":
        if not 0 <= abs(a) < 1:
            raise ValueError("geometric autocorrelation needs |a| < 1")
        return lambda k: float(a) ** abs(k)
    if family == "finite":
        vals = [1.0] + [float(v) for v in values]
        return lambda k: vals[abs(k)] if abs(k) < len(vals) else 0.0
    raise ValueError(f"unknown autocorrelation family {family!r}")


def uniform_profile(T: int) -> np.ndarray:
    return np.full(T, 1.0 / T)
