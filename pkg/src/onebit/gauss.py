"""Gaussian primitives: normal CDF, circular-complex to real embedding and
seeded orthant probabilities.

Real components are always ordered all-real-then-all-imaginary,
``(r_1R, ..., r_NR, r_1I, ..., r_NI)``.  Sign patterns over ``d`` real
components are indexed by ``sum_k [s_k < 0] * 2**k`` in that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

#: Eigenvalue floor applied to near-singular covariances.
EIG_CLIP = 1e-12
#: Samples drawn per RNG call; fixed so that results do not depend on memory.
CHUNK = 1 << 17

_SYM_TOL = 1e-12
_PSD_TOL = 1e-10


def rng_for(seed, *key):
    """Independent generator for ``(seed, key)``; the same key always gives
    the same stream regardless of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def normal_cdf(x):
    """Standard normal CDF, saturating at 0 and 1."""
    return ndtr(x)


@dataclass(frozen=True)
class RealCovariance:
    """Real covariance of the 2N-dimensional embedding of a complex vector."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        if m.shape[0] % 2:
            raise ValueError("real covariance of a complex space must have even dimension")
        scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
        if np.max(np.abs(m - m.T), initial=0.0) > _SYM_TOL * scale:
            raise ValueError("covariance is not symmetric")
        if m.size and np.linalg.eigvalsh(m)[0] < -_PSD_TOL * scale:
            raise ValueError("covariance is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def factor(self) -> np.ndarray:
        """Square root ``A`` with ``A @ A.T == matrix`` after eigenvalue clipping."""
        lam, vec = np.linalg.eigh(self.matrix)
        return vec * np.sqrt(np.maximum(lam, EIG_CLIP))


@dataclass(frozen=True)
class OrthantEstimate:
    value: float
    std_error: float
    samples: int
    seed: int


def _check_hermitian(C, what="matrix"):
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    if C.shape[0] != C.shape[1]:
        raise ValueError(f"{what} must be square, got shape {C.shape}")
    scale = max(1.0, float(np.max(np.abs(C), initial=0.0)))
    if np.max(np.abs(C - C.conj().T), initial=0.0) > _SYM_TOL * scale:
        raise ValueError(f"{what} is not Hermitian")
    return C


def complex_to_real_cov(C) -> RealCovariance:
    """Real covariance of ``(Re z, Im z)`` for circular ``z ~ CN(0, C)``.

    Returns ``0.5 * [[Re C, -Im C], [Im C, Re C]]``; unit complex noise
    therefore puts variance 1/2 on each real component.
    """
    C = _check_hermitian(C)
    re, im = C.real, C.imag
    m = 0.5 * np.block([[re, -im], [im, re]])
    return RealCovariance(0.5 * (m + m.T))


def sample_complex_gaussian(C, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` vectors from ``CN(0, C)``; returns shape ``(count, N)``."""
    C = _check_hermitian(C)
    lam, vec = np.linalg.eigh(C)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    if lam.size and lam[0] < -_PSD_TOL * scale:
        raise ValueError("covariance is not positive semidefinite")
    A = vec * np.sqrt(np.clip(lam, 0.0, None))
    rng = rng_for(seed)
    n = C.shape[0]
    w = (rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))) / np.sqrt(2.0)
    return w @ A.T


def pattern_index(signs) -> int:
    signs = np.asarray(signs)
    return int(np.sum((signs < 0) * (1 << np.arange(signs.size))))


def _chunks(samples):
    done = 0
    while done < samples:
        m = min(CHUNK, samples - done)
        yield m
        done += m


def orthant_probability(cov: RealCovariance, signs, samples: int, seed: int,
                        method: str = "mc") -> OrthantEstimate:
    """P(sign(z_i) = signs_i for all i) with ``z ~ N(0, cov)``.

    A diagonal covariance is answered exactly (``2**-dim``, zero error).
    ``method="mc"`` averages the orthant indicator over Gaussian draws; the
    error is the binomial standard error.  ``method="qmc"`` uses Genz's
    separation of variables on randomly scrambled Sobol points, with the
    error taken from the spread of 8 independent scramblings.
    """
    signs = np.asarray(signs, dtype=float)
    if signs.shape != (cov.dim,):
        raise ValueError(f"need {cov.dim} signs, got {signs.size}")
    if not np.all(np.abs(signs) == 1):
        raise ValueError("signs must be +1 or -1")
    if samples < 1:
        raise ValueError("samples must be positive")
    if method == "qmc":
        value, err = _genz_orthant(cov.matrix * np.outer(signs, signs), samples, seed)
        return OrthantEstimate(value, err, samples, seed)
    if method != "mc":
        raise ValueError(f"unknown orthant method {method!r}")
    if _is_diagonal(cov.matrix):
        return OrthantEstimate(0.5 ** cov.dim, 0.0, samples, seed)

    A = cov.factor()
    rng = rng_for(seed)
    hits = 0
    for m in _chunks(samples):
        z = rng.standard_normal((m, cov.dim)) @ A.T
        hits += int(np.count_nonzero(np.all(z * signs >= 0, axis=1)))
    p = hits / samples
    return OrthantEstimate(p, float(np.sqrt(p * (1 - p) / samples)), samples, seed)


def orthant_table(cov: RealCovariance, samples: int, seed: int):
    """Orthant probabilities for all ``2**dim`` sign patterns from one stream.

    Uses the same draws as :func:`orthant_probability` with the same seed, so
    entry ``pattern_index(s)`` equals ``orthant_probability(cov, s, ...)``.
    Returns ``(probs, std_errors)``.
    """
    if _is_diagonal(cov.matrix):
        p = np.full(1 << cov.dim, 0.5 ** cov.dim)
        return p, np.zeros_like(p)
    A = cov.factor()
    rng = rng_for(seed)
    weights = 1 << np.arange(cov.dim)
    counts = np.zeros(1 << cov.dim, dtype=np.int64)
    for m in _chunks(samples):
        z = rng.standard_normal((m, cov.dim)) @ A.T
        counts += np.bincount((z < 0) @ weights, minlength=counts.size)
    p = counts / samples
    return p, np.sqrt(p * (1 - p) / samples)


def _is_diagonal(m):
    # independent components: every orthant has mass exactly 2**-dim
    return not np.any(m - np.diag(np.diag(m)))


def _genz_orthant(sigma, samples, seed, reps=8):
    # positive orthant {z >= 0} of N(0, sigma)
    d = sigma.shape[0]
    lam, vec = np.linalg.eigh(sigma)
    sigma = (vec * np.maximum(lam, EIG_CLIP)) @ vec.T
    L = np.linalg.cholesky(0.5 * (sigma + sigma.T))
    per_rep = max(1, samples // reps)
    m = int(np.ceil(np.log2(per_rep)))
    estimates = []
    for rep in range(reps):
        sob = qmc.Sobol(d=max(d - 1, 1), scramble=True, seed=rng_for(seed, rep))
        w = sob.random_base2(m)
        y = np.zeros((w.shape[0], d))
        f = np.ones(w.shape[0])
        for i in range(d):
            # lower limit of z_i given the earlier y's; upper limit is +inf
            lo = -(y[:, :i] @ L[i, :i]) / L[i, i]
            dlo = ndtr(lo)
            f *= 1.0 - dlo
            if i < d - 1:
                u = dlo + w[:, i] * (1.0 - dlo)
                y[:, i] = ndtri(np.clip(u, 1e-300, 1 - 1e-16))
        estimates.append(f.mean())
    estimates = np.array(estimates)
    return float(estimates.mean()), float(estimates.std(ddof=1) / np.sqrt(reps))
