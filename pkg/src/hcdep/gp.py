"""Exact simulation of the stationary Gaussian process with autocovariance

    rho_n(k) = max(0, 1 - |k|**alpha * n**(-alpha0))

by circulant embedding, plus a dense-factorization sampler used as an oracle.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DomainError, NonPSDError, ResourceError
from .rng import NOISE, Stream

# Relative slack when deciding that |k|**alpha has reached n**alpha0.
_SUPPORT_RTOL = 1e-12
NEG_EIG_RTOL = 1e-9
EXACT_CLIP_RTOL = 1e-6
MAX_DOUBLINGS = 3
MAX_EMBED_SIZE = 1 << 26
MAX_DENSE_N = 2048


@dataclass(frozen=True)
class AutocovSpec:
    n: int
    alpha: float
    alpha0: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        # alpha0 = 0 is the independent case: rho(k) = 1[k = 0].
        if not (self.alpha0 >= 0 and math.isfinite(self.alpha0)):
            raise DomainError(f"alpha0 must be non-negative, got {self.alpha0!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def kappa(self) -> float:
        return self.alpha0 / self.alpha

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    @property
    def scale(self) -> float:
        """n**alpha0, the lag**alpha at which the covariance reaches zero."""
        return math.exp(self.alpha0 * self.log_n)

    @property
    def support_len(self) -> int:
        """Smallest lag k >= 1 with rho(k) = 0."""
        target = self.scale * (1.0 - _SUPPORT_RTOL)
        k = max(1, math.ceil(math.exp(self.kappa * self.log_n)))
        while k > 1 and (k - 1) ** self.alpha >= target:
            k -= 1
        while k**self.alpha < target:
            k += 1
        return k

    @property
    def n_eff(self) -> float:
        """Effective number of independent blocks, n**(1 - kappa)."""
        if self.kappa >= 1:
            return 1.0
        return math.exp((1.0 - self.kappa) * self.log_n)


def rho(spec: AutocovSpec, k):
    """Autocovariance at integer lag(s) k."""
    lag = np.abs(np.asarray(k, dtype=float))
    out = np.maximum(0.0, 1.0 - lag**spec.alpha / spec.scale)
    out = np.where(lag >= spec.support_len, 0.0, out)
    return float(out) if out.ndim == 0 else out


def autocov_vector(spec: AutocovSpec, length: Optional[int] = None) -> np.ndarray:
    length = spec.n if length is None else length
    return rho(spec, np.arange(length))


@dataclass(frozen=True)
class EmbeddingReport:
    m: int
    eigenvalues: np.ndarray = field(repr=False)
    min_eigenvalue: float
    clipped_mass: float
    doublings: int
    rescaled: bool

    @property
    def spectral_mass(self) -> float:
        return float(self.m)

    @property
    def exact(self) -> bool:
        return self.clipped_mass <= EXACT_CLIP_RTOL * self.spectral_mass

    def summary(self) -> dict:
        return {
            "m": self.m,
            "min_eigenvalue": self.min_eigenvalue,
            "clipped_mass": self.clipped_mass,
            "doublings": self.doublings,
            "exact": self.exact,
        }


def initial_embedding_size(n: int) -> int:
    m = 1
    while m < 2 * (n - 1):
        m *= 2
    return m


def circulant_row(cov_at, m: int) -> np.ndarray:
    """First row (c_0, ..., c_{m/2}, c_{m/2-1}, ..., c_1) of the embedding."""
    if m == 1:
        return np.array([cov_at(np.arange(1))[0]])
    half = cov_at(np.arange(m // 2 + 1))
    return np.concatenate([half, half[1:-1][::-1]])


def embed_covariance(cov_at, n: int, max_doublings: int = MAX_DOUBLINGS) -> EmbeddingReport:
    """Circulant embedding of a stationary covariance given as a lag function.

    ``cov_at`` maps an integer array of lags to covariances. The embedding
    size starts at the smallest power of two >= 2(n - 1) and is doubled while
    the most negative eigenvalue is below -1e-9 of the largest, at most
    ``max_doublings`` times. Remaining negative eigenvalues are set to zero and
    the spectrum rescaled to keep the trace (unit marginal variance).
    """
    m = initial_embedding_size(n)
    doublings = 0
    while True:
        if m > MAX_EMBED_SIZE:
            raise ResourceError(f"circulant embedding size m={m} exceeds cap {MAX_EMBED_SIZE}")
        row = circulant_row(cov_at, m)
        spectrum = np.fft.fft(row)
        mass = float(np.abs(spectrum.real).sum())
        if float(np.abs(spectrum.imag).max()) > 1e-9 * max(mass, 1.0):
            raise NonPSDError("circulant row is not symmetric; eigenvalues are not real")
        eig = spectrum.real
        lo, hi = float(eig.min()), float(eig.max())
        if lo >= -NEG_EIG_RTOL * hi or doublings >= max_doublings:
            break
        m *= 2
        doublings += 1
    neg = eig < 0
    clipped = float(-eig[neg].sum()) + 0.0
    rescaled = False
    if neg.any():
        trace = float(eig.sum())
        eig = np.where(neg, 0.0, eig)
        if clipped > NEG_EIG_RTOL * hi:
            eig = eig * (trace / eig.sum())
            rescaled = True
    return EmbeddingReport(m, eig, lo, clipped, doublings, rescaled)


def embed(spec: AutocovSpec, max_doublings: int = MAX_DOUBLINGS) -> EmbeddingReport:
    return embed_covariance(lambda k: rho(spec, k), spec.n, max_doublings)


@dataclass(frozen=True)
class GaussianPath:
    values: np.ndarray = field(repr=False)
    spec: AutocovSpec
    seed_tag: tuple

    def __post_init__(self):
        if len(self.values) != self.spec.n:
            raise DomainError("path length does not match spec.n")


class CirculantSampler:
    """Draws paths from one embedding.

    Path ``j`` is the real part (even j) or imaginary part (odd j) of the
    transform fed by stream ``(master_seed, j // 2)``; the two parts are
    independent with the target covariance.
    """

    def __init__(self, spec: AutocovSpec, embedding: Optional[EmbeddingReport] = None):
        self.spec = spec
        self.embedding = embed(spec) if embedding is None else embedding
        self._amp = np.sqrt(self.embedding.eigenvalues / self.embedding.m)

    def pair(self, master_seed: int, pair_index: int):
        m, n = self.embedding.m, self.spec.n
        z = Stream(master_seed, pair_index, NOISE).normals(2 * m)
        y = np.fft.fft(self._amp * (z[:m] + 1j * z[m:]))
        return y.real[:n].copy(), y.imag[:n].copy()

    def path(self, master_seed: int, index: int) -> np.ndarray:
        re, im = self.pair(master_seed, index // 2)
        return im if index % 2 else re

    def batch(self, master_seed: int, start: int, count: int) -> np.ndarray:
        """Paths start .. start+count-1 stacked as rows.

        Each pair is transformed on its own so a path's bits never depend on
        which other paths were requested alongside it.
        """
        out = np.empty((count, self.spec.n))
        for p in range(start // 2, (start + count - 1) // 2 + 1):
            for part, values in enumerate(self.pair(master_seed, p)):
                j = 2 * p + part
                if start <= j < start + count:
                    out[j - start] = values
        return out


def simulate_paths(spec: AutocovSpec, count: int, master_seed: int, start: int = 0,
                   embedding: Optional[EmbeddingReport] = None) -> list:
    """Paths ``start .. start+count-1`` of the circulant-embedding sampler."""
    if count < 0:
        raise DomainError("count must be non-negative")
    if count == 0:
        return []
    sampler = CirculantSampler(spec, embedding)
    values = sampler.batch(master_seed, start, count)
    return [GaussianPath(values[i], spec, (master_seed, start + i)) for i in range(count)]


def dense_factor(spec: AutocovSpec) -> np.ndarray:
    """Lower factor L with L @ L.T equal to the n x n covariance matrix."""
    if spec.n > MAX_DENSE_N:
        raise ResourceError(f"dense factorization limited to n <= {MAX_DENSE_N}, got n={spec.n}")
    sigma = scipy.linalg.toeplitz(autocov_vector(spec))
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    # Semi-definite (e.g. kappa >= 1 makes the matrix rank deficient).
    w, v = np.linalg.eigh(sigma)
    if w.min() < -NEG_EIG_RTOL * w.max():
        raise NonPSDError(
            f"covariance matrix for {spec} has eigenvalue {w.min():.3g} "
            "(the model is not a valid covariance for alpha > 1)"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


def simulate_cholesky(spec: AutocovSpec, count: int, master_seed: int, start: int = 0) -> list:
    """Exact draws L z, path ``j`` using stream ``(master_seed, j)``."""
    if count <= 0:
        return []
    factor = dense_factor(spec)
    out = []
    for j in range(start, start + count):
        z = Stream(master_seed, j, NOISE).normals(spec.n)
        out.append(GaussianPath(factor @ z, spec, (master_seed, j)))
    return out


def write_paths_csv(paths, fh, seed=None):
    """One row per path after a ``# n=.. alpha=.. alpha0=.. seed=..`` header."""
    if not paths:
        raise DomainError("no paths to write")
    spec = paths[0].spec
    seed = paths[0].seed_tag[0] if seed is None else seed
    fh.write(f"# n={spec.n} alpha={spec.alpha!r} alpha0={spec.alpha0!r} seed={seed}\n")
    for p in paths:
        fh.write(",".join(repr(float(v)) for v in p.values))
        fh.write("\n")


def read_paths_csv(fh):
    """Inverse of write_paths_csv; returns (header dict, 2-D array)."""
    header = {}
    rows = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for item in line[1:].split():
                key, _, value = item.partition("=")
                header[key] = value
            continue
        rows.append([float(v) for v in line.split(",")])
    return header, np.array(rows)
