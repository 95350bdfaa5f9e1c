"""Signal-side quantities: the (beta, r) parametrization, the detection
boundary, and injection of sparse signals into noise paths."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateRegimeError, DomainError
from .gp import AutocovSpec, GaussianPath
from .rng import SIGNAL, Stream


@dataclass(frozen=True)
class SignalSpec:
    beta: float
    r: float

    def __post_init__(self):
        if not 0.5 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (1/2, 1), got {self.beta!r}")
        if not 0.0 < self.r < 1.0:
            raise DomainError(f"r must lie in (0, 1), got {self.r!r}")


@dataclass(frozen=True)
class DerivedSignalParams:
    n: int
    beta: float
    r: float
    kappa: float
    N: float
    nu: float
    K: int
    beta_prime: float
    r_prime: float
    xi: float


def derive_params(acov: AutocovSpec, sig: SignalSpec) -> DerivedSignalParams:
    """Signal count and amplitude for the dependent-noise alternative.

    K = round(n**(1 - beta')) signals of height sqrt(2 r log N), N = n**(1-kappa),
    with beta' = beta(1 - kappa) and r' = r(1 - kappa).
    """
    kappa = acov.kappa
    if kappa >= 1:
        raise DegenerateRegimeError(
            f"kappa = {kappa:g} >= 1: effective sample size is one block (degenerate regime)"
        )
    log_n = acov.log_n
    log_N = (1.0 - kappa) * log_n
    beta_p = sig.beta * (1.0 - kappa)
    r_p = sig.r * (1.0 - kappa)
    nu = math.sqrt(2.0 * sig.r * log_N)
    nu_alt = math.sqrt(2.0 * r_p * log_n)
    assert abs(nu - nu_alt) <= 1e-12 * max(1.0, nu)
    K = int(round(math.exp((1.0 - beta_p) * log_n)))
    return DerivedSignalParams(
        n=acov.n,
        beta=sig.beta,
        r=sig.r,
        kappa=kappa,
        N=math.exp(log_N),
        nu=nu,
        K=K,
        beta_prime=beta_p,
        r_prime=r_p,
        xi=(1.0 - sig.beta) * (1.0 - kappa),
    )


def detection_boundary(beta: float) -> float:
    """Lowest detectable strength r for sparsity beta in (1/2, 1)."""
    if not 0.5 < beta < 1.0:
        raise DomainError(f"beta must lie in (1/2, 1), got {beta!r}")
    if beta <= 0.75:
        return beta - 0.5
    return (1.0 - math.sqrt(1.0 - beta)) ** 2


def max_boundary(beta: float) -> float:
    """Boundary of the max classifier under independent noise."""
    if not 0.5 < beta < 1.0:
        raise DomainError(f"beta must lie in (1/2, 1), got {beta!r}")
    return (1.0 - math.sqrt(1.0 - beta)) ** 2


def boundary_curve(kappa: float, beta_grid):
    """Points ((1-kappa) beta, (1-kappa) r*(beta)) and the level r' = 1 - kappa.

    Returns ``(points, reference_level)`` where ``points`` is a list of
    ``(beta, r, beta_prime, r_prime)`` tuples.
    """
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa!r}")
    scale = 1.0 - kappa
    points = []
    for beta in beta_grid:
        r = detection_boundary(float(beta))
        points.append((float(beta), r, scale * float(beta), scale * r))
    return points, scale


@dataclass(frozen=True)
class ContaminatedPath:
    values: np.ndarray = field(repr=False)
    indicator: np.ndarray = field(repr=False)
    base_seed_tag: Optional[tuple]
    amplitude: float

    @property
    def realized_count(self) -> int:
        return int(self.indicator.sum())


def signal_sites(n: int, K: int, seed: int, index: int = 0) -> np.ndarray:
    """0-based sites hit by K ordered uniforms, u -> nearest integer to n*u.

    Positions are clamped to [1, n] before conversion; coincident draws
    collapse, so fewer than K distinct sites may come back.
    """
    if K <= 0:
        return np.zeros(0, dtype=np.int64)
    u = np.sort(Stream(seed, index, SIGNAL).uniforms(K))
    one_based = np.clip(np.floor(n * u + 0.5).astype(np.int64), 1, n)
    return np.unique(one_based - 1)


def blockwise_sites(n: int, kappa: float, n_blocks: int, seed: int, index: int = 0) -> np.ndarray:
    """All sites of ``n_blocks`` randomly chosen blocks of length floor(n**kappa)."""
    length = max(1, int(math.floor(n**kappa)))
    total = -(-n // length)
    n_blocks = min(n_blocks, total)
    if n_blocks <= 0:
        return np.zeros(0, dtype=np.int64)
    keys = Stream(seed, index, SIGNAL).uniforms(total)
    chosen = np.sort(np.argsort(keys, kind="stable")[:n_blocks])
    sites = (chosen[:, None] * length + np.arange(length)[None, :]).ravel()
    return sites[sites < n]


def inject_at(values: np.ndarray, sites: np.ndarray, amplitude: float,
              seed_tag: Optional[tuple] = None) -> ContaminatedPath:
    indicator = np.zeros(len(values), dtype=bool)
    indicator[sites] = True
    out = np.asarray(values, dtype=float).copy()
    out[indicator] += amplitude
    return ContaminatedPath(out, indicator, seed_tag, amplitude)


def inject_signals(path: GaussianPath, params: DerivedSignalParams, seed: int, index: int = 0,
                   placement: str = "uniform") -> ContaminatedPath:
    """Add ``params.nu`` at the sites picked by ``placement`` (uniform | blockwise)."""
    n = path.spec.n
    if params.n != n:
        raise DomainError("signal parameters were derived for a different n")
    if placement == "uniform":
        sites = signal_sites(n, params.K, seed, index)
    elif placement == "blockwise":
        sites = blockwise_sites(n, params.kappa, int(round(params.N ** (1.0 - params.beta))),
                                seed, index)
    else:
        raise DomainError(f"unknown placement {placement!r}")
    return inject_at(path.values, sites, params.nu, path.seed_tag)


@dataclass(frozen=True)
class NDDConfig:
    r_ndd: float
    C: float
    sign: int = 1  # +1, -1, or 0 for an independent random sign per site

    def __post_init__(self):
        if not (1.0 <= self.C < self.r_ndd):
            raise DomainError(f"NDD needs 1 <= C < r_ndd, got C={self.C!r}, r_ndd={self.r_ndd!r}")
        if self.sign not in (-1, 0, 1):
            raise DomainError("sign must be +1, -1 or 0 (random)")


def ndd_amplitude(n: int, alpha0: float, r_ndd: float) -> float:
    """2 (r n**-alpha0 log n)**(1/2)."""
    log_n = math.log(n)
    return 2.0 * math.sqrt(r_ndd * math.exp(-alpha0 * log_n) * log_n)


def inject_ndd_signal(path: GaussianPath, cfg: NDDConfig, sites, seed: int = 0,
                      index: int = 0) -> ContaminatedPath:
    n = path.spec.n
    sites = np.unique(np.asarray(sites, dtype=np.int64))
    if len(sites) < 1 or len(sites) > n - 1:
        raise DomainError("the NDD signal must occupy between one and n - 1 sites")
    if sites.min() < 0 or sites.max() >= n:
        raise DomainError("site index out of range")
    amp = ndd_amplitude(n, path.spec.alpha0, cfg.r_ndd)
    if cfg.sign == 0:
        signs = np.where(Stream(seed, index, SIGNAL).uniforms(len(sites)) < 0.5, -1.0, 1.0)
        out = np.asarray(path.values, dtype=float).copy()
        out[sites] += signs * amp
        indicator = np.zeros(n, dtype=bool)
        indicator[sites] = True
        return ContaminatedPath(out, indicator, path.seed_tag, amp)
    return inject_at(path.values, sites, cfg.sign * amp, path.seed_tag)
