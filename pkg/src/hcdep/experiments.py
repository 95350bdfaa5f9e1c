"""Monte Carlo harness: error-rate experiments, the null summary table, and
numerical checks of the variance, clumping and tail results.

Replicate ``j`` of an experiment uses noise path ``2j`` for the null and path
``2j + 1`` for the alternative (the real and imaginary parts of one
circulant transform, which are independent), and signal stream ``j``. Every
replicate is therefore a pure function of ``(config, j)``; replicates may be
evaluated on a thread pool in any order and are aggregated in index order.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .detectors import (
    BlockPartition,
    LevelSpec,
    block_constancy,
    default_grid,
    hc_statistic,
    level_exceedance,
    max_classifier,
    ndd_detect,
)
from .errors import DegenerateRegimeError, DomainError, RareEventError, ResourceError
from .gp import AutocovSpec, CirculantSampler
from .normal import conditional_exceedance_deficit, std_normal_cdf, std_normal_sf
from .rng import SIGNAL, SITE, Stream
from .signals import (
    NDDConfig,
    SignalSpec,
    derive_params,
    inject_at,
    ndd_amplitude,
    signal_sites,
    blockwise_sites,
)

SCHEMA_VERSION = 1
DETECTORS = ("hc", "max", "ndd")
ALTERNATIVES = ("dependent", "independent", "ndd")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``alternative`` picks how signals are added: ``dependent`` puts
    round(n**(1-beta')) signals of size sqrt(2 r log N) at uniform sites,
    ``independent`` puts round(n**(1-beta)) signals of size sqrt(2 r log n),
    ``ndd`` adds 2 (r_ndd n**-alpha0 log n)**(1/2) at ``ndd_sites`` random
    sites. The default follows the detector (hc -> dependent, max ->
    independent, ndd -> ndd).
    """

    acov: AutocovSpec
    detector: str = "hc"
    threshold: Optional[float] = None
    reps: int = 100
    master_seed: int = 0
    sig: Optional[SignalSpec] = None
    ndd: Optional[NDDConfig] = None
    alternative: Optional[str] = None
    ndd_sites: int = 1
    refinement: int = 512
    mode: str = "signed"
    placement: str = "uniform"

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise DomainError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        if self.reps < 1:
            raise DomainError("reps must be at least 1")
        if self.threshold is None:
            if self.detector == "hc":
                raise DomainError("the hc detector needs an explicit threshold")
            object.__setattr__(self, "threshold", 1.0)
        if not math.isfinite(self.threshold):
            raise DomainError("threshold must be finite")
        if self.detector == "hc" and self.acov.kappa >= 1:
            raise DegenerateRegimeError(
                f"kappa = {self.acov.kappa:g} >= 1: hc is not defined in the degenerate regime"
            )
        if self.detector == "ndd" and self.ndd is None:
            raise DomainError("the ndd detector needs an NDDConfig (r_ndd, C)")
        alt = self.alternative
        if alt is None:
            alt = {"hc": "dependent", "max": "independent", "ndd": "ndd"}[self.detector]
            object.__setattr__(self, "alternative", alt)
        if alt not in ALTERNATIVES:
            raise DomainError(f"alternative must be one of {ALTERNATIVES}, got {alt!r}")
        if alt == "ndd" and self.ndd is None:
            raise DomainError("an ndd alternative needs an NDDConfig")

    @property
    def has_alternative(self) -> bool:
        return self.sig is not None or (self.alternative == "ndd" and self.ndd is not None)

    def echo(self) -> dict:
        a = self.acov
        return {
            "n": a.n,
            "alpha": a.alpha,
            "alpha0": a.alpha0,
            "kappa": a.kappa,
            "detector": self.detector,
            "threshold": self.threshold,
            "reps": self.reps,
            "seed": self.master_seed,
            "beta": None if self.sig is None else self.sig.beta,
            "r": None if self.sig is None else self.sig.r,
            "alternative": self.alternative if self.has_alternative else None,
            "r_ndd": None if self.ndd is None else self.ndd.r_ndd,
            "C": None if self.ndd is None else self.ndd.C,
            "ndd_sites": self.ndd_sites,
            "refinement": self.refinement,
            "mode": self.mode,
            "placement": self.placement,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    null_stats: np.ndarray
    alt_stats: Optional[np.ndarray]
    realized_signal_counts: list
    embedding: dict
    runtime: float = field(default=0.0, compare=False)

    @property
    def threshold(self) -> float:
        return self.config.threshold

    def rates_at(self, threshold: float):
        t1 = float(np.mean(self.null_stats >= threshold))
        t2 = None if self.alt_stats is None else float(np.mean(self.alt_stats < threshold))
        return t1, t2

    @property
    def type1_rate(self) -> float:
        return self.rates_at(self.threshold)[0]

    @property
    def type2_rate(self) -> Optional[float]:
        return self.rates_at(self.threshold)[1]

    @property
    def null_mean(self) -> float:
        return float(np.mean(self.null_stats))

    @property
    def null_sd(self) -> float:
        if len(self.null_stats) < 2:
            return 0.0
        return float(np.std(self.null_stats, ddof=1))

    @property
    def degenerate_sample(self) -> bool:
        return len(self.null_stats) < 2

    def to_json(self) -> dict:
        """Stable, deterministic record; wall-clock runtime is left out."""
        return {
            "schema_version": SCHEMA_VERSION,
            "package_version": __version__,
            "config": self.config.echo(),
            "type1_rate": self.type1_rate,
            "type2_rate": self.type2_rate,
            "null_mean": self.null_mean,
            "null_sd": self.null_sd,
            "degenerate_sample": self.degenerate_sample,
            "realized_signal_counts": list(self.realized_signal_counts),
            "embedding": self.embedding,
            "null_statistics": [float(v) for v in self.null_stats],
            "alt_statistics": None if self.alt_stats is None else [float(v) for v in self.alt_stats],
        }

    def csv_row(self) -> dict:
        c = self.config.echo()
        return {
            "n": c["n"], "kappa": c["kappa"], "alpha": c["alpha"], "alpha0": c["alpha0"],
            "beta": c["beta"], "r": c["r"], "detector": c["detector"],
            "threshold": c["threshold"], "reps": c["reps"], "type1": self.type1_rate,
            "type2": self.type2_rate, "null_mean": self.null_mean, "null_sd": self.null_sd,
            "seed": c["seed"],
        }


CSV_COLUMNS = ("n", "kappa", "alpha", "alpha0", "beta", "r", "detector", "threshold", "reps",
               "type1", "type2", "null_mean", "null_sd", "seed")


class _Runner:
    """Evaluates single replicates of one config; shared read-only state."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.sampler = CirculantSampler(cfg.acov)
        self.grid = default_grid(cfg.acov, cfg.refinement, cfg.mode) if cfg.detector == "hc" else None
        self.params = None
        if cfg.sig is not None and cfg.alternative == "dependent":
            self.params = derive_params(cfg.acov, cfg.sig)

    def statistic(self, values) -> float:
        cfg = self.cfg
        if cfg.detector == "hc":
            return hc_statistic(values, self.grid).hc_normalized
        if cfg.detector == "max":
            return max_classifier(values).normalized
        return ndd_detect(values, cfg.acov.alpha0, cfg.ndd.C).normalized

    def contaminate(self, values, j):
        cfg = self.cfg
        n = cfg.acov.n
        seed = cfg.master_seed
        if cfg.alternative == "ndd":
            k = min(max(1, cfg.ndd_sites), n - 1)
            sites = np.unique(Stream(seed, j, SITE).integers(0, n, k))
            amp = ndd_amplitude(n, cfg.acov.alpha0, cfg.ndd.r_ndd)
            if cfg.ndd.sign == 0:
                signs = np.where(Stream(seed, j, SIGNAL).uniforms(len(sites)) < 0.5, -1.0, 1.0)
                out = values.copy()
                out[sites] += signs * amp
                return out, len(sites)
            return inject_at(values, sites, cfg.ndd.sign * amp).values, len(sites)
        if cfg.alternative == "dependent":
            p = self.params
            if cfg.placement == "blockwise":
                sites = blockwise_sites(n, p.kappa, int(round(p.N ** (1.0 - p.beta))), seed, j)
            else:
                sites = signal_sites(n, p.K, seed, j)
            amp = p.nu
        else:
            K = int(round(n ** (1.0 - cfg.sig.beta)))
            sites = signal_sites(n, K, seed, j)
            amp = math.sqrt(2.0 * cfg.sig.r * math.log(n))
        return inject_at(values, sites, amp).values, len(sites)

    def __call__(self, j: int):
        seed = self.cfg.master_seed
        null_path, alt_noise = self.sampler.pair(seed, j)
        null_stat = self.statistic(null_path)
        if not self.cfg.has_alternative:
            return null_stat, None, None
        alt_values, count = self.contaminate(alt_noise, j)
        return null_stat, self.statistic(alt_values), count


def run_experiment(cfg: ExperimentConfig, threads: int = 1,
                   max_seconds: Optional[float] = None) -> ExperimentReport:
    """Run ``cfg.reps`` replicates; the result does not depend on ``threads``."""
    started = time.perf_counter()
    runner = _Runner(cfg)
    results = [None] * cfg.reps

    def work(j):
        if max_seconds is not None and time.perf_counter() - started > max_seconds:
            return j, None
        return j, runner(j)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for j, res in pool.map(work, range(cfg.reps)):
                results[j] = res
    else:
        for j in range(cfg.reps):
            results[j] = work(j)[1]
    done = sum(r is not None for r in results)
    if done < cfg.reps:
        raise ResourceError(
            f"runtime cap of {max_seconds}s exceeded after {done}/{cfg.reps} replicates"
        )
    null = np.array([r[0] for r in results])
    alt = np.array([r[1] for r in results]) if cfg.has_alternative else None
    counts = [r[2] for r in results] if cfg.has_alternative else []
    return ExperimentReport(cfg, null, alt, counts, runner.sampler.embedding.summary(),
                            time.perf_counter() - started)


@dataclass(frozen=True)
class Table1Row:
    n: int
    mean: float
    sd: float
    reps: int
    degenerate: bool


def table1_summary(ns, reps: int = 100, master_seed: int = 0, alpha: float = 0.5,
                   alpha0: float = 0.1, refinement: int = 512, threads: int = 1) -> list:
    """Mean and SD of n**(-kappa/2) hc_n over null replicates, per n."""
    rows = []
    for n in ns:
        cfg = ExperimentConfig(AutocovSpec(n, alpha, alpha0), "hc", threshold=0.0, reps=reps, master_seed=master_seed,
                               refinement=refinement)
        rep = run_experiment(cfg, threads=threads)
        rows.append(Table1Row(n, rep.null_mean, rep.null_sd, reps, rep.degenerate_sample))
    return rows


def null_quantile(acov: AutocovSpec, reps: int, p: float, master_seed: int = 0,
                  refinement: int = 512, threads: int = 1) -> dict:
    """Empirical p-quantile of the normalized null HC statistic.

    Uses the order statistic of rank ceil(p * reps) (rank 1 when p = 0); the
    half-width is half the spread of the distribution-free 95% order-statistic
    interval around it.
    """
    if not 0.0 <= p < 1.0:
        raise DomainError("p must lie in [0, 1)")
    if reps * (1.0 - p) < 20:
        raise DomainError(f"reps * (1 - p) must be at least 20, got {reps * (1.0 - p):g}")
    cfg = ExperimentConfig(acov, "hc", threshold=0.0, reps=reps, master_seed=master_seed,
                           refinement=refinement)
    stats = np.sort(run_experiment(cfg, threads=threads).null_stats)
    rank = max(1, math.ceil(p * reps))
    spread = 1.96 * math.sqrt(reps * p * (1.0 - p))
    lo = max(1, int(math.floor(rank - spread)))
    hi = min(reps, int(math.ceil(rank + spread)))
    return {
        "p": p,
        "reps": reps,
        "quantile": float(stats[rank - 1]),
        "half_width": 0.5 * float(stats[hi - 1] - stats[lo - 1]),
        "statistics": stats,
    }


@dataclass(frozen=True)
class CenteredExceedance:
    """Delta(t) = sum_i (1[X_i > t] - Phi_bar(t)) and its scale sqrt(n**(kappa+1) Phi Phi_bar)."""

    t: float
    delta: float
    scale: float


def centered_exceedance(values, t: float, kappa: float) -> CenteredExceedance:
    n = len(values)
    delta = float(np.count_nonzero(np.asarray(values) > t) - n * std_normal_sf(t))
    scale = math.sqrt(n ** (kappa + 1.0) * std_normal_cdf(t) * std_normal_sf(t))
    return CenteredExceedance(t, delta, scale)


def _paths(acov: AutocovSpec, count: int, master_seed: int):
    """Yield ``count`` independent paths, both parts of each transform."""
    sampler = CirculantSampler(acov)
    for p in range((count + 1) // 2):
        re, im = sampler.pair(master_seed, p)
        yield re
        if 2 * p + 1 < count:
            yield im


def variance_scaling_check(alpha: float, alpha0: float, ns, t: float = 1.0, reps: int = 2000,
                           nu_max: int = 2, master_seed: int = 0) -> dict:
    """Monte Carlo moments of Delta(t) across n and the fitted variance exponent.

    For each n returns the sample variance of sum 1[X_i > t], its ratio to
    n**min(kappa+1, 2) exp(-t^2/2) and to n**min(kappa+1, 2) Phi Phi_bar, and
    E[Delta^(2 nu)] / (n**(kappa+1) Phi Phi_bar)**nu for nu = 1..nu_max.
    """
    if not 1 <= nu_max <= 2:
        raise DomainError("nu_max must be 1 or 2")
    kappa = alpha0 / alpha
    expo = min(kappa + 1.0, 2.0)
    pp = std_normal_cdf(t) * std_normal_sf(t)
    rows = []
    for n in ns:
        acov = AutocovSpec(n, alpha, alpha0)
        counts = np.array([np.count_nonzero(x > t) for x in _paths(acov, reps, master_seed)],
                          dtype=float)
        delta = counts - n * std_normal_sf(t)
        var = float(np.var(counts, ddof=1))
        moment_scale = n ** (kappa + 1.0) * pp
        rows.append({
            "n": n,
            "variance": var,
            "ratio_smooth": var / (n**expo * math.exp(-0.5 * t * t)),
            "ratio_blockwise": var / (n**expo * pp),
            "moments": {nu: float(np.mean(delta ** (2 * nu))) / moment_scale**nu
                        for nu in range(1, nu_max + 1)},
        })
    logn = np.log([r["n"] for r in rows])
    logv = np.log([r["variance"] for r in rows])
    slope = float(np.polyfit(logn, logv, 1)[0]) if len(rows) > 1 else float("nan")
    return {"kappa": kappa, "t": t, "expected_slope": expo, "slope": slope, "rows": rows}


def conditional_exceedance_check(acov: AutocovSpec, t: float, windows, min_hits: int = 500,
                                 max_paths: int = 20000, master_seed: int = 0) -> dict:
    """Estimate P(X_i > t for i = 1..m | X_1 > t) for each window length m.

    Conditioning starts are taken every ``max(windows) + support_len`` sites
    within each path so distinct starts are nearly independent. Paths are added
    until every window has ``min_hits`` conditioning events or ``max_paths`` is
    reached.
    """
    windows = [int(m) for m in windows]
    if min(windows) < 1:
        raise DomainError("window lengths must be positive")
    span = max(windows)
    if span > acov.n:
        raise DomainError("window longer than the series")
    step = span + acov.support_len
    starts = np.arange(0, acov.n - span + 1, step)
    hits = 0
    successes = np.zeros(len(windows))
    used = 0
    for x in _paths(acov, max_paths, master_seed):
        used += 1
        above = x > t
        csum = np.concatenate([[0], np.cumsum(above)])
        cond = starts[above[starts]]
        hits += len(cond)
        for k, m in enumerate(windows):
            successes[k] += np.count_nonzero(csum[cond + m] - csum[cond] == m)
        if hits >= min_hits:
            break
    if hits < min_hits:
        raise RareEventError(
            f"only {hits} conditioning events at t={t:.3f} after {used} paths; use a smaller q"
        )
    return {
        "t": t,
        "hits": hits,
        "paths": used,
        "windows": windows,
        "probabilities": [float(s / hits) for s in successes],
    }


def _check_level_exponent(q: float, kappa: float):
    # q = 1 - kappa separates clumped crossings from no crossings; neither law applies there.
    if q <= 0:
        raise DomainError("q must be positive")
    if math.isclose(q, 1.0 - kappa, rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError(f"q = 1 - kappa = {q:g} is the boundary level; choose q on either side")


def block_clumping_check(acov: AutocovSpec, lam: float, q: float, paths: int = 2000,
                         master_seed: int = 0, compare_len: Optional[int] = None) -> dict:
    """Fraction of null paths whose exceedance indicators at t = sqrt(2 q log n) are
    constant on every block of length floor(n**lam), and the mean per-block
    agreement, also for blocks of length ``compare_len`` (default ceil(n**kappa))."""
    n = acov.n
    _check_level_exponent(q, acov.kappa)
    t = LevelSpec(q, n).t
    part = BlockPartition.from_exponent(n, lam, acov.kappa)
    full_len = compare_len if compare_len is not None else int(math.ceil(n**acov.kappa))
    full = BlockPartition(n, min(n, full_len))
    const = 0
    const_full = 0
    agree = []
    agree_full = []
    cond_agree = []
    cond_agree_full = []
    for x in _paths(acov, paths, master_seed):
        ok, frac = block_constancy(x, t, part)
        ok_f, frac_f = block_constancy(x, t, full)
        const += ok
        const_full += ok_f
        agree.append(frac.mean())
        agree_full.append(frac_f.mean())
        hit = x[part.starts] > t
        if hit.any():
            cond_agree.append(frac[hit].mean())
        hit_f = x[full.starts] > t
        if hit_f.any():
            cond_agree_full.append(frac_f[hit_f].mean())
    return {
        "t": t,
        "block_len": part.block_len,
        "full_block_len": full.block_len,
        "paths": paths,
        "constancy_fraction": const / paths,
        "constancy_fraction_full": const_full / paths,
        "mean_agreement": float(np.mean(agree)),
        "mean_agreement_full": float(np.mean(agree_full)),
        "conditional_agreement": float(np.mean(cond_agree)) if cond_agree else float("nan"),
        "conditional_agreement_full": (float(np.mean(cond_agree_full))
                                       if cond_agree_full else float("nan")),
    }


def exceedance_check(acov: AutocovSpec, q: float, paths: int = 2000, master_seed: int = 0) -> dict:
    _check_level_exponent(q, acov.kappa)
    level = LevelSpec(q, acov.n)
    hits = sum(level_exceedance(x, level) for x in _paths(acov, paths, master_seed))
    return {"t": level.t, "paths": paths, "exceedance_rate": hits / paths}


def detector_comparison(acov: AutocovSpec, scenario: str, reps: int = 100, master_seed: int = 0,
                        sig: Optional[SignalSpec] = None, ndd: Optional[NDDConfig] = None,
                        hc_threshold: float = 2.2, ndd_sites: int = 1, threads: int = 1) -> dict:
    """Run two detectors on the same noise and the same alternative.

    ``hc-vs-ndd`` adds the small NDD signal; ``hc-vs-max`` adds round(n**(1-beta))
    signals of size sqrt(2 r log n). HC is skipped (None) when kappa >= 1.
    """
    if scenario == "hc-vs-ndd":
        if ndd is None:
            raise DomainError("hc-vs-ndd needs an NDDConfig")
        other = ExperimentConfig(acov, "ndd", reps=reps, master_seed=master_seed, ndd=ndd,
                                 alternative="ndd", ndd_sites=ndd_sites)
        hc_kw = dict(ndd=ndd, alternative="ndd", ndd_sites=ndd_sites)
    elif scenario == "hc-vs-max":
        if sig is None:
            raise DomainError("hc-vs-max needs a SignalSpec")
        other = ExperimentConfig(acov, "max", reps=reps, master_seed=master_seed, sig=sig,
                                 alternative="independent")
        hc_kw = dict(sig=sig, alternative="independent")
    else:
        raise DomainError(f"unknown scenario {scenario!r}")
    hc_report = None
    if acov.kappa < 1:
        hc_cfg = ExperimentConfig(acov, "hc", threshold=hc_threshold, reps=reps,
                                  master_seed=master_seed, **hc_kw)
        hc_report = run_experiment(hc_cfg, threads=threads)
    return {"hc": hc_report, other.detector: run_experiment(other, threads=threads)}


def tail_deficit_ratio(t: float, one_minus_rho: float) -> float:
    """[1 - P(X > t | Y > t)] / [t sqrt(1 - rho) / sqrt(pi)]."""
    deficit = conditional_exceedance_deficit(t, 1.0 - one_minus_rho)
    return deficit / (t * math.sqrt(one_minus_rho) / math.sqrt(math.pi))


def sample_lag_covariance(paths: np.ndarray, max_lag: Optional[int] = None) -> np.ndarray:
    """Mean of X[i] X[i+k] over rows and positions, k = 0..max_lag-1.

    The population mean is known to be zero, so no centering is applied.
    """
    paths = np.asarray(paths)
    n = paths.shape[1]
    max_lag = n if max_lag is None else max_lag
    return np.array([np.mean(paths[:, : n - k] * paths[:, k:]) for k in range(max_lag)])


def with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(cfg, master_seed=seed)
