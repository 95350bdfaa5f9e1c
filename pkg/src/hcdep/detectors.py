"""Higher criticism, the max classifier, the neighbor-difference detector and
blockwise exceedance diagnostics."""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateRegimeError, DomainError, EmptyGridError
from .gp import AutocovSpec
from .normal import std_normal_isf

DEFAULT_REFINEMENT = 512


@dataclass(frozen=True)
class HCGrid:
    """Candidate levels for the HC supremum.

    ``levels`` is the fixed refinement grid; when ``include_data`` is set the
    data values lying in [-t_n, t_n] are added at evaluation time, each on
    both sides of its jump.
    """

    t_n: float
    kappa: float = 0.0
    mode: str = "signed"
    levels: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    include_data: bool = True

    def __post_init__(self):
        if self.mode not in ("signed", "absolute"):
            raise DomainError(f"mode must be 'signed' or 'absolute', got {self.mode!r}")
        if not (self.t_n > 0 and math.isfinite(self.t_n)):
            raise DomainError("t_n must be a positive finite number")
        if len(self.levels) == 0 and not self.include_data:
            raise EmptyGridError("grid has no candidate levels")


def default_grid(spec: AutocovSpec, resolution: int = DEFAULT_REFINEMENT,
                 mode: str = "signed") -> HCGrid:
    """t_n = isf(n**(kappa - 1)) with a uniform refinement grid on [-t_n, t_n]."""
    kappa = spec.kappa
    if kappa >= 1:
        raise DegenerateRegimeError(
            f"kappa = {kappa:g} >= 1: the HC grid is undefined in the degenerate regime"
        )
    if resolution < 2:
        raise DomainError("refinement resolution must be at least 2")
    t_n = std_normal_isf(math.exp((kappa - 1.0) * spec.log_n))
    return HCGrid(t_n, kappa, mode, np.linspace(-t_n, t_n, resolution), True)


@dataclass(frozen=True)
class HCResult:
    hc: float
    hc_normalized: float
    argmax_t: float
    mode: str


def _z_scores(sorted_data: np.ndarray, levels: np.ndarray):
    """Standardized exceedance counts at each level, strict and non-strict."""
    n = len(sorted_data)
    sf = ndtr(-levels)
    scale = np.sqrt(n * ndtr(levels) * sf)
    strict = n - np.searchsorted(sorted_data, levels, side="right")
    loose = n - np.searchsorted(sorted_data, levels, side="left")
    return (strict - n * sf) / scale, (loose - n * sf) / scale


def hc_statistic(data, grid: HCGrid) -> HCResult:
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise DomainError("hc_statistic needs a non-empty 1-D sample")
    xs = np.sort(x)
    levels = grid.levels[(grid.levels >= -grid.t_n) & (grid.levels <= grid.t_n)]
    if grid.include_data:
        inside = xs[(xs >= -grid.t_n) & (xs <= grid.t_n)]
        levels = np.concatenate([levels, inside])
    if len(levels) == 0:
        raise EmptyGridError("no candidate level lies inside [-t_n, t_n]")
    z_strict, z_loose = _z_scores(xs, levels)
    if grid.mode == "absolute":
        z_strict, z_loose = np.abs(z_strict), np.abs(z_loose)
    both = np.maximum(z_strict, z_loose)
    i = int(np.argmax(both))
    hc = float(both[i])
    norm = hc * math.exp(-0.5 * grid.kappa * math.log(len(x)))
    return HCResult(hc, norm, float(levels[i]), grid.mode)


@dataclass(frozen=True)
class Detection:
    """Serializable outcome of one detector applied to one series."""

    detector: str
    statistic: float
    normalized: float
    threshold: float
    decision: bool
    argmax_t: Optional[float] = None

    def to_json(self) -> dict:
        out = asdict(self)
        if out["argmax_t"] is None:
            del out["argmax_t"]
        return out


def hc_detect(data, grid: HCGrid, threshold: float) -> Detection:
    res = hc_statistic(data, grid)
    return Detection("hc", res.hc, res.hc_normalized, threshold,
                     res.hc_normalized >= threshold, res.argmax_t)


def max_threshold(n: int) -> float:
    return math.sqrt(2.0 * math.log(n))


def max_classifier(data) -> Detection:
    """Signal iff max(data) > sqrt(2 log n)."""
    x = np.asarray(data, dtype=float)
    if len(x) == 0:
        raise DomainError("max_classifier needs at least one value")
    thr = max_threshold(len(x))
    stat = float(x.max())
    # n = 1 has threshold 0; report the raw statistic there.
    norm = stat / thr if thr > 0 else stat
    return Detection("max", stat, norm, thr, stat > thr)


def ndd_threshold(n: int, alpha0: float, C: float) -> float:
    log_n = math.log(n)
    return 2.0 * math.sqrt(C * math.exp(-alpha0 * log_n) * log_n)


def ndd_detect(data, alpha0: float, C: float) -> Detection:
    """Signal iff some |Y[i+1] - Y[i]| exceeds 2 (C n**-alpha0 log n)**(1/2)."""
    x = np.asarray(data, dtype=float)
    if len(x) < 2:
        raise DomainError("ndd_detect needs n >= 2")
    if C < 1:
        raise DomainError(f"C must be at least 1, got {C!r}")
    thr = ndd_threshold(len(x), alpha0, C)
    stat = float(np.abs(np.diff(x)).max())
    return Detection("ndd", stat, stat / thr, thr, stat > thr)


@dataclass(frozen=True)
class BlockPartition:
    n: int
    block_len: int
    lam: Optional[float] = None

    def __post_init__(self):
        if self.n < 1 or self.block_len < 1:
            raise DomainError("partition needs n >= 1 and block_len >= 1")

    @classmethod
    def from_exponent(cls, n: int, lam: float, kappa: Optional[float] = None):
        """Blocks of length floor(n**lam), 0 < lam (< kappa when kappa given)."""
        if lam <= 0 or (kappa is not None and kappa <= 1 and lam >= kappa):
            raise DomainError(f"block exponent must lie in (0, kappa), got {lam!r}")
        return cls(n, max(1, int(math.floor(n**lam))), lam)

    @property
    def b(self) -> int:
        return -(-self.n // self.block_len)

    @property
    def starts(self) -> np.ndarray:
        return np.arange(0, self.n, self.block_len)


def block_constancy(data, t: float, part: BlockPartition):
    """Whether 1[X_i > t] equals its block-start value for every i.

    Returns ``(constant, agreement)`` with ``agreement[j]`` the fraction of
    block j whose indicator matches that of the block's first element.
    """
    x = np.asarray(data, dtype=float)
    if len(x) != part.n:
        raise DomainError("partition does not match the data length")
    ind = x > t
    L = part.block_len
    pad = part.b * L - part.n
    full = np.concatenate([ind, np.zeros(pad, dtype=bool)]).reshape(part.b, L)
    valid = np.ones(part.b * L, dtype=bool)
    if pad:
        valid[-pad:] = False
    valid = valid.reshape(part.b, L)
    agree = (full == full[:, :1]) & valid
    sizes = valid.sum(axis=1)
    fraction = agree.sum(axis=1) / sizes
    return bool(np.all(fraction == 1.0)), fraction


@dataclass(frozen=True)
class LevelSpec:
    """Level t = sqrt(2 q log n)."""

    q: float
    n: int

    def __post_init__(self):
        if self.q < 0 or self.n < 1:
            raise DomainError("LevelSpec needs q >= 0 and n >= 1")

    @property
    def t(self) -> float:
        return math.sqrt(2.0 * self.q * math.log(self.n))


def level_exceedance(data, level: LevelSpec) -> bool:
    x = np.asarray(data, dtype=float)
    if len(x) == 0:
        return False
    return bool(x.max() > level.t)
