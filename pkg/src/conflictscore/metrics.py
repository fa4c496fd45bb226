"""Scoring rules for sample-based count forecasts.

All three scores take the draws of one (unit, month) cell and the observed
count. Draws are used in the order given: only the ignorance score cares,
because Fourier resampling is order-sensitive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_BINS, BinScheme, DomainError, UnitId

MIN_DRAWS = 15
MAX_DRAWS = 1000


@dataclass(frozen=True, eq=False)
class ForecastSet:
    """Ensemble of integer draws for one (unit, month)."""

    unit: UnitId
    month: int
    draws: np.ndarray

    def __post_init__(self):
        draws = np.asarray(self.draws)
        if draws.ndim != 1 or draws.size == 0:
            raise DomainError(f"{self.unit}/{self.month}: draws must be a non-empty 1-d sequence")
        if not np.issubdtype(draws.dtype, np.integer):
            raise DomainError(f"{self.unit}/{self.month}: draws must be integers")
        if draws.min() < 0:
            raise DomainError(f"{self.unit}/{self.month}: negative draw")
        if draws.max() > np.iinfo(np.int32).max:
            raise DomainError(f"{self.unit}/{self.month}: draw exceeds int32")
        draws = draws.astype(np.int32)
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def key(self) -> tuple[UnitId, int]:
        return self.unit, self.month

    @property
    def n(self) -> int:
        return len(self.draws)

    def within_bounds(self) -> bool:
        return MIN_DRAWS <= self.n <= MAX_DRAWS

    def __eq__(self, other):
        if not isinstance(other, ForecastSet):
            return NotImplemented
        return self.key == other.key and np.array_equal(self.draws, other.draws)

    def __hash__(self):
        return hash((self.key, self.draws.tobytes()))


def _as_draws(f) -> np.ndarray:
    draws = f.draws if isinstance(f, ForecastSet) else np.asarray(f)
    if draws.ndim != 1 or draws.size == 0:
        raise DomainError("forecast needs at least one draw")
    return draws


# ---------------------------------------------------------------------------
# CRPS


def crps_ensemble(f, y: float) -> float:
    """CRPS of the empirical distribution of the draws.

    Uses the energy form ``mean|x - y| - 0.5 * mean|x - x'|``; the pairwise
    term is computed from the sorted draws in O(n log n).
    """
    x = np.sort(_as_draws(f).astype(np.float64))
    n = x.size
    abs_err = np.abs(x - y).sum() / n
    # sum_{i,j} |x_i - x_j| = 2 * sum_i (2i - n + 1) x_(i), 0-based ranks
    weights = 2.0 * np.arange(n) - n + 1
    spread = 2.0 * np.dot(weights, x) / (n * n)
    return float(max(abs_err - 0.5 * spread, 0.0))


# ---------------------------------------------------------------------------
# resampling


class ResampleMode(str, enum.Enum):
    TILE = "tile"
    FOURIER = "fourier"


def fourier_resample(x, n_target: int) -> np.ndarray:
    """Band-limited resampling of a real sequence to ``n_target`` points.

    Truncates or zero-pads the spectrum. The Nyquist coefficient of an
    even-length spectrum is split (upsampling) or folded (downsampling) so the
    result stays real and matches the usual FFT resampler.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n_target < 1:
        raise DomainError("n_target must be at least 1")
    spec = np.fft.rfft(x)
    m = min(n, n_target)
    out = np.zeros(n_target // 2 + 1, dtype=complex)
    keep = m // 2 + 1
    out[:keep] = spec[:keep]
    if m % 2 == 0:
        if n_target < n:
            out[m // 2] *= 2.0
        elif n < n_target:
            out[m // 2] *= 0.5
    return np.fft.irfft(out, n_target) * (n_target / n)


def resample_to_n(draws, n_target: int, mode: ResampleMode | str = ResampleMode.FOURIER) -> np.ndarray:
    """Resample draws to exactly ``n_target`` non-negative integers."""
    draws = _as_draws(draws)
    mode = ResampleMode(mode)
    if n_target < 1:
        raise DomainError("n_target must be at least 1")
    if draws.size == n_target:
        return np.array(draws, dtype=np.int64)
    if mode is ResampleMode.TILE:
        return np.resize(np.asarray(draws, dtype=np.int64), n_target)
    values = np.rint(fourier_resample(draws, n_target))
    return np.maximum(values, 0).astype(np.int64)


# ---------------------------------------------------------------------------
# ignorance


@dataclass(frozen=True)
class IgnConfig:
    n_target: int = 1000
    scheme: BinScheme = field(default=DEFAULT_BINS)
    resample_mode: ResampleMode = ResampleMode.FOURIER

    def __post_init__(self):
        if self.n_target < 1:
            raise DomainError("n_target must be positive")
        object.__setattr__(self, "resample_mode", ResampleMode(self.resample_mode))

    @property
    def floor(self) -> float:
        """Best achievable score: all resampled values in the observed bin."""
        k = len(self.scheme)
        return -math.log2((self.n_target + 1) / (self.n_target + k))

    @property
    def ceiling(self) -> float:
        k = len(self.scheme)
        return -math.log2(1 / (self.n_target + k))


def binned_probabilities(f, cfg: IgnConfig = IgnConfig()) -> np.ndarray:
    """Smoothed bin probabilities: resample, bin, add one pseudo-count per bin."""
    values = resample_to_n(_as_draws(f), cfg.n_target, cfg.resample_mode)
    k = len(cfg.scheme)
    counts = np.bincount(cfg.scheme.index(values), minlength=k)
    return (counts + 1) / (cfg.n_target + k)


def ignorance_score(f, y: int, cfg: IgnConfig = IgnConfig()) -> float:
    if y < 0:
        raise DomainError(f"observation must be non-negative, got {y}")
    probs = binned_probabilities(f, cfg)
    return float(-math.log2(probs[int(cfg.scheme.index(np.array([y]))[0])]))


# ---------------------------------------------------------------------------
# quantiles and interval score


def quantile_type7(sorted_draws, q: float) -> float:
    """Linear-interpolation sample quantile (Hyndman and Fan type 7)."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile level {q} outside [0, 1]")
    x = np.asarray(sorted_draws, dtype=np.float64)
    if x.size == 0:
        raise DomainError("quantile of an empty sample")
    h = (x.size - 1) * q
    lo = math.floor(h)
    if lo >= x.size - 1:
        return float(x[-1])
    return float(x[lo] + (h - lo) * (x[lo + 1] - x[lo]))


@dataclass(frozen=True)
class MisConfig:
    """Interval for the interval score.

    By default the central ``1 - a`` interval ``(a/2, 1 - a/2)``. ``compat_mode``
    uses ``(a/2, 1 - a)``, which reproduces the published worked example.
    """

    a: float = 0.1
    q_low: float | None = None
    q_high: float | None = None
    compat_mode: bool = False

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise DomainError(f"a must lie in (0, 1), got {self.a}")
        q_low = self.a / 2 if self.q_low is None else self.q_low
        if self.q_high is not None:
            q_high = self.q_high
        else:
            q_high = 1 - self.a if self.compat_mode else 1 - self.a / 2
        if not 0.0 < q_low < q_high < 1.0:
            raise DomainError(f"need 0 < q_low < q_high < 1, got {q_low}, {q_high}")
        object.__setattr__(self, "q_low", q_low)
        object.__setattr__(self, "q_high", q_high)


def _step(z: float) -> float:
    return 1.0 if z >= 0 else 0.0


def interval_score_bounds(lower: float, upper: float, y: float, a: float) -> float:
    """Width plus 2/a-scaled penalties for an observation outside [lower, upper]."""
    return ((upper - lower)
            + (2.0 / a) * (lower - y) * _step(lower - y)
            + (2.0 / a) * (y - upper) * _step(y - upper))


def interval_score(f, y: float, cfg: MisConfig = MisConfig()) -> float:
    x = np.sort(_as_draws(f))
    lower = quantile_type7(x, cfg.q_low)
    upper = quantile_type7(x, cfg.q_high)
    return float(interval_score_bounds(lower, upper, y, cfg.a))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreTriple:
    crps: float
    ign: float
    mis: float


def score_cell(f, y: int, ign_cfg: IgnConfig = IgnConfig(), mis_cfg: MisConfig = MisConfig()) -> ScoreTriple:
    return ScoreTriple(
        crps=crps_ensemble(f, y),
        ign=ignorance_score(f, y, ign_cfg),
        mis=interval_score(f, y, mis_cfg),
    )
