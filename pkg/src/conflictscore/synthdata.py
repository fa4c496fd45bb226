"""Synthetic zero-inflated, heavy-tailed fatality panels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import N_COLS, N_ROWS, DomainError, Level, ObservationPanel, row_col_to_gid
from .streams import keyed_rng

_DEFAULTS = {
    # zero share, NB mean, NB dispersion, persistence
    Level.CM: (0.87, 40.0, 1.0, 0.97),
    Level.PGM: (0.99, 4.0, 1.0, 0.97),
}


@dataclass(frozen=True)
class SynthSpec:
    """Two-state (peace/conflict) chain per unit.

    ``persistence`` is the lag-1 autocorrelation of the conflict indicator.
    Conflict months draw ``1 + NB(mean, dispersion)`` fatalities.

    The default persistence is high: conflict spells last years, which is what
    gives a unit's own recent history predictive value at 3-14 month horizons.
    """

    level: Level
    n_units: int
    first_month: int
    last_month: int
    zero_share: float | None = None
    nb_mean: float | None = None
    nb_dispersion: float | None = None
    persistence: float | None = None
    seed: int = 0

    def __post_init__(self):
        level = Level(self.level)
        object.__setattr__(self, "level", level)
        zs, mean, disp, pers = _DEFAULTS[level]
        for name, default in (("zero_share", zs), ("nb_mean", mean), ("nb_dispersion", disp),
                              ("persistence", pers)):
            if getattr(self, name) is None:
                object.__setattr__(self, name, default)
        if self.n_units < 1:
            raise DomainError("n_units must be positive")
        if level is Level.PGM and self.n_units > N_ROWS * N_COLS:
            raise DomainError("more grid cells requested than the grid holds")
        if self.first_month < 1 or self.last_month < self.first_month:
            raise DomainError(f"bad month range {self.first_month}..{self.last_month}")
        if not 0.0 < self.zero_share < 1.0:
            raise DomainError("zero_share must lie in (0, 1)")
        if not (self.nb_mean > 0 and self.nb_dispersion > 0):
            raise DomainError("negative-binomial mean and dispersion must be positive")
        if not 0.0 <= self.persistence < 1.0:
            raise DomainError("persistence must lie in [0, 1)")

    @property
    def n_months(self) -> int:
        return self.last_month - self.first_month + 1


def unit_ids(spec: SynthSpec) -> list[int]:
    """Country ids 1..n, or a near-square block of grid cells around (0N, 0E)."""
    if spec.level is Level.CM:
        return list(range(1, spec.n_units + 1))
    width = math.ceil(math.sqrt(spec.n_units))
    row0, col0 = N_ROWS // 2 + 1, N_COLS // 2 + 1
    out = []
    for k in range(spec.n_units):
        r, c = divmod(k, width)
        out.append(row_col_to_gid((row0 + r - 1) % N_ROWS + 1, (col0 + c - 1) % N_COLS + 1))
    return out


def conflict_chain(rng: np.random.Generator, n: int, p_conflict: float, persistence: float) -> np.ndarray:
    """Stationary two-state Markov chain with P(conflict)=p and lag-1 correlation ``persistence``."""
    stay = p_conflict + persistence * (1 - p_conflict)  # P(conflict -> conflict)
    enter = p_conflict * (1 - persistence)  # P(peace -> conflict)
    u = rng.random(n)
    state = np.empty(n, dtype=bool)
    state[0] = u[0] < p_conflict
    for t in range(1, n):
        state[t] = u[t] < (stay if state[t - 1] else enter)
    return state


def generate_panel(spec: SynthSpec) -> ObservationPanel:
    n = spec.n_months
    k = spec.nb_dispersion
    p_nb = k / (k + spec.nb_mean)
    first, values = {}, {}
    for uid in unit_ids(spec):
        rng = keyed_rng(spec.seed, "synth", spec.level, uid)
        state = conflict_chain(rng, n, 1 - spec.zero_share, spec.persistence)
        counts = np.zeros(n, dtype=np.int64)
        counts[state] = 1 + rng.negative_binomial(k, p_nb, int(state.sum()))
        first[uid] = spec.first_month
        values[uid] = counts
    return ObservationPanel(spec.level, first, values)
