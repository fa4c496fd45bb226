"""CRPS-weighted pooling of several submissions into one ensemble forecast."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import DomainError
from .evaluation import ScoreTable, ScoringError
from .metrics import ForecastSet
from .streams import keyed_rng


class WeightRule(str, enum.Enum):
    INVERSE_CRPS = "inverse"
    SOFTMIN_CRPS = "softmin"


def weights_from_crps(crps: Mapping[str, float], rule: WeightRule | str = WeightRule.INVERSE_CRPS,
                      tau: float = 1.0) -> dict[str, float]:
    """Normalised member weights from overall CRPS values.

    Inverse rule: w proportional to 1/CRPS. Members with CRPS 0 share all the
    weight between them. Soft-min rule: w proportional to exp(-CRPS/tau).
    """
    rule = WeightRule(rule)
    if not crps:
        raise DomainError("no ensemble members")
    names = sorted(crps)
    values = np.array([crps[n] for n in names], dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise DomainError("CRPS values must be finite and non-negative")
    if rule is WeightRule.INVERSE_CRPS:
        perfect = values == 0
        raw = perfect.astype(float) if perfect.any() else 1.0 / values
    else:
        if not tau > 0:
            raise DomainError(f"tau must be positive, got {tau}")
        raw = np.exp(-(values - values.min()) / tau)
    w = raw / raw.sum()
    return dict(zip(names, w.tolist()))


def compute_weights(test_tables: Mapping[str, ScoreTable], rule: WeightRule | str = WeightRule.INVERSE_CRPS,
                    tau: float = 1.0) -> dict[str, float]:
    names = sorted(test_tables)
    if not names:
        raise DomainError("no ensemble members")
    ref = test_tables[names[0]].keys
    for n in names[1:]:
        if test_tables[n].keys != ref:
            raise ScoringError(f"{n!r} was scored on different cells than {names[0]!r}")
    return weights_from_crps({n: test_tables[n].overall()["crps"] for n in names}, rule, tau)


def allocate_slots(weights: Mapping[str, float], n_draws: int) -> dict[str, int]:
    """Largest-remainder apportionment of ``n_draws`` slots; ties go to the earlier name."""
    names = sorted(weights)
    w = np.array([weights[n] for n in names], dtype=float)
    if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-9):
        raise DomainError("weights must be non-negative and sum to 1")
    ideal = w * n_draws
    base = np.floor(ideal).astype(int)
    short = n_draws - int(base.sum())
    rem = ideal - base
    order = sorted(range(len(names)), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        base[i] += 1
    return dict(zip(names, base.tolist()))


def pool_draws(members: Mapping[str, ForecastSet], weights: Mapping[str, float],
               n_draws: int = 1000, seed: int = 0) -> ForecastSet:
    if not members:
        raise DomainError("empty member set")
    keys = {f.key for f in members.values()}
    if len(keys) != 1:
        raise DomainError(f"members address different cells: {sorted(map(str, keys))[:4]}")
    unit, month = keys.pop()
    slots = allocate_slots({n: weights.get(n, 0.0) for n in members}, n_draws)
    rng = keyed_rng(seed, "ensemble", unit.level, unit.id, month)
    parts = []
    for name in sorted(members):
        k = slots[name]
        if k:
            draws = members[name].draws
            parts.append(draws[rng.integers(0, draws.size, k)])
    return ForecastSet(unit, month, np.concatenate(parts))


def build_ensemble(submissions: Mapping[str, list[ForecastSet]], weights: Mapping[str, float],
                   n_draws: int = 1000, seed: int = 0) -> list[ForecastSet]:
    """Pool every cell that all members forecast."""
    by_member = {n: {f.key: f for f in fs} for n, fs in submissions.items()}
    names = sorted(by_member)
    if not names:
        raise DomainError("empty member set")
    common = set(by_member[names[0]])
    for n in names[1:]:
        if set(by_member[n]) != common:
            raise DomainError(f"{n!r} forecasts different cells than {names[0]!r}")
    return [pool_draws({n: by_member[n][k] for n in names}, weights, n_draws, seed)
            for k in sorted(common, key=lambda k: (k[1], k[0].id))]
