"""Business layer: delivery patterns, inventory/delivery-size tables, vehicles."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np


class Weekday(enum.IntEnum):
    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4


N_DAYS = len(Weekday)

# The business-approved subset of the 31 possible 5-bit patterns.
ADMISSIBLE_PATTERNS = (5, 9, 10, 11, 13, 17, 18, 21, 23, 29, 31)


class DomainError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def _check_pattern(p: int) -> None:
    if p not in ADMISSIBLE_PATTERNS:
        raise DomainError(f"pattern {p} is not admissible")


def pattern_days(p: int) -> frozenset[Weekday]:
    """Weekdays served by pattern ``p``; Monday is the most significant of the 5 bits."""
    _check_pattern(p)
    return frozenset(d for d in Weekday if p >> (N_DAYS - 1 - d) & 1)


def pattern_frequency(p: int) -> int:
    _check_pattern(p)
    return bin(p).count("1")


PATTERNS_BY_FREQUENCY: dict[int, tuple[int, ...]] = {
    f: tuple(p for p in ADMISSIBLE_PATTERNS if pattern_frequency(p) == f) for f in range(1, 6)
}


@dataclass(frozen=True)
class VehicleConfig:
    capacity: int = 12  # roll containers
    cost_per_km: float = 0.6  # euro
    speed: float = 60.0  # km/h
    unload_time: float = 0.25  # h
    max_work_time: float = 8.0  # h

    def __post_init__(self):
        for name in ("capacity", "cost_per_km", "speed", "unload_time", "max_work_time"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"vehicle {name} must be strictly positive")


@dataclass(frozen=True)
class InventoryEntry:
    cost: float  # euro / week
    size: int  # roll containers per delivery


@dataclass(frozen=True)
class InventoryTable:
    """Per-shop map ``frequency -> (cost, delivery size)``.

    ``rows[k]`` belongs to shop ``k + 1``. A frequency missing from a row is
    inadmissible for that shop.
    """

    rows: tuple[Mapping[int, InventoryEntry], ...]

    def __post_init__(self):
        for k, row in enumerate(self.rows, start=1):
            if not row:
                raise DomainError(f"shop {k} has no admissible frequency")
            freqs = sorted(row)
            if any(f not in range(1, N_DAYS + 1) for f in freqs):
                raise DomainError(f"shop {k} has a frequency outside 1..{N_DAYS}")
            for a, b in zip(freqs, freqs[1:]):
                if row[a].cost < row[b].cost:
                    raise DomainError(f"shop {k}: inventory cost increases with frequency")
            for f in freqs:
                size = row[f].size
                if size < 1 or int(size) != size:
                    raise DomainError(f"shop {k}: delivery size must be a positive integer")

    @property
    def n_shops(self) -> int:
        return len(self.rows)

    def lookup(self, shop: int, freq: int) -> InventoryEntry:
        return lookup_inventory(self, shop, freq)

    def admissible_patterns(self, shop: int) -> tuple[int, ...]:
        row = self.rows[shop - 1]
        return tuple(p for p in ADMISSIBLE_PATTERNS if pattern_frequency(p) in row)


def lookup_inventory(table: InventoryTable, shop: int, freq: int) -> InventoryEntry:
    """Inventory cost and delivery size of ``shop`` (1-based) served ``freq`` days a week."""
    if not 1 <= shop <= table.n_shops:
        raise IndexError(f"shop {shop} out of range 1..{table.n_shops}")
    try:
        return table.rows[shop - 1][freq]
    except KeyError:
        raise DomainError(f"frequency {freq} is not admissible for shop {shop}") from None


TABLE_FIELDS = ("shop", "frequency", "cost_eur", "delivery_size")


def table_to_csv(table: InventoryTable) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TABLE_FIELDS)
    for k, row in enumerate(table.rows, start=1):
        for f in sorted(row):
            w.writerow([k, f, repr(float(row[f].cost)), row[f].size])
    return out.getvalue()


def table_from_csv(text: str) -> InventoryTable:
    rows: dict[int, dict[int, InventoryEntry]] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        shop, freq = int(rec["shop"]), int(rec["frequency"])
        rows.setdefault(shop, {})[freq] = InventoryEntry(float(rec["cost_eur"]), int(rec["delivery_size"]))
    n = max(rows, default=0)
    missing = [k for k in range(1, n + 1) if k not in rows]
    if missing or n == 0:
        raise DomainError(f"inventory table has no rows for shops {missing or 'any'}")
    return InventoryTable(tuple(rows[k] for k in range(1, n + 1)))


def read_table(path: str | Path) -> InventoryTable:
    return table_from_csv(Path(path).read_text())


def write_table(table: InventoryTable, path: str | Path) -> None:
    Path(path).write_text(table_to_csv(table))


@dataclass(frozen=True)
class GeneratorProfile:
    """Knobs for the synthetic inventory table.

    Costs at a shop's lowest admissible frequency are drawn from
    ``[cost_low, cost_high]``; each extra weekly delivery lowers the cost by a
    draw from ``[step_low, step_high]``, floored at ``cost_low``. Delivery size
    at frequency ``f`` is ``ceil(weekly_volume / f)`` clipped to ``[1, capacity]``.
    """

    cost_low: float = 280.0
    cost_high: float = 340.0
    step_low: float = 2.0
    step_high: float = 20.0
    min_frequency: int = 2
    max_frequency: int = 5
    min_span: int = 2  # number of admissible frequencies per shop, at least
    volume_low: int = 3  # roll containers / week
    volume_high: int = 8
    capacity: int = 12

    def validate(self) -> None:
        if not 0 <= self.cost_low <= self.cost_high:
            raise ConfigError("need 0 <= cost_low <= cost_high")
        if not 0 <= self.step_low <= self.step_high:
            raise ConfigError("need 0 <= step_low <= step_high")
        if not 2 <= self.min_frequency <= self.max_frequency <= N_DAYS:
            raise ConfigError("need 2 <= min_frequency <= max_frequency <= 5")
        if not 1 <= self.min_span <= self.max_frequency - self.min_frequency + 1:
            raise ConfigError("min_span does not fit in the frequency range")
        if not 1 <= self.volume_low <= self.volume_high:
            raise ConfigError("need 1 <= volume_low <= volume_high")
        if self.capacity < 1:
            raise ConfigError("capacity must be positive")


def synth_inventory_table(seed: int, n_shops: int, profile: GeneratorProfile = GeneratorProfile()) -> InventoryTable:
    """Seeded stand-in for a real per-shop cost table with the same structure."""
    if n_shops < 1:
        raise ConfigError("n_shops must be >= 1")
    profile.validate()
    rng = np.random.default_rng(seed)
    fmin, fmax = profile.min_frequency, profile.max_frequency
    rows = []
    for _ in range(n_shops):
        span = int(rng.integers(profile.min_span, fmax - fmin + 2))
        lo = int(rng.integers(fmin, fmax - span + 2))
        freqs = range(lo, lo + span)
        cost = float(round(rng.uniform(profile.cost_low, profile.cost_high)))
        volume = int(rng.integers(profile.volume_low, profile.volume_high + 1))
        row = {}
        for f in freqs:
            size = min(profile.capacity, max(1, math.ceil(volume / f)))
            row[f] = InventoryEntry(cost, size)
            step = float(round(rng.uniform(profile.step_low, profile.step_high)))
            cost = max(profile.cost_low, cost - step)
        rows.append(row)
    return InventoryTable(tuple(rows))
