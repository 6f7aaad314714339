"""Post-run analysis: RPD, Pareto spacing, front size ratios, and the run CSV."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .evolution import fast_non_dominated_sort
from .logistics import DomainError

MODES = ("single", "multi")

RUN_FIELDS = (
    "instance", "solver", "mode", "seed",
    "inventory_eur", "transport_eur", "total_eur", "walltime_s", "front_json",
)


def rpd(fitness: float, fitness_min: float) -> float:
    """Relative percentage deviation of ``fitness`` above the lower bound ``fitness_min``."""
    if not fitness_min > 0:
        raise DomainError("fitness_min must be positive")
    if fitness < fitness_min:
        raise DomainError(f"fitness {fitness} is below the lower bound {fitness_min}")
    return (fitness - fitness_min) / fitness_min * 100.0


def rpd_batch(values: Sequence[float]) -> list[float]:
    lo = min(values)
    return [rpd(v, lo) for v in values]


def spacing(front: Iterable[Sequence[float]]) -> float:
    """Spread of nearest-neighbour Manhattan distances; 0 for an equispaced front.

    Duplicate points are collapsed first.
    """
    pts = sorted({tuple(float(x) for x in p) for p in front})
    n = len(pts)
    if n < 2:
        raise DomainError("spacing needs at least two distinct points")
    d = [
        min(sum(abs(a - b) for a, b in zip(p, q)) for j, q in enumerate(pts) if j != i)
        for i, p in enumerate(pts)
    ]
    mean = sum(d) / n
    return math.sqrt(sum((mean - di) ** 2 for di in d) / (n - 1))


def front_stats(population: Sequence[tuple[Sequence[int], Sequence[float]]]) -> tuple[int, int, float]:
    """(distinct chromosomes, distinct chromosomes on F1, ratio) for ``(chromosome, objectives)`` pairs."""
    if not population:
        raise DomainError("empty population")
    distinct: dict[tuple, tuple[float, ...]] = {}
    for chrom, obj in population:
        distinct.setdefault(tuple(chrom), tuple(obj))
    objs = list(distinct.values())
    front = fast_non_dominated_sort(objs)[0]
    return len(distinct), len(front), len(front) / len(distinct)


@dataclass(frozen=True)
class RunRecord:
    instance: str
    solver: str
    mode: str
    seed: int
    inventory: float
    transport: float
    walltime: float = 0.0
    front: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def total(self) -> float:
        return self.inventory + self.transport

    def row(self) -> dict[str, str]:
        front = "" if self.front is None else ";".join(f"{fi!r}:{ft!r}" for fi, ft in self.front)
        return {
            "instance": self.instance,
            "solver": self.solver,
            "mode": self.mode,
            "seed": str(self.seed),
            "inventory_eur": repr(self.inventory),
            "transport_eur": repr(self.transport),
            "total_eur": repr(self.total),
            "walltime_s": f"{self.walltime:.3f}",
            "front_json": front,
        }

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "RunRecord":
        front = None
        if row.get("front_json"):
            front = tuple(
                (float(a), float(b))
                for a, b in (pair.split(":") for pair in row["front_json"].split(";"))
            )
        return cls(row["instance"], row["solver"], row["mode"], int(row["seed"]),
                   float(row["inventory_eur"]), float(row["transport_eur"]),
                   float(row["walltime_s"]), front)


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RUN_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[RunRecord]:
    return [RunRecord.from_row(row) for row in csv.DictReader(io.StringIO(text))]


def write_records(path: str | Path, records: Iterable[RunRecord]) -> None:
    Path(path).write_text(records_to_csv(records))


def read_records(path: str | Path) -> list[RunRecord]:
    return records_from_csv(Path(path).read_text())


def rpd_by_instance(records: Sequence[RunRecord]) -> list[dict]:
    """One row per run with its RPD against the best total of the same instance."""
    lo: dict[str, float] = {}
    for r in records:
        lo[r.instance] = min(lo.get(r.instance, math.inf), r.total)
    return [
        {"instance": r.instance, "solver": r.solver, "mode": r.mode, "seed": r.seed,
         "total_eur": r.total, "rpd": rpd(r.total, lo[r.instance])}
        for r in records
    ]
