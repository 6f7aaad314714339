"""Interchangeable day-level VRP solvers.

Every solver is a picklable callable ``solver(shops, demands, dm, vc, rng) -> DayPlan``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .aco import AcoParams, aco_solve
from .cw import LocalSearchConfig, clarke_wright, cwls_solve
from .tabu import TabuConfig, cwts_solve

SOLVER_NAMES = ("CWLS", "ACO", "CWTS")


@dataclass(frozen=True)
class CWLS:
    cfg: LocalSearchConfig = field(default_factory=LocalSearchConfig)
    name = "CWLS"

    def __call__(self, shops, demands, dm, vc, rng):
        return cwls_solve(shops, demands, dm, vc, rng, self.cfg)


@dataclass(frozen=True)
class ACO:
    params: AcoParams = field(default_factory=AcoParams)
    name = "ACO"

    def __call__(self, shops, demands, dm, vc, rng):
        return aco_solve(shops, demands, dm, vc, self.params, rng)


@dataclass(frozen=True)
class CWTS:
    cfg: TabuConfig = field(default_factory=TabuConfig)
    name = "CWTS"

    def __call__(self, shops, demands, dm, vc, rng):
        return cwts_solve(shops, demands, dm, vc, self.cfg)


@dataclass(frozen=True)
class CW:
    """Plain savings construction, no improvement step."""

    name = "CW"

    def __call__(self, shops, demands, dm, vc, rng):
        return clarke_wright(shops, demands, dm, vc)


def make_solver(name: str, ls: LocalSearchConfig | None = None, aco: AcoParams | None = None,
                tabu: TabuConfig | None = None):
    key = name.upper()
    if key == "CWLS":
        return CWLS(ls or LocalSearchConfig())
    if key == "ACO":
        return ACO(aco or AcoParams())
    if key == "CWTS":
        return CWTS(tabu or TabuConfig())
    if key == "CW":
        return CW()
    raise ValueError(f"unknown solver {name!r}; expected one of {SOLVER_NAMES}")


__all__ = [
    "ACO", "CW", "CWLS", "CWTS", "AcoParams", "LocalSearchConfig", "TabuConfig",
    "SOLVER_NAMES", "make_solver", "aco_solve", "clarke_wright", "cwls_solve", "cwts_solve",
]
