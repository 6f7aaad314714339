"""Config-driven experiment runner: instances x solvers x modes x seeds.

A result directory holds

- ``runs.csv``: one row per run (see ``metrics.RUN_FIELDS``)
- ``history.csv``: per-generation best/median of every run
- ``rpd.csv`` and ``rpd_summary.csv``: deviation from the best total per instance
- ``fronts.csv``: spacing and front size ratios of the multiobjective runs
- ``manifest.json``: config hash, versions, derived seeds and cell errors
- ``tables/``: the inventory table used for each instance
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import platform
import statistics
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import GAConfig, Problem, run_nsga2, run_single_objective
from .instance import BENCHMARKS, DISTRIBUTIONS, Instance, bundled_instance_path, load_benchmark, load_instance
from .logistics import ConfigError, GeneratorProfile, InventoryTable, VehicleConfig, read_table, synth_inventory_table, write_table
from .metrics import MODES, RunRecord, front_stats, read_records, rpd_by_instance, spacing, write_records
from .solvers import SOLVER_NAMES, AcoParams, LocalSearchConfig, TabuConfig, make_solver

log = logging.getLogger(__name__)

OUTPUT_ENV = "EVITA_OUTPUT_DIR"
DEFAULT_OUTPUT = "results"
PROFILES = ("default", "smoke", "tiny", "claims", "full")


@dataclass(frozen=True)
class InstanceSpec:
    id: str
    source: str  # "benchmark", "bundled:<file>" or a path
    distribution: str = "unknown"
    table: str | None = None  # optional inventory table CSV

    def load(self) -> Instance:
        if self.source == "benchmark":
            return load_benchmark(self.id)
        if self.source.startswith("bundled:"):
            path = bundled_instance_path(self.source.split(":", 1)[1])
        else:
            path = Path(self.source)
        return load_instance(path, self.distribution, self.id)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    instances: tuple[InstanceSpec, ...] = ()
    solvers: tuple[str, ...] = SOLVER_NAMES
    modes: tuple[str, ...] = MODES
    runs_per_cell: int = 10
    master_seed: int = 0
    table_seed: int = 0
    generator: GeneratorProfile = field(default_factory=GeneratorProfile)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    ga: GAConfig = field(default_factory=GAConfig)
    aco: AcoParams = field(default_factory=AcoParams)
    tabu: TabuConfig = field(default_factory=TabuConfig)
    local_search: LocalSearchConfig = field(default_factory=LocalSearchConfig)
    output_dir: str | None = None

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")
        if not self.instances:
            raise ConfigError("no instances configured")
        ids = [s.id for s in self.instances]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate instance ids")
        for s in self.solvers:
            if s not in SOLVER_NAMES:
                raise ConfigError(f"unknown solver {s!r}")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}")
        for s in self.instances:
            if s.distribution not in DISTRIBUTIONS:
                raise ConfigError(f"unknown distribution {s.distribution!r}")
            if s.source not in ("benchmark",) and not s.source.startswith("bundled:") and not Path(s.source).exists():
                raise ConfigError(f"instance file {s.source} does not exist")
            if s.source == "benchmark" and s.id not in BENCHMARKS:
                raise ConfigError(f"{s.id} is not a bundled benchmark")
            if s.table is not None and not Path(s.table).exists():
                raise ConfigError(f"inventory table {s.table} does not exist")
        self.generator.validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


# -- config files ----------------------------------------------------------------

_SECTIONS = {
    "generator": GeneratorProfile,
    "vehicle": VehicleConfig,
    "ga": GAConfig,
    "aco": AcoParams,
    "tabu": TabuConfig,
    "local_search": LocalSearchConfig,
}


def _convert(cls, key: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    if key not in fields:
        raise ConfigError(f"unknown key {key!r} for [{cls.__name__}]")
    default = fields[key].default
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    return raw


def _section(cp, name, cls):
    if not cp.has_section(name):
        return cls()
    kwargs = {k: _convert(cls, k, v) for k, v in cp.items(name)}
    return cls(**kwargs)


def _split(raw: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in raw.split(",") if x.strip())


def parse_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from INI text. Relative paths resolve against ``base_dir``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    base = Path(base_dir)
    known = {"experiment", "instances", "tables", *_SECTIONS}
    for s in cp.sections():
        if s not in known:
            raise ConfigError(f"unknown section [{s}]")
    if not cp.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    ex = dict(cp.items("experiment"))

    tables = dict(cp.items("tables")) if cp.has_section("tables") else {}
    specs = []
    for iid, raw in (cp.items("instances") if cp.has_section("instances") else []):
        parts = _split(raw)
        if not parts:
            raise ConfigError(f"instance {iid} has no source")
        source = parts[0]
        if source == "benchmark":
            dist = parts[1] if len(parts) > 1 else BENCHMARKS[iid].distribution if iid in BENCHMARKS else "unknown"
        else:
            if not source.startswith("bundled:"):
                source = str(base / source)
            dist = parts[1] if len(parts) > 1 else "unknown"
        table = tables.pop(iid, None)
        specs.append(InstanceSpec(iid, source, dist, str(base / table) if table else None))
    if tables:
        raise ConfigError(f"tables given for unknown instances: {sorted(tables)}")

    ga = _section(cp, "ga", GAConfig)
    if "generations" in ex:
        ga = dataclasses.replace(ga, generations=int(ex.pop("generations")))
    try:
        cfg = ExperimentConfig(
            name=ex.pop("name", "experiment"),
            instances=tuple(specs),
            solvers=_split(ex.pop("solvers", ",".join(SOLVER_NAMES))),
            modes=_split(ex.pop("modes", ",".join(MODES))),
            runs_per_cell=int(ex.pop("runs_per_cell", 10)),
            master_seed=int(ex.pop("master_seed", 0)),
            table_seed=int(ex.pop("table_seed", 0)),
            generator=_section(cp, "generator", GeneratorProfile),
            vehicle=_section(cp, "vehicle", VehicleConfig),
            ga=ga,
            aco=_section(cp, "aco", AcoParams),
            tabu=_section(cp, "tabu", TabuConfig),
            local_search=_section(cp, "local_search", LocalSearchConfig),
            output_dir=ex.pop("output_dir", None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if ex:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(ex)}")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


def profile_text(name: str) -> str:
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}; expected one of {PROFILES}")
    return resources.files("evita").joinpath("data", "configs", f"{name}.ini").read_text()


def load_profile(name: str) -> ExperimentConfig:
    return parse_config(profile_text(name))


# -- seeds and tables -----------------------------------------------------------------


def _hash_int(*parts) -> int:
    key = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def run_seed(master_seed: int, instance_id: str, solver: str, mode: str, run: int) -> int:
    """First 8 bytes (big endian) of sha256 over ``"master|instance|solver|mode|run"``."""
    return _hash_int(master_seed, instance_id, solver, mode, run)


def canonical_table(instance_id: str, n_shops: int, table_seed: int = 0,
                    profile: GeneratorProfile = GeneratorProfile()) -> InventoryTable:
    """The seeded synthetic inventory table used for ``instance_id`` unless a file is given."""
    return synth_inventory_table(_hash_int("table", table_seed, instance_id), n_shops, profile)


def build_problem(cfg: ExperimentConfig, spec: InstanceSpec) -> Problem:
    inst = spec.load()
    if spec.table is not None:
        table = read_table(spec.table)
    else:
        table = canonical_table(spec.id, inst.n_shops, cfg.table_seed, cfg.generator)
    return Problem(inst, table, cfg.vehicle)


# -- running ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    instance: str
    solver: str
    mode: str
    run: int
    seed: int


def cells(cfg: ExperimentConfig) -> list[Cell]:
    return [
        Cell(spec.id, solver, mode, run, run_seed(cfg.master_seed, spec.id, solver, mode, run))
        for spec in cfg.instances
        for solver in cfg.solvers
        for mode in cfg.modes
        for run in range(cfg.runs_per_cell)
    ]


@dataclass
class CellResult:
    cell: Cell
    record: RunRecord | None = None
    history: list[dict] = field(default_factory=list)
    stats: dict | None = None
    error: str | None = None


_PROBLEMS: dict = {}


def _problem(cfg: ExperimentConfig, spec: InstanceSpec) -> Problem:
    key = (cfg.digest(), spec)
    if key not in _PROBLEMS:
        _PROBLEMS[key] = build_problem(cfg, spec)
    return _PROBLEMS[key]


def run_cell(cfg: ExperimentConfig, cell: Cell) -> CellResult:
    try:
        spec = next(s for s in cfg.instances if s.id == cell.instance)
        problem = _problem(cfg, spec)
        solver = make_solver(cell.solver, cfg.local_search, cfg.aco, cfg.tabu)
        t0 = time.perf_counter()
        if cell.mode == "single":
            res = run_single_objective(problem, solver, cfg.ga, cell.seed)
        else:
            res = run_nsga2(problem, solver, cfg.ga, cell.seed)
        wall = time.perf_counter() - t0
        front = None
        stats = None
        if cell.mode == "multi":
            front = tuple(sorted({r.costs.objectives for r in res.front}))
            distinct, size, ratio = front_stats([(c, k.objectives) for c, k in res.population])
            sp = spacing(front) if len(front) >= 2 else None
            stats = {"distinct": distinct, "front_size": size, "ratio": ratio, "spacing": sp,
                     "front_points": len(front), "front_members": len(res.front)}
        rec = RunRecord(cell.instance, cell.solver, cell.mode, cell.seed,
                        res.best_cost.inventory, res.best_cost.transport, wall, front)
        return CellResult(cell, rec, res.history, stats)
    except Exception as exc:  # recorded in the manifest, other cells keep going
        log.error("cell %s failed: %s", cell, exc)
        return CellResult(cell, error="".join(traceback.format_exception_only(type(exc), exc)).strip())


def _run_cell_job(args):
    return run_cell(*args)


def resolve_output(cfg: ExperimentConfig, output: str | Path | None = None) -> Path:
    if output is not None:
        return Path(output)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT)) / cfg.name


def run_experiment(cfg: ExperimentConfig, output: str | Path | None = None, workers: int = 1) -> Path:
    """Run every cell of ``cfg`` and write the result directory. Returns its path."""
    out = resolve_output(cfg, output)
    out.mkdir(parents=True, exist_ok=True)
    todo = cells(cfg)
    log.info("%d cells -> %s (%d workers)", len(todo), out, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_job, [(cfg, c) for c in todo]))
    else:
        results = []
        for k, c in enumerate(todo, 1):
            results.append(run_cell(cfg, c))
            log.info("[%d/%d] %s %s %s run %d done", k, len(todo), c.instance, c.solver, c.mode, c.run)
    _write_results(cfg, out, results)
    return out


def _write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    path.write_text(buf.getvalue())


def _write_results(cfg: ExperimentConfig, out: Path, results: list[CellResult]) -> None:
    records = [r.record for r in results if r.record is not None]
    write_records(out / "runs.csv", records)

    hist = []
    for r in results:
        for h in r.history:
            hist.append({"instance": r.cell.instance, "solver": r.cell.solver, "mode": r.cell.mode,
                         "seed": r.cell.seed, "front_size": "", **h})
    _write_csv(out / "history.csv", hist,
               ["instance", "solver", "mode", "seed", "generation", "best_so_far",
                "generation_best", "median", "front_size"])

    fronts = [{"instance": r.cell.instance, "solver": r.cell.solver, "seed": r.cell.seed, **r.stats}
              for r in results if r.stats is not None]
    _write_csv(out / "fronts.csv", fronts,
               ["instance", "solver", "seed", "distinct", "front_size", "ratio", "spacing",
                "front_points", "front_members"])

    write_summaries(out, records)

    tables = out / "tables"
    tables.mkdir(exist_ok=True)
    for spec in cfg.instances:
        try:
            write_table(_problem(cfg, spec).table, tables / f"{spec.id}.csv")
        except Exception as exc:
            log.error("could not write table for %s: %s", spec.id, exc)

    errors = [{**dataclasses.asdict(r.cell), "error": r.error} for r in results if r.error]
    manifest = {
        "name": cfg.name,
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed_derivation": "sha256('master|instance|solver|mode|run')[:8], big endian",
        "instances": {s.id: s.distribution for s in cfg.instances},
        "cells": [dataclasses.asdict(r.cell) for r in results],
        "n_cells": len(results),
        "n_failed": len(errors),
        "errors": errors,
        "notes": ["duplicate cost points are collapsed before computing spacing"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def write_summaries(out: Path, records: list[RunRecord]) -> None:
    """``rpd.csv`` per run and ``rpd_summary.csv`` per instance x solver x mode."""
    rows = rpd_by_instance(records) if records else []
    _write_csv(out / "rpd.csv", rows, ["instance", "solver", "mode", "seed", "total_eur", "rpd"])
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["instance"], r["solver"], r["mode"]), []).append(r)
    summary = []
    for (inst, solver, mode), g in groups.items():
        rp = [x["rpd"] for x in g]
        tot = [x["total_eur"] for x in g]
        summary.append({"instance": inst, "solver": solver, "mode": mode, "runs": len(g),
                        "median_total": statistics.median(tot), "min_total": min(tot),
                        "median_rpd": statistics.median(rp), "mean_rpd": statistics.fmean(rp),
                        "max_rpd": max(rp)})
    _write_csv(out / "rpd_summary.csv", summary,
               ["instance", "solver", "mode", "runs", "median_total", "min_total",
                "median_rpd", "mean_rpd", "max_rpd"])


# -- plot data ------------------------------------------------------------------------------


def emit_plot_data(result_dir: str | Path) -> list[str]:
    """Write plot-ready CSVs under ``<result_dir>/plots``. Returns warnings."""
    root = Path(result_dir)
    records = read_records(root / "runs.csv")
    manifest_path = root / "manifest.json"
    warnings: list[str] = []
    tags: dict[str, str] = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        tags = manifest.get("instances", {})
        if manifest.get("n_failed"):
            warnings.append(f"{manifest['n_failed']} cells failed; plot data is partial")
    else:
        warnings.append("manifest.json missing; distribution tags unknown")
    plots = root / "plots"
    plots.mkdir(exist_ok=True)

    by_inst: dict[str, list[RunRecord]] = {}
    for r in records:
        by_inst.setdefault(r.instance, []).append(r)
    for inst, recs in by_inst.items():
        _write_csv(plots / f"boxplot_{inst}.csv",
                   [{"group": f"{r.solver}-{r.mode}", "seed": r.seed, "total_eur": r.total} for r in recs],
                   ["group", "seed", "total_eur"])
        counts: dict[str, int] = {}
        for r in recs:
            counts[f"{r.solver}-{r.mode}"] = counts.get(f"{r.solver}-{r.mode}", 0) + 1
        if len(set(counts.values())) > 1:
            warnings.append(f"{inst}: unequal group sizes {counts}")
        scatter = [{"solver": r.solver, "seed": r.seed, "inventory_eur": fi, "transport_eur": ft}
                   for r in recs if r.front for fi, ft in r.front]
        if scatter:
            _write_csv(plots / f"pareto_{inst}.csv", scatter,
                       ["solver", "seed", "inventory_eur", "transport_eur"])

    rows = rpd_by_instance(records) if records else []
    for r in rows:
        r["distribution"] = tags.get(r["instance"], "unknown")
        if r["instance"] not in tags:
            warnings.append(f"no distribution tag for {r['instance']}")
    rows.sort(key=lambda r: r["distribution"])
    _write_csv(plots / "rpd_by_distribution.csv", rows,
               ["distribution", "instance", "solver", "mode", "seed", "total_eur", "rpd"])
    _write_csv(plots / "cost_split.csv",
               [{"instance": r.instance, "solver": r.solver, "mode": r.mode, "seed": r.seed,
                 "inventory_eur": r.inventory, "transport_eur": r.transport} for r in records],
               ["instance", "solver", "mode", "seed", "inventory_eur", "transport_eur"])
    for w in dict.fromkeys(warnings):
        log.warning(w)
    return list(dict.fromkeys(warnings))


def recompute_metrics(result_dir: str | Path) -> list[str]:
    """Rebuild RPD summaries and plot data from ``runs.csv`` alone."""
    root = Path(result_dir)
    write_summaries(root, read_records(root / "runs.csv"))
    return emit_plot_data(root)
