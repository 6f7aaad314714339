"""Geographic problem instances: parsing, distances and characterization.

Only the spatial layout of a benchmark file is used. Demands, capacities and
vehicle counts present in the file are read past and discarded, because
delivery sizes come from the inventory table instead.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

DISTRIBUTIONS = ("uniform", "clusters", "unknown")


@dataclass(frozen=True)
class Benchmark:
    id: str
    filename: str
    distribution: str
    n_shops: int
    eccentricity: float


# Published layouts with their family-assigned distribution tag and the
# tabulated shop count / eccentricity.
BENCHMARKS = {
    b.id: b
    for b in (
        Benchmark("A32", "A-n32-k5.vrp", "uniform", 31, 47.4),
        Benchmark("A33", "A-n33-k5.vrp", "uniform", 32, 20.2),
        Benchmark("A69", "A-n69-k9.vrp", "uniform", 68, 15.3),
        Benchmark("A80", "A-n80-k10.vrp", "uniform", 79, 63.4),
        Benchmark("B35", "B-n35-k5.vrp", "clusters", 34, 60.5),
        Benchmark("B45", "B-n45-k5.vrp", "clusters", 44, 16.6),
        Benchmark("B67", "B-n67-k10.vrp", "clusters", 66, 19.9),
        Benchmark("B68", "B-n68-k9.vrp", "clusters", 67, 49.2),
        Benchmark("P100", "P-n101-k4.vrp", "uniform", 100, 1.59),
        Benchmark("X200", "c1_2_1.txt", "clusters", 200, 8.15),
    )
}


class InstanceParseError(ValueError):
    """Raised when an instance file is malformed."""

    def __init__(self, message: str, lineno: int | None = None, line: str | None = None):
        where = f"line {lineno}: " if lineno is not None else ""
        text = f" ({line.strip()!r})" if line is not None else ""
        super().__init__(f"{where}{message}{text}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Instance:
    """Depot plus shops on a plane; coordinates are read as km.

    ``points[0]`` is always the depot, shops follow in file order, so shop
    ``k`` (1-based) is ``points[k]``.
    """

    id: str
    points: np.ndarray
    distribution: str = "unknown"
    node_labels: tuple[int, ...] = ()
    depot_index: int = field(default=0, init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ValueError("points must be a non-empty (n, 2) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution tag {self.distribution!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not self.node_labels:
            object.__setattr__(self, "node_labels", tuple(range(1, len(pts) + 1)))
        elif len(self.node_labels) != len(pts):
            raise ValueError("node_labels must match points")

    @property
    def n_shops(self) -> int:
        return len(self.points) - 1

    def with_distribution(self, distribution: str) -> Instance:
        return Instance(self.id, self.points, distribution, self.node_labels)


def _split_header(line: str) -> tuple[str, str] | None:
    if ":" not in line:
        return None
    key, _, value = line.partition(":")
    return key.strip().upper(), value.strip()


def parse_vrp_instance(text: str, distribution: str = "unknown") -> Instance:
    """Parse TSPLIB-style CVRP text (NAME, DIMENSION, NODE_COORD_SECTION, DEPOT_SECTION)."""
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    order: list[int] = []
    depots: list[int] = []
    section = None
    dim_line = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        token = line.split()[0].upper()
        if token == "EOF":
            break
        if token.endswith("_SECTION"):
            section = token
            continue
        if section is None:
            kv = _split_header(line)
            if kv is None:
                raise InstanceParseError("malformed header line", lineno, raw)
            header[kv[0]] = kv[1]
            if kv[0] == "DIMENSION":
                dim_line = lineno
            continue
        parts = line.split()
        if section == "NODE_COORD_SECTION":
            if len(parts) < 3:
                raise InstanceParseError("coordinate line needs index, x, y", lineno, raw)
            try:
                node, x, y = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                raise InstanceParseError("non-numeric coordinate entry", lineno, raw) from None
            if node in coords:
                raise InstanceParseError(f"duplicate node {node}", lineno, raw)
            coords[node] = (x, y)
            order.append(node)
        elif section == "DEPOT_SECTION":
            for p in parts:
                try:
                    v = int(p)
                except ValueError:
                    raise InstanceParseError("non-integer depot entry", lineno, raw) from None
                if v == -1:
                    section = "DEPOT_DONE"
                    break
                depots.append(v)
        # DEMAND_SECTION and anything else is ignored on purpose

    if "DIMENSION" not in header:
        raise InstanceParseError("missing DIMENSION header")
    try:
        dimension = int(header["DIMENSION"])
    except ValueError:
        raise InstanceParseError("DIMENSION is not an integer", dim_line) from None
    if not coords:
        raise InstanceParseError("missing NODE_COORD_SECTION")
    if len(coords) != dimension:
        raise InstanceParseError(
            f"DIMENSION {dimension} but {len(coords)} coordinates given", dim_line
        )
    if len(depots) != 1:
        raise InstanceParseError(f"expected exactly one depot, found {len(depots)}")
    depot = depots[0]
    if depot not in coords:
        raise InstanceParseError(f"depot {depot} has no coordinates")

    labels = [depot] + [n for n in order if n != depot]
    points = [coords[n] for n in labels]
    name = header.get("NAME", "instance")
    return Instance(name, np.array(points), distribution, tuple(labels))


def parse_solomon_instance(text: str, distribution: str = "unknown") -> Instance:
    """Parse the whitespace-table layout used by Solomon/Homberger files.

    The first customer row (number 0) is the depot. Time windows are ignored.
    """
    lines = text.splitlines()
    name = next((l.strip() for l in lines if l.strip()), "instance")
    start = None
    for i, line in enumerate(lines):
        if line.strip().upper().startswith("CUST"):
            start = i + 1
    if start is None:
        raise InstanceParseError("missing customer table header")
    labels: list[int] = []
    points: list[tuple[float, float]] = []
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) < 3:
            raise InstanceParseError("customer row needs number, x, y", lineno, raw)
        try:
            labels.append(int(parts[0]))
            points.append((float(parts[1]), float(parts[2])))
        except ValueError:
            raise InstanceParseError("non-numeric customer row", lineno, raw) from None
    if not points:
        raise InstanceParseError("missing customer rows")
    return Instance(name, np.array(points), distribution, tuple(labels))


def load_instance(path: str | Path, distribution: str = "unknown", id: str | None = None) -> Instance:
    """Read a ``.vrp`` (TSPLIB) or ``.txt`` (Solomon-style) file."""
    path = Path(path)
    text = path.read_text()
    if "NODE_COORD_SECTION" in text.upper():
        inst = parse_vrp_instance(text, distribution)
    else:
        inst = parse_solomon_instance(text, distribution)
    if id is not None:
        inst = Instance(id, inst.points, inst.distribution, inst.node_labels)
    return inst


def bundled_instance_path(filename: str) -> Path:
    return Path(str(resources.files("evita") / "data" / "instances" / filename))


def load_benchmark(id: str) -> Instance:
    """Load one of the bundled published layouts by short id (e.g. ``"A32"``)."""
    b = BENCHMARKS[id]
    return load_instance(bundled_instance_path(b.filename), b.distribution, id=b.id)


def format_vrp(instance: Instance) -> str:
    """Serialize coordinates back to TSPLIB layout; ``repr`` keeps floats exact."""
    out = io.StringIO()
    out.write(f"NAME : {instance.id}\nTYPE : CVRP\nDIMENSION : {len(instance.points)}\n")
    out.write("EDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n")
    for label, (x, y) in zip(instance.node_labels, instance.points):
        out.write(f"{label} {float(x)!r} {float(y)!r}\n")
    out.write(f"DEPOT_SECTION\n{instance.node_labels[0]}\n-1\nEOF\n")
    return out.getvalue()


def distance_matrix(instance: Instance) -> np.ndarray:
    """Unrounded Euclidean distances in km, read-only, depot at index 0."""
    pts = instance.points
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    d = (d + d.T) / 2.0  # exact symmetry
    np.fill_diagonal(d, 0.0)
    d.setflags(write=False)
    return d


def eccentricity(instance: Instance) -> float:
    """Distance from the depot to the mean position of the shops (depot excluded)."""
    if instance.n_shops < 1:
        raise ValueError("eccentricity needs at least one shop")
    centre = instance.points[1:].mean(axis=0)
    depot = instance.points[0]
    return math.hypot(centre[0] - depot[0], centre[1] - depot[1])


SUMMARY_FIELDS = ("id", "n_shops", "eccentricity", "distribution")


def summary_row(instance: Instance) -> dict:
    return {
        "id": instance.id,
        "n_shops": instance.n_shops,
        "eccentricity": eccentricity(instance),
        "distribution": instance.distribution,
    }


def summary_csv(instance: Instance, header: bool = True) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    if header:
        writer.writeheader()
    writer.writerow(summary_row(instance))
    return out.getvalue()
