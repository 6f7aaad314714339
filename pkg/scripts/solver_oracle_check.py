"""Compare CW, CWLS, CWTS and ACO with exhaustive routing on random micro instances."""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import exact_vrp, random_micro_instance  # noqa: E402

from evita.instance import distance_matrix  # noqa: E402
from evita.logistics import VehicleConfig  # noqa: E402
from evita.solvers import make_solver  # noqa: E402

NAMES = ("CW", "CWLS", "CWTS", "ACO")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--scale", type=float, nargs="+", default=[100.0, 160.0])
    args = ap.parse_args()
    vc = VehicleConfig()
    hits = dict.fromkeys(NAMES, 0)
    gaps = {k: [] for k in NAMES}
    total = 0
    for scale in args.scale:
        for k in range(args.count):
            rng = np.random.default_rng([3, int(scale), k])
            n = int(rng.integers(3, 7))
            inst, dem = random_micro_instance(rng, n, scale)
            D = distance_matrix(inst)
            shops = list(range(1, n + 1))
            opt, _ = exact_vrp(shops, dem, D, vc)
            for name in NAMES:
                d = make_solver(name)(shops, dem, D, vc, np.random.default_rng(k)).total_distance
                hits[name] += abs(d - opt) <= 1e-6
                gaps[name].append((d - opt) / opt * 100 if opt else 0.0)
            total += 1
    print(f"{total} instances")
    for name in NAMES:
        print(f"{name:5s} optimal {hits[name]:3d}/{total}  mean gap {np.mean(gaps[name]):.3f}%  "
              f"max gap {np.max(gaps[name]):.3f}%")


if __name__ == "__main__":
    main()
