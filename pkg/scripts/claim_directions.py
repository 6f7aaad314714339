"""Summarise direction checks from a finished result directory.

    python scripts/claim_directions.py results/claims

(a) single-objective median total <= multi-objective median total, per solver
(b) CWLS median walltime under a tenth of ACO and of CWTS
(c) ACO median total no better than CWLS and CWTS
"""
import argparse
import statistics
import sys
from pathlib import Path

from evita.metrics import read_records

SOLVERS = ("CWLS", "ACO", "CWTS")


def median(recs, attr, **kw):
    vals = [getattr(r, attr) for r in recs if all(getattr(r, k) == v for k, v in kw.items())]
    return statistics.median(vals) if vals else float("nan")


def directions(recs):
    out = []
    for inst in sorted({r.instance for r in recs}):
        for s in SOLVERS:
            a, b = median(recs, "total", instance=inst, solver=s, mode="single"), median(
                recs, "total", instance=inst, solver=s, mode="multi")
            out.append((inst, "a", f"{s} single {a:.1f} vs multi {b:.1f}", a <= b))
        t = {s: median(recs, "walltime", instance=inst, solver=s) for s in SOLVERS}
        out.append((inst, "b", f"walltime CWLS {t['CWLS']:.2f}s ACO {t['ACO']:.2f}s CWTS {t['CWTS']:.2f}s",
                    t["CWLS"] < t["ACO"] / 10 and t["CWLS"] < t["CWTS"] / 10))
        c = {s: median(recs, "total", instance=inst, solver=s) for s in SOLVERS}
        out.append((inst, "c", f"total ACO {c['ACO']:.1f} CWLS {c['CWLS']:.1f} CWTS {c['CWTS']:.1f}",
                    c["ACO"] >= c["CWLS"] and c["ACO"] >= c["CWTS"]))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("result_dir", type=Path)
    args = ap.parse_args()
    rows = directions(read_records(args.result_dir / "runs.csv"))
    for inst, tag, text, ok in rows:
        print(f"{inst} ({tag}) {'ok  ' if ok else 'MISS'} {text}")
    return 0 if all(r[3] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
