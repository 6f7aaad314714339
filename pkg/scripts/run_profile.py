"""Run a bundled profile (or an INI file) and print the RPD summary.

    python scripts/run_profile.py smoke
    python scripts/run_profile.py my.ini --workers 4 --output /tmp/out
"""
import argparse
import time
from pathlib import Path

from evita.harness import PROFILES, emit_plot_data, load_config, load_profile, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("profile", help=f"one of {', '.join(PROFILES)} or a path to an INI file")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output")
    args = ap.parse_args()
    cfg = load_profile(args.profile) if args.profile in PROFILES else load_config(args.profile)
    t0 = time.perf_counter()
    out = run_experiment(cfg, args.output, workers=args.workers)
    for w in emit_plot_data(out):
        print("warning:", w)
    print(f"{out} written in {time.perf_counter() - t0:.1f}s")
    print(Path(out, "rpd_summary.csv").read_text())


if __name__ == "__main__":
    main()
