"""Run the randomized inequality suites and print a one-line summary per suite.

    python3 scripts/lemma_suites.py --trials 1000 --seed 7 --workers 4
"""

import argparse
import time

from persistflow.suites import run_all


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    t = time.perf_counter()
    results = run_all(args.trials, args.seed, args.workers)
    for r in results:
        print(f"{r.lemma}: {r.checks:7d} checks, {r.violations} violations, worst margin {r.worst_margin:.3e}")
    print(f"{time.perf_counter() - t:.1f}s")
    raise SystemExit(0 if all(r.ok for r in results) else 2)


if __name__ == "__main__":
    main()
