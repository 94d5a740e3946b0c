#!/usr/bin/env python3
"""Run one or more full-scale benchmark cells and print the summary table.

Defaults reproduce the headline comparison: 20 trials of M=10000 outer
iterations (L=100 events each) for q in {0.9, 1.0} at beta = 0.25, reporting
the mean final distance to the service-time target.

    python scripts/run_benchmark_cell.py --q 0.9 1.0 --beta 0.25 --trials 20
"""

import argparse
import os
import sys
import time

from qsf.harness import (
    ExperimentConfig,
    OptimizerSettings,
    run_experiment,
    summarize,
    write_sweep_csv,
    write_timings_csv,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[0.9, 1.0])
    ap.add_argument("--beta", type=float, nargs="+", default=[0.25])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--iterations", type=int, default=10000)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        q_values=tuple(args.q),
        beta_values=tuple(args.beta),
        trials=args.trials,
        optimizer=OptimizerSettings(
            num_iterations=args.iterations, samples_per_iteration=args.samples
        ),
        base_seed=args.seed,
        output_dir=args.out,
    )
    t0 = time.time()
    result = run_experiment(cfg, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    write_sweep_csv(result, os.path.join(args.out, "sweep.csv"))
    write_timings_csv(result, os.path.join(args.out, "timings.csv"))
    table = summarize(result, args.out)
    for row in table:
        print(",".join(row))
    print(f"\n{len(result.records)} trials in {time.time() - t0:.1f}s -> {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
