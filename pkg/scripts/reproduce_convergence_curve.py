#!/usr/bin/env python3
"""Write distance-to-target convergence curves for several q at a fixed beta.

Produces one plot-ready CSV per q (columns n,distance_to_target), mirroring
the benchmark's convergence-behavior figure at beta = 0.25.

    python scripts/reproduce_convergence_curve.py --q 0.5 0.9 1.0 1.5 --beta 0.25
"""

import argparse
import os
import sys
import time

from qsf.harness import ExperimentConfig, OptimizerSettings, emit_trace, trace_run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[0.5, 0.9, 1.0, 1.5])
    ap.add_argument("--beta", type=float, default=0.25)
    ap.add_argument("--trial", type=int, default=0)
    ap.add_argument("--iterations", type=int, default=10000)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--out", default="results/curves")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        q_values=tuple(args.q),
        beta_values=(args.beta,),
        trials=args.trial + 1,
        optimizer=OptimizerSettings(
            num_iterations=args.iterations, samples_per_iteration=args.samples
        ),
        base_seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    for q in args.q:
        t0 = time.time()
        trace = trace_run(cfg, q, args.beta, args.trial)
        path = os.path.join(args.out, f"trace_q{q:g}_beta{args.beta:g}_trial{args.trial}.csv")
        emit_trace(trace, path, cfg.network.theta_target)
        d = trace.distances(cfg.network.theta_target)
        print(f"q={q:g}: distance {d[0]:.2f} -> {d[-1]:.2f} in {time.time() - t0:.1f}s ({path})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
