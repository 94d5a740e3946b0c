"""Command-line entry points.

    qsf run <config.json> [--workers K] [--output-dir DIR]
    qsf trace <config.json> --q V --beta V --trial K [--out PATH] [--full]
    qsf verify-kernel --q V --betas B1,B2,... [--out PATH]
    qsf qgauss verify --q Q1,Q2,... --beta B1,B2,... [--dims 1,2]
    qsf summarize <results-dir>

Exit status is nonzero whenever a requested self-check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
from scipy import stats

from . import harness, qgauss, sfgrad
from .errors import QsfError
from .quadrature import radial_integral
from .rng import RngStream


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    out_dir = args.output_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    result = harness.run_experiment(cfg, workers=args.workers)
    harness.write_sweep_csv(result, os.path.join(out_dir, "sweep.csv"))
    harness.write_timings_csv(result, os.path.join(out_dir, "timings.csv"))
    harness.summarize(result, out_dir)
    # Self-check: the summary cells must recompute exactly from the records.
    for q in cfg.q_values:
        for b in cfg.beta_values:
            vals = [r.final_distance for r in result.cell_records(q, b) if not r.diverged]
            if vals and not math.isclose(
                result.cell_mean(q, b), float(np.mean(vals)), rel_tol=0.0, abs_tol=0.0
            ):
                print("self-check failed: summary mean mismatch", file=sys.stderr)
                return 1
    print(f"wrote {out_dir}/sweep.csv, summary.csv, summary_stderr.csv, timings.csv")
    return 0


def _cmd_trace(args) -> int:
    cfg = harness.load_config(args.config)
    trace = harness.trace_run(cfg, args.q, args.beta, args.trial)
    out = args.out or f"trace_q{args.q:g}_beta{args.beta:g}_trial{args.trial}.csv"
    harness.emit_trace(trace, out, cfg.network.theta_target)
    if args.full:
        root, ext = os.path.splitext(out)
        harness.write_full_trace(trace, root + "_full" + ext, cfg.network.theta_target)
    print(f"wrote {out}")
    return 0


def _cmd_verify_kernel(args) -> int:
    report = sfgrad.verify_kernel_properties(args.q, _floats(args.betas))
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if report.passed else 1


def _qgauss_invariants(q: float, beta: float, dims: list[int], rng: RngStream) -> list[tuple[str, bool, str]]:
    checks = []
    for dim in dims:
        label = f"q={q:g} beta={beta:g} dim={dim}"
        if q > 1.0 and q >= qgauss.max_normalizable_q(dim):
            checks.append((f"normalization {label}", True, "skipped: density not integrable"))
            continue
        r_max = qgauss.cutoff_radius(q, beta) if q < 1.0 else math.inf
        center = qgauss.QGaussianSpec(q, beta, dim)
        mass = radial_integral(
            lambda r: qgauss.pdf(np.concatenate([[r], np.zeros(dim - 1)]), center), dim, r_max
        )
        checks.append((f"normalization {label}", abs(mass - 1.0) < 1e-6, f"mass={mass:.9f}"))
    # scale identity against the standard density
    spec_b = qgauss.QGaussianSpec(q, beta, 1)
    std = qgauss.QGaussianSpec(q, 1.0, 1)
    zs = np.linspace(-0.9, 0.9, 9) * (qgauss.cutoff_radius(q) if q < 1 else 4.0)
    worst = max(
        abs(qgauss.pdf(beta * z, spec_b) - qgauss.pdf(z, std) / beta)
        / max(qgauss.pdf(z, std) / beta, 1e-300)
        for z in zs
    )
    checks.append((f"scale-identity q={q:g} beta={beta:g}", worst < 1e-12, f"rel={worst:.2e}"))
    # sampler distribution smoke test
    draws = qgauss.sample_batch(rng.child("ks", str(q), str(beta)), q, 20000)
    ks = stats.kstest(draws, qgauss.quadrature_cdf(std, panels=2048))
    checks.append((f"sampler-ks q={q:g}", ks.pvalue > 0.01, f"D={ks.statistic:.5f} p={ks.pvalue:.4f}"))
    if q < 1.0:
        viol = int(np.sum(np.abs(draws) >= qgauss.cutoff_radius(q)))
        checks.append((f"cutoff q={q:g}", viol == 0, f"violations={viol}"))
    return checks


def _cmd_qgauss_verify(args) -> int:
    rng = RngStream(args.seed)
    dims = [int(d) for d in args.dims.split(",")]
    failures = 0
    for q in _floats(args.q):
        for beta in _floats(args.beta):
            for name, ok, detail in _qgauss_invariants(q, beta, dims, rng):
                print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
                failures += 0 if ok else 1
    return 0 if failures == 0 else 1


def _cmd_summarize(args) -> int:
    sweep_path = os.path.join(args.results_dir, "sweep.csv")
    result = harness.read_sweep_csv(sweep_path)
    table = harness.summarize(result, args.results_dir)
    for row in table:
        print(",".join(row))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qsf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full (q, beta, trial) sweep")
    p_run.add_argument("config")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--output-dir", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_trace = sub.add_parser("trace", help="run one cell and write its distance curve")
    p_trace.add_argument("config")
    p_trace.add_argument("--q", type=float, required=True)
    p_trace.add_argument("--beta", type=float, required=True)
    p_trace.add_argument("--trial", type=int, default=0)
    p_trace.add_argument("--out", default=None)
    p_trace.add_argument("--full", action="store_true", help="also write the full state trace")
    p_trace.set_defaults(func=_cmd_trace)

    p_vk = sub.add_parser("verify-kernel", help="emit the kernel-property report as JSON")
    p_vk.add_argument("--q", type=float, required=True)
    p_vk.add_argument("--betas", required=True, help="comma-separated decreasing list")
    p_vk.add_argument("--out", default=None)
    p_vk.set_defaults(func=_cmd_verify_kernel)

    p_qg = sub.add_parser("qgauss", help="distribution self-tests")
    qg_sub = p_qg.add_subparsers(dest="qgauss_command", required=True)
    p_qgv = qg_sub.add_parser("verify", help="run the distribution invariant suite")
    p_qgv.add_argument("--q", required=True, help="comma-separated entropic indices")
    p_qgv.add_argument("--beta", default="1.0", help="comma-separated widths")
    p_qgv.add_argument("--dims", default="1,2")
    p_qgv.add_argument("--seed", type=int, default=7)
    p_qgv.set_defaults(func=_cmd_qgauss_verify)

    p_sum = sub.add_parser("summarize", help="rebuild summary tables from sweep.csv")
    p_sum.add_argument("results_dir")
    p_sum.set_defaults(func=_cmd_summarize)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QsfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
