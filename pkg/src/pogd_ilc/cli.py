"""Command line front end: run, sweep, compare-adaptive, check-bounds."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import (
    ConfigError,
    DEFAULT_SWEEP_DECAYS,
    ExperimentConfig,
    check_bounds,
    compare_adaptive,
    format_bounds_report,
    run_experiment,
    sweep_step_sizes,
)
from .regret import average_dynamic_regret, dynamic_regret, static_regret


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    return replace(config, **overrides) if overrides else config


def _summarize(trace, label):
    t = trace.horizon
    jd = float(dynamic_regret(trace, t))
    js = float(static_regret(trace, t))
    print(f"{label}: T = {t}, dynamic regret = {jd:.6g}, "
          f"static regret = {js:.6g}, "
          f"final tracking rms = {trace.tracking_rms[-1]:.6g}")


def cmd_run(args):
    config = _load_config(args)
    trace = run_experiment(config, out_dir=args.out_dir)
    _summarize(trace, config.label)
    averages = average_dynamic_regret(trace, trace.horizon)
    print(f"average dynamic regret = {averages['average']:.6g} "
          f"(drift-free {averages['drift_free_average']:.6g})")
    if args.out_dir:
        print(f"wrote {args.out_dir}/{config.label}.csv")
    return 0


def cmd_sweep(args):
    config = _load_config(args)
    decays = [float(tok) for tok in args.c.split(",") if tok.strip() != ""]
    if not decays:
        raise ConfigError("--c needs at least one decay value")
    traces = sweep_step_sizes(config, decays, out_dir=args.out_dir)
    for c, trace in traces.items():
        _summarize(trace, f"{config.label} c={c:g}")
    return 0


def cmd_compare_adaptive(args):
    config = _load_config(args)
    adaptive_trace, nonadaptive_trace = compare_adaptive(
        config, out_dir=args.out_dir)
    _summarize(adaptive_trace, "adaptive")
    _summarize(nonadaptive_trace, "non-adaptive")
    return 0


def cmd_check_bounds(args):
    config = _load_config(args)
    report = check_bounds(config)
    print(format_bounds_report(report))
    return 0 if report["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pogd-ilc",
        description="Preconditioned online gradient descent for iterative "
                    "learning control: simulation runs, step-decay sweeps, "
                    "and bound certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to a flat JSON config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--iterations", type=int, default=None,
                       help="override the trial count T")
        p.add_argument("--out-dir", default=None,
                       help="write CSV traces and metadata here")

    p_run = sub.add_parser("run", help="simulate one configured run")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="one run per step-decay value")
    common(p_sweep)
    p_sweep.add_argument(
        "--c", default=",".join(f"{c:g}" for c in DEFAULT_SWEEP_DECAYS),
        help="comma-separated decay exponents (default %(default)s)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser(
        "compare-adaptive",
        help="matched-seed adaptive vs non-adaptive pair")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare_adaptive)

    p_chk = sub.add_parser(
        "check-bounds",
        help="verify the contraction hypotheses without running")
    common(p_chk)
    p_chk.set_defaults(func=cmd_check_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
