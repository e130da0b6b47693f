"""``rsamp`` command-line driver.

Exit status: 0 on success, 2 for invalid configuration or arguments,
3 when a sampler degenerates (too many invalid draws, an infeasible
tolerance schedule, or no positive weight).
"""
import argparse
import sys
from pathlib import Path

from . import experiments as ex
from .exceptions import (
    ConfigError,
    DegenerateSampleError,
    DimensionError,
    NotSamplableError,
    SamplerDegeneracyError,
    ScheduleInfeasibleError,
)


def _add_common(p, out_default):
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, help="worker threads; never changes results")
    p.add_argument("--out-dir", default=None, help=f"output directory (default {out_default})")


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def build_parser():
    parser = argparse.ArgumentParser(prog="rsamp", description="Reverse sampler and ABC posterior sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configured sampler")
    p.add_argument("--config", required=True, help="key = value configuration file")
    _add_common(p, "output.dir from the config")
    p.add_argument("--method", choices=ex.METHODS)
    p.add_argument("--B", type=int, dest="B", help="draws kept (population size for abc-smc)")
    p.add_argument("--quantile", type=float, help="fraction of draws retained")
    p.add_argument("--delta", type=float, help="fixed tolerance")
    p.add_argument("--xtol", type=float)
    p.add_argument("--ftol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--fd-step", type=float, help="relative finite-difference step")

    p = sub.add_parser("bench-acceptance", help="acceptance rate versus tolerance (normal model)")
    _add_common(p, "bench-acceptance")
    p.add_argument("--proposals", type=int, default=1_000_000)
    p.add_argument("--deltas", type=_floats, default=list(ex.ACCEPTANCE_DELTAS))
    p.add_argument("--proposal-sd", type=float, default=3.0)
    p.add_argument("--data-seed", type=int)

    p = sub.add_parser("bench-race", help="compare samplers at equal proposal budget")
    _add_common(p, "bench-race")
    p.add_argument("--model", choices=sorted(ex.RACE_SETUPS), default="mixture")
    p.add_argument("--methods", default="rs,abc-ar", help="comma separated, from rs, abc-ar, abc-smc")
    p.add_argument("--proposals", type=int, default=10_000)
    p.add_argument("--keep", type=float, default=1.0, help="fraction of proposals kept")

    p = sub.add_parser("table1", help="Monte Carlo moments of the variance estimators")
    _add_common(p, "table1")
    p.add_argument("--T", type=int, default=20, dest="T")
    p.add_argument("--S", type=int, default=10, dest="S")
    p.add_argument("--replications", type=int, default=500)
    p.add_argument("--B", type=int, default=200, dest="B", help="RS draws per replication")
    p.add_argument("--sigma2", type=float, default=2.0)
    return parser


def _run(args):
    cfg = ex.load_config(args.config)
    cfg = ex.apply_overrides(
        cfg, seed=args.seed, threads=args.threads, sampler_method=args.method, sampler_B=args.B,
        sampler_quantile=args.quantile, sampler_delta=args.delta, optim_xtol=args.xtol, optim_ftol=args.ftol,
        optim_max_iter=args.max_iter, optim_restarts=args.restarts, optim_fd_step=args.fd_step,
    )
    out = Path(args.out_dir or cfg.output_dir)
    sample, summary = ex.run(cfg, out)
    print(f"{summary['method']}: kept {summary['B']} of {summary.get('proposed_count')} proposals, "
          f"ESS {summary['ess']:.1f}; wrote {out}")


def _seed(args):
    return 0 if args.seed is None else args.seed


def _bench_acceptance(args):
    if args.proposals < 1:
        raise ConfigError("--proposals must be at least 1")
    result = ex.bench_acceptance(args.deltas, args.proposals, _seed(args), args.data_seed,
                                 proposal_sd=args.proposal_sd)
    out = Path(args.out_dir or "bench-acceptance")
    out.mkdir(parents=True, exist_ok=True)
    ex.write_json(result, out / "acceptance.json")
    report = ex.acceptance_report(result)
    (out / "report.md").write_text(report)
    print(report, end="")


def _bench_race(args):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        result = ex.bench_race(args.model, methods, args.proposals, args.keep, _seed(args), n_jobs=args.threads)
    except ValueError as exc:
        raise ConfigError(f"--methods: {exc}") from None
    out = Path(args.out_dir or "bench-race")
    out.mkdir(parents=True, exist_ok=True)
    ex.write_json({k: val for k, val in result.items() if k != "samples"}, out / "race.json")
    report = ex.race_report(result)
    (out / "report.md").write_text(report)
    print(report, end="")


def _table1(args):
    try:
        result = ex.table1_experiment(args.T, args.S, args.replications, _seed(args), args.sigma2, B=args.B,
                                      n_jobs=args.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out_dir or "table1")
    out.mkdir(parents=True, exist_ok=True)
    ex.write_json(result, out / "table1.json")
    report = ex.table1_report(result)
    (out / "report.md").write_text(report)
    print(report, end="")


COMMANDS = {"run": _run, "bench-acceptance": _bench_acceptance, "bench-race": _bench_race, "table1": _table1}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ConfigError, DimensionError, NotSamplableError) as exc:
        print(f"rsamp: error: {exc}", file=sys.stderr)
        return 2
    except (SamplerDegeneracyError, ScheduleInfeasibleError, DegenerateSampleError) as exc:
        print(f"rsamp: sampler degenerated: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
