"""Command-line interface: ``bandit-trials {index,simulate,reproduce,complexity}``.

Errors in the configuration exit with status 2 and a JSON object on stderr;
capacity errors exit with status 3.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import BanditTrialsError, CapacityError
from .rng import SCHEME

EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_CHECK_FAILED = 1


def _threads(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return n


def _int_list(text):
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _resolve_threads(flag):
    from .sim.experiment import default_threads
    return flag if flag is not None else default_threads()


def _set_numba_threads(n):
    import numba
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def cmd_index(args) -> int:
    from .index.calibration import IndexConfig
    from .index.tables import build_table, config_hash, write_table

    mode = args.mode
    discount = args.discount if args.discount is not None else (0.99 if mode == "gittins" else 1.0)
    horizon = args.horizon if args.horizon is not None else (750 if mode == "gittins" else 180)
    cfg = IndexConfig(mode=mode, discount=discount, truncation_horizon=horizon,
                      tolerance=args.tolerance, known_payoff=args.known_payoff, solver=args.solver)
    remaining = None
    if mode == "whittle":
        remaining = sorted(set(x for chunk in (args.remaining or [[horizon]]) for x in chunk))
    elif args.remaining:
        raise _usage("--remaining only applies to --mode whittle")
    _set_numba_threads(_resolve_threads(args.threads))
    table = build_table(cfg, args.max_n, remaining)
    print(f"# bandit_trials {__version__} index table, config_hash={config_hash(cfg)}")
    print(f"# config: {json.dumps(cfg.to_dict())}, max_n={table.max_n}, cells={len(table)}")
    for r in (remaining or [None]):
        if r is not None:
            print(f"remaining = {r}")
        print(table.preview(r))
    if args.out:
        path = write_table(table, args.out)
        print(f"wrote {path} and {path.with_suffix('.json')}")
    return 0


def cmd_simulate(args) -> int:
    from .sim.experiment import run_experiment
    from .sim.io import bias_csv, results_csv, write_text
    from .sim.scenario import Scenario

    scenario = Scenario.load(args.scenario)
    threads = _resolve_threads(args.threads)
    metrics = run_experiment(scenario, threads=threads, bias_bin_width=args.bias_bins)
    extra = {}
    if metrics.threshold is not None:
        extra["calibrated threshold"] = (f"{metrics.threshold:.6g} on Bonferroni-scaled p "
                                         f"(calibration size {metrics.calibration_size:.4f})")
    res = results_csv([(scenario, metrics)], extra)
    bias = bias_csv([(scenario, metrics)], extra)
    print(f"seed {scenario.seed}; {SCHEME}", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        write_text(out, res)
        bias_path = Path(args.bias_out) if args.bias_out else out.with_name(out.stem + "_bias.csv")
        write_text(bias_path, bias)
        print(f"wrote {out} and {bias_path}", file=sys.stderr)
    else:
        sys.stdout.write(res)
    return 0


def cmd_reproduce(args) -> int:
    from .reproduce import reproduce
    from .sim.io import write_text

    threads = _resolve_threads(args.threads)
    _set_numba_threads(threads)
    rows = args.rows.split(",") if args.rows else None
    report = reproduce(args.target, threads=threads, replications=args.replications, rows=rows)
    print(report.render())
    if args.out_dir:
        for name, text in report.artifacts.items():
            path = write_text(Path(args.out_dir) / name, text)
            print(f"wrote {path}")
    return 0 if report.ok else EXIT_CHECK_FAILED


def cmd_complexity(args) -> int:
    from .index.complexity import brute_force_count, complexity_csv, complexity_estimates

    if args.csv:
        lo, hi = args.csv
        sys.stdout.write(complexity_csv(range(lo, hi + 1), args.arms))
        return 0
    c = complexity_estimates(args.horizon, args.arms)
    print(json.dumps({"horizon": args.horizon, "arms": args.arms,
                      "brute_dp_count": c.brute_dp_count, "index_count": c.index_count,
                      "brute_force_count": brute_force_count(args.horizon, args.arms)}))
    return 0


class _UsageError(Exception):
    pass


def _usage(msg):
    return _UsageError(msg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bandit-trials",
        description="Gittins/Whittle index tables and simulation of adaptive trial designs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    thread_help = "worker count (default: $BANDIT_TRIALS_THREADS, else 1)"

    q = sub.add_parser("index", help="compute an index table",
                       description="Compute a Gittins or Whittle index table and print a "
                                   "6x6 preview (rows f, columns s).")
    q.add_argument("--mode", choices=("gittins", "whittle"), default="gittins",
                   help="infinite-horizon Gittins or finite-horizon Whittle index")
    q.add_argument("--discount", type=float,
                   help="discount factor d (default 0.99 for gittins, 1 for whittle)")
    q.add_argument("--horizon", type=int,
                   help="truncation horizon / trial size T (default 750 gittins, 180 whittle)")
    q.add_argument("--remaining", type=_int_list, action="append",
                   help="remaining-horizon values for whittle, comma separated; repeatable "
                        "(default: the horizon)")
    q.add_argument("--max-n", type=int, default=12,
                   help="largest s + f in the table (default 12)")
    q.add_argument("--tolerance", type=float, default=1e-6,
                   help="root-finding tolerance on p (default 1e-6)")
    q.add_argument("--known-payoff", choices=("truncated", "stationary"), default="truncated",
                   help="gittins only: known arm pays over the truncated horizon or forever")
    q.add_argument("--solver", choices=("newton", "bisection"), default="newton",
                   help="root finder for the indifference point")
    q.add_argument("--out", help="write the table as CSV plus a JSON sidecar")
    q.add_argument("--threads", type=_threads, help=thread_help)
    q.set_defaults(func=cmd_index)

    q = sub.add_parser("simulate", help="run a scenario file",
                       description="Simulate the trials described by a scenario JSON file and "
                                   "write results and bias CSVs.")
    q.add_argument("scenario", help="scenario JSON file")
    q.add_argument("--out", help="results CSV (default: print to stdout)")
    q.add_argument("--bias-out", help="bias CSV (default: <out>_bias.csv)")
    q.add_argument("--bias-bins", type=int, default=5, help="bias bin width in patients (default 5)")
    q.add_argument("--threads", type=_threads, help=thread_help)
    q.set_defaults(func=cmd_simulate)

    from .reproduce import TARGETS
    q = sub.add_parser("reproduce", help="compare against the reference tables",
                       description="Recompute a reference table or figure and compare cell by "
                                   "cell; exits 1 if a checked cell is out of tolerance.")
    q.add_argument("target", choices=TARGETS)
    q.add_argument("--replications", type=int,
                   help="override the replication count (quick, less precise runs)")
    q.add_argument("--rows", help="simulation tables: comma-separated rules to run")
    q.add_argument("--out-dir", help="directory for CSV artifacts")
    q.add_argument("--threads", type=_threads, help=thread_help)
    q.set_defaults(func=cmd_reproduce)

    q = sub.add_parser("complexity", help="operation counts of DP versus index computation",
                       description="Exact operation counts for brute force, DP and index "
                                   "approaches.")
    q.add_argument("--horizon", type=int, default=10, help="truncation horizon T (default 10)")
    q.add_argument("--arms", type=int, default=3, help="number of arms K (default 3)")
    q.add_argument("--csv", type=int, nargs=2, metavar=("T_MIN", "T_MAX"),
                   help="print a CSV for a range of horizons instead")
    q.set_defaults(func=cmd_complexity)
    return p


def _error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        return _error(exc.kind, str(exc), EXIT_CAPACITY)
    except BanditTrialsError as exc:
        return _error(exc.kind, str(exc), EXIT_CONFIG)
    except _UsageError as exc:
        return _error("usage", str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
