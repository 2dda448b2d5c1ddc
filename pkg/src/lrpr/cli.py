"""Command line entry point: ``lrpr synth|run|sweep|report``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import logging
import sys

from .core import NotPositiveDefinite
from .dataio import DatasetError, read_dataset, write_dataset
from .experiment import ALGORITHMS, INITS, SweepConfig, make_instance, run_sweep, run_trial, write_records
from .metrics import ZeroTruth
from .report import SchemaError, report

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="lrpr", description="Low-rank phase retrieval experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--beta", type=float, default=None, help="noise precision; omit for noiseless")
    p.add_argument("--out", required=True, help="dataset directory")

    p = sub.add_parser("run", help="run one solver on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--init", choices=INITS, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--r", type=int, default=None, help="working rank (default: r_true)")
    p.add_argument("--elbo", action="store_true", help="evaluate the ELBO each iteration")
    p.add_argument("--out", required=True, help="CSV file for the trial record")

    p = sub.add_parser("sweep", help="Monte Carlo sweep over ranks and measurement counts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="aggregate a results CSV and plot success rates")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--axis", choices=("rank", "measurements"), required=True)
    p.add_argument("--out", required=True, help="SVG path; the summary CSV is written beside it")
    return parser


def cmd_synth(args):
    ms, x = make_instance(args.seed, args.n, args.m, args.r, args.p, args.beta)
    path = write_dataset(ms, x, args.out, seed=args.seed)
    print(path)


def cmd_run(args):
    ms, x = read_dataset(args.dataset)
    if x is None:
        raise DatasetError(f"{args.dataset}: no ground truth stored, cannot score a run")
    rank = args.r if args.r is not None else x.rank_hint
    if rank is None:
        print("lrpr run: --r is required when the dataset has no r_true", file=sys.stderr)
        return EXIT_USAGE
    rec = run_trial(ms, x, args.algo, args.init, args.seed, args.max_iter, args.tol,
                    compute_elbo=args.elbo, rank=rank)
    write_records(args.out, [rec])
    print(f"{rec.algo}+{rec.init}: re={rec.re:.3e} success={rec.success} iters={rec.iterations}")
    if rec.message.startswith(NotPositiveDefinite.__name__):
        return EXIT_NUMERIC
    return 0


def cmd_sweep(args):
    try:
        config = SweepConfig.from_json(args.config)
    except (TypeError, ValueError) as exc:
        print(f"lrpr sweep: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(run_sweep(config, args.out, jobs=args.jobs))


def cmd_report(args):
    svg, summary = report(args.inp, args.axis, args.out)
    print(svg)
    print(summary)


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args) or 0
    except (DatasetError, SchemaError, ZeroTruth, OSError) as exc:
        print(f"lrpr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NotPositiveDefinite, ArithmeticError) as exc:
        print(f"lrpr {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
