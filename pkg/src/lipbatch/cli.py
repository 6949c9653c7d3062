"""Command-line entry point.

Verbs::

    lipbatch run <config>
    lipbatch summarize <records...> -o <csv>
    lipbatch lipschitz-study <config>
    lipbatch selftest

Exit codes are 0 on success, 2 for configuration errors and 3 for runtime
failures.
"""

import argparse
import logging
import sys

from lipbatch.errors import ConfigError, LipbatchError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _cmd_run(args):
    from lipbatch.experiment import ExperimentConfig, run_experiment, summary_path

    config = ExperimentConfig.from_file(args.config)
    record = run_experiment(config)
    info = record.summary_info
    print(f"{info['label']}: mean final best {info['mean_final_best']:.6g} "
          f"+/- {info['std_final_best']:.3g} over {info['replicates']} replicates")
    print(f"rows: {config.output}")
    print(f"summary: {summary_path(config.output)}")
    if info["failures"]:
        print(f"{len(info['failures'])} replicate(s) failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_summarize(args):
    from lipbatch.experiment import summarize

    table = summarize(args.records, args.output)
    print(f"wrote {len(table)} rows to {args.output}")
    return EXIT_OK


def _cmd_lipschitz_study(args):
    from lipbatch.experiment import LipschitzStudyConfig, lipschitz_study

    config = LipschitzStudyConfig.from_file(args.config)
    for row in lipschitz_study(config):
        print(f"noise={row['noise']:<5g} n={row['n']:<4d} L_hat={row['mean_L']:.4f} "
              f"+/- {row['std_L']:.4f} (true {row['true_L']:.4f})")
    print(f"table: {config.output}")
    return EXIT_OK


def _cmd_selftest(args):
    from lipbatch.selftest import run_selftest

    return EXIT_OK if run_selftest() else EXIT_RUNTIME


def build_parser():
    parser = argparse.ArgumentParser(prog="lipbatch", description="Batch Bayesian optimization experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a replicated experiment from a config file")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("summarize", help="aggregate record CSVs into one comparison table")
    p.add_argument("records", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("lipschitz-study", help="Lipschitz estimate versus sample size and noise")
    p.add_argument("config")
    p.set_defaults(func=_cmd_lipschitz_study)

    p = sub.add_parser("selftest", help="run the built-in oracle checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LipbatchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
