"""Command-line front end.

One subcommand per pipeline stage.  Exit codes: 0 success, 1 validation
problem (bad config, bad data, bad usage), 2 numerical failure, 3 missing
artifact.
"""

import argparse
import sys
from dataclasses import replace

from .errors import (
    DataValidationError, DebtminerError, EvaluationError,
    MissingArtifactError, NumericalError,
)
from .pipeline import (
    apply_overrides, cmd_clean, cmd_evaluate, cmd_factors, cmd_report,
    cmd_synth, load_config,
)

STAGES = {
    "synth": (cmd_synth, "generate a synthetic survey (schema + CSV)"),
    "clean": (cmd_clean, "screen category plots and drop systematic "
                         "non-responders"),
    "factors": (cmd_factors, "scree, parallel analysis, extraction, "
                             "rotation, reliability, scores"),
    "evaluate": (cmd_evaluate, "stepwise model comparison with "
                               "cross-validation and paired tests"),
    "report": (cmd_report, "stitch all emitted tables into report.md"),
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad usage is a validation problem (exit 1), not argparse's default 2
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="debtminer",
        description="Survey mining pipeline: clean, factor, evaluate, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")
    for name, (_, help_text) in STAGES.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True,
                        help="path to the INI-style run configuration")
        sp.add_argument("--seed", type=int, default=None,
                        help="override seed.master")
        sp.add_argument("--out", default=None, help="override paths.out")
        sp.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override any config key, e.g. "
                             "evaluation.repeats=3 (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    stage, _ = STAGES[args.command]
    try:
        config = load_config(args.config)
        config = apply_overrides(config, args.override)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.out is not None:
            config = replace(config, out_dir=args.out)
        result = stage(config)
    except MissingArtifactError as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 3
    except (NumericalError, EvaluationError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 2
    except (DataValidationError, DebtminerError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 1

    for key, value in result.items():
        if key == "outputs":
            print("outputs:")
            for path in value:
                print(f"  {path}")
        else:
            print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
