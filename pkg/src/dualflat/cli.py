"""Command-line benchmark harness.

    dualflat <experiment> [--seed u64] [--trials n] [--lr f] [--lambda f]
             [--K n] [--epsilon f] [--out path] [--format csv|md]

Experiments: categorical-kl, mixture-mle, bradley-terry, vi-mlr, checks.
Exit codes: 0 success, 1 check failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .checks import run_checks
from .experiments import ExperimentSpec, run_experiment


def _csv_values(text: str, caster=float):
    return tuple(caster(part) for part in text.split(",") if part)


def _add_common(sub, trials_default):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--trials", type=int, default=trials_default)
    sub.add_argument("--epsilon", type=float, default=1e-5)
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    sub.add_argument("--format", choices=("csv", "md"), default="md")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualflat", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="experiment", required=True)

    sub = subs.add_parser("categorical-kl", help="divergence minimization between categorical distributions")
    _add_common(sub, 100)
    sub.add_argument("--lr", type=float, default=1.0, help="initial step size")
    sub.add_argument("--n-categories", type=int, default=3)

    sub = subs.add_parser("mixture-mle", help="mixture-weight MLE on the benchmark instance")
    _add_common(sub, 1)
    sub.add_argument("--lr", type=float, default=None,
                     help="single step-size multiplier (default: the 0.5/1.0/1.5 grid)")
    sub.add_argument("--case", default="250,250,250,250",
                     help="comma-separated sample allocation over the four components")

    sub = subs.add_parser("bradley-terry", help="Bradley-Terry MLE iteration counts")
    _add_common(sub, 100)
    sub.add_argument("--lr", type=float, default=1.0)
    sub.add_argument("--mode", choices=("small", "large"), default="small")

    sub = subs.add_parser("vi-mlr", help="single-iteration variational inference accuracy")
    _add_common(sub, 20)
    sub.add_argument("--lr", type=float, default=1.0)
    sub.add_argument("--lambda", dest="prior_precision", type=float, default=1.0)
    sub.add_argument("--K", dest="n_mc_samples", type=int, default=1000)
    sub.add_argument("--L", dest="n_pred_samples", type=int, default=10)
    sub.add_argument("--shape", default="200,5,3", help="N,M,D of the generated datasets")

    sub = subs.add_parser("checks", help="run the library property suite")
    sub.add_argument("--seed", type=int, default=0)
    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    if args.experiment == "categorical-kl":
        params = {"n_categories": args.n_categories, "epsilon": args.epsilon, "step_size": args.lr}
    elif args.experiment == "mixture-mle":
        params = {"case": _csv_values(args.case, int), "epsilon": args.epsilon}
        if args.lr is not None:
            params["lr_multipliers"] = (args.lr,)
    elif args.experiment == "bradley-terry":
        params = {"mode": args.mode, "step_size": args.lr, "epsilon": args.epsilon}
    elif args.experiment == "vi-mlr":
        params = {"shape": _csv_values(args.shape, int), "prior_precision": args.prior_precision,
                  "step_size": args.lr, "n_mc_samples": args.n_mc_samples,
                  "n_pred_samples": args.n_pred_samples}
    else:
        raise ValueError(f"unknown experiment {args.experiment!r}")
    return ExperimentSpec(experiment=args.experiment, parameters=params, seed=args.seed,
                          trials=getattr(args, "trials", None), output_path=args.out)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as handle:
            handle.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.experiment == "checks":
        report = run_checks(seed=args.seed)
        sys.stdout.write(report.render())
        return 0 if report.all_passed else 1
    try:
        spec = _spec_from_args(args)
        table = run_experiment(spec)
        _emit(table.render(args.format), spec.output_path)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
