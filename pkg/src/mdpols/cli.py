"""Command-line front end: ``mdpols {fit,voe,sensitivity,bootstrap-check,simulate}``.

Exit status is 0 on success, 1 on a usage or input error and 2 on a
numerical failure (singular design, posterior underflow). Diagnostics go to
standard error; data go to files under ``--out`` or to standard output.
"""

import argparse
import csv
import dataclasses
import io
import os
import sys

import numpy as np

from .alpha import DEFAULT_XI, PRIOR_KINDS, AlphaPrior
from .bootstrap import bootstrap_functional
from .data import (
    DEFAULT_MASS_MODE,
    MASS_MODES,
    RidgeBaseline,
    augment_ridge,
    cluster_rows,
    load_dataset,
    standardize,
)
from .exceptions import DataError, PosteriorUnderflowError, SingularDesignError
from .functional import fit_functional, hc0, interval_multiplier, ols, summarize_fit
from .simulation import COVARIATE_DISTS, MODELS, SimConfig, coverage_study
from .voe import sensitivity_analysis, voe_analysis, write_sensitivity_csv, write_voe_csv

THREADS_ENV = "MDPOLS_THREADS"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (np.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _cell(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"cell must be 'dist,a_h,n', got {text!r}")
    dist, a_h, n = parts
    if dist not in COVARIATE_DISTS:
        raise argparse.ArgumentTypeError(f"dist must be one of {COVARIATE_DISTS}")
    try:
        return dist, float(a_h), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad a_h or n in cell {text!r}")


def _add_data_args(p, standardize_default):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--response", required=True, help="name of the response column")
    p.add_argument("--columns", default=None,
                   help="comma-separated covariates to use (default: all but the response)")
    p.add_argument("--standardize", choices=("none", "center", "zscore"),
                   default=standardize_default,
                   help=f"transform covariates before fitting (default: {standardize_default})")


def _add_prior_args(p):
    p.add_argument("--prior", choices=PRIOR_KINDS, default="uniform",
                   help="prior on the DP precision alpha (default: uniform)")
    p.add_argument("--xi", type=_positive_float, default=DEFAULT_XI,
                   help=f"upper truncation of the alpha prior and grid (default: {DEFAULT_XI:g})")
    p.add_argument("--mass-mode", choices=MASS_MODES, default=DEFAULT_MASS_MODE,
                   help="prior mass per imaginary ridge row: alpha/K (normalized) "
                        f"or alpha (per_row) (default: {DEFAULT_MASS_MODE})")


def _add_out_arg(p):
    p.add_argument("--out", default=None,
                   help="output directory (default: write data to standard output)")


def build_parser():
    parser = _Parser(prog="mdpols", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="posterior mean, covariance and intervals")
    _add_data_args(p, "none")
    _add_prior_args(p)
    p.add_argument("--model", choices=("mdp", "hc0"), default="mdp",
                   help="MDP functional or OLS with HC0 covariance (default: mdp)")
    p.add_argument("--alpha", type=_positive_float, default=None,
                   help="fix alpha instead of marginalizing over its posterior")
    p.add_argument("--ridge-variances", type=_float_list, default=None,
                   help="comma-separated baseline variances of the non-intercept "
                        "columns (default: all 1)")
    p.add_argument("--level", type=float, default=0.95, help="credible level (default: 0.95)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="standard output format when --out is not given (default: json)")
    p.add_argument("--dump-alpha-posterior", action="store_true",
                   help="include the alpha grid and posterior weights in the JSON output")
    _add_out_arg(p)

    p = sub.add_parser("voe", help="vibration of effects over subsets and alpha")
    _add_data_args(p, "zscore")
    _add_prior_args(p)
    p.add_argument("--treatment", required=True, help="name of the treatment column")
    _add_out_arg(p)

    p = sub.add_parser("sensitivity", help="hidden binary confounder sensitivity draws")
    _add_data_args(p, "center")
    _add_prior_args(p)
    p.add_argument("--treatment", required=True, help="name of the treatment column")
    p.add_argument("--n-draws", type=int, default=50,
                   help="number of (gamma, lambda) draws (default: 50)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    _add_out_arg(p)

    p = sub.add_parser("bootstrap-check",
                       help="compare the functional to Polya-urn bootstrap moments")
    _add_data_args(p, "none")
    _add_prior_args(p)
    p.add_argument("--alpha", type=_positive_float, default=1.0,
                   help="fixed alpha for the bootstrap (default: 1)")
    p.add_argument("--B", type=int, default=10000,
                   help="number of bootstrap replicates (default: 10000)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    _add_out_arg(p)

    p = sub.add_parser("simulate", help="coverage study of slope intervals")
    p.add_argument("--cell", type=_cell, action="append", required=True,
                   help="simulation cell 'dist,a_h,n', dist one of "
                        f"{', '.join(COVARIATE_DISTS)}; repeatable")
    p.add_argument("--reps", type=int, default=2000, help="replicates per cell (default: 2000)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    p.add_argument("--models", default="mdp_cauchy,mdp_uniform,hc0",
                   help=f"comma-separated models from {', '.join(MODELS)} "
                        "(default: mdp_cauchy,mdp_uniform,hc0)")
    p.add_argument("--xi", type=_positive_float, default=DEFAULT_XI,
                   help=f"alpha prior truncation (default: {DEFAULT_XI:g})")
    p.add_argument("--mass-mode", choices=MASS_MODES, default=DEFAULT_MASS_MODE,
                   help=f"prior mass per imaginary ridge row (default: {DEFAULT_MASS_MODE})")
    p.add_argument("--n-jobs", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    _add_out_arg(p)
    return parser


def _load(args):
    columns = args.columns.split(",") if args.columns else None
    data = load_dataset(args.input, args.response, columns=columns)
    record = None
    if args.standardize != "none":
        data, record = standardize(data, args.standardize)
    return data, record


def _emit(args, filename, text):
    if args.out is None:
        sys.stdout.write(text)
        return
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, filename), "w", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g4(v):
    return f"{float(v):.4g}"


def _ridge(data, variances):
    if variances is None:
        return RidgeBaseline.unit(data.K)
    if len(variances) != data.K - 1:
        raise UsageError(f"--ridge-variances needs {data.K - 1} values, got {len(variances)}")
    return RidgeBaseline(np.concatenate([[0.0], variances]))


def _hc0_result(data, level):
    cov = hc0(data.X, data.y)
    beta = ols(data.X, data.y)
    design = augment_ridge(cluster_rows(data), RidgeBaseline.unit(data.K))
    return summarize_fit(beta, cov, design, 0.0, level=level, column_names=data.column_names)


def cmd_fit(args):
    data, record = _load(args)
    interval_multiplier(args.level)
    if args.model == "hc0":
        res = _hc0_result(data, args.level)
    else:
        design = augment_ridge(cluster_rows(data), _ridge(data, args.ridge_variances),
                               mass_mode=args.mass_mode)
        if args.alpha is None:
            res = fit_functional(design, prior=AlphaPrior(args.prior, args.xi), level=args.level)
        else:
            res = fit_functional(design, alpha=args.alpha, level=args.level)
        try:
            ols_beta = ols(data.X, data.y)
            ols_se = np.sqrt(np.diag(hc0(data.X, data.y)))
        except SingularDesignError:
            ols_beta = ols_se = np.full(data.K, np.nan)
        res = dataclasses.replace(res, ols_beta=ols_beta, ols_se=ols_se)
    as_json = res.to_json(include_alpha_posterior=args.dump_alpha_posterior) + "\n"
    rows = res.table()
    header = list(rows[0])
    table = _csv_text(header, [[r["term"]] + [_g4(r[h]) for h in header[1:]] for r in rows])
    if args.out is None:
        sys.stdout.write(as_json if args.format == "json" else table)
    else:
        _emit(args, "fit.json", as_json)
        _emit(args, "fit_table.csv", table)
        if record is not None:
            _emit(args, "transform.json", record.to_json() + "\n")


def _treatment_index(data, name):
    try:
        idx = data.column_index(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if idx == 0:
        raise UsageError("the intercept cannot be the treatment")
    return idx


def cmd_voe(args):
    data, record = _load(args)
    t = _treatment_index(data, args.treatment)
    cells = voe_analysis(data, t, prior=AlphaPrior(args.prior, args.xi), mass_mode=args.mass_mode)
    buf = io.StringIO()
    path = buf if args.out is None else os.path.join(args.out, "voe.csv")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
    write_voe_csv(cells, path, column_names=data.column_names)
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    elif record is not None:
        _emit(args, "transform.json", record.to_json() + "\n")


def cmd_sensitivity(args):
    data, record = _load(args)
    if args.standardize == "none":
        raise UsageError("sensitivity needs a centered treatment; use --standardize center or zscore")
    t = _treatment_index(data, args.treatment)
    if args.n_draws < 1:
        raise UsageError("--n-draws must be at least 1")
    design = augment_ridge(cluster_rows(data), RidgeBaseline.unit(data.K), mass_mode=args.mass_mode)
    fit = fit_functional(design, prior=AlphaPrior(args.prior, args.xi))
    draws = sensitivity_analysis(fit, data, t, n_draws=args.n_draws, seed=args.seed)
    buf = io.StringIO()
    path = buf if args.out is None else os.path.join(args.out, "sensitivity.csv")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
    write_sensitivity_csv(draws, path)
    if args.out is None:
        sys.stdout.write(buf.getvalue())


def cmd_bootstrap_check(args):
    data, _ = _load(args)
    if args.B < 2:
        raise UsageError("--B must be at least 2")
    design = augment_ridge(cluster_rows(data), RidgeBaseline.unit(data.K), mass_mode=args.mass_mode)
    res = fit_functional(design, alpha=args.alpha)
    boot = bootstrap_functional(design, args.alpha, args.B, seed=args.seed)
    mean, se = boot.mean(), boot.mc_se()
    sd = np.sqrt(np.diag(boot.cov()))
    rows = []
    for j, name in enumerate(res.names()):
        rows.append([name, _g4(res.beta[j]), _g4(mean[j]), _g4(se[j]),
                     _g4((mean[j] - res.beta[j]) / se[j]), _g4(res.psd[j]), _g4(sd[j]),
                     _g4(sd[j] / res.psd[j] - 1.0)])
    header = ["term", "beta", "boot_mean", "mc_se", "z", "pSD", "boot_sd", "sd_rel_diff"]
    _emit(args, "bootstrap_check.csv", _csv_text(header, rows))


def cmd_simulate(args):
    models = tuple(m for m in args.models.split(",") if m)
    n_jobs = args.n_jobs
    if n_jobs is None:
        env = os.environ.get(THREADS_ENV, "1")
        try:
            n_jobs = int(env)
        except ValueError:
            raise UsageError(f"${THREADS_ENV} must be an integer, got {env!r}") from None
    configs = []
    for dist, a_h, n in args.cell:
        try:
            configs.append(SimConfig(covariate_dist=dist, a_h=a_h, n=n, reps=args.reps,
                                     models=models, xi=args.xi, seed=args.seed,
                                     mass_mode=args.mass_mode))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.reps < 100:
        raise UsageError("--reps must be at least 100")
    table = coverage_study(configs, n_jobs=max(1, n_jobs))
    buf = io.StringIO()
    table.to_csv(buf)
    _emit(args, "simulate.csv", buf.getvalue())


COMMANDS = {
    "fit": cmd_fit,
    "voe": cmd_voe,
    "sensitivity": cmd_sensitivity,
    "bootstrap-check": cmd_bootstrap_check,
    "simulate": cmd_simulate,
}


def run_command(argv=None):
    """Run one subcommand and return its exit status."""
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"mdpols: input error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularDesignError, PosteriorUnderflowError) as exc:
        print(f"mdpols: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"mdpols: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
