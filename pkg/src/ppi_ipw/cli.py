"""Command-line entry point.

Every subcommand prints an aligned table to standard output and, with
``--output``, writes the same content as CSV. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .errors import PPIError
from .pipeline import DEFAULT_INTERCEPT, DEFAULT_SLOPE, infer_schema, run_pipeline
from .qis import BUILTIN_PROBLEMS, rate_report
from .registry import TABLE_ESTIMATORS, parse_tags
from .simulate import (
    FACET_N_UNITS,
    INTERVAL_COLUMNS,
    Dgp,
    SimulationConfig,
    first_k_intervals,
    intervals_records,
    run_simulation,
)
from .synthetic import FIXTURE_ROWS, FIXTURE_SEED, write_fixture
from .tables import aligned_table, fmt, to_csv

SUBCOMMANDS = ("simulate", "intervals", "pipeline", "qis-rate", "make-fixture")
DEFAULT_QIS_GRID = (8, 16, 32, 64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    parameters: dict[str, Any] = field(default_factory=dict)
    output_path: Optional[Path] = None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return value


def _open_unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text!r}")
    return value


def _proportion(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1], got {text!r}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected comma-separated positive integers, got {text!r}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError("grid must be strictly ascending")
    return values


def _tags(text: str):
    try:
        return parse_tags(v for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_simulation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-units", type=_positive_int, default=None,
                   help=f"population size N (default 500, or {FACET_N_UNITS} for --dgp facet)")
    p.add_argument("--replicates", type=_positive_int, default=200, help="number of replicates")
    p.add_argument("--dgp", choices=[d.value for d in Dgp], default=Dgp.BINARY_LOGIT.value,
                   help="data-generating process")
    p.add_argument("--p-lab", type=_proportion, default=None, help="target labeled proportion (facet design)")
    p.add_argument("--xi-model", choices=["estimated", "true"], default="estimated",
                   help="use fitted or true inclusion probabilities")
    p.add_argument("--estimators", type=_tags, default=TABLE_ESTIMATORS,
                   help="comma-separated estimator tags (default: Classic,HT,Hajek,PPI,PPI_Hajek)")
    p.add_argument("--level", type=_open_unit, default=0.95, help="confidence level")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--variance", choices=["iid", "poisson"], default="iid", help="variance estimator family")
    p.add_argument("--superpopulation", action="store_true",
                   help="add the prediction-term variance to PPI intervals")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker processes for replicates (default: available CPUs)")
    p.add_argument("--output", type=Path, default=None, help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppi-ipw",
        description="Prediction-powered inference with inverse-probability-weighted rectifiers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="COMMAND")
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("simulate", help="bias / width / coverage table over replicates", formatter_class=fmt_cls)
    _add_simulation_flags(p)

    p = sub.add_parser("intervals", help="per-replicate intervals for the first k replicates",
                       formatter_class=fmt_cls)
    _add_simulation_flags(p)
    p.add_argument("--k", type=_nonnegative_int, default=10, help="number of replicates to list")

    p = sub.add_parser("pipeline", help="informative-labeling comparison on a CSV dataset", formatter_class=fmt_cls)
    p.add_argument("--input", type=Path, required=True, help="CSV file with a header row")
    p.add_argument("--outcome", required=True, help="outcome column")
    p.add_argument("--labeling-covariate", default="Age", help="numeric column driving the labeling")
    p.add_argument("--covariates", type=_names, default=None,
                   help="comma-separated regression covariates (default: every other column)")
    p.add_argument("--categorical", type=_names, default=None,
                   help="comma-separated categorical covariates (default: non-numeric columns)")
    p.add_argument("--intercept", type=float, default=DEFAULT_INTERCEPT, help="labeling logit intercept")
    p.add_argument("--slope", type=float, default=DEFAULT_SLOPE, help="labeling logit slope")
    p.add_argument("--xi-model", choices=["true", "estimated"], default="true",
                   help="use the imposed or re-estimated inclusion probabilities")
    p.add_argument("--estimators", type=_tags, default=TABLE_ESTIMATORS, help="comma-separated estimator tags")
    p.add_argument("--level", type=_open_unit, default=0.95, help="confidence level")
    p.add_argument("--seed", type=int, default=0, help="labeling seed")
    p.add_argument("--variance", choices=["iid", "poisson"], default="iid", help="variance estimator family")
    p.add_argument("--output", type=Path, default=None, help="CSV output path")

    p = sub.add_parser("qis-rate", help="MSE convergence of randomized trapezoid vs plain Monte Carlo",
                       formatter_class=fmt_cls)
    p.add_argument("--fn", choices=sorted(BUILTIN_PROBLEMS), default="s2", help="integrand on [0, 1]")
    p.add_argument("--grid", type=_int_list, default=DEFAULT_QIS_GRID, help="comma-separated node counts")
    p.add_argument("--seeds", type=_positive_int, default=500, help="seeds per node count")
    p.add_argument("--seed", type=_nonnegative_int, default=0, help="first seed")
    p.add_argument("--output", type=Path, default=None, help="CSV output path")

    p = sub.add_parser("make-fixture", help="write the synthetic NHANES-like CSV", formatter_class=fmt_cls)
    p.add_argument("--output", type=Path, required=True, help="CSV output path (a .json truth file is written beside it)")
    p.add_argument("--rows", type=_positive_int, default=FIXTURE_ROWS, help="number of rows")
    p.add_argument("--seed", type=int, default=FIXTURE_SEED, help="generator seed")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> CliConfig:
    """Parse and validate; usage errors exit with status 2 naming the offending flag."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    params = vars(ns).copy()
    sub = params.pop("subcommand")
    output = params.pop("output", None)
    if sub in ("simulate", "intervals"):
        if params["dgp"] == Dgp.FACET.value and params["p_lab"] is None:
            parser.error("argument --p-lab: required when --dgp facet")
        if params["n_units"] is None:
            params["n_units"] = FACET_N_UNITS if params["dgp"] == Dgp.FACET.value else 500
        if params["n_units"] < 2:
            parser.error("argument --n-units: must be at least 2")
        if sub == "intervals" and params["k"] > params["replicates"]:
            parser.error("argument --k: cannot exceed --replicates")
    return CliConfig(sub, params, output)


def _simulation_config(params: dict) -> SimulationConfig:
    return SimulationConfig(
        n_units=params["n_units"],
        n_replicates=params["replicates"],
        dgp=params["dgp"],
        p_lab=params["p_lab"],
        xi_model=params["xi_model"],
        estimators=params["estimators"],
        ci_level=params["level"],
        seed=params["seed"],
        variance=params["variance"],
        superpopulation=params["superpopulation"],
    )


def _execute(config: CliConfig) -> tuple[str, Optional[str]]:
    """Return (stdout table, csv text or None)."""
    p = config.parameters
    if config.subcommand == "simulate":
        report = run_simulation(_simulation_config(p), threads=p["threads"])
        return report.to_table(), report.to_csv()
    if config.subcommand == "intervals":
        rows = first_k_intervals(_simulation_config(p), p["k"], threads=p["threads"])
        records = intervals_records(rows)
        return aligned_table(INTERVAL_COLUMNS, records), to_csv(INTERVAL_COLUMNS, records)
    if config.subcommand == "pipeline":
        schema = infer_schema(p["input"], p["outcome"], p["labeling_covariate"], p["covariates"], p["categorical"])
        result = run_pipeline(
            p["input"],
            schema,
            p["intercept"],
            p["slope"],
            p["xi_model"],
            p["seed"],
            variance=p["variance"],
            level=p["level"],
            estimators=p["estimators"],
        )
        return result.to_table(), result.to_csv()
    if config.subcommand == "qis-rate":
        report = rate_report(BUILTIN_PROBLEMS[p["fn"]], p["grid"], p["seeds"], base_seed=p["seed"])
        columns = ("n", "mse_qis", "mse_mc")
        records = [[fmt(r.n), fmt(r.mse_qis), fmt(r.mse_mc)] for r in report.rows]

        def slope(s):
            return "NA" if s is None else fmt(s)

        records.append(["slope", slope(report.slope_qis), slope(report.slope_mc)])
        return aligned_table(columns, records), to_csv(columns, records)
    if config.subcommand == "make-fixture":
        if config.output_path is None:
            raise ValueError("make-fixture needs --output")
        truth = write_fixture(config.output_path, p["rows"], p["seed"])
        return f"wrote {config.output_path} ({p['rows']} rows); complete-row BMI mean = {fmt(truth)}", None
    raise ValueError(f"unknown subcommand {config.subcommand!r}")


def run(config: CliConfig) -> int:
    try:
        table, csv_text = _execute(config)
        if csv_text is not None and config.output_path is not None:
            config.output_path.write_text(csv_text)
    except (PPIError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(table)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
