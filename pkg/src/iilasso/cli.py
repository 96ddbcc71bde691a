"""Command-line interface.

Commands: fit, path, cv, simulate, check-sign, bench.  Results are JSON on
stdout (or --out); diagnostics go to stderr.  Exit codes: 0 success, 1 input
error, 2 solver did not converge (result still written), 3 checked condition
does not hold.  Flags can also be supplied through a JSON --config file;
explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .benchmark import METHODS, run_benchmark, write_bench_csv
from .data import (DataError, Dataset, GroundTruth, SyntheticSpec,
                   generate_synthetic, load_csv, unstandardize_coefficients,
                   write_csv)
from .logistic import fit_logistic, fit_logistic_path
from .modelsel import DEFAULT_ALPHA_GRID, cross_validate
from .similarity import (DEFAULT_CLAMP, GroupPartition, PenaltySpec, VARIANTS,
                         build_similarity)
from .solver import SolverConfig, SolverError, fit, fit_path

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_CONDITION_FAILED = 3


class CliError(ValueError):
    """Invalid flags or inputs; maps to exit code 1."""


def _log(msg):
    print(msg, file=sys.stderr)


def _emit_json(payload, out):
    text = json.dumps(payload, indent=2)
    if out is None:
        print(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _parse_floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise CliError(f"cannot parse float list {text!r}") from exc


def _load_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    return cfg


_CONFIG_ALIASES = {"lambda": "lam"}


def _merged(args, config_keys):
    """Flag values override config-file values override None."""
    merged = dict(vars(args))
    if getattr(args, "config", None):
        cfg = _load_config_file(args.config)
        for key, value in cfg.items():
            attr = key.replace("-", "_")
            attr = _CONFIG_ALIASES.get(attr, attr)
            if attr not in config_keys:
                raise CliError(f"unknown config key {key!r}")
            if merged.get(attr) is None:
                merged[attr] = value
    return merged


def _require(merged, *names):
    for name in names:
        if merged.get(name) is None:
            raise CliError(f"missing required flag --{name.replace('_', '-')}")


def _solver_config(merged) -> SolverConfig:
    kwargs = {}
    if merged.get("tol") is not None:
        kwargs["tol"] = float(merged["tol"])
    if merged.get("max_sweeps") is not None:
        kwargs["max_sweeps"] = int(merged["max_sweeps"])
    if merged.get("init") is not None:
        kwargs["init"] = merged["init"]
    if merged.get("active_set") is not None:
        kwargs["active_set"] = bool(merged["active_set"])
    try:
        return SolverConfig(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _load_dataset(merged) -> Dataset:
    _require(merged, "data", "target")
    task = merged.get("task") or "regression"
    if task not in ("regression", "classification"):
        raise CliError(f"unknown task {task!r}")
    return load_csv(merged["data"], merged["target"], task=task, standardize=True)


def _partition_from_file(path, p) -> GroupPartition:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            groups = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read groups file {path}: {exc}") from exc
    try:
        partition = GroupPartition(tuple(tuple(g) for g in groups))
        partition.validate_covering(p)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad groups file: {exc}") from exc
    return partition


def _similarity(merged, dataset) -> "object":
    variant = merged.get("similarity") or "ratio"
    if variant not in VARIANTS:
        raise CliError(f"--similarity must be one of {VARIANTS}")
    clamp = float(merged["clamp"]) if merged.get("clamp") is not None else DEFAULT_CLAMP
    partition = None
    if variant == "group_indicator":
        _require(merged, "groups")
        partition = _partition_from_file(merged["groups"], dataset.p)
    R = build_similarity(dataset, variant=variant, clamp=clamp, partition=partition)
    if merged.get("similarity_csv"):
        with open(merged["similarity_csv"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in R.toarray():
                writer.writerow([repr(float(v)) for v in row])
        _log(f"similarity matrix written to {merged['similarity_csv']}")
    return R


def _with_raw_scale(payload, beta, dataset):
    beta_raw, icpt = unstandardize_coefficients(beta, dataset)
    payload["beta_raw"] = beta_raw.tolist()
    payload["intercept_raw"] = icpt
    return payload


def cmd_fit(args) -> int:
    merged = _merged(args, vars(args).keys())
    dataset = _load_dataset(merged)
    _require(merged, "lam", "alpha")
    R = _similarity(merged, dataset)
    penalty = PenaltySpec(float(merged["lam"]), float(merged["alpha"]), R)
    config = _solver_config(merged)
    if dataset.task == "classification":
        result = fit_logistic(dataset, penalty, config)
        payload = result.to_dict()
        raw, shift = unstandardize_coefficients(result.beta, dataset)
        payload["beta_raw"] = raw.tolist()
        payload["intercept_raw"] = result.intercept + shift
    else:
        result = fit(dataset, penalty, config)
        payload = _with_raw_scale(result.to_dict(), result.beta, dataset)
    _emit_json(payload, merged.get("out"))
    if not result.converged:
        _log("fit did not converge within the sweep budget")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_path(args) -> int:
    merged = _merged(args, vars(args).keys())
    dataset = _load_dataset(merged)
    _require(merged, "alpha")
    R = _similarity(merged, dataset)
    config = _solver_config(merged)
    lambdas = _parse_floats(merged["lambdas"]) if merged.get("lambdas") else None
    kwargs = dict(lambdas=lambdas, config=config)
    if merged.get("n_lambdas") is not None:
        kwargs["n_lambdas"] = int(merged["n_lambdas"])
    if merged.get("min_ratio") is not None:
        kwargs["min_ratio"] = float(merged["min_ratio"])
    if dataset.task == "classification":
        result = fit_logistic_path(dataset, float(merged["alpha"]), R, **kwargs)
    else:
        result = fit_path(dataset, float(merged["alpha"]), R, **kwargs)
    _emit_json(result.to_dict(), merged.get("out"))
    if merged.get("csv_out"):
        with open(merged["csv_out"], "w", encoding="utf-8") as fh:
            result.write_coef_csv(fh)
        _log(f"coefficient path written to {merged['csv_out']}")
    if not all(f.converged for f in result.fits):
        _log("some fits did not converge within the sweep budget")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_cv(args) -> int:
    merged = _merged(args, vars(args).keys())
    dataset = _load_dataset(merged)
    _require(merged, "k", "seed")
    variant = merged.get("similarity") or "ratio"
    partition = None
    if variant == "group_indicator":
        _require(merged, "groups")
        partition = _partition_from_file(merged["groups"], dataset.p)
    alpha_grid = (_parse_floats(merged["alpha_grid"])
                  if merged.get("alpha_grid") else list(DEFAULT_ALPHA_GRID))
    config = _solver_config(merged)
    kwargs = dict(
        alpha_grid=alpha_grid,
        similarity_variant=variant,
        config=config,
        seed=int(merged["seed"]),
        partition=partition,
    )
    if merged.get("clamp") is not None:
        kwargs["clamp"] = float(merged["clamp"])
    if merged.get("lambdas"):
        kwargs["lambdas"] = _parse_floats(merged["lambdas"])
    if merged.get("n_lambdas") is not None:
        kwargs["n_lambdas"] = int(merged["n_lambdas"])
    if merged.get("min_ratio") is not None:
        kwargs["min_ratio"] = float(merged["min_ratio"])
    try:
        result = cross_validate(dataset, int(merged["k"]), **kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _emit_json(result.to_dict(), merged.get("out"))
    if merged.get("scores_csv"):
        with open(merged["scores_csv"], "w", encoding="utf-8") as fh:
            result.write_scores_csv(fh)
        _log(f"grid scores written to {merged['scores_csv']}")
    return EXIT_OK


def _synthetic_spec(merged) -> SyntheticSpec:
    """Build the spec from flags, falling back to the benchmark defaults."""
    base = SyntheticSpec.paper_defaults(seed=0).to_dict()
    for key in base:
        if merged.get(key) is not None:
            base[key] = merged[key]
    if isinstance(base["coef"], str):
        base["coef"] = _parse_floats(base["coef"])
    try:
        return SyntheticSpec.from_dict(base)
    except DataError as exc:
        raise CliError(str(exc)) from exc


def cmd_simulate(args) -> int:
    merged = _merged(args, vars(args).keys())
    spec = _synthetic_spec(merged)
    _require(merged, "out")
    dataset, truth = generate_synthetic(spec)
    write_csv(merged["out"], dataset, target=merged.get("target") or "y")
    _log(f"standardized synthetic data written to {merged['out']}")
    if merged.get("truth"):
        # the truth file describes the *written* (standardized) data exactly:
        # beta is on the standardized-column scale, noise is recentered
        from .data import sample_synthetic_raw

        X_raw, y_raw, eps = sample_synthetic_raw(spec)
        beta_std = spec.beta_star() * dataset.col_scales
        payload = GroundTruth.from_beta(beta_std).to_dict()
        payload["beta_star_raw"] = spec.beta_star().tolist()
        payload["col_scales"] = dataset.col_scales.tolist()
        payload["spec"] = spec.to_dict()
        _emit_json(payload, merged["truth"])
        _log(f"ground truth written to {merged['truth']}")
        if merged.get("noise_out"):
            centered = eps - eps.mean()
            with open(merged["noise_out"], "w", encoding="utf-8") as fh:
                fh.write("noise\n")
                for v in centered:
                    fh.write(repr(float(v)) + "\n")
            _log(f"centered noise written to {merged['noise_out']}")
    return EXIT_OK


def cmd_check_sign(args) -> int:
    from .theory import sign_recovery_check

    merged = _merged(args, vars(args).keys())
    dataset = _load_dataset(merged)
    _require(merged, "truth", "lam", "alpha")
    try:
        with open(merged["truth"], "r", encoding="utf-8") as fh:
            tr = json.load(fh)
        beta_star = np.asarray(tr["beta_star"], dtype=np.float64)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError(f"cannot read truth file: {exc}") from exc
    if beta_star.shape[0] != dataset.p:
        raise CliError(
            f"truth has {beta_star.shape[0]} coefficients but data has p={dataset.p}"
        )
    truth = GroundTruth.from_beta(beta_star)
    R = _similarity(merged, dataset)
    penalty = PenaltySpec(float(merged["lam"]), float(merged["alpha"]), R)

    noise = None
    noise_sd = None
    if merged.get("noise"):
        rows = []
        try:
            with open(merged["noise"], "r", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                next(reader)  # header
                rows = [float(row[0]) for row in reader if row]
        except (OSError, ValueError, IndexError) as exc:
            raise CliError(f"cannot read noise file: {exc}") from exc
        noise = np.asarray(rows)
    elif merged.get("noise_sd") is not None:
        noise_sd = float(merged["noise_sd"])
    else:
        raise CliError("provide --noise or --noise-sd")
    try:
        report = sign_recovery_check(
            dataset, truth, penalty, noise=noise, noise_sd=noise_sd,
            seed=int(merged["noise_seed"]) if merged.get("noise_seed") is not None else None,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _emit_json(report.to_dict(), merged.get("out"))
    if report.holds:
        return EXIT_OK
    _log("sign-recovery conditions do not hold"
         if report.u_invertible else "U is numerically singular")
    return EXIT_CONDITION_FAILED


def cmd_bench(args) -> int:
    merged = _merged(args, vars(args).keys())
    spec = _synthetic_spec(merged)
    methods = (tuple(str(merged["methods"]).split(","))
               if merged.get("methods") else METHODS)
    for m in methods:
        if m not in METHODS:
            raise CliError(f"unknown method {m!r}; choose from {METHODS}")
    alpha_grid = (_parse_floats(merged["alpha_grid"])
                  if merged.get("alpha_grid") else list(DEFAULT_ALPHA_GRID))
    reps = int(merged["reps"]) if merged.get("reps") is not None else 50
    # one seed drives both the spec and the per-replicate derivations
    bench_seed = int(merged["seed"]) if merged.get("seed") is not None else 0
    config = _solver_config(merged)
    if merged.get("init") is None:
        # fresh zeros per lambda finds better local optima on this experiment
        config = SolverConfig(tol=config.tol, max_sweeps=config.max_sweeps,
                              init="zeros", active_set=config.active_set)
    kwargs = {}
    if merged.get("n_lambdas") is not None:
        kwargs["n_lambdas"] = int(merged["n_lambdas"])
    if merged.get("min_ratio") is not None:
        kwargs["min_ratio"] = float(merged["min_ratio"])
    _log(f"running {reps} replicates for methods {', '.join(methods)}")
    summary = run_benchmark(spec, reps=reps, seed=bench_seed, methods=methods,
                            alpha_grid=alpha_grid, config=config, **kwargs)
    _emit_json(summary, merged.get("out"))
    if merged.get("csv_out"):
        with open(merged["csv_out"], "w", encoding="utf-8") as fh:
            write_bench_csv(summary, fh)
        _log(f"summary table written to {merged['csv_out']}")
    return EXIT_OK


def _add_io_flags(sp):
    sp.add_argument("--data", help="input CSV file")
    sp.add_argument("--target", help="name of the response column")
    sp.add_argument("--task", choices=("regression", "classification"))
    sp.add_argument("--out", help="write the JSON result here instead of stdout")
    sp.add_argument("--config", help="JSON file with default flag values")


def _add_similarity_flags(sp):
    sp.add_argument("--similarity", choices=VARIANTS,
                    help="similarity variant (default ratio)")
    sp.add_argument("--clamp", type=float,
                    help="ratio-variant correlation clip (default 1e-4)")
    sp.add_argument("--groups", help="JSON file: list of index groups")
    sp.add_argument("--similarity-csv", dest="similarity_csv",
                    help="also dump the similarity matrix as CSV")


def _add_solver_flags(sp):
    sp.add_argument("--tol", type=float, help="per-sweep convergence tolerance")
    sp.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    sp.add_argument("--init", choices=("zeros", "warm", "lasso"))
    sp.add_argument("--active-set", dest="active_set", action="store_const",
                    const=True, help="restrict sweeps to the active set")
    sp.add_argument("--no-active-set", dest="active_set", action="store_const",
                    const=False)


def _add_grid_flags(sp):
    sp.add_argument("--lambdas", help="comma-separated explicit lambda grid")
    sp.add_argument("--n-lambdas", dest="n_lambdas", type=int)
    sp.add_argument("--min-ratio", dest="min_ratio", type=float,
                    help="grid floor as a fraction of lambda_max")


def _add_synthetic_flags(sp):
    sp.add_argument("--n", type=int, help="samples")
    sp.add_argument("--p", type=int, help="features")
    sp.add_argument("--b", type=int, help="number of blocks")
    sp.add_argument("--q", type=int, help="block size")
    sp.add_argument("--rho", type=float, help="within-block correlation")
    sp.add_argument("--coef", help="comma-separated block-lead coefficients")
    sp.add_argument("--noise-sd", dest="noise_sd", type=float)
    sp.add_argument("--seed", type=int, help="generator seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iilasso",
        description="Sparse regression that avoids co-selecting correlated features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fit", help="single (lambda, alpha) fit")
    _add_io_flags(sp)
    _add_similarity_flags(sp)
    _add_solver_flags(sp)
    sp.add_argument("--lambda", dest="lam", type=float, help="l1 level")
    sp.add_argument("--alpha", type=float, help="cross-penalty level")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("path", help="descending-lambda path at fixed alpha")
    _add_io_flags(sp)
    _add_similarity_flags(sp)
    _add_solver_flags(sp)
    _add_grid_flags(sp)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--csv-out", dest="csv_out", help="coefficient path CSV")
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("cv", help="k-fold cross-validation over (lambda, alpha)")
    _add_io_flags(sp)
    _add_similarity_flags(sp)
    _add_solver_flags(sp)
    _add_grid_flags(sp)
    sp.add_argument("--k", type=int, help="number of folds")
    sp.add_argument("--alpha-grid", dest="alpha_grid",
                    help="comma-separated alpha values")
    sp.add_argument("--seed", type=int, help="fold-assignment seed")
    sp.add_argument("--scores-csv", dest="scores_csv",
                    help="long-format grid scores CSV")
    sp.set_defaults(func=cmd_cv)

    sp = sub.add_parser("simulate", help="write a synthetic dataset as CSV")
    _add_synthetic_flags(sp)
    sp.add_argument("--target", help="response column name (default y)")
    sp.add_argument("--out", help="output CSV path")
    sp.add_argument("--truth", help="also write ground-truth JSON here")
    sp.add_argument("--noise-out", dest="noise_out",
                    help="also write the centered noise vector CSV")
    sp.add_argument("--config", help="JSON file with default flag values")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check-sign", help="evaluate the sign-recovery conditions")
    _add_io_flags(sp)
    _add_similarity_flags(sp)
    sp.add_argument("--truth", help="ground-truth JSON (beta_star field)")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--noise", help="noise vector CSV (one header line)")
    sp.add_argument("--noise-sd", dest="noise_sd", type=float,
                    help="draw noise with this standard deviation")
    sp.add_argument("--noise-seed", dest="noise_seed", type=int)
    sp.set_defaults(func=cmd_check_sign)

    sp = sub.add_parser("bench", help="tuned train/valid/test benchmark")
    _add_synthetic_flags(sp)
    _add_solver_flags(sp)
    _add_grid_flags(sp)
    sp.add_argument("--reps", type=int, help="number of replicates (default 50)")
    sp.add_argument("--methods", help="comma-separated subset of "
                    + ",".join(METHODS))
    sp.add_argument("--alpha-grid", dest="alpha_grid")
    sp.add_argument("--out", help="write the JSON summary here")
    sp.add_argument("--csv-out", dest="csv_out", help="summary table CSV")
    sp.add_argument("--config", help="JSON file with default flag values")
    sp.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, DataError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    except SolverError as exc:
        _log(f"solver failure: {exc}")
        return EXIT_NO_CONVERGENCE
    except (ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
