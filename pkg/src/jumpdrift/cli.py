"""Command line front end: simulate, estimate, experiment, check.

Flags may also come from a JSON config file (--config); explicit flags win
over file values, and unknown file keys are rejected.  Exit codes: 0 on
success, 1 for data or property failures, 2 for usage and validation
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import metrics, selection, serialize
from .basis import hermite_basis, trig_basis
from .estimator import fit_projection
from .exceptions import (
    BundleFormatError,
    DegenerateDataError,
    DivergenceError,
    NumericsError,
    ParameterError,
)
from .selection import SelectionConfig, select_model
from .simulate import TimeGrid, builtin_model, simulate_bundle


def _parse_interval(text):
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise ParameterError(f"expected an interval like -3:3, got {text!r}") from exc
    return lo, hi


def _parse_dims(text):
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError as exc:
        raise ParameterError(f"expected a dimension range like 1:6, got {text!r}") from exc
    if lo < 1 or hi < lo:
        raise ParameterError(f"invalid dimension range {text!r}")
    return tuple(range(lo, hi + 1))


def _load_config(args, allowed):
    if not getattr(args, "config", None):
        return {}
    data = json.loads(Path(args.config).read_text())
    unknown = set(data) - set(allowed)
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    return data


def _resolve(args, file_values, defaults):
    """Flag value if given, else config-file value, else default."""
    merged = {}
    for key, default in defaults.items():
        cli = getattr(args, key, None)
        merged[key] = cli if cli is not None else file_values.get(key, default)
    return merged


def _basis_from(options):
    if options["basis"] == "hermite":
        return hermite_basis()
    return trig_basis(*options["interval"])


SIMULATE_DEFAULTS = {
    "model": 1,
    "n_paths": 400,
    "steps": 200,
    "horizon": 5.0,
    "jump_intensity": 0.5,
    "seed": 0,
    "threads": None,
}


def cmd_simulate(args) -> int:
    opts = _resolve(args, _load_config(args, SIMULATE_DEFAULTS), SIMULATE_DEFAULTS)
    if opts["n_paths"] < 1:
        raise ParameterError(f"--n-paths must be >= 1, got {opts['n_paths']}")
    model = builtin_model(opts["model"])
    if opts["jump_intensity"] != model.jump_intensity:
        import dataclasses

        model = dataclasses.replace(model, jump_intensity=opts["jump_intensity"])
    grid = TimeGrid(horizon=opts["horizon"], n_steps=opts["steps"])
    bundle = simulate_bundle(model, grid, opts["n_paths"], opts["seed"], workers=opts["threads"])
    serialize.write_bundle_csv(bundle, args.output)
    serialize.write_bundle_sidecar(bundle, model, serialize.sidecar_path(args.output))
    counts = bundle.jump_counts
    print(
        f"wrote {args.output}: N={bundle.n_paths} n={grid.n_steps} T={grid.horizon} "
        f"jumps total={int(counts.sum())} mean={counts.mean():.3f}"
    )
    return 0


ESTIMATE_DEFAULTS = {
    "basis": "trig",
    "interval": (-3.0, 3.0),
    "m": None,
    "adaptive": None,
    "c_cal": selection.DEFAULT_PENALTY_CONST,
    "dims": (1, 2, 3, 4, 5, 6),
    "d_t_mode": "off",
    "gate": "off",
    "plot_grid": None,
    "seed": 0,
}


def _true_drift(meta):
    model_id = meta.get("model")
    if model_id in (1, 2, 3):
        return builtin_model(model_id).drift
    return lambda x: np.full(np.shape(x), np.nan)


def cmd_estimate(args) -> int:
    opts = _resolve(args, _load_config(args, ESTIMATE_DEFAULTS), ESTIMATE_DEFAULTS)
    bundle, meta = serialize.read_bundle_csv(args.bundle, serialize.sidecar_path(args.bundle))
    spec = _basis_from(opts)
    apply_gate = opts["gate"] == "on"
    if opts["adaptive"]:
        config = SelectionConfig(
            dims=opts["dims"],
            penalty_const=opts["c_cal"],
            admissibility=opts["d_t_mode"],
            apply_gate=apply_gate,
        )
        result = select_model(bundle, spec, config)
        if result.fallback:
            print("warning: admissibility excluded every dimension, fell back to the smallest", file=sys.stderr)
        serialize.write_json(serialize.selection_to_dict(result, spec, config), args.output)
        fit = result.fit
        print(f"wrote {args.output}: m_hat={result.selected_dim} truncated={fit.truncated}")
    elif opts["m"] is not None:
        fit = fit_projection(bundle, spec, opts["m"], apply_gate=apply_gate)
        serialize.write_json(serialize.fit_to_dict(fit, spec), args.output)
        print(f"wrote {args.output}: m={fit.dim} truncated={fit.truncated}")
    else:
        raise ParameterError("estimate needs either --m or --adaptive")
    if opts["plot_grid"]:
        lo, hi = opts["interval"]
        table = metrics.plot_data(fit, spec, _true_drift(meta), (lo, hi), opts["plot_grid"])
        plot_path = Path(args.output).with_suffix("") .as_posix() + "_plot.csv"
        serialize.write_plot_csv(table, plot_path)
        print(f"wrote {plot_path}")
    return 0


EXPERIMENT_DEFAULTS = {
    "model": "1",
    "reps": 100,
    "seed": 0,
    "n_paths": 400,
    "steps": 200,
    "horizon": 5.0,
    "jump_intensity": 0.5,
    "basis": "trig",
    "interval": (-3.0, 3.0),
    "dims": (1, 2, 3, 4, 5, 6),
    "c_cal": selection.DEFAULT_PENALTY_CONST,
    "risk": "lebesgue",
    "admissibility": "off",
    "gate": "off",
    "threads": None,
    "plot_dir": None,
    "calibrate": None,
    "grid": "0.25,0.5,1,2,4,8",
}


def _experiment_config(opts, model_id, keep_fits=False):
    return metrics.ExperimentConfig(
        model_id=model_id,
        n_paths=opts["n_paths"],
        n_steps=opts["steps"],
        horizon=opts["horizon"],
        jump_intensity=opts["jump_intensity"],
        basis_kind=opts["basis"],
        interval=tuple(opts["interval"]),
        dims=tuple(opts["dims"]),
        penalty_const=opts["c_cal"],
        repetitions=opts["reps"],
        seed=opts["seed"],
        risk_mode=opts["risk"],
        admissibility=opts["admissibility"],
        apply_gate=opts["gate"] == "on",
        workers=opts["threads"],
        keep_fits=keep_fits,
    )


def cmd_experiment(args) -> int:
    opts = _resolve(args, _load_config(args, EXPERIMENT_DEFAULTS), EXPERIMENT_DEFAULTS)
    if opts["calibrate"]:
        if opts["model"] == "all":
            raise ParameterError("calibration runs on a single model")
        grid_values = tuple(float(v) for v in str(opts["grid"]).split(","))
        result = metrics.calibrate_penalty_const(
            int(opts["model"]), grid_values, opts["reps"], opts["seed"],
            config=_experiment_config(opts, int(opts["model"])),
        )
        table = [
            {
                "c_cal": row.penalty_const,
                "mean_mise": row.risk_mean,
                "std_mise": row.risk_std,
                "mean_m_hat": row.dim_mean,
            }
            for row in result.table
        ]
        serialize.write_json({"c_cal": result.penalty_const, "table": table}, args.output)
        for row in result.table:
            print(f"c_cal={row.penalty_const:<8g} mean MISE={row.risk_mean:.4f} mean m_hat={row.dim_mean:.2f}")
        print(f"chosen c_cal={result.penalty_const}")
        return 0
    model_ids = (1, 2, 3) if opts["model"] == "all" else (int(opts["model"]),)
    keep = opts["plot_dir"] is not None
    reports = {}
    for model_id in model_ids:
        reports[model_id] = metrics.run_experiment(_experiment_config(opts, model_id, keep))
    if len(reports) == 1:
        payload = serialize.report_to_dict(next(iter(reports.values())))
    else:
        payload = {f"model_{k}": serialize.report_to_dict(r) for k, r in reports.items()}
    serialize.write_json(payload, args.output)
    csv_path = Path(args.output).with_suffix(".csv")
    csv_path.write_text(serialize.reports_to_table_csv(reports))
    if opts["plot_dir"]:
        plot_dir = Path(opts["plot_dir"])
        plot_dir.mkdir(parents=True, exist_ok=True)
        for model_id, report in reports.items():
            config = report.config
            drift = builtin_model(model_id).drift
            for rep, fit in enumerate(report.fits[:10]):
                table = metrics.plot_data(fit, config.basis(), drift, config.interval)
                serialize.write_plot_csv(table, plot_dir / f"model{model_id}_rep{rep:02d}.csv")
    total_failures = sum(len(r.failures) for r in reports.values())
    for model_id, report in reports.items():
        std = "n/a" if report.risk_std is None else f"{report.risk_std:.4f}"
        print(
            f"Model {model_id}: mean MISE={report.risk_mean:.4f} StD={std} "
            f"mean m_hat={report.dim_mean:.2f} failures={len(report.failures)}"
        )
    print(f"wrote {args.output} and {csv_path}")
    if all(len(r.risks) == 0 for r in reports.values()):
        return 1
    if total_failures:
        print(f"warning: {total_failures} repetitions failed", file=sys.stderr)
    return 0


CHECK_DEFAULTS = {
    "model": 1,
    "m_values": "2,4,6",
    "reps": 150,
    "n_paths": 20,
    "seed": 0,
    "bundle": None,
}


def cmd_check(args) -> int:
    opts = _resolve(args, _load_config(args, CHECK_DEFAULTS), CHECK_DEFAULTS)
    failed = False
    if opts["bundle"]:
        bundle, _ = serialize.read_bundle_csv(opts["bundle"], serialize.sidecar_path(opts["bundle"]))
        print(f"PASS bundle file: {opts['bundle']} parsed, N={bundle.n_paths}, n={bundle.grid.n_steps}")
    model = builtin_model(opts["model"])
    spec = trig_basis(-3.0, 3.0)
    reps = opts["reps"]
    advisory = reps < 50
    for m in (int(v) for v in str(opts["m_values"]).split(",")):
        check = metrics.trace_bound_check(model, spec, m, reps, opts["seed"], n_paths=opts["n_paths"])
        if check.inconclusive:
            print(f"WARN trace bound m={m}: inconclusive (singular estimated Gram)")
            continue
        ok = check.statistic <= check.bound * 1.2
        if ok:
            print(f"PASS trace bound m={m}: statistic {check.statistic:.4f} <= {check.bound:.4f} * 1.2")
        elif advisory:
            print(
                f"WARN trace bound m={m}: statistic {check.statistic:.4f} exceeds "
                f"{check.bound:.4f} * 1.2 with only {reps} repetitions (inconclusive)"
            )
        else:
            print(f"FAIL trace bound m={m}: statistic {check.statistic:.4f} > {check.bound:.4f} * 1.2")
            failed = True
    from .estimator import gram_matrix
    from .linalg import sym_eigen_min

    grid = TimeGrid(horizon=5.0, n_steps=200)
    bundle = simulate_bundle(model, grid, 40, opts["seed"])
    big = gram_matrix(bundle, spec, 6)
    small = gram_matrix(bundle, spec, 3)
    sym_ok = np.array_equal(big.a, big.a.T)
    nest_ok = np.array_equal(big.a[:3, :3], small.a)
    psd_ok = sym_eigen_min(big) >= -1e-12
    for name, ok in [("gram symmetry", sym_ok), ("gram nesting", nest_ok), ("gram PSD", psd_ok)]:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failed = failed or not ok
    again = simulate_bundle(model, grid, 40, opts["seed"], workers=4)
    det_ok = np.array_equal(bundle.values, again.values)
    print(f"{'PASS' if det_ok else 'FAIL'} simulation determinism across worker counts")
    failed = failed or not det_ok
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="jumpdrift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a bundle and write CSV + sidecar")
    sim.add_argument("--model", type=int)
    sim.add_argument("--n-paths", dest="n_paths", type=int)
    sim.add_argument("--steps", type=int)
    sim.add_argument("--horizon", type=float)
    sim.add_argument("--lambda", dest="jump_intensity", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--config")
    sim.add_argument("-o", "--output", required=True)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="fit the drift from a bundle CSV")
    est.add_argument("bundle")
    est.add_argument("--basis", choices=["trig", "hermite"])
    est.add_argument("--interval", type=_parse_interval)
    est.add_argument("--m", type=int)
    est.add_argument("--adaptive", action="store_true", default=None)
    est.add_argument("--c-cal", dest="c_cal", type=float)
    est.add_argument("--dims", type=_parse_dims)
    est.add_argument("--d-t-mode", dest="d_t_mode", choices=["off", "plug-in", "simplified"])
    est.add_argument("--gate", choices=["on", "off"])
    est.add_argument("--plot-grid", dest="plot_grid", type=int)
    est.add_argument("--seed", type=int)
    est.add_argument("--config")
    est.add_argument("-o", "--output", required=True)
    est.set_defaults(func=cmd_estimate)

    exp = sub.add_parser("experiment", help="run the repetition harness or calibrate")
    exp.add_argument("--model", choices=["1", "2", "3", "all"])
    exp.add_argument("--reps", type=int)
    exp.add_argument("--seed", type=int)
    exp.add_argument("--n-paths", dest="n_paths", type=int)
    exp.add_argument("--steps", type=int)
    exp.add_argument("--horizon", type=float)
    exp.add_argument("--lambda", dest="jump_intensity", type=float)
    exp.add_argument("--basis", choices=["trig", "hermite"])
    exp.add_argument("--interval", type=_parse_interval)
    exp.add_argument("--dims", type=_parse_dims)
    exp.add_argument("--c-cal", dest="c_cal", type=float)
    exp.add_argument("--risk", choices=["empirical", "lebesgue"])
    exp.add_argument("--admissibility", choices=["off", "plug-in", "simplified"])
    exp.add_argument("--gate", choices=["on", "off"])
    exp.add_argument("--threads", type=int)
    exp.add_argument("--plot-dir", dest="plot_dir")
    exp.add_argument("--calibrate", action="store_true", default=None)
    exp.add_argument("--grid")
    exp.add_argument("--config")
    exp.add_argument("-o", "--output", required=True)
    exp.set_defaults(func=cmd_experiment)

    chk = sub.add_parser("check", help="run property checks and print pass/fail lines")
    chk.add_argument("--model", type=int)
    chk.add_argument("--m-values", dest="m_values")
    chk.add_argument("--reps", type=int)
    chk.add_argument("--n-paths", dest="n_paths", type=int)
    chk.add_argument("--seed", type=int)
    chk.add_argument("--bundle")
    chk.add_argument("--config")
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BundleFormatError, DivergenceError, NumericsError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
