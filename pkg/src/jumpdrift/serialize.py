"""File formats: bundle CSV with JSON sidecar, fit/selection/report JSON.

Bundle values are written with 17 significant digits so the CSV round-trips
float64 exactly; loading a written bundle and estimating on it reproduces
the in-memory pipeline bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .basis import BasisSpec, hermite_basis, trig_basis
from .estimator import DriftFit
from .exceptions import BundleFormatError
from .metrics import ExperimentReport
from .selection import SelectionResult
from .simulate import PathBundle, SdeModel, TimeGrid


def write_bundle_csv(bundle: PathBundle, path):
    """CSV with header t,p0,...,p{N-1} and one row per grid node."""
    nodes = bundle.grid.nodes
    with open(path, "w") as handle:
        handle.write("t," + ",".join(f"p{i}" for i in range(bundle.n_paths)) + "\n")
        for row_index, t in enumerate(nodes):
            row = bundle.values[:, row_index]
            handle.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def write_bundle_sidecar(bundle: PathBundle, model: SdeModel | None, path):
    meta = {
        "model": model.model_id if model is not None else None,
        "x0": model.x0 if model is not None else None,
        "lambda": model.jump_intensity if model is not None else None,
        "N": bundle.n_paths,
        "n": bundle.grid.n_steps,
        "T": bundle.grid.horizon,
        "seed": bundle.seed,
    }
    Path(path).write_text(json.dumps(meta, indent=2) + "\n")


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def read_bundle_csv(path, sidecar=None):
    """Load a bundle CSV (plus optional sidecar); returns (bundle, meta).

    Malformed content raises BundleFormatError naming the offending row.
    """
    meta = {}
    if sidecar is not None and Path(sidecar).exists():
        meta = json.loads(Path(sidecar).read_text())
    with open(path) as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines:
        raise BundleFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[0] != "t" or len(header) < 2:
        raise BundleFormatError(f"{path}: row 1: expected header 't,p0,...'")
    n_paths = len(header) - 1
    times, rows = [], []
    for row_number, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != n_paths + 1:
            raise BundleFormatError(
                f"{path}: row {row_number}: expected {n_paths + 1} cells, got {len(cells)}"
            )
        try:
            values = [float(cell) for cell in cells]
        except ValueError as exc:
            raise BundleFormatError(f"{path}: row {row_number}: {exc}") from exc
        times.append(values[0])
        rows.append(values[1:])
    if len(rows) < 2:
        raise BundleFormatError(f"{path}: need at least two grid rows")
    horizon = float(meta.get("T", times[-1]))
    n_steps = int(meta.get("n", len(rows) - 1))
    if n_steps != len(rows) - 1:
        raise BundleFormatError(f"{path}: sidecar says n={n_steps} but file has {len(rows) - 1} steps")
    grid = TimeGrid(horizon=horizon, n_steps=n_steps)
    values = np.asarray(rows).T
    seed = meta.get("seed")
    bundle = PathBundle(values=values, grid=grid, seed=seed)
    return bundle, meta


def _json_float(x):
    """JSON has no infinities; the +inf sentinel becomes null."""
    if x is None or math.isinf(x) or math.isnan(x):
        return None
    return x


def _basis_fields(spec: BasisSpec):
    interval = None if spec.kind == "hermite" else [spec.left, spec.right]
    return spec.kind, interval


def fit_to_dict(fit: DriftFit, spec: BasisSpec) -> dict:
    kind, interval = _basis_fields(spec)
    return {
        "basis": kind,
        "interval": interval,
        "m": fit.dim,
        "theta": [float(v) for v in fit.coeffs],
        "truncated": fit.truncated,
        "gram_min_eig": fit.gram_min_eig,
        "inv_op_norm": _json_float(fit.gram_inv_norm),
        "objective": fit.objective,
    }


def fit_from_dict(data: dict):
    """Rebuild (fit, spec) from the JSON layout written by fit_to_dict."""
    spec = (
        hermite_basis()
        if data["basis"] == "hermite"
        else trig_basis(data["interval"][0], data["interval"][1])
    )
    inv_norm = data["inv_op_norm"]
    fit = DriftFit(
        dim=data["m"],
        coeffs=np.asarray(data["theta"], dtype=float),
        gram_min_eig=data["gram_min_eig"],
        gram_inv_norm=float("inf") if inv_norm is None else inv_norm,
        truncated=data["truncated"],
        norm_sq=0.0,
        objective=data["objective"],
        gate_bound=float("nan"),
        gate_threshold=float("nan"),
    )
    return fit, spec


def selection_to_dict(result: SelectionResult, spec: BasisSpec, config) -> dict:
    candidates = sorted(config.dims)
    return {
        "candidates": list(candidates),
        "admissible": list(result.admissible),
        "criterion": [result.criterion[m] for m in result.admissible],
        "pen": [result.penalties[m] for m in result.admissible],
        "m_hat": result.selected_dim,
        "c_cal": config.penalty_const,
        "d_T_mode": config.admissibility,
        "f_sup_hat": _json_float(result.density_sup),
        "fallback": result.fallback,
        "fit": fit_to_dict(result.fit, spec),
    }


def report_to_dict(report: ExperimentReport, include_timing: bool = True) -> dict:
    config = report.config
    out = {
        "config": {
            "model": config.model_id,
            "N": config.n_paths,
            "n": config.n_steps,
            "T": config.horizon,
            "lambda": config.jump_intensity,
            "basis": config.basis_kind,
            "interval": list(config.interval),
            "dims": list(config.dims),
            "c_cal": config.penalty_const,
            "repetitions": config.repetitions,
            "seed": config.seed,
            "risk_mode": config.risk_mode,
            "admissibility": config.admissibility,
            "apply_gate": config.apply_gate,
        },
        "mise": list(report.risks),
        "m_hat": list(report.selected_dims),
        "mise_mean": report.risk_mean,
        "mise_std": report.risk_std,
        "m_hat_mean": report.dim_mean,
        "m_hat_std": report.dim_std,
        "single_sample": report.single_sample,
        "failures": [{"rep": rep, "error": msg} for rep, msg in report.failures],
    }
    if include_timing:
        out["timing"] = {"wall_time": report.wall_time}
    return out


def reports_to_table_csv(reports: dict[int, ExperimentReport]) -> str:
    """Summary CSV in the benchmark table layout: one column per model,
    rows for the mean and standard deviation of the MISE."""
    model_ids = sorted(reports)
    lines = ["," + ",".join(f"Model {k}" for k in model_ids)]
    lines.append(
        "Mean MISE," + ",".join(f"{reports[k].risk_mean:.4f}" for k in model_ids)
    )
    std_cells = [
        "" if reports[k].risk_std is None else f"{reports[k].risk_std:.4f}" for k in model_ids
    ]
    lines.append("StD MISE," + ",".join(std_cells))
    return "\n".join(lines) + "\n"


def write_plot_csv(table: np.ndarray, path):
    """Plot rows as CSV x,b,bhat."""
    with open(path, "w") as handle:
        handle.write("x,b,bhat\n")
        for x, b, bhat in table:
            handle.write(f"{x:.17g},{b:.17g},{bhat:.17g}\n")


def write_json(data: dict, path):
    Path(path).write_text(json.dumps(data, indent=2) + "\n")
