"""Risk metrics, the repetition harness, and the variance trace check.

Two risk conventions are available per repetition: "empirical", the squared
empirical norm of (fit - drift) restricted to the estimation interval and
taken over the repetition's own observations, and "lebesgue", the plain
integrated squared error on the interval.  The benchmark protocol uses the
empirical convention, which is the quantity the risk bounds control; the
Lebesgue one charges the estimator on subregions the paths never visit.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, trig_basis, hermite_basis, eval_all
from .estimator import DriftFit, empirical_vector, evaluate_fit, gram_matrix
from .exceptions import ParameterError
from .linalg import SymMatrix, cholesky_solve
from .selection import (
    DEFAULT_PENALTY_CONST,
    SelectionConfig,
    SelectionResult,
    _argmin_smallest,
    penalty,
    select_model,
)
from .simulate import PathBundle, SdeModel, TimeGrid, builtin_model, simulate_bundle


def mise(fit: DriftFit, spec: BasisSpec, true_b, interval, grid_n: int = 1000) -> float:
    """Trapezoid approximation of the integrated squared error on ``interval``."""
    if grid_n < 2:
        raise ParameterError(f"grid_n must be >= 2, got {grid_n}")
    lo, hi = interval
    xs = np.linspace(lo, hi, grid_n + 1)
    gaps = (evaluate_fit(fit, spec, xs) - np.asarray(true_b(xs), dtype=float)) ** 2
    h = (hi - lo) / grid_n
    return float(h * (np.sum(gaps) - 0.5 * (gaps[0] + gaps[-1])))


def empirical_risk(bundle: PathBundle, fit: DriftFit, spec: BasisSpec, true_b, interval) -> float:
    """Squared empirical norm of (fit - drift) restricted to ``interval``.

    Out-of-interval samples contribute zero: there the estimation target is
    the zero-extended restriction of the drift, which the fit also matches.
    """
    lo, hi = interval
    x = bundle.left_values().reshape(-1)
    inside = (x >= lo) & (x <= hi)
    gaps = (evaluate_fit(fit, spec, x) - np.asarray(true_b(x), dtype=float)) ** 2
    total = float(np.sum(gaps[inside]))
    return total * bundle.grid.dt / bundle.observation_time


def plot_data(fit: DriftFit, spec: BasisSpec, true_b, interval, grid_n: int = 1000) -> np.ndarray:
    """Rows (x, drift, fitted drift) on a uniform grid, for external plotting."""
    lo, hi = interval
    xs = np.linspace(lo, hi, grid_n + 1)
    return np.column_stack(
        [xs, np.asarray(true_b(xs), dtype=float), evaluate_fit(fit, spec, xs)]
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment; defaults mirror the benchmark protocol
    (400 paths, 200 steps on [0, 5], intensity 0.5, trig basis on [-3, 3],
    candidate dimensions 1..6, 100 repetitions)."""

    model_id: int = 1
    n_paths: int = 400
    n_steps: int = 200
    horizon: float = 5.0
    jump_intensity: float = 0.5
    basis_kind: str = "trig"
    interval: tuple[float, float] = (-3.0, 3.0)
    dims: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    penalty_const: float = DEFAULT_PENALTY_CONST
    repetitions: int = 100
    seed: int = 0
    mise_grid: int = 1000
    risk_mode: str = "lebesgue"
    admissibility: str = "off"
    apply_gate: bool = False
    workers: int | None = None
    keep_fits: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ParameterError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.risk_mode not in ("empirical", "lebesgue"):
            raise ParameterError(f"risk_mode must be empirical or lebesgue, got {self.risk_mode}")

    def basis(self) -> BasisSpec:
        if self.basis_kind == "trig":
            return trig_basis(*self.interval)
        return hermite_basis()

    def model(self) -> SdeModel:
        model = builtin_model(self.model_id)
        if model.jump_intensity != self.jump_intensity:
            model = dataclasses.replace(model, jump_intensity=self.jump_intensity)
        return model

    def grid(self) -> TimeGrid:
        return TimeGrid(horizon=self.horizon, n_steps=self.n_steps)

    def selection(self) -> SelectionConfig:
        return SelectionConfig(
            dims=self.dims,
            penalty_const=self.penalty_const,
            admissibility=self.admissibility,
            apply_gate=self.apply_gate,
        )


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    """Per-repetition risks and selected dimensions with their summaries.

    Standard deviations use the unbiased (n - 1) divisor and are None when
    fewer than two repetitions succeeded.
    """

    config: ExperimentConfig
    risks: tuple[float, ...]
    selected_dims: tuple[int, ...]
    risk_mean: float
    risk_std: float | None
    dim_mean: float
    dim_std: float | None
    failures: tuple[tuple[int, str], ...]
    wall_time: float
    fits: tuple[DriftFit, ...] | None = None

    @property
    def single_sample(self) -> bool:
        return len(self.risks) < 2


def _risk_of(config, bundle, fit, spec, drift):
    if config.risk_mode == "empirical":
        return empirical_risk(bundle, fit, spec, drift, config.interval)
    return mise(fit, spec, drift, config.interval, config.mise_grid)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Repeat simulate -> select -> risk; deterministic for a fixed seed."""
    started = time.perf_counter()
    model = config.model()
    grid = config.grid()
    spec = config.basis()
    sel_config = config.selection()
    risks, dims, fits, failures = [], [], [], []
    for rep in range(config.repetitions):
        try:
            bundle = simulate_bundle(
                model, grid, config.n_paths, seed=config.seed ^ rep, workers=config.workers
            )
            result = select_model(bundle, spec, sel_config)
            risks.append(_risk_of(config, bundle, result.fit, spec, model.drift))
            dims.append(result.selected_dim)
            if config.keep_fits:
                fits.append(result.fit)
        except Exception as exc:  # noqa: BLE001 - repetition failures are recorded, not fatal
            failures.append((rep, f"{type(exc).__name__}: {exc}"))
    risk_arr = np.asarray(risks)
    dim_arr = np.asarray(dims, dtype=float)
    return ExperimentReport(
        config=config,
        risks=tuple(risks),
        selected_dims=tuple(dims),
        risk_mean=float(np.mean(risk_arr)) if risks else float("nan"),
        risk_std=float(np.std(risk_arr, ddof=1)) if len(risks) > 1 else None,
        dim_mean=float(np.mean(dim_arr)) if dims else float("nan"),
        dim_std=float(np.std(dim_arr, ddof=1)) if len(dims) > 1 else None,
        failures=tuple(failures),
        wall_time=time.perf_counter() - started,
        fits=tuple(fits) if config.keep_fits else None,
    )


@dataclass(frozen=True)
class TraceCheck:
    statistic: float
    bound: float
    inconclusive: bool = False


def trace_bound_check(
    model,
    spec: BasisSpec,
    m: int,
    repetitions: int,
    seed: int,
    n_paths: int = 20,
    grid: TimeGrid | None = None,
) -> TraceCheck:
    """Monte Carlo check of the noise-trace bound.

    Estimates the expected Gram matrix and the covariance of the noise part
    of the increment vector (the raw vector minus the drift inner products,
    which the known drift makes available) over ``repetitions`` bundles, and
    compares trace(Gram^-1 * NT * Cov) against
    (sup diffusion^2 + intensity * jump second moment * sup jump coeff^2) * m.
    """
    if isinstance(model, int):
        model = builtin_model(model)
    if model.diffusion_sup is None or model.jump_coeff_sup is None:
        raise ParameterError("trace check needs diffusion_sup and jump_coeff_sup on the model")
    if grid is None:
        grid = TimeGrid(horizon=5.0, n_steps=200)
    gram_sum = np.zeros((m, m))
    noise_outer_sum = np.zeros((m, m))
    for rep in range(repetitions):
        bundle = simulate_bundle(model, grid, n_paths, seed=seed ^ rep)
        x = bundle.left_values().reshape(-1)
        rows = eval_all(spec, m, x)
        scale = bundle.grid.dt / bundle.observation_time
        gram_sum += (rows @ rows.T) * scale
        drift_part = rows @ (np.asarray(model.drift(x), dtype=float) * bundle.grid.dt)
        noise = empirical_vector(bundle, spec, m) - drift_part / bundle.observation_time
        noise_outer_sum += np.outer(noise, noise)
    gram_mean = SymMatrix(gram_sum / repetitions)
    noise_cov = noise_outer_sum / repetitions * (n_paths * grid.horizon)
    bound = (
        model.diffusion_sup**2
        + model.jump_intensity * model.jump_mean_sq * model.jump_coeff_sup**2
    ) * m
    try:
        statistic = sum(
            cholesky_solve(gram_mean, noise_cov[:, j])[j] for j in range(m)
        )
    except Exception:  # singular estimated Gram
        return TraceCheck(statistic=float("nan"), bound=bound, inconclusive=True)
    return TraceCheck(statistic=float(statistic), bound=bound)


@dataclass(frozen=True)
class CalibrationRow:
    penalty_const: float
    risk_mean: float
    risk_std: float | None
    dim_mean: float


@dataclass(frozen=True)
class CalibrationResult:
    penalty_const: float
    table: tuple[CalibrationRow, ...]
    model_id: int
    repetitions: int
    seed: int


def calibrate_penalty_const(
    model_id: int,
    grid_values,
    repetitions: int,
    seed: int,
    config: ExperimentConfig | None = None,
) -> CalibrationResult:
    """Pick the penalty constant minimizing the mean risk over a grid.

    Since the per-dimension fits do not depend on the constant, each
    repetition is simulated and fitted once and reused across the grid.
    """
    grid_values = tuple(grid_values)
    if not grid_values:
        raise ParameterError("calibration grid must be nonempty")
    if config is None:
        config = ExperimentConfig(model_id=model_id, seed=seed, repetitions=repetitions)
    else:
        config = dataclasses.replace(
            config, model_id=model_id, seed=seed, repetitions=repetitions
        )
    model = config.model()
    grid = config.grid()
    spec = config.basis()
    base_sel = config.selection()
    per_rep = []
    for rep in range(repetitions):
        bundle = simulate_bundle(model, grid, config.n_paths, seed=config.seed ^ rep)
        sel = select_model(bundle, spec, base_sel)
        risks = {
            m: _risk_of(config, bundle, fit, spec, model.drift) for m, fit in sel.fits.items()
        }
        norms = {m: fit.norm_sq for m, fit in sel.fits.items()}
        per_rep.append((norms, risks))
    rows = []
    for value in grid_values:
        picked_risks, picked_dims = [], []
        for norms, risks in per_rep:
            criterion = {
                m: -norms[m] + penalty(m, config.n_paths, config.horizon, value) for m in norms
            }
            choice = _argmin_smallest(criterion)
            picked_risks.append(risks[choice])
            picked_dims.append(choice)
        arr = np.asarray(picked_risks)
        rows.append(
            CalibrationRow(
                penalty_const=value,
                risk_mean=float(np.mean(arr)),
                risk_std=float(np.std(arr, ddof=1)) if arr.size > 1 else None,
                dim_mean=float(np.mean(picked_dims)),
            )
        )
    best = min(rows, key=lambda row: row.risk_mean)
    return CalibrationResult(
        penalty_const=best.penalty_const,
        table=tuple(rows),
        model_id=model_id,
        repetitions=repetitions,
        seed=seed,
    )
