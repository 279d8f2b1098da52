"""Projection least squares estimation of the drift from observed bundles.

The contrast over an m-dimensional span reduces to a quadratic form in the
coefficients: its Hessian is twice the empirical Gram matrix of the basis
along the paths, and its linear part is built from raw path increments.
Both integrals use left-point discretization, the unbiased choice for the
increment integral.

A fitted dimension is kept only while the stability gate
``L(m) * (norm of the inverse Gram v 1) <= gate_const * NT / log(NT)``
holds; outside that event the estimator is the zero function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, compute_L, eval_all
from .exceptions import NumericsError, ParameterError, SingularMatrixError
from .linalg import SymMatrix, cholesky_solve, inv_op_norm, sym_eigen_min
from .simulate import PathBundle


@dataclass(frozen=True)
class TruncationConstants:
    """Stability gate threshold for a given observation budget.

    ``gate_const`` is (3 log(3/2) - 1) / (8 T); the gate compares
    L(m) * (inverse-Gram norm v 1) against gate_const * NT / log(NT).
    """

    gate_const: float
    threshold: float

    @classmethod
    def for_observations(cls, n_paths: int, horizon: float) -> "TruncationConstants":
        total = n_paths * horizon
        if total <= 1:
            raise ParameterError(f"need N * T > 1 for a positive threshold, got {total}")
        gate_const = (3.0 * np.log(1.5) - 1.0) / (8.0 * horizon)
        return cls(gate_const=gate_const, threshold=gate_const * total / np.log(total))


@dataclass(frozen=True, eq=False)
class DriftFit:
    """Least squares fit on the first ``dim`` basis functions.

    ``truncated`` means the stability gate failed (or the Gram system was
    singular) and the fit is the zero function.  ``norm_sq`` is the squared
    empirical norm of the fitted function and ``objective`` the contrast
    value it attains.
    """

    dim: int
    coeffs: np.ndarray
    gram_min_eig: float
    gram_inv_norm: float
    truncated: bool
    norm_sq: float
    objective: float
    gate_bound: float
    gate_threshold: float


def _flat_left(bundle: PathBundle) -> np.ndarray:
    return bundle.left_values().reshape(-1)


def empirical_inner(bundle: PathBundle, f, g) -> float:
    """Path- and time-averaged product: (1/NT) sum_i int f(X^i) g(X^i) ds."""
    x = _flat_left(bundle)
    products = np.asarray(f(x), dtype=float) * np.asarray(g(x), dtype=float)
    if not np.all(np.isfinite(products)):
        raise NumericsError("non-finite integrand values on visited states")
    return float(np.sum(products)) * bundle.grid.dt / bundle.observation_time


def gram_matrix(bundle: PathBundle, spec: BasisSpec, m: int) -> SymMatrix:
    """Empirical Gram matrix of the first m basis functions.

    Entries are accumulated with one dot product per pair over the flattened
    path-major samples, so the leading block for a smaller dimension is
    bitwise identical to a direct smaller computation.
    """
    rows = eval_all(spec, m, _flat_left(bundle))
    scale = bundle.grid.dt / bundle.observation_time
    out = np.zeros((m, m))
    for j in range(m):
        for k in range(j, m):
            out[j, k] = np.dot(rows[j], rows[k]) * scale
    return SymMatrix(out)


def empirical_vector(bundle: PathBundle, spec: BasisSpec, m: int) -> np.ndarray:
    """Basis functions integrated against raw path increments, scaled by 1/NT."""
    rows = eval_all(spec, m, _flat_left(bundle))
    dx = bundle.increments().reshape(-1)
    out = np.empty(m)
    for j in range(m):
        out[j] = np.dot(rows[j], dx) / bundle.observation_time
    return out


def _zero_fit(m, min_eig, inv_norm, gate_bound, threshold) -> DriftFit:
    return DriftFit(
        dim=m,
        coeffs=np.zeros(m),
        gram_min_eig=min_eig,
        gram_inv_norm=inv_norm,
        truncated=True,
        norm_sq=0.0,
        objective=0.0,
        gate_bound=gate_bound,
        gate_threshold=threshold,
    )


def fit_projection(
    bundle: PathBundle,
    spec: BasisSpec,
    m: int,
    constants: TruncationConstants | None = None,
    apply_gate: bool = True,
) -> DriftFit:
    """Fit the drift on the first m basis functions.

    With ``apply_gate=True`` the stability gate decides truncation; a failed
    gate is a valid zero fit, not an error.  ``apply_gate=False`` keeps the
    raw least squares fit (used by the benchmark protocol, where the
    theoretical gate is unreachable at small N * T) but still records the
    gate diagnostics, and still truncates when the Gram system is singular.
    """
    if constants is None:
        constants = TruncationConstants.for_observations(bundle.n_paths, bundle.grid.horizon)
    gram = gram_matrix(bundle, spec, m)
    vector = empirical_vector(bundle, spec, m)
    min_eig = sym_eigen_min(gram)
    inv_norm = 1.0 / min_eig if min_eig > 0 else float("inf")
    gate_bound = compute_L(spec, m).value * max(inv_norm, 1.0)
    if apply_gate and not gate_bound <= constants.threshold:
        return _zero_fit(m, min_eig, inv_norm, gate_bound, constants.threshold)
    try:
        coeffs = cholesky_solve(gram, vector)
    except SingularMatrixError:
        return _zero_fit(m, min_eig, inv_norm, gate_bound, constants.threshold)
    quad = float(coeffs @ gram.a @ coeffs)
    return DriftFit(
        dim=m,
        coeffs=coeffs,
        gram_min_eig=min_eig,
        gram_inv_norm=inv_norm,
        truncated=False,
        norm_sq=quad,
        objective=quad - 2.0 * float(coeffs @ vector),
        gate_bound=gate_bound,
        gate_threshold=constants.threshold,
    )


def evaluate_fit(fit: DriftFit, spec: BasisSpec, x):
    """Fitted drift at x; the zero function when truncated."""
    xs = np.asarray(x, dtype=float)
    if fit.truncated:
        out = np.zeros(xs.shape)
        return float(out) if xs.ndim == 0 else out
    values = fit.coeffs @ eval_all(spec, fit.dim, xs)
    return float(values) if xs.ndim == 0 else values


def objective_gamma(bundle: PathBundle, spec: BasisSpec, theta) -> float:
    """Contrast value of the span element with the given coefficients."""
    theta = np.asarray(theta, dtype=float)
    m = theta.size
    gram = gram_matrix(bundle, spec, m)
    vector = empirical_vector(bundle, spec, m)
    return float(theta @ gram.a @ theta - 2.0 * theta @ vector)
