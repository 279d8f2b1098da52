"""Orthonormal function families on an interval.

Two families are provided: the trigonometric basis, compactly supported on
[left, right], and the Hermite functions on the whole line.  Hermite values
come from the normalized recurrence that carries the Gaussian factor along,
so no factorials or raw Hermite polynomials are ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericsError, ParameterError

TRIG = "trig"
HERMITE = "hermite"


@dataclass(frozen=True)
class BasisSpec:
    kind: str
    left: float | None = None
    right: float | None = None
    dim_cap: int | None = None

    def __post_init__(self):
        if self.kind not in (TRIG, HERMITE):
            raise ParameterError(f"unknown basis kind {self.kind!r}")
        if self.kind == TRIG:
            if self.left is None or self.right is None or not self.left < self.right:
                raise ParameterError(
                    f"trig basis requires left < right, got [{self.left}, {self.right}]"
                )
        if self.dim_cap is not None and self.dim_cap < 1:
            raise ParameterError(f"dim_cap must be >= 1, got {self.dim_cap}")

    @property
    def width(self) -> float:
        return self.right - self.left


@dataclass(frozen=True)
class LBound:
    """Sup over the interval of the squared basis vector, floored at 1."""

    dim: int
    value: float


def trig_basis(left: float, right: float, dim_cap: int | None = None) -> BasisSpec:
    return BasisSpec(kind=TRIG, left=left, right=right, dim_cap=dim_cap)


def hermite_basis(dim_cap: int | None = None) -> BasisSpec:
    return BasisSpec(kind=HERMITE, dim_cap=dim_cap)


def dimension_cap(n_paths: int, horizon: float) -> int:
    """Largest usable dimension for N paths on [0, T]: floor(N*T) + 1."""
    return int(np.floor(n_paths * horizon)) + 1


def growth_bound(spec: BasisSpec) -> float:
    """Constant g >= 1 with L(m) <= g * m for every m."""
    if spec.kind == TRIG:
        return max(1.0, 2.0 / spec.width)
    return 1.0


def _check_dim(spec: BasisSpec, m: int):
    if m < 1:
        raise ParameterError(f"dimension must be >= 1, got {m}")
    if spec.dim_cap is not None and m > spec.dim_cap:
        raise ParameterError(f"dimension {m} exceeds the cap {spec.dim_cap}")


def _trig_all(spec, m, xs):
    inside = ((xs >= spec.left) & (xs <= spec.right)).astype(float)
    u = (xs - spec.left) / spec.width
    out = np.empty((m, xs.size))
    out[0] = np.sqrt(1.0 / spec.width) * inside
    amp = np.sqrt(2.0 / spec.width)
    for j in range(1, m // 2 + 1):
        phase = (2.0 * np.pi * j) * u
        out[2 * j - 1] = amp * np.cos(phase) * inside
        if 2 * j + 1 <= m:
            out[2 * j] = amp * np.sin(phase) * inside
    return out


def _hermite_all(m, xs):
    out = np.empty((m, xs.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * xs * xs)
    if m > 1:
        out[1] = np.sqrt(2.0) * xs * out[0]
    for k in range(1, m - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * xs * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def eval_all(spec: BasisSpec, m: int, x) -> np.ndarray:
    """Evaluate the first m functions at x.

    Returns shape (m,) for scalar x and (m, len(x)) for array x.  The row
    for index j does not depend on m, so smaller evaluations are exact
    prefixes of larger ones.
    """
    _check_dim(spec, m)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    if not np.all(np.isfinite(xs)):
        raise ParameterError("basis evaluation requires finite arguments")
    out = _trig_all(spec, m, xs) if spec.kind == TRIG else _hermite_all(m, xs)
    return out[:, 0] if scalar else out


def eval_basis(spec: BasisSpec, j: int, x) -> float:
    """Value of the j-th basis function (1-indexed) at scalar x."""
    values = eval_all(spec, j, x)
    return float(values[-1]) if values.ndim == 1 else values[-1]


def _grid_sup(spec, m, lo, hi, n_points):
    """Sup of the squared basis vector on a grid, with one refinement pass."""
    xs = np.linspace(lo, hi, n_points)
    sums = np.sum(eval_all(spec, m, xs) ** 2, axis=0)
    at = int(np.argmax(sums))
    step = (hi - lo) / (n_points - 1)
    fine = np.linspace(max(lo, xs[at] - step), min(hi, xs[at] + step), 4001)
    fine_sums = np.sum(eval_all(spec, m, fine) ** 2, axis=0)
    return max(float(sums[at]), float(np.max(fine_sums)))


def compute_L(spec: BasisSpec, m: int) -> LBound:
    """1 v sup_x sum_{j<=m} phi_j(x)^2 over the support interval."""
    _check_dim(spec, m)
    if spec.kind == TRIG:
        if m % 2 == 1:
            # full cos^2 + sin^2 pairs plus the constant term
            raw = m / spec.width
        else:
            raw = _grid_sup(spec, m, spec.left, spec.right, max(10_000 * m, 10_001))
    else:
        reach = np.sqrt(2.0 * m + 1.0) + 8.0
        raw = _grid_sup(spec, m, -reach, reach, max(10_000 * m, 10_001))
    return LBound(dim=m, value=max(1.0, raw))


def _simpson_weights(n_intervals, h):
    w = np.ones(n_intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def project_coefficients(spec: BasisSpec, m: int, f, quadrature_n: int = 20_000) -> np.ndarray:
    """L2(dx) inner products of f with the first m basis functions.

    Composite Simpson quadrature on the support interval (trig) or on a
    range wide enough for the Gaussian envelope to vanish (Hermite).  Meant
    as a bias oracle for tests, not as part of the estimation pipeline.
    """
    _check_dim(spec, m)
    n_intervals = quadrature_n + (quadrature_n % 2)
    if spec.kind == TRIG:
        lo, hi = spec.left, spec.right
    else:
        reach = np.sqrt(2.0 * m + 1.0) + 10.0
        lo, hi = -reach, reach
    xs = np.linspace(lo, hi, n_intervals + 1)
    weights = _simpson_weights(n_intervals, (hi - lo) / n_intervals)
    fx = np.asarray(f(xs), dtype=float)
    coeffs = eval_all(spec, m, xs) @ (weights * fx)
    if not np.all(np.isfinite(coeffs)):
        raise NumericsError("quadrature produced non-finite coefficients")
    return coeffs
