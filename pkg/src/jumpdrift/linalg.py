"""Dense symmetric kernels for the small Gram systems.

Dimensions stay tiny (m <= 6 in the benchmark protocol, a few dozen in
stress tests), so plain Cholesky and cyclic Jacobi sweeps are used rather
than a LAPACK dependency; both are deterministic and accurate to round-off
at these sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, SingularMatrixError

PIVOT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Symmetric matrix; the upper triangle is authoritative on construction."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError(f"expected a square matrix, got shape {a.shape}")
        upper = np.triu(a)
        object.__setattr__(self, "a", upper + np.triu(a, 1).T)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def cholesky_solve(matrix: SymMatrix, rhs) -> np.ndarray:
    """Solve A x = rhs for positive definite A.

    Raises SingularMatrixError when a pivot falls below PIVOT_RTOL times the
    largest diagonal entry; callers treat that as a failed stability gate.
    """
    a = matrix.a
    b = np.asarray(rhs, dtype=float)
    m = matrix.dim
    if b.shape != (m,):
        raise ParameterError(f"rhs must have shape ({m},), got {b.shape}")
    max_diag = float(np.max(a.diagonal())) if m else 0.0
    if max_diag <= 0:
        raise SingularMatrixError("matrix has no positive diagonal entry")
    tol = PIVOT_RTOL * max_diag
    lower = np.zeros((m, m))
    for k in range(m):
        pivot = a[k, k] - lower[k, :k] @ lower[k, :k]
        if not np.isfinite(pivot) or pivot < tol:
            raise SingularMatrixError(f"pivot {pivot:.3e} below threshold {tol:.3e} at index {k}")
        lower[k, k] = np.sqrt(pivot)
        if k + 1 < m:
            lower[k + 1 :, k] = (a[k + 1 :, k] - lower[k + 1 :, :k] @ lower[k, :k]) / lower[k, k]
    y = np.empty(m)
    for k in range(m):
        y[k] = (b[k] - lower[k, :k] @ y[:k]) / lower[k, k]
    x = np.empty(m)
    for k in reversed(range(m)):
        x[k] = (y[k] - lower[k + 1 :, k] @ x[k + 1 :]) / lower[k, k]
    return x


def jacobi_eigh(matrix: SymMatrix, max_sweeps: int = 100):
    """All eigenvalues (ascending) and eigenvectors by cyclic Jacobi sweeps."""
    a = matrix.a.copy()
    m = matrix.dim
    vectors = np.eye(m)
    scale = float(np.max(np.abs(a))) if m else 0.0
    if m > 1 and scale > 0:
        for _ in range(max_sweeps):
            off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
            if off <= 1e-15 * scale * m:
                break
            for p in range(m - 1):
                for q in range(p + 1, m):
                    apq = a[p, q]
                    if abs(apq) <= 1e-18 * scale:
                        continue
                    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                    c = 1.0 / np.hypot(1.0, t)
                    s = t * c
                    col_p, col_q = a[:, p].copy(), a[:, q].copy()
                    a[:, p] = c * col_p - s * col_q
                    a[:, q] = s * col_p + c * col_q
                    row_p, row_q = a[p, :].copy(), a[q, :].copy()
                    a[p, :] = c * row_p - s * row_q
                    a[q, :] = s * row_p + c * row_q
                    vec_p, vec_q = vectors[:, p].copy(), vectors[:, q].copy()
                    vectors[:, p] = c * vec_p - s * vec_q
                    vectors[:, q] = s * vec_p + c * vec_q
    order = np.argsort(a.diagonal(), kind="stable")
    return a.diagonal()[order].copy(), vectors[:, order]


def sym_eigen_min(matrix: SymMatrix) -> float:
    """Minimum eigenvalue of a symmetric matrix."""
    return float(jacobi_eigh(matrix)[0][0])


def inv_op_norm(matrix: SymMatrix) -> float:
    """Operator norm of the inverse: 1 / lambda_min, or +inf when singular."""
    smallest = sym_eigen_min(matrix)
    return 1.0 / smallest if smallest > 0 else float("inf")
