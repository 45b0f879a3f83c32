"""Desk-scale reference solvers: dense least-squares assembly and finite differences.

These deliberately share nothing with the recursive solver beyond the
StageSystem data, so agreement between the two is a meaningful certificate.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NumericError, OracleError
from .network import PrimalPoint
from .stages import StageSystem, as_dense

MAX_ORACLE_COLUMNS = 5000


@dataclass
class DenseSystem:
    """Stacked residual matrix J and offset b; ``(1/2)||J z - b||^2`` is the model."""

    J: np.ndarray
    b: np.ndarray
    n_w: int
    n_x: int


def dense_system(stages: StageSystem) -> DenseSystem:
    """Materialize the stagewise quadratic as one dense least-squares system.

    Columns are ordered (w blocks, x blocks) to match PrimalPoint packing;
    the fixed stage-0 term is folded into b.
    """
    N = stages.n_stages
    n_w, n_x = stages.total_w, stages.total_x
    n_cols = n_w + n_x
    if n_cols > MAX_ORACLE_COLUMNS:
        raise OracleError(f"instance has {n_cols} columns; dense oracle is capped at {MAX_ORACLE_COLUMNS}")
    row_sizes = [stages.r(j) for j in range(1, N + 2)]
    n_rows = sum(row_sizes) + n_w
    J = np.zeros((n_rows, n_cols))
    b = np.zeros(n_rows)
    row = 0
    for j in range(1, N + 2):
        rj = stages.r(j)
        srt = np.sqrt(stages.rho[j - 1])
        rows = slice(row, row + rj)
        if j <= N:
            cs = stages.x_slice(j)
            J[rows, n_w + cs.start:n_w + cs.stop] = stages.delta[j - 1] * np.eye(rj)
        if j == 1:
            if stages.A[0] is not None:
                b[rows] = srt * (stages.c[0] + as_dense(stages.A[0]) @ stages.x0)
            else:
                b[rows] = srt * stages.c[0]
        else:
            cp = stages.x_slice(j - 1)
            if stages.A[j - 1] is not None:
                J[rows, n_w + cp.start:n_w + cp.stop] = -as_dense(stages.A[j - 1])
            b[rows] = srt * stages.c[j - 1]
        ws = stages.w_slice(j)
        J[rows, ws] = -as_dense(stages.B[j - 1])
        J[rows] *= srt
        row += rj
    J[row:, :n_w] = np.sqrt(stages.mu_w) * np.eye(n_w)
    return DenseSystem(J, b, n_w, n_x)


def dense_solve(system: DenseSystem) -> PrimalPoint:
    """Normal-equations solve of the dense system with an SPD factorization."""
    JtJ = system.J.T @ system.J
    rhs = system.J.T @ system.b
    try:
        z = sla.cho_solve(sla.cho_factor(JtJ, lower=True), rhs)
    except sla.LinAlgError as exc:
        raise OracleError("dense normal equations are rank deficient") from exc
    resid = JtJ @ z - rhs
    scale = 1.0 + float(np.max(np.abs(rhs))) if rhs.size else 1.0
    if rhs.size and np.max(np.abs(resid)) > 1e-10 * scale:
        raise NumericError("normal-equations residual exceeds tolerance")
    return PrimalPoint(z[: system.n_w], z[system.n_w:])


def fd_gradient(fn, z, h=1e-6):
    """Central-difference gradient of a scalar field, coordinate by coordinate."""
    z = np.asarray(z, dtype=float)
    g = np.zeros_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        hi, lo = fn(z + e), fn(z - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericError(f"non-finite evaluation while differencing coordinate {i}")
        g[i] = (hi - lo) / (2.0 * h)
    return g


def rel_inf_error(a, b):
    """Max-norm difference scaled by ``1 + ||b||_inf``; stable near zero."""
    a, b = np.asarray(a), np.asarray(b)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(b))))
