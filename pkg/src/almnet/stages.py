"""Stagewise linear-quadratic data for the direction subproblem.

A ``StageSystem`` holds, per stage j = 1..N+1, the coupling matrix ``A_j``
(r_j x r_{j-1}), the weight Jacobian ``B_j`` (r_j x s_j), the shift ``c_j``,
the residual weight ``rho_j`` and the flag ``delta_j`` marking whether stage j
owns a state variable (1 for j <= N, 0 for the terminal stage).  The stage-0
state ``x0`` is a fixed vector.  Matrices may be dense ndarrays or scipy
sparse; ``A_j`` may be None, meaning zero.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


def as_dense(mat):
    return mat.toarray() if sp.issparse(mat) else np.asarray(mat)


def gram(mat):
    """``mat @ mat.T`` as a dense array."""
    return as_dense(mat @ mat.T)


@dataclass
class StageSystem:
    A: list
    B: list
    c: list
    rho: np.ndarray
    delta: np.ndarray
    mu_w: float
    x0: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        n1 = len(self.c)
        assert len(self.A) == len(self.B) == n1
        assert self.rho.shape == self.delta.shape == (n1,)
        assert np.all(self.rho > 0) and self.mu_w > 0

    @property
    def n_stages(self):
        """N: number of state variable blocks."""
        return len(self.c) - 1

    def r(self, j):
        """State block length at stage j (0-based allowed: r(0) = len(x0))."""
        return self.x0.size if j == 0 else self.B[j - 1].shape[0]

    def s(self, j):
        """Weight block length at stage j."""
        return self.B[j - 1].shape[1]

    @property
    def total_w(self):
        return sum(self.s(j) for j in range(1, self.n_stages + 2))

    @property
    def total_x(self):
        return sum(self.r(j) for j in range(1, self.n_stages + 1))

    def w_slice(self, j):
        off = sum(self.s(i) for i in range(1, j))
        return slice(off, off + self.s(j))

    def x_slice(self, j):
        off = sum(self.r(i) for i in range(1, j))
        return slice(off, off + self.r(j))

    def apply_A(self, j, v):
        """``A_j v`` with the None-means-zero convention."""
        if self.A[j - 1] is None:
            return np.zeros(self.r(j))
        return self.A[j - 1] @ v

    def apply_At(self, j, v):
        if self.A[j - 1] is None:
            return np.zeros(self.r(j - 1))
        return self.A[j - 1].T @ v

    def stage_residual(self, j, point, homogeneous=False):
        """``delta_j x_j - A_j x_{j-1} - B_j w_j - c_j`` at a packed point.

        With ``homogeneous=True`` the shift ``c_j`` is dropped and the stage-0
        state is taken as zero (direction-space evaluation).
        """
        N = self.n_stages
        if j == 1:
            x_prev = np.zeros_like(self.x0) if homogeneous else self.x0
        else:
            x_prev = point.x[self.x_slice(j - 1)]
        res = -self.apply_A(j, x_prev) - self.B[j - 1] @ point.w[self.w_slice(j)]
        if j <= N:
            res = res + self.delta[j - 1] * point.x[self.x_slice(j)]
        if not homogeneous:
            res = res - self.c[j - 1]
        return res
