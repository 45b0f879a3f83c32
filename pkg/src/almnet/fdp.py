"""Exact solution of the stagewise direction subproblem by forward dynamic programming.

The strongly convex block-bidiagonal least-squares problem described by a
:class:`~almnet.stages.StageSystem` is solved in one forward value-function
sweep plus one backward substitution sweep.  Per stage, two SPD factorizations
are cached: the small weight system ``(mu_w/rho_j) I + B_j^T B_j`` (through
which the eliminations ``E_j`` and ``G_j`` are applied) and the value matrix
``M_j``.  ``M_1`` is never factorized or even formed: ``M_1^{-1} = rho_1 G_1``
is applied through the small factorization, and products ``M_1 v`` expand to
``v / rho_1 + B_1 (B_1^T v) / mu_w``.  The ``S_j`` operators are applied via
the two-solve procedure, never materialized.
"""

import numpy as np
import scipy.linalg as sla

from .errors import NumericError
from .network import PrimalPoint
from .stages import StageSystem, gram


def _cho(mat, what):
    try:
        return sla.cho_factor(mat, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        w = np.linalg.eigvalsh(mat)
        raise NumericError(f"{what} not positive definite (min eigenvalue {w.min():.3e})") from exc


class FdpWorkspace:
    """Cached factorizations and recursion vectors for one StageSystem solve."""

    def __init__(self, stages: StageSystem):
        self.stages = stages
        N = stages.n_stages
        # weight-system factors, all stages
        self.kfac = []
        for j in range(1, N + 2):
            B = stages.B[j - 1]
            K = (stages.mu_w / stages.rho[j - 1]) * np.eye(stages.s(j)) + gram(B.T)
            self.kfac.append(_cho(K, f"stage {j} weight system"))
        # dense value matrices and factors for j >= 2, filled by forward_recursion
        self.mmat = {}
        self.mfac = {}
        self.q = {}        # q_0..q_N
        self.qtilde = {}   # S_j q_{j-1}, j = 1..N+1
        self.ctilde = {}

    def apply_E(self, j, v):
        """``E_j v = ((mu_w/rho_j) I + B_j^T B_j)^{-1} B_j^T v``."""
        B = self.stages.B[j - 1]
        return sla.cho_solve(self.kfac[j - 1], B.T @ v, check_finite=False)

    def apply_G(self, j, v):
        """``G_j v = v - B_j E_j v``."""
        return v - self.stages.B[j - 1] @ self.apply_E(j, v)

    def mult_M(self, j, v):
        """``M_j v``; stage 1 expands the definition instead of storing M_1."""
        st = self.stages
        if j == 1:
            B = st.B[0]
            return v / st.rho[0] + (B @ (B.T @ v)) / st.mu_w
        return self.mmat[j] @ v

    def solve_M(self, j, v):
        """``M_j^{-1} v``; stage 1 uses ``M_1^{-1} = rho_1 G_1``."""
        if j == 1:
            return self.stages.rho[0] * self.apply_G(1, v)
        return sla.cho_solve(self.mfac[j], v, check_finite=False)

    def apply_S(self, j, v):
        """``S_j v``; identity at j = 1, two-solve procedure otherwise."""
        if j == 1:
            return np.asarray(v, dtype=float)
        st = self.stages
        t = self.mult_M(j - 1, v)
        vbar = self.solve_M(j, st.apply_A(j, t))
        return self.mult_M(j - 1, v - st.apply_At(j, vbar))

    def dense_M(self, j):
        """Densified M_j, for diagnostics and oracle comparisons."""
        st = self.stages
        if j == 1:
            return np.eye(st.r(1)) / st.rho[0] + gram(st.B[0]) / st.mu_w
        return self.mmat[j]


def forward_recursion(stages: StageSystem) -> FdpWorkspace:
    """Forward sweep: value matrices M_j, their factors, and vectors q, q~, c~."""
    ws = FdpWorkspace(stages)
    N = stages.n_stages
    ws.q[0] = stages.x0.copy()
    for j in range(1, N + 1):
        ws.ctilde[j] = ws.solve_M(j, stages.c[j - 1])
        ws.qtilde[j] = ws.apply_S(j, ws.q[j - 1])
        ws.q[j] = stages.rho[j - 1] * ws.apply_G(j, stages.apply_A(j, ws.qtilde[j])) + ws.ctilde[j]
        # M_{j+1} = I/rho + B B^T / mu_w + A M_j A^T
        jn = j + 1
        M = np.eye(stages.r(jn)) / stages.rho[jn - 1] + gram(stages.B[jn - 1]) / stages.mu_w
        A = stages.A[jn - 1]
        if A is not None:
            if j == 1:
                # A M_1 A^T without densifying M_1
                M += gram(A) / stages.rho[0] + gram(A @ stages.B[0]) / stages.mu_w
            else:
                AM = np.asarray(A @ ws.mmat[j])
                M += np.asarray(A @ AM.T)
        ws.mmat[jn] = M
        ws.mfac[jn] = _cho(M, f"stage {jn} value matrix")
    return ws


def backward_recursion(stages: StageSystem, ws: FdpWorkspace) -> PrimalPoint:
    """Backward sweep: recover the minimizing weights and states stage by stage."""
    N = stages.n_stages
    n1 = N + 1
    w = np.zeros(stages.total_w)
    x = np.zeros(stages.total_x)
    if N == 0:
        # single ridge stage, no state variables
        w[stages.w_slice(1)] = -ws.apply_E(1, stages.apply_A(1, stages.x0) + stages.c[0])
        return PrimalPoint(w, x)
    c_last = stages.c[n1 - 1]
    xt = -ws.apply_S(n1, stages.apply_At(n1, ws.apply_G(n1, c_last)))
    ws.qtilde[n1] = ws.apply_S(n1, ws.q[N])
    x_j = ws.qtilde[n1] + stages.rho[n1 - 1] * xt
    x[stages.x_slice(N)] = x_j
    w[stages.w_slice(n1)] = -ws.apply_E(n1, stages.apply_A(n1, x_j) + c_last)
    for j in range(N, 1, -1):
        c_j = stages.c[j - 1]
        xt = ws.apply_S(j, stages.apply_At(j, ws.apply_G(j, x_j - c_j)))
        x_prev = ws.qtilde[j] + stages.rho[j - 1] * xt
        x[stages.x_slice(j - 1)] = x_prev
        w[stages.w_slice(j)] = ws.apply_E(j, x_j - stages.apply_A(j, x_prev) - c_j)
        x_j = x_prev
    w[stages.w_slice(1)] = ws.apply_E(
        1, x[stages.x_slice(1)] - stages.apply_A(1, stages.x0) - stages.c[0]
    )
    return PrimalPoint(w, x)


def fdp_solve(stages: StageSystem) -> PrimalPoint:
    """Unique global minimizer of the stagewise quadratic."""
    ws = forward_recursion(stages)
    return backward_recursion(stages, ws)
