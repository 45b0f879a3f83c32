"""Inner solver: Gauss-Newton iterations on the penalized Lagrangian.

Each iteration linearizes the layer maps around the current iterate, solves
the resulting stagewise least-squares problem exactly by forward dynamic
programming, and backtracks along the difference direction until a sufficient
decrease holds.  Layer Jacobians are kept sparse: the state Jacobian is a
block diagonal of activation-scaled copies of ``W_j`` (one per sample) and the
weight Jacobian has one scaled input block per sample.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import LinesearchError, ShapeError
from .fdp import fdp_solve
from .network import PrimalPoint, activation_eval, cost_f, residual_F
from .stages import StageSystem


@dataclass
class EvalCounters:
    """Call counts surfaced in traces and benchmark tables."""

    l_evals: int = 0
    grad_evals: int = 0
    gn_iters: int = 0


def aug_lagrangian(spec, point, lam, beta, dataset, counters=None):
    """Penalized Lagrangian ``f(z) + <lam, F(z)> + (beta/2) ||F(z)||^2``."""
    if counters is not None:
        counters.l_evals += 1
    Fv = residual_F(spec, point, dataset.A)
    if lam.size != Fv.size:
        raise ShapeError(f"multiplier has {lam.size} entries, residual has {Fv.size}")
    f = cost_f(spec, point, dataset.y, dataset.A)
    return f + float(np.dot(lam, Fv)) + 0.5 * beta * float(np.dot(Fv, Fv))


def _layer_data(spec, point, dataset):
    """Per-layer pre-activation derivative and value matrices at a point."""
    weights, states = _unpack_blocks(spec, point, dataset)
    vals, derivs = [], []
    for j in range(1, spec.n_stages + 2):
        Z = weights[j - 1] @ states[j - 1]
        val, der = activation_eval(spec.activations[j - 1], Z)
        vals.append(val)
        derivs.append(der)
    return weights, states, vals, derivs


def _unpack_blocks(spec, point, dataset):
    """Weight matrices and the state matrices X_0..X_N (X_0 from the dataset)."""
    weights = [
        point.w[spec.w_slice(j)].reshape(spec.dims[j], spec.dims[j - 1])
        for j in range(1, spec.n_stages + 2)
    ]
    states = [dataset.A] + [
        point.x[spec.x_slice(j)].reshape(spec.dims[j], spec.m, order="F")
        for j in range(1, spec.n_stages + 1)
    ]
    return weights, states


def activation_diag(spec, j, w_j, x_prev):
    """Diagonal of the activation-derivative operator at stage j (length m*d_j)."""
    d_out, d_in = spec.dims[j], spec.dims[j - 1]
    W = np.asarray(w_j, dtype=float).reshape(d_out, d_in)
    X = np.asarray(x_prev, dtype=float).reshape(d_in, spec.m, order="F")
    _, der = activation_eval(spec.activations[j - 1], W @ X)
    return der.ravel(order="F")


def _state_jacobian(W, dmat):
    """Sparse ``D (I_m o W)``: one derivative-scaled copy of W per sample."""
    d_out, d_in = W.shape
    m = dmat.shape[1]
    rows = np.repeat(np.arange(m * d_out), d_in)
    cols = (
        np.tile(np.arange(d_in), m * d_out)
        + np.repeat(np.arange(m), d_out * d_in) * d_in
    )
    vals = (dmat.ravel(order="F")[:, None] * np.tile(W, (m, 1))).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(m * d_out, m * d_in))


def _weight_jacobian(X_prev, dmat):
    """Sparse per-sample weight Jacobian: row (i, r) holds ``D_ir x^{(i)T}``."""
    d_in, m = X_prev.shape
    d_out = dmat.shape[0]
    rows = np.repeat(np.arange(m * d_out), d_in)
    cols = np.tile(
        (np.arange(d_out)[:, None] * d_in + np.arange(d_in)[None, :]).ravel(), m
    )
    vals = (
        dmat.ravel(order="F")[:, None]
        * np.repeat(X_prev.T, d_out, axis=0)
    ).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(m * d_out, d_out * d_in))


def linearize_stage(spec, j, w_j, x_prev):
    """Sparse Jacobians of the stage map h_j with respect to states and weights."""
    d_out, d_in = spec.dims[j], spec.dims[j - 1]
    W = np.asarray(w_j, dtype=float).reshape(d_out, d_in)
    X = np.asarray(x_prev, dtype=float).reshape(d_in, spec.m, order="F")
    _, der = activation_eval(spec.activations[j - 1], W @ X)
    return _state_jacobian(W, der), _weight_jacobian(X, der)


def build_linearization(spec, point, lam, beta, dataset) -> StageSystem:
    """Stage data for the direction subproblem at the current iterate.

    ``A_1`` is zero (the stage-0 state is fixed); shifts fold the multiplier
    and the targets into the stage constants.
    """
    assert beta > 0
    N = spec.n_stages
    weights, states = _unpack_blocks(spec, point, dataset)
    A_list, B_list, c_list = [], [], []
    for j in range(1, N + 2):
        X_prev = states[j - 1]
        W = weights[j - 1]
        h, der = activation_eval(spec.activations[j - 1], W @ X_prev)
        h = h.ravel(order="F")
        Jw = _weight_jacobian(X_prev, der)
        if j == 1:
            A_j = None
            shift = h - Jw @ point.w[spec.w_slice(1)]
        else:
            A_j = _state_jacobian(W, der)
            shift = h - A_j @ point.x[spec.x_slice(j - 1)] - Jw @ point.w[spec.w_slice(j)]
        if j <= N:
            c_j = shift - lam[spec.x_slice(j)] / beta
        else:
            c_j = shift - dataset.y
        A_list.append(A_j)
        B_list.append(Jw)
        c_list.append(c_j)
    rho = np.concatenate([np.full(N, beta), [1.0 / spec.m]])
    delta = np.concatenate([np.ones(N), [0.0]])
    return StageSystem(A_list, B_list, c_list, rho, delta, spec.mu_w, dataset.x0)


def gn_model_value(stages: StageSystem, point, homogeneous=False):
    """Stagewise quadratic model value; ``homogeneous=True`` drops shifts and x0."""
    total = 0.0
    for j in range(1, stages.n_stages + 2):
        res = stages.stage_residual(j, point, homogeneous=homogeneous)
        w_j = point.w[stages.w_slice(j)]
        total += 0.5 * stages.rho[j - 1] * float(np.dot(res, res))
        total += 0.5 * stages.mu_w * float(np.dot(w_j, w_j))
    return total


def grad_aug_lagrangian(spec, point, lam, beta, dataset, counters=None):
    """Exact gradient of the penalized Lagrangian over (w, x), assembled stagewise."""
    if counters is not None:
        counters.grad_evals += 1
    N = spec.n_stages
    m = spec.m
    weights, states, vals, derivs = _layer_data(spec, point, dataset)
    # weighted stage residual matrices: beta * (X_j - h_j + Lam_j/beta) for
    # j <= N and (h_{N+1} - Y)/m for the terminal stage
    wres = []
    for j in range(1, N + 1):
        Lam = lam[spec.x_slice(j)].reshape(spec.dims[j], m, order="F")
        wres.append(beta * (states[j] - vals[j - 1]) + Lam)
    wres.append((vals[N] - dataset.Y) / m)
    gw = np.zeros(spec.total_w)
    gx = np.zeros(spec.total_x)
    for j in range(1, N + 2):
        # sign of the residual's dependence on h_j: -1 for constraint stages
        sgn = -1.0 if j <= N else 1.0
        back = sgn * (derivs[j - 1] * wres[j - 1])
        gw[spec.w_slice(j)] = (back @ states[j - 1].T).ravel() + spec.mu_w * point.w[spec.w_slice(j)]
        if j >= 2:
            pull = weights[j - 1].T @ back
            gx[spec.x_slice(j - 1)] += pull.ravel(order="F")
    for j in range(1, N + 1):
        gx[spec.x_slice(j)] += wres[j - 1].ravel(order="F")
    return np.concatenate([gw, gx])


def linesearch(spec, dataset, stages, point, direction, lam, beta,
               eta1=0.8, eta2=0.1, backtrack_cap=100, L0=None, counters=None):
    """Backtracking along a direction until the model-decrease test holds.

    The decrease measure is the homogeneous model value of the direction
    (shifts and the fixed stage-0 state zeroed).
    """
    decr = gn_model_value(stages, direction, homogeneous=True)
    if L0 is None:
        L0 = aug_lagrangian(spec, point, lam, beta, dataset, counters)
    tau = 1.0
    for _ in range(backtrack_cap + 1):
        cand = PrimalPoint(point.w + tau * direction.w, point.x + tau * direction.x)
        L = aug_lagrangian(spec, cand, lam, beta, dataset, counters)
        if L <= L0 - eta2 * tau * decr:
            return tau, cand, L, L0, decr
        tau *= eta1
    raise LinesearchError(
        f"no sufficient decrease after {backtrack_cap} backtracks "
        f"(L0={L0:.6e}, model decrease={decr:.3e})"
    )


@dataclass
class GnResult:
    point: PrimalPoint
    iters: int
    status: str
    grad_inf: float
    trace_L: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # per accepted step: tau, L0, L, decr


def gn_run(spec, dataset, lam, beta, z_start, eps_inner, max_inner=200,
           eta1=0.8, eta2=0.1, backtrack_cap=100, counters=None) -> GnResult:
    """Drive Gauss-Newton iterations until the gradient max-norm meets eps_inner.

    Stationarity is checked on the incoming point first, so an already
    stationary start returns with zero iterations.
    """
    assert beta > 0 and eps_inner > 0
    z = z_start.copy()
    trace_L = []
    steps = []
    for it in range(max_inner + 1):
        g = grad_aug_lagrangian(spec, z, lam, beta, dataset, counters)
        grad_inf = float(np.max(np.abs(g))) if g.size else 0.0
        if grad_inf <= eps_inner:
            return GnResult(z, it, "converged", grad_inf, trace_L, steps)
        if it == max_inner:
            return GnResult(z, it, "max_inner_reached", grad_inf, trace_L, steps)
        stages = build_linearization(spec, z, lam, beta, dataset)
        zbar = fdp_solve(stages)
        direction = PrimalPoint(zbar.w - z.w, zbar.x - z.x)
        try:
            tau, z, L, L0, decr = linesearch(
                spec, dataset, stages, z, direction, lam, beta,
                eta1=eta1, eta2=eta2, backtrack_cap=backtrack_cap, counters=counters,
            )
        except LinesearchError:
            return GnResult(z, it, "linesearch_failure", grad_inf, trace_L, steps)
        trace_L.append(L)
        steps.append({"tau": tau, "L0": L0, "L": L, "decr": decr})
        if counters is not None:
            counters.gn_iters += 1
    return GnResult(z, max_inner, "max_inner_reached", grad_inf, trace_L, steps)
