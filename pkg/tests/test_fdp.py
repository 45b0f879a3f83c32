import numpy as np
import pytest

from almnet.errors import NumericError
from almnet.fdp import FdpWorkspace, backward_recursion, fdp_solve, forward_recursion
from almnet.oracles import dense_solve, dense_system, rel_inf_error
from almnet.stages import StageSystem, as_dense
from almnet.testing import random_stage_system


def quad_value(stages, point):
    total = 0.0
    for j in range(1, stages.n_stages + 2):
        res = stages.stage_residual(j, point)
        total += 0.5 * stages.rho[j - 1] * float(res @ res)
        w_j = point.w[stages.w_slice(j)]
        total += 0.5 * stages.mu_w * float(w_j @ w_j)
    return total


def test_matches_dense_oracle_small():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        stages = random_stage_system(rng, n_stages=n)
        got = fdp_solve(stages)
        ref = dense_solve(dense_system(stages))
        assert rel_inf_error(got.z, ref.z) <= 1e-9


def test_solution_is_global_minimum():
    rng = np.random.default_rng(1)
    stages = random_stage_system(rng, n_stages=2)
    sol = fdp_solve(stages)
    v0 = quad_value(stages, sol)
    from almnet.network import PrimalPoint

    for _ in range(10):
        pert = PrimalPoint(
            sol.w + 1e-3 * rng.standard_normal(sol.w.shape),
            sol.x + 1e-3 * rng.standard_normal(sol.x.shape),
        )
        assert quad_value(stages, pert) >= v0


def test_none_A1_equals_zero_A1():
    rng = np.random.default_rng(2)
    stages = random_stage_system(rng, n_stages=2, zero_A1=True)
    assert stages.A[0] is None
    explicit = StageSystem(
        [np.zeros((stages.r(1), stages.r(0)))] + stages.A[1:],
        stages.B, stages.c, stages.rho, stages.delta, stages.mu_w, stages.x0,
    )
    a = fdp_solve(stages)
    b = fdp_solve(explicit)
    assert np.allclose(a.z, b.z, atol=1e-12)


def test_degenerate_single_stage_is_ridge():
    # N = 0: minimize rho/2 ||A x0 + B w + c||^2 + mu/2 ||w||^2
    rng = np.random.default_rng(3)
    stages = random_stage_system(rng, n_stages=0, rho_last=0.7)
    sol = fdp_solve(stages)
    B = as_dense(stages.B[0])
    rhs = stages.apply_A(1, stages.x0) + stages.c[0]
    ref = np.linalg.solve(
        stages.mu_w / stages.rho[0] * np.eye(B.shape[1]) + B.T @ B, -B.T @ rhs
    )
    assert np.allclose(sol.w, ref, atol=1e-10)
    assert sol.x.size == 0


def test_m1_never_densified():
    rng = np.random.default_rng(4)
    stages = random_stage_system(rng, n_stages=2)
    ws = forward_recursion(stages)
    assert 1 not in ws.mmat and 1 not in ws.mfac
    v = rng.standard_normal(stages.r(1))
    M1 = ws.dense_M(1)
    assert np.allclose(ws.mult_M(1, v), M1 @ v)
    assert np.allclose(ws.solve_M(1, v), np.linalg.solve(M1, v), atol=1e-10)


def test_value_matrix_recursion():
    rng = np.random.default_rng(5)
    stages = random_stage_system(rng, n_stages=3)
    ws = forward_recursion(stages)
    for j in range(2, stages.n_stages + 2):
        A = as_dense(stages.A[j - 1])
        want = (
            np.eye(stages.r(j)) / stages.rho[j - 1]
            + as_dense(stages.B[j - 1] @ stages.B[j - 1].T) / stages.mu_w
            + A @ ws.dense_M(j - 1) @ A.T
        )
        assert np.allclose(ws.dense_M(j), want, atol=1e-10)


def test_apply_S_two_solve_identity():
    rng = np.random.default_rng(6)
    stages = random_stage_system(rng, n_stages=2)
    ws = forward_recursion(stages)
    for j in (2, 3):
        Mprev = ws.dense_M(j - 1)
        A = as_dense(stages.A[j - 1])
        # rho_j G_j = ((1/rho_j) I + (1/mu_w) B_j B_j^T)^{-1}
        rhoG = np.linalg.inv(
            np.eye(stages.r(j)) / stages.rho[j - 1]
            + as_dense(stages.B[j - 1] @ stages.B[j - 1].T) / stages.mu_w
        )
        S = np.linalg.inv(np.linalg.inv(Mprev) + A.T @ rhoG @ A)
        v = rng.standard_normal(stages.r(j - 1))
        assert np.allclose(ws.apply_S(j, v), S @ v, atol=1e-8)


def test_workspace_rejects_indefinite_weight_system():
    rng = np.random.default_rng(7)
    stages = random_stage_system(rng, n_stages=1)
    stages.mu_w = -1.0  # bypasses the dataclass check deliberately
    with pytest.raises(NumericError):
        FdpWorkspace(stages)


def test_backward_needs_forward_quantities():
    rng = np.random.default_rng(8)
    stages = random_stage_system(rng, n_stages=1)
    ws = forward_recursion(stages)
    sol = backward_recursion(stages, ws)
    ref = dense_solve(dense_system(stages))
    assert rel_inf_error(sol.z, ref.z) <= 1e-9
