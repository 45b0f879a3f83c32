"""Release-gate property suites runnable from the command line.

Each suite draws seeded random instances, evaluates a structural identity or
oracle equivalence, and reports the worst observed deviation against a fixed
tolerance.  A fault can be injected into the S-operator application to verify
the gate actually trips.
"""

from dataclasses import dataclass

import numpy as np

from .fdp import FdpWorkspace, fdp_solve, forward_recursion
from .gauss_newton import aug_lagrangian, grad_aug_lagrangian
from .oracles import dense_solve, dense_system, fd_gradient, rel_inf_error
from .network import PrimalPoint
from .stages import as_dense
from .testing import random_network_instance, random_stage_system


@dataclass
class PropertyResult:
    name: str
    passed: bool
    max_dev: float
    tol: float
    seed: int


def _dense_G(stages, j):
    B = as_dense(stages.B[j - 1])
    s_j = B.shape[1]
    K = (stages.mu_w / stages.rho[j - 1]) * np.eye(s_j) + B.T @ B
    return np.eye(B.shape[0]) - B @ np.linalg.solve(K, B.T)


def check_oracle_equivalence(seed, n_instances=100, tol=1e-8):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(1, 4))
        beta = float(rng.choice([0.5, 10.0]))
        mu_w = float(rng.choice([0.1, 1.0]))
        stages = random_stage_system(rng, n_stages=n, beta=beta, mu_w=mu_w)
        z_fdp = fdp_solve(stages)
        z_ref = dense_solve(dense_system(stages))
        worst = max(worst, rel_inf_error(z_fdp.z, z_ref.z))
    return PropertyResult("fdp_vs_dense_oracle", worst <= tol, worst, tol, seed)


def check_woodbury(seed, n_instances=20, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        stages = random_stage_system(rng, n_stages=int(rng.integers(1, 4)))
        ws = FdpWorkspace(stages)
        for j in range(1, stages.n_stages + 2):
            B = as_dense(stages.B[j - 1])
            inv = np.linalg.inv(
                np.eye(B.shape[0]) / stages.rho[j - 1] + B @ B.T / stages.mu_w
            )
            v = rng.standard_normal(B.shape[0])
            worst = max(worst, rel_inf_error(stages.rho[j - 1] * ws.apply_G(j, v), inv @ v))
    return PropertyResult("rhoG_woodbury_identity", worst <= tol, worst, tol, seed)


def check_s_identity(seed, n_instances=20, tol=1e-8, inject_sign_flip=False):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        stages = random_stage_system(rng, n_stages=int(rng.integers(2, 4)))
        ws = forward_recursion(stages)
        for j in range(2, stages.n_stages + 2):
            Mprev = ws.dense_M(j - 1)
            A = as_dense(stages.A[j - 1])
            S_dense = np.linalg.inv(
                np.linalg.inv(Mprev)
                + stages.rho[j - 1] * A.T @ _dense_G(stages, j) @ A
            )
            v = rng.standard_normal(stages.r(j - 1))
            got = ws.apply_S(j, v)
            if inject_sign_flip:
                got = -got
            worst = max(worst, rel_inf_error(got, S_dense @ v))
    return PropertyResult("apply_S_vs_dense_inverse", worst <= tol, worst, tol, seed)


def check_m_positive_definite(seed, n_instances=20, tol=0.0):
    rng = np.random.default_rng(seed)
    worst_min_eig = np.inf
    for _ in range(n_instances):
        stages = random_stage_system(rng, n_stages=int(rng.integers(1, 4)))
        ws = forward_recursion(stages)
        for j in range(1, stages.n_stages + 2):
            worst_min_eig = min(worst_min_eig, float(np.linalg.eigvalsh(ws.dense_M(j)).min()))
    return PropertyResult("M_positive_definite", worst_min_eig > tol, worst_min_eig, tol, seed)


def check_quadratic_completion(seed, n_instances=20, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n_terms = int(rng.integers(1, 4))
        p = int(rng.integers(1, 6))
        Hs, Vs, nus = [], [], []
        for _ in range(n_terms):
            ri = int(rng.integers(1, 7))
            Q = rng.standard_normal((ri, ri))
            Hs.append(Q @ Q.T + ri * np.eye(ri))
            Vs.append(rng.standard_normal((ri, p)))
            nus.append(rng.standard_normal(ri))
        # a full-rank term guarantees U is positive definite
        Hs.append(10.0 * np.eye(p))
        Vs.append(np.eye(p))
        nus.append(rng.standard_normal(p))
        U = sum(V.T @ np.linalg.solve(H, V) for V, H in zip(Vs, Hs))
        d = sum(V.T @ np.linalg.solve(H, nu) for V, H, nu in zip(Vs, Hs, nus))
        for _ in range(5):
            x = rng.standard_normal(p)
            lhs = sum(
                float((V @ x - nu) @ np.linalg.solve(H, V @ x - nu))
                for V, H, nu in zip(Vs, Hs, nus)
            )
            Ux_d = U @ x - d
            rhs = (
                float(Ux_d @ np.linalg.solve(U, Ux_d))
                - float(d @ np.linalg.solve(U, d))
                + sum(float(nu @ np.linalg.solve(H, nu)) for H, nu in zip(Hs, nus))
            )
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    return PropertyResult("quadratic_completion_identity", worst <= tol, worst, tol, seed)


def check_gradient(seed, n_instances=10, tol=1e-5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        spec, dataset, point = random_network_instance(rng, dims=(2, 3, 2), m=3)
        lam = rng.standard_normal(spec.total_x)
        beta = float(rng.choice([1.0, 5.0]))

        def L_of(z):
            p = PrimalPoint(z[: spec.total_w], z[spec.total_w:])
            return aug_lagrangian(spec, p, lam, beta, dataset)

        g = grad_aug_lagrangian(spec, point, lam, beta, dataset)
        g_fd = fd_gradient(L_of, point.z, h=1e-6)
        worst = max(worst, rel_inf_error(g, g_fd))
    return PropertyResult("aug_lagrangian_gradient_vs_fd", worst <= tol, worst, tol, seed)


def run_all(seed=1234, inject_fault=None):
    """All suites in order; returns the list of PropertyResult."""
    return [
        check_oracle_equivalence(seed),
        check_woodbury(seed + 1),
        check_s_identity(seed + 2, inject_sign_flip=(inject_fault == "apply-s-sign")),
        check_m_positive_definite(seed + 3),
        check_quadratic_completion(seed + 4),
        check_gradient(seed + 5),
    ]
