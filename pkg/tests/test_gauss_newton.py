import numpy as np
import pytest

from almnet.gauss_newton import (
    EvalCounters,
    aug_lagrangian,
    build_linearization,
    gn_model_value,
    gn_run,
    grad_aug_lagrangian,
    linearize_stage,
)
from almnet.network import Dataset, NetworkSpec, PrimalPoint, residual_F
from almnet.oracles import dense_system, fd_gradient, rel_inf_error
from almnet.stages import as_dense
from almnet.testing import random_network_instance


def test_aug_lagrangian_definition():
    rng = np.random.default_rng(0)
    spec, ds, point = random_network_instance(rng)
    lam = rng.standard_normal(spec.total_x)
    beta = 2.5
    from almnet.network import cost_f

    Fv = residual_F(spec, point, ds.A)
    want = cost_f(spec, point, ds.y, ds.A) + lam @ Fv + 0.5 * beta * Fv @ Fv
    assert aug_lagrangian(spec, point, lam, beta, ds) == pytest.approx(want, rel=1e-14)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(3):
        spec, ds, point = random_network_instance(rng, dims=(2, 3, 2), m=3)
        lam = rng.standard_normal(spec.total_x)
        beta = float(rng.uniform(0.5, 5.0))

        def L(z):
            return aug_lagrangian(
                spec, PrimalPoint(z[: spec.total_w], z[spec.total_w:]), lam, beta, ds
            )

        g = grad_aug_lagrangian(spec, point, lam, beta, ds)
        assert rel_inf_error(g, fd_gradient(L, point.z)) <= 1e-7


def test_gradient_valid_at_zero_beta():
    # the formula is affine in beta; beta=0 gives the plain Lagrangian gradient
    rng = np.random.default_rng(2)
    spec, ds, point = random_network_instance(rng, dims=(2, 3, 1), m=3)
    lam = rng.standard_normal(spec.total_x)
    g0 = grad_aug_lagrangian(spec, point, lam, 0.0, ds)
    g1 = grad_aug_lagrangian(spec, point, lam, 1.0, ds)
    g2 = grad_aug_lagrangian(spec, point, lam, 2.0, ds)
    assert np.allclose(g2 - g1, g1 - g0, atol=1e-10)


def test_stage_jacobians_match_finite_differences():
    rng = np.random.default_rng(3)
    spec, ds, point = random_network_instance(rng, dims=(2, 3, 2), m=4)
    from almnet.network import stage_map

    j = 1
    w_j = point.w[spec.w_slice(j)]
    x_prev = ds.x0
    Jx, Jw = linearize_stage(spec, j, w_j, x_prev)
    h0 = stage_map(spec, j, w_j, x_prev)
    for k in range(w_j.size):
        e = np.zeros_like(w_j)
        e[k] = 1e-6
        fd = (stage_map(spec, j, w_j + e, x_prev) - stage_map(spec, j, w_j - e, x_prev)) / 2e-6
        assert np.allclose(as_dense(Jw)[:, k], fd, atol=1e-6)
    for k in range(x_prev.size):
        e = np.zeros_like(x_prev)
        e[k] = 1e-6
        fd = (stage_map(spec, j, w_j, x_prev + e) - stage_map(spec, j, w_j, x_prev - e)) / 2e-6
        assert np.allclose(as_dense(Jx)[:, k], fd, atol=1e-6)
    assert h0.shape == (spec.m * spec.dims[j],)


def test_linearization_model_matches_aug_lagrangian_at_center():
    # G(z) = L_beta(z, lam) + ||lam||^2 / (2 beta) when evaluated at the center
    rng = np.random.default_rng(4)
    spec, ds, point = random_network_instance(rng, dims=(3, 4, 2), m=4)
    lam = rng.standard_normal(spec.total_x)
    beta = 3.0
    stages = build_linearization(spec, point, lam, beta, ds)
    model = gn_model_value(stages, point)
    L = aug_lagrangian(spec, point, lam, beta, ds)
    assert model == pytest.approx(L + lam @ lam / (2 * beta), rel=1e-12)


def test_descent_identity_against_dense_jacobian():
    # <grad L, p> = -||J p||^2 for the full GN direction p
    rng = np.random.default_rng(5)
    spec, ds, point = random_network_instance(rng, dims=(3, 4, 2), m=4)
    lam = rng.standard_normal(spec.total_x)
    beta = 2.0
    stages = build_linearization(spec, point, lam, beta, ds)
    from almnet.fdp import fdp_solve

    zbar = fdp_solve(stages)
    p = np.concatenate([zbar.w - point.w, zbar.x - point.x])
    g = grad_aug_lagrangian(spec, point, lam, beta, ds)
    J = dense_system(stages).J
    lhs = float(g @ p)
    rhs = -float(np.sum((J @ p) ** 2))
    assert abs(lhs - rhs) <= 1e-8 * (1.0 + abs(rhs))


def test_gn_converges_and_monotone():
    rng = np.random.default_rng(6)
    spec, ds, point = random_network_instance(rng, dims=(3, 5, 2), m=5)
    lam = np.zeros(spec.total_x)
    counters = EvalCounters()
    res = gn_run(spec, ds, lam, 1.0, point, 1e-5, counters=counters)
    assert res.status == "converged"
    assert res.grad_inf <= 1e-5
    assert all(b <= a + 1e-12 for a, b in zip(res.trace_L, res.trace_L[1:]))
    assert counters.gn_iters == res.iters == len(res.steps)
    assert counters.l_evals > 0 and counters.grad_evals > 0


def test_gn_zero_iterations_at_stationary_start():
    rng = np.random.default_rng(7)
    spec, ds, point = random_network_instance(rng, dims=(2, 3, 1), m=3)
    lam = np.zeros(spec.total_x)
    first = gn_run(spec, ds, lam, 1.0, point, 1e-6)
    again = gn_run(spec, ds, lam, 1.0, first.point, 1e-6)
    assert again.status == "converged" and again.iters == 0


def test_gn_max_inner_status():
    rng = np.random.default_rng(8)
    spec, ds, point = random_network_instance(rng, dims=(3, 5, 2), m=5)
    lam = np.zeros(spec.total_x)
    res = gn_run(spec, ds, lam, 1.0, point, 1e-12, max_inner=1)
    assert res.status == "max_inner_reached"
    assert res.iters == 1


def test_armijo_steps_recorded_and_valid():
    rng = np.random.default_rng(9)
    spec, ds, point = random_network_instance(rng, dims=(3, 4, 1), m=4, noise=1.5)
    lam = 0.3 * rng.standard_normal(spec.total_x)
    res = gn_run(spec, ds, lam, 10.0, point, 1e-5, eta1=0.8, eta2=0.1)
    assert res.steps
    for st in res.steps:
        assert st["decr"] > 0
        assert st["L"] <= st["L0"] - 0.1 * st["tau"] * st["decr"] + 1e-12
        # tau is a power of eta1
        k = round(np.log(st["tau"]) / np.log(0.8)) if st["tau"] < 1.0 else 0
        assert st["tau"] == pytest.approx(0.8 ** k, rel=1e-12)
