import numpy as np
import pytest

from almnet.alm import (
    AlmConfig,
    alm_run,
    epsilon_schedule,
    kkt_residuals,
    multiplier_update,
    penalty_update,
)
from almnet.datagen import TeacherConfig, gen_teacher_student, kaiming_init
from almnet.errors import ConfigError
from almnet.network import NetworkSpec, mse, residual_F, unpack


def small_problem(seed=0, d0=4, m=30, noise=0.0):
    cfg = TeacherConfig(d0=d0, hidden=(6, 3), d_out=1, noise=noise, m=m, seed=seed)
    train, test, _ = gen_teacher_student(cfg)
    spec = NetworkSpec((d0, 6, 3, 1), ("softplus", "softplus", "identity"), m=m, mu_w=0.1)
    return spec, train, test


def test_config_validation():
    AlmConfig().validate()
    with pytest.raises(ConfigError):
        AlmConfig(gamma=1.0).validate()
    with pytest.raises(ConfigError):
        AlmConfig(xi=1.0).validate()
    with pytest.raises(ConfigError):
        AlmConfig(alpha=0.5).validate()
    with pytest.raises(ConfigError):
        AlmConfig(eps=0.0).validate()
    with pytest.raises(ConfigError):
        AlmConfig(beta0=-1.0).validate()


def test_penalty_update_rule():
    # contraction holds: beta unchanged
    assert penalty_update(2.0, 0.5, 3, 2.0, 2.0, 0.5, 0.4, 1.0) == 2.0
    # contraction fails: max of xi*beta and beta0*(k+1)^alpha
    assert penalty_update(2.0, 0.5, 3, 2.0, 2.0, 0.5, 0.9, 1.0) == max(4.0, 0.5 * 16)
    assert penalty_update(0.1, 0.5, 3, 2.0, 2.0, 0.5, 0.9, 1.0) == 8.0


def test_epsilon_schedule_floors_at_eps_bar():
    assert epsilon_schedule(0.1, 1e-2) == 0.05
    assert epsilon_schedule(0.015, 1e-2) == 1e-2
    assert epsilon_schedule(1e-2, 1e-2) == 1e-2


def test_multiplier_update():
    lam = np.array([1.0, -2.0])
    F = np.array([0.5, 0.5])
    assert np.array_equal(multiplier_update(lam, 2.0, F), [2.0, -1.0])


def test_alm_converges_on_small_teacher_student():
    spec, train, test = small_problem()
    init = kaiming_init(spec, 0)
    mse0 = mse(spec, init, train)
    result = alm_run(spec, train, AlmConfig(), init)
    assert result.status == "converged"
    weights, _ = unpack(spec, result.point)
    assert mse(spec, weights, train) < mse0
    last = result.trace[-1]
    assert last["feas_inf"] <= 1e-3
    assert last["grad_inf"] <= 1e-2


def test_trace_columns_and_monotone_eps():
    from almnet.alm import TRACE_COLUMNS

    spec, train, _ = small_problem(seed=1)
    result = alm_run(spec, train, AlmConfig(), kaiming_init(spec, 1))
    eps = [row["eps_k"] for row in result.trace]
    for row in result.trace:
        assert tuple(row.keys()) == TRACE_COLUMNS
    assert all(b <= a for a, b in zip(eps, eps[1:]))
    assert eps[0] == 0.1
    ks = [row["k"] for row in result.trace]
    assert ks == list(range(len(ks)))


def test_beta_update_reverifies_from_trace():
    spec, train, _ = small_problem(seed=2)
    config = AlmConfig()
    init = kaiming_init(spec, 2)
    from almnet.network import cost_f, pack, unroll

    z0 = pack(spec, init, unroll(spec, init, train.A))
    beta0 = 1e-3 * cost_f(spec, z0, train.y, train.A)
    result = alm_run(spec, train, config, init)
    feas_prev = 0.0  # feasible start
    for k in range(len(result.trace) - 1):
        row, nxt = result.trace[k], result.trace[k + 1]
        want = penalty_update(
            row["beta"], beta0, k, config.xi, config.alpha, config.gamma,
            row["feas_inf"], feas_prev,
        )
        assert nxt["beta"] == want
        feas_prev = row["feas_inf"]


def test_kkt_certificate_consistent_with_trace():
    spec, train, _ = small_problem(seed=3)
    result = alm_run(spec, train, AlmConfig(), kaiming_init(spec, 3))
    assert result.status == "converged"
    feas, grad = kkt_residuals(spec, train, result.point, result.multiplier)
    assert feas == pytest.approx(result.trace[-1]["feas_inf"], rel=1e-12)
    # trace grad_inf was measured against lam^k + beta F = lam^{k+1}
    assert grad == pytest.approx(result.trace[-1]["grad_inf"], rel=1e-6, abs=1e-9)


def test_max_outer_reached_status():
    spec, train, _ = small_problem(seed=4)
    result = alm_run(spec, train, AlmConfig(max_outer=1), kaiming_init(spec, 4))
    assert result.status in ("max_outer_reached", "converged")
    assert result.outer_iters <= 1 or result.status == "max_outer_reached"


def test_fixed_beta0_respected():
    spec, train, _ = small_problem(seed=5)
    result = alm_run(spec, train, AlmConfig(beta0=0.25, max_outer=3), kaiming_init(spec, 5))
    assert result.trace[0]["beta"] == 0.25


def test_deterministic_rerun_identical():
    spec, train, _ = small_problem(seed=6)
    r1 = alm_run(spec, train, AlmConfig(), kaiming_init(spec, 6))
    r2 = alm_run(spec, train, AlmConfig(), kaiming_init(spec, 6))
    assert np.array_equal(r1.point.z, r2.point.z)
    for a, b in zip(r1.trace, r2.trace):
        assert all(a[c] == b[c] for c in a if c != "wall_ms")


def test_residual_feasibility_after_convergence():
    spec, train, _ = small_problem(seed=7)
    result = alm_run(spec, train, AlmConfig(), kaiming_init(spec, 7))
    F = residual_F(spec, result.point, train.A)
    assert np.max(np.abs(F)) <= 1e-3
