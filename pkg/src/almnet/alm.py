"""Outer augmented Lagrangian loop with safeguard, multiplier and penalty updates.

Starting from a feasible point obtained by unrolling the initial weights, each
outer iteration minimizes the penalized Lagrangian to a relaxed inner
tolerance, updates the multiplier, and escalates the penalty whenever the
feasibility residual fails a fixed contraction factor.  Termination requires
the feasibility max-norm below ``eps`` and the (plain) Lagrangian gradient
max-norm below the relaxed floor ``eps_bar``.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .gauss_newton import EvalCounters, aug_lagrangian, gn_run, grad_aug_lagrangian
from .network import PrimalPoint, cost_f, pack, residual_F, unroll

TRACE_COLUMNS = ("k", "inner_iters", "f", "feas_inf", "grad_inf", "beta", "eps_k", "wall_ms")


@dataclass
class AlmConfig:
    gamma: float = 0.5
    alpha: float = 2.0
    xi: float = 2.0
    eps: float = 1e-3
    eps_bar: float = 1e-2
    eps0: float = 1e-1
    beta0: float | None = None  # None -> 0.001 * f(z0)
    max_outer: int = 50
    max_inner: int = 200
    eta1: float = 0.8
    eta2: float = 0.1
    backtrack_cap: int = 100

    def validate(self):
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.alpha <= 1.0 or self.xi <= 1.0:
            raise ConfigError("alpha and xi must exceed 1")
        if min(self.eps, self.eps_bar, self.eps0) <= 0:
            raise ConfigError("tolerances must be positive")
        if self.beta0 is not None and self.beta0 <= 0:
            raise ConfigError("beta0 must be positive")


@dataclass
class AlmResult:
    point: PrimalPoint
    multiplier: np.ndarray
    status: str  # converged | max_outer_reached | inner_failure
    trace: list = field(default_factory=list)
    counters: EvalCounters = field(default_factory=EvalCounters)
    outer_iters: int = 0


def safeguard_select(spec, dataset, z_k, z0, lam, beta, f0, counters=None):
    """Inner-loop start: the current iterate unless its penalized Lagrangian exceeds f(z0)."""
    if aug_lagrangian(spec, z_k, lam, beta, dataset, counters) <= f0:
        return z_k
    return z0


def multiplier_update(lam, beta, F_val):
    return lam + beta * F_val


def penalty_update(beta_k, beta0, k, xi, alpha, gamma, feas_now, feas_prev):
    """Keep the penalty under a feasibility contraction, otherwise escalate."""
    if feas_now <= gamma * feas_prev:
        return beta_k
    return max(xi * beta_k, beta0 * (k + 1) ** alpha)


def epsilon_schedule(eps_prev, eps_bar):
    return max(eps_bar, 0.5 * eps_prev)


def alm_run(spec, dataset, config: AlmConfig, init_weights) -> AlmResult:
    """Full outer loop; the trace records one row per outer iteration."""
    config.validate()
    counters = EvalCounters()
    states0 = unroll(spec, init_weights, dataset.A)
    z0 = pack(spec, init_weights, states0)
    F0 = residual_F(spec, z0, dataset.A)
    if F0.size and np.max(np.abs(F0)) > 1e-12 * (1.0 + np.max(np.abs(z0.x))):
        raise NumericError("unrolled starting point is not feasible")
    f0 = cost_f(spec, z0, dataset.y, dataset.A)
    beta = config.beta0 if config.beta0 is not None else 1e-3 * f0
    if beta <= 0:
        raise ConfigError(f"derived beta0 is not positive (f(z0)={f0:.3e})")
    lam = np.zeros(F0.size)
    z = z0.copy()
    feas_prev = float(np.max(np.abs(F0))) if F0.size else 0.0
    eps_k = config.eps0
    trace = []
    status = "max_outer_reached"
    for k in range(config.max_outer):
        if k > 0:
            eps_k = epsilon_schedule(eps_k, config.eps_bar)
        t0 = time.perf_counter()
        z_hat = safeguard_select(spec, dataset, z, z0, lam, beta, f0, counters)
        inner = gn_run(
            spec, dataset, lam, beta, z_hat, eps_k,
            max_inner=config.max_inner, eta1=config.eta1, eta2=config.eta2,
            backtrack_cap=config.backtrack_cap, counters=counters,
        )
        z = inner.point
        F_val = residual_F(spec, z, dataset.A)
        feas_now = float(np.max(np.abs(F_val))) if F_val.size else 0.0
        lam_next = multiplier_update(lam, beta, F_val)
        wall_ms = (time.perf_counter() - t0) * 1e3
        trace.append({
            "k": k,
            "inner_iters": inner.iters,
            "f": cost_f(spec, z, dataset.y, dataset.A),
            "feas_inf": feas_now,
            "grad_inf": inner.grad_inf,
            "beta": beta,
            "eps_k": eps_k,
            "wall_ms": wall_ms,
        })
        if inner.status != "converged":
            status = "inner_failure"
            lam = lam_next
            break
        lam = lam_next
        # grad_inf equals the plain-Lagrangian gradient at (z, lam_next)
        if feas_now <= config.eps and inner.grad_inf <= config.eps_bar:
            status = "converged"
            break
        beta = penalty_update(
            beta, config.beta0 if config.beta0 is not None else 1e-3 * f0,
            k, config.xi, config.alpha, config.gamma, feas_now, feas_prev,
        )
        feas_prev = feas_now
    return AlmResult(z, lam, status, trace, counters, outer_iters=len(trace))


def kkt_residuals(spec, dataset, point, lam):
    """Independent certificate: feasibility and plain-Lagrangian gradient max-norms."""
    F_val = residual_F(spec, point, dataset.A)
    feas = float(np.max(np.abs(F_val))) if F_val.size else 0.0
    g = grad_aug_lagrangian(spec, point, lam, 0.0, dataset)
    grad = float(np.max(np.abs(g))) if g.size else 0.0
    return feas, grad
