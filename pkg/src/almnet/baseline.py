"""First-order reference trainers (SGD, Adam) on the sequential loss.

Gradients come from reverse-mode accumulation through the unrolled network;
the L2 weight penalty enters the gradient directly (coupled, not decoupled
decay).  Shuffling is seeded, so runs are deterministic.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError
from .network import NetworkSpec, activation_eval, mse


@dataclass
class FirstOrderConfig:
    method: str = "adam"  # adam | sgd
    lr: float | None = None  # default: 0.001 adam, 0.01 sgd
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-7
    batch_size: int = 10
    epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("adam", "sgd"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.lr is None:
            self.lr = 0.001 if self.method == "adam" else 0.01
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("learning rate, batch size and epochs must be positive")


def backprop_grad(spec: NetworkSpec, weights, A, Y, mu_w):
    """Gradient of ``(1/2|batch|) sum ||out - b||^2 + (mu_w/2) sum ||W_j||_F^2``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    batch = A.shape[1]
    if batch == 0:
        raise ConfigError("empty batch")
    acts = [A]
    derivs = []
    X = A
    for j, W in enumerate(weights, start=1):
        X, D = activation_eval(spec.activations[j - 1], W @ X)
        if not np.all(np.isfinite(X)):
            raise NumericError(f"non-finite activation at layer {j}")
        acts.append(X)
        derivs.append(D)
    delta = derivs[-1] * (acts[-1] - Y) / batch
    grads = [None] * len(weights)
    for j in range(len(weights), 0, -1):
        grads[j - 1] = delta @ acts[j - 1].T + mu_w * weights[j - 1]
        if j > 1:
            delta = derivs[j - 2] * (weights[j - 1].T @ delta)
    return grads


def train_first_order(spec: NetworkSpec, train, cfg: FirstOrderConfig, init_weights,
                      test=None, mu_w=None):
    """Mini-batch SGD or Adam; returns final weights, per-epoch trace, status."""
    mu_w = spec.mu_w if mu_w is None else mu_w
    if cfg.batch_size > train.m:
        raise ConfigError(f"batch size {cfg.batch_size} exceeds sample count {train.m}")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    weights = [W.copy() for W in init_weights]
    mom = [np.zeros_like(W) for W in weights]
    vel = [np.zeros_like(W) for W in weights]
    t = 0
    trace = []
    status = "completed"
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(train.m)
        for start in range(0, train.m, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            grads = backprop_grad(spec, weights, train.A[:, idx], train.Y[:, idx], mu_w)
            if cfg.method == "sgd":
                for W, g in zip(weights, grads):
                    W -= cfg.lr * g
            else:
                t += 1
                bc1 = 1.0 - cfg.beta1 ** t
                bc2 = 1.0 - cfg.beta2 ** t
                for W, g, m1, v1 in zip(weights, grads, mom, vel):
                    m1 += (1.0 - cfg.beta1) * (g - m1)
                    v1 += (1.0 - cfg.beta2) * (g * g - v1)
                    W -= cfg.lr * (m1 / bc1) / (np.sqrt(v1 / bc2) + cfg.eps_adam)
        with np.errstate(over="ignore"):  # inf is caught by the divergence check
            train_mse = mse(spec, weights, train)
        row = {
            "epoch": epoch,
            "train_mse": train_mse,
            "test_mse": mse(spec, weights, test) if test is not None else float("nan"),
            "wall_ms": (time.perf_counter() - t0) * 1e3,
        }
        trace.append(row)
        if not np.isfinite(train_mse) or train_mse > 1e12:
            status = "diverged"
            break
    return weights, trace, status
