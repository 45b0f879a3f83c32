"""Feedforward network primitives in condensed-vector form.

A network with layer widths ``d_0, ..., d_{N+1}`` has N hidden state blocks.
Weights are flattened row-major per layer into ``w``; states are flattened
column-major (sample by sample) per layer into ``x``.  The layer maps
``h_j(w_j, x_{j-1})`` apply the activation elementwise to ``W_j X_{j-1}``,
the constraint residual stacks ``x_j - h_j`` for ``j = 1..N``, and the loss
is the mean squared output error plus an L2 weight penalty.

The degenerate single-weight-layer case (``len(dims) == 2``, no state
variables) is supported: the residual is empty and the loss is a plain
(nonlinear) ridge regression.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NumericError, ShapeError

ACTIVATION_KINDS = ("softplus", "tanh", "identity")


def activation_eval(kind, v):
    """Elementwise activation value and derivative.

    Parameters
    ----------
    kind : str
        One of ``softplus``, ``tanh``, ``identity``.
    v : ndarray
        Pre-activation values, any shape.

    Returns
    -------
    (value, derivative) : pair of ndarrays with the shape of ``v``.
    """
    v = np.asarray(v, dtype=float)
    if kind == "softplus":
        # log(1 + e^v) via logaddexp, safe for large |v|
        return np.logaddexp(0.0, v), expit(v)
    if kind == "tanh":
        t = np.tanh(v)
        return t, 1.0 - t * t
    if kind == "identity":
        return v, np.ones_like(v)
    raise ConfigError(f"unsupported activation kind: {kind!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: layer widths, per-layer activations, sample count, weight penalty.

    ``dims`` has length N+2 (input, N hidden, output); ``activations`` has one
    entry per weight layer j = 1..N+1.
    """

    dims: tuple
    activations: tuple
    m: int
    mu_w: float

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(self.dims) < 2:
            raise ConfigError("dims needs at least an input and an output width")
        if any(d < 1 for d in self.dims):
            raise ConfigError(f"layer widths must be >= 1, got {self.dims}")
        if len(self.activations) != len(self.dims) - 1:
            raise ConfigError(
                f"need {len(self.dims) - 1} activations for dims {self.dims}, "
                f"got {len(self.activations)}"
            )
        for kind in self.activations:
            if kind not in ACTIVATION_KINDS:
                raise ConfigError(f"unsupported activation kind: {kind!r}")
        if self.m < 1:
            raise ConfigError("sample count m must be >= 1")
        if not self.mu_w > 0:
            raise ConfigError("weight penalty mu_w must be > 0")

    @property
    def n_stages(self):
        """N, the number of hidden state blocks."""
        return len(self.dims) - 2

    def w_size(self, j):
        """Length of the flattened weight block of layer j (1-based)."""
        return self.dims[j] * self.dims[j - 1]

    def x_size(self, j):
        """Length of the flattened state block of layer j (1-based, j <= N)."""
        return self.m * self.dims[j]

    @property
    def total_w(self):
        return sum(self.w_size(j) for j in range(1, self.n_stages + 2))

    @property
    def total_x(self):
        return sum(self.x_size(j) for j in range(1, self.n_stages + 1))

    def w_slice(self, j):
        off = sum(self.w_size(i) for i in range(1, j))
        return slice(off, off + self.w_size(j))

    def x_slice(self, j):
        off = sum(self.x_size(i) for i in range(1, j))
        return slice(off, off + self.x_size(j))


@dataclass
class PrimalPoint:
    """Condensed decision variable: flattened weights ``w`` and states ``x``."""

    w: np.ndarray
    x: np.ndarray

    @property
    def z(self):
        return np.concatenate([self.w, self.x])

    def copy(self):
        return PrimalPoint(self.w.copy(), self.x.copy())


@dataclass
class Dataset:
    """Input matrix A (d_0 x m) and target matrix Y (d_{N+1} x m)."""

    A: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if self.A.shape[1] != self.Y.shape[1]:
            raise ShapeError(
                f"sample count mismatch: A has {self.A.shape[1]} columns, "
                f"Y has {self.Y.shape[1]}"
            )

    @property
    def m(self):
        return self.A.shape[1]

    @property
    def y(self):
        """Targets flattened column-major (sample by sample)."""
        return self.Y.ravel(order="F")

    @property
    def x0(self):
        """Inputs flattened column-major; the fixed stage-0 state."""
        return self.A.ravel(order="F")


def check_weight_shapes(spec, weights):
    if len(weights) != spec.n_stages + 1:
        raise ShapeError(f"expected {spec.n_stages + 1} weight matrices, got {len(weights)}")
    for j, W in enumerate(weights, start=1):
        want = (spec.dims[j], spec.dims[j - 1])
        if W.shape != want:
            raise ShapeError(f"W_{j} has shape {W.shape}, expected {want}")


def pack(spec, weights, states):
    """Flatten weight and state matrices into a PrimalPoint.

    Round-trips bit-exactly with :func:`unpack`.
    """
    check_weight_shapes(spec, weights)
    if len(states) != spec.n_stages:
        raise ShapeError(f"expected {spec.n_stages} state matrices, got {len(states)}")
    w = (
        np.concatenate([np.asarray(W, dtype=float).ravel() for W in weights])
        if weights
        else np.zeros(0)
    )
    x = (
        np.concatenate([np.asarray(X, dtype=float).ravel(order="F") for X in states])
        if states
        else np.zeros(0)
    )
    return PrimalPoint(w, x)


def unpack(spec, point):
    """Inverse of :func:`pack`: recover weight and state matrix lists."""
    if point.w.size != spec.total_w or point.x.size != spec.total_x:
        raise ShapeError(
            f"point sizes ({point.w.size}, {point.x.size}) do not match "
            f"spec ({spec.total_w}, {spec.total_x})"
        )
    weights = [
        point.w[spec.w_slice(j)].reshape(spec.dims[j], spec.dims[j - 1])
        for j in range(1, spec.n_stages + 2)
    ]
    states = [
        point.x[spec.x_slice(j)].reshape(spec.dims[j], spec.m, order="F")
        for j in range(1, spec.n_stages + 1)
    ]
    return weights, states


def stage_map(spec, j, w_j, x_prev):
    """Layer map h_j: apply activation j to ``W_j X_{j-1}``, flattened per sample."""
    d_out, d_in = spec.dims[j], spec.dims[j - 1]
    w_j = np.asarray(w_j, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    if w_j.size != d_out * d_in:
        raise ShapeError(f"stage {j}: weight block has {w_j.size} entries, expected {d_out * d_in}")
    if x_prev.size != spec.m * d_in:
        raise ShapeError(f"stage {j}: state block has {x_prev.size} entries, expected {spec.m * d_in}")
    W = w_j.reshape(d_out, d_in)
    X = x_prev.reshape(d_in, spec.m, order="F")
    val, _ = activation_eval(spec.activations[j - 1], W @ X)
    return val.ravel(order="F")


def unroll(spec, weights, A):
    """Propagate inputs through the hidden layers; returns the state matrices X_1..X_N.

    The packed point (weights, states) has zero constraint residual by
    construction.
    """
    check_weight_shapes(spec, weights)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    states = []
    X = A
    for j in range(1, spec.n_stages + 1):
        X, _ = activation_eval(spec.activations[j - 1], weights[j - 1] @ X)
        if not np.all(np.isfinite(X)):
            raise NumericError(f"non-finite state while unrolling layer {j}")
        states.append(X)
    return states


def residual_F(spec, point, A):
    """Constraint residual: blocks ``x_j - h_j(w_j, x_{j-1})`` for j = 1..N."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    blocks = []
    x_prev = A.ravel(order="F")
    for j in range(1, spec.n_stages + 1):
        x_j = point.x[spec.x_slice(j)]
        blocks.append(x_j - stage_map(spec, j, point.w[spec.w_slice(j)], x_prev))
        x_prev = x_j
    return np.concatenate(blocks) if blocks else np.zeros(0)


def output_map(spec, point, A):
    """Final-layer output h_{N+1}, flattened per sample."""
    n1 = spec.n_stages + 1
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x_prev = A.ravel(order="F") if spec.n_stages == 0 else point.x[spec.x_slice(spec.n_stages)]
    return stage_map(spec, n1, point.w[spec.w_slice(n1)], x_prev)


def cost_f(spec, point, y, A):
    """Loss: ``(1/2m) ||h_{N+1} - y||^2 + (mu_w/2) ||w||^2``."""
    out = output_map(spec, point, A)
    if out.size != np.asarray(y).size:
        raise ShapeError(f"output has {out.size} entries, targets have {np.asarray(y).size}")
    fit = 0.5 / spec.m * float(np.sum((out - y) ** 2))
    return fit + 0.5 * spec.mu_w * float(np.dot(point.w, point.w))


def forward_output(spec, weights, A):
    """Network output matrix for given weights (states unrolled internally)."""
    states = unroll(spec, weights, A)
    X_prev = states[-1] if states else np.atleast_2d(np.asarray(A, dtype=float))
    out, _ = activation_eval(spec.activations[-1], weights[-1] @ X_prev)
    return out


def mse(spec, weights, dataset):
    """Mean squared output error over a dataset, no regularization term."""
    out = forward_output(spec, weights, dataset.A)
    return float(np.sum((out - dataset.Y) ** 2)) / dataset.m
