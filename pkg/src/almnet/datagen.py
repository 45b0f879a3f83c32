"""Synthetic teacher-student regression data, weight initialization, dataset files.

All randomness flows through numpy's PCG64 generator seeded from a single
64-bit seed via SeedSequence spawning, so identical configurations reproduce
bit-identical datasets on any platform.
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError
from .network import Dataset, NetworkSpec, activation_eval


def _rng(seed_seq):
    return np.random.Generator(np.random.PCG64(seed_seq))


@dataclass
class TeacherConfig:
    d0: int
    hidden: tuple = (20, 5)
    d_out: int = 1
    noise: float = 0.0
    m: int = 100
    seed: int = 0
    hidden_activation: str = "softplus"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.noise < 0:
            raise ConfigError("noise level must be >= 0")
        if self.m < 1:
            raise ConfigError("sample count must be >= 1")

    @property
    def dims(self):
        return (self.d0, *self.hidden, self.d_out)


def kaiming_init(spec: NetworkSpec, seed):
    """Fan-in Gaussian weights, std ``sqrt(2/d_{j-1})`` per layer."""
    rng = _rng(seed)
    return [
        rng.normal(0.0, np.sqrt(2.0 / spec.dims[j - 1]), size=(spec.dims[j], spec.dims[j - 1]))
        for j in range(1, spec.n_stages + 2)
    ]


def _teacher_forward(cfg, weights, A):
    X = A
    for W in weights[:-1]:
        X, _ = activation_eval(cfg.hidden_activation, W @ X)
    return weights[-1] @ X  # no output activation


def gen_teacher_student(cfg: TeacherConfig):
    """Draw train/test datasets from a fixed random teacher network.

    Inputs are Gaussian with mean and covariance-factor entries of std 0.2
    (covariance ``S0^T S0``); targets are the teacher output plus
    ``noise * N(0,1)`` per output coordinate.  Returns (train, test, teacher
    weights).
    """
    ss = np.random.SeedSequence(cfg.seed)
    s_teacher, s_dist, s_train, s_test = ss.spawn(4)
    teacher_spec = NetworkSpec(
        cfg.dims,
        (cfg.hidden_activation,) * len(cfg.hidden) + ("identity",),
        m=cfg.m,
        mu_w=1.0,  # placeholder; only shapes matter for init
    )
    teacher = kaiming_init(teacher_spec, s_teacher)
    rng_d = _rng(s_dist)
    mu = rng_d.normal(0.0, 0.2, size=cfg.d0)
    sigma0 = rng_d.normal(0.0, 0.2, size=(cfg.d0, cfg.d0))

    def draw(seed_seq):
        rng = _rng(seed_seq)
        g = rng.standard_normal((cfg.d0, cfg.m))
        A = mu[:, None] + sigma0.T @ g
        Y = _teacher_forward(cfg, teacher, A)
        Y = Y + cfg.noise * rng.standard_normal(Y.shape)
        return Dataset(A, Y)

    return draw(s_train), draw(s_test), teacher


def input_mean_cov(cfg: TeacherConfig):
    """The exact input distribution parameters implied by a config's seed."""
    ss = np.random.SeedSequence(cfg.seed)
    _, s_dist, _, _ = ss.spawn(4)
    rng_d = _rng(s_dist)
    mu = rng_d.normal(0.0, 0.2, size=cfg.d0)
    sigma0 = rng_d.normal(0.0, 0.2, size=(cfg.d0, cfg.d0))
    return mu, sigma0.T @ sigma0


def weights_checksum(weights):
    h = hashlib.sha256()
    for W in weights:
        h.update(np.ascontiguousarray(W, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_dataset_csv(path, dataset: Dataset):
    """Write the delimited dataset format: header a_*/b_*, one sample per row."""
    d0 = dataset.A.shape[0]
    d_out = dataset.Y.shape[0]
    header = ",".join(
        [f"a_{i + 1}" for i in range(d0)] + [f"b_{i + 1}" for i in range(d_out)]
    )
    rows = np.vstack([dataset.A, dataset.Y]).T
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_dataset_csv(path, d0=None, d_out=None):
    """Read the delimited dataset format; infers widths from the header.

    If ``d0``/``d_out`` are given, the column split is validated against them.
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        n_a = sum(1 for h in header if h.startswith("a_"))
        n_b = sum(1 for h in header if h.startswith("b_"))
        if n_a + n_b != len(header) or n_a == 0 or n_b == 0:
            raise ShapeError(f"malformed dataset header in {path}")
        if d0 is not None and n_a != d0:
            raise ShapeError(f"{path}: expected {d0} input columns, found {n_a}")
        if d_out is not None and n_b != d_out:
            raise ShapeError(f"{path}: expected {d_out} target columns, found {n_b}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != n_a + n_b:
        raise ShapeError(f"{path}: row width does not match header")
    return Dataset(data[:, :n_a].T, data[:, n_a:].T)


def write_sidecar(path, cfg: TeacherConfig, teacher):
    meta = {
        "schema_version": 1,
        "config": asdict(cfg),
        "teacher_checksum": weights_checksum(teacher),
        "generator": "numpy PCG64 via SeedSequence(seed).spawn",
    }
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
