"""Random desk-scale instances shared by the test suite and the self-check command."""

import numpy as np

from .datagen import kaiming_init
from .network import Dataset, NetworkSpec
from .stages import StageSystem


def random_stage_system(rng, n_stages=2, r_max=12, s_max=9, beta=1.0, mu_w=0.1,
                        rho_last=None, zero_A1=False):
    """A generic well-posed StageSystem with dense random blocks."""
    r = [int(rng.integers(1, r_max + 1)) for _ in range(n_stages + 2)]
    s = [int(rng.integers(1, s_max + 1)) for _ in range(n_stages + 1)]
    A = []
    B = []
    c = []
    for j in range(1, n_stages + 2):
        if j == 1 and zero_A1:
            A.append(None)
        else:
            A.append(rng.standard_normal((r[j], r[j - 1])))
        B.append(rng.standard_normal((r[j], s[j - 1])))
        c.append(rng.standard_normal(r[j]))
    rho = np.concatenate([
        np.full(n_stages, beta),
        [1.0 / max(r[-1], 1) if rho_last is None else rho_last],
    ])
    delta = np.concatenate([np.ones(n_stages), [0.0]])
    x0 = rng.standard_normal(r[0])
    return StageSystem(A, B, c, rho, delta, mu_w, x0)


def random_network_instance(rng, dims=(3, 4, 2), m=5, mu_w=0.1,
                            activations=None, noise=0.5):
    """A small network spec, dataset, and random (infeasible) primal point."""
    from .network import PrimalPoint, pack, unroll

    n1 = len(dims) - 1
    if activations is None:
        activations = ("softplus",) * (n1 - 1) + ("identity",)
    spec = NetworkSpec(dims, activations, m=m, mu_w=mu_w)
    seed = int(rng.integers(0, 2**32))
    weights = kaiming_init(spec, seed)
    A = rng.standard_normal((dims[0], m))
    Y = rng.standard_normal((dims[-1], m))
    dataset = Dataset(A, Y)
    states = unroll(spec, weights, A)
    point = pack(spec, weights, states)
    point = PrimalPoint(
        point.w + noise * rng.standard_normal(point.w.shape),
        point.x + noise * rng.standard_normal(point.x.shape),
    )
    return spec, dataset, point
