import numpy as np
import pytest

from mgffa.basis import TimeGrid, build_basis_system
from mgffa.cusp import CuspHyper
from mgffa.gibbs import SamplerConfig, sample_prior_state
from mgffa.model import FunctionalDataset, GroupData


def make_dataset(T=6, n=(3, 3), seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    grid = TimeGrid(np.linspace(0.0, 1.0, T))
    groups = [
        GroupData(group_id=f"group{s + 1}", Y=scale * rng.standard_normal((n_s, T)))
        for s, n_s in enumerate(n)
    ]
    return FunctionalDataset(grid=grid, groups=groups)


def make_problem(T=6, R=4, L_max=1, K_max=1, n=(3, 3), seed=0, **config_kwargs):
    """Tiny data/basis/config/state bundle for kernel-level tests.

    The state starts from a prior draw but with the mean coefficients and
    variances pulled back to O(1): the ridge-penalty prior is nearly flat
    in two directions, so raw prior draws of beta are enormous and would
    swamp absolute tolerances.
    """
    data = make_dataset(T=T, n=n, seed=seed)
    basis = build_basis_system(data.grid, R)
    defaults = dict(
        iterations=10,
        burn_in=5,
        L_max=L_max,
        K_max=K_max,
        hyper_shared=CuspHyper(),
        hyper_specific=CuspHyper(),
        seed=seed,
    )
    defaults.update(config_kwargs)
    config = SamplerConfig(**defaults)
    rng = np.random.default_rng(seed + 1)
    state = sample_prior_state(data, basis, config, rng)
    S = data.num_groups
    state.beta = [0.5 * rng.standard_normal(R) for _ in range(S)]
    state.sigma2_eps = rng.uniform(0.5, 2.0, size=S)
    state.sigma2_beta = rng.uniform(0.5, 2.0, size=S)
    return data, basis, config, state, rng


@pytest.fixture
def tiny_problem():
    return make_problem()
