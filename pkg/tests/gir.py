"""Joint-distribution (getting-it-right) harness.

Two simulators must induce the same distribution over (state, data) if the
full conditionals are correct: drawing everything from the prior, versus
alternating data simulation with one Gibbs sweep.  The sweep runs without
the deterministic expansion rescaling, which is a reparameterization and
not a conditional update.
"""

import numpy as np

from mgffa.basis import TimeGrid
from mgffa.cusp import count_active
from mgffa.gibbs import gibbs_sweep, sample_prior_state
from mgffa.model import FunctionalDataset, GroupData, reconstruct_curves

STATS = ("beta11", "sigma2_eps1", "gamma1", "L_star")


def state_stats(state) -> tuple[float, float, float, float]:
    return (
        float(state.beta[0][0]),
        float(state.sigma2_eps[0]),
        float(state.shared.gamma[0]),
        float(count_active(state.shared.cusp.z)),
    )


def make_template(T, n, seed=0):
    grid = TimeGrid(np.linspace(0.0, 1.0, T))
    groups = [
        GroupData(group_id=f"group{s + 1}", Y=np.zeros((m, T))) for s, m in enumerate(n)
    ]
    return FunctionalDataset(grid=grid, groups=groups)


def resample_data(state, template, basis, rng) -> FunctionalDataset:
    """Fresh data draw given the current state."""
    curves = reconstruct_curves(state, basis)
    groups = []
    for s, g in enumerate(template.groups):
        noise = np.sqrt(state.sigma2_eps[s]) * rng.standard_normal(g.Y.shape)
        groups.append(GroupData(group_id=g.group_id, Y=curves[s] + noise))
    return FunctionalDataset(grid=template.grid, groups=groups)


def marginal_conditional(template, basis, config, num_draws, rng) -> np.ndarray:
    """Independent prior draws; the panel statistics ignore the data."""
    out = np.empty((num_draws, len(STATS)))
    for i in range(num_draws):
        state = sample_prior_state(template, basis, config, rng)
        out[i] = state_stats(state)
    return out


def successive_conditional(
    template, basis, config, num_records, rng, burn=500, thin=1
) -> np.ndarray:
    """Markov chain alternating data regeneration with one Gibbs sweep.

    Records one panel row every `thin` sweeps after `burn` warmup sweeps.
    """
    state = sample_prior_state(template, basis, config, rng)
    for _ in range(burn):
        data = resample_data(state, template, basis, rng)
        gibbs_sweep(state, data, basis, config, rng, rescale=False)
    out = np.empty((num_records, len(STATS)))
    for i in range(num_records):
        for _ in range(thin):
            data = resample_data(state, template, basis, rng)
            gibbs_sweep(state, data, basis, config, rng, rescale=False)
        out[i] = state_stats(state)
    return out


def batch_means_se(series, num_batches=50) -> float:
    m = series.size // num_batches
    means = series[: m * num_batches].reshape(num_batches, m).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(num_batches))


def compare_panels(mc, sc):
    """Per-statistic z-like discrepancies for the mean and second moment.

    SEs combine the iid error of the marginal simulator with a batch-means
    error for the autocorrelated successive chain.
    """
    rows = []
    for j, name in enumerate(STATS):
        for moment, transform in (("mean", lambda x: x), ("second", lambda x: x**2)):
            a = transform(mc[:, j])
            b = transform(sc[:, j])
            se = np.sqrt(np.var(a, ddof=1) / a.size + batch_means_se(b) ** 2)
            rows.append(
                {
                    "stat": name,
                    "moment": moment,
                    "mc": float(a.mean()),
                    "sc": float(b.mean()),
                    "se": float(se),
                    "z": float((a.mean() - b.mean()) / se),
                }
            )
    return rows
