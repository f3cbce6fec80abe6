"""Simulation scenarios: fixed latent truth plus replicated noisy datasets.

The latent signal curves are drawn once per scenario and held fixed; each
replicate adds fresh iid Gaussian noise whose variance hits the requested
signal-to-noise ratio tr(Sigma_f) / (T * sigma2_eps) in every group.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSystem, TimeGrid, build_basis_system
from .exceptions import DegenerateError, ValidationError
from .model import FunctionalDataset, GroupData

@dataclass
class ScenarioConfig:
    """Dimensions and noise level for one simulation scenario."""

    L_true: int
    K_true: tuple[int, ...]
    n: tuple[int, ...]
    T: int = 60
    num_basis: int = 30
    sigma2_beta_true: tuple[float, ...] | None = None
    snr: float = 2.0
    replicates: int = 1
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        self.K_true = tuple(int(k) for k in self.K_true)
        self.n = tuple(int(v) for v in self.n)
        if len(self.K_true) != len(self.n):
            raise ValidationError("K_true and n must have one entry per group")
        if len(self.n) < 1 or any(v < 1 for v in self.n):
            raise ValidationError("each group needs at least one subject")
        if self.L_true < 0 or any(k < 0 for k in self.K_true):
            raise ValidationError("factor counts must be nonnegative")
        if self.snr <= 0.0:
            raise ValidationError("snr must be positive")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.sigma2_beta_true is None:
            # first two groups follow the reference values, then keep stepping
            self.sigma2_beta_true = tuple(
                0.2 + 0.2 * s for s in range(len(self.n))
            )
        self.sigma2_beta_true = tuple(float(v) for v in self.sigma2_beta_true)
        if len(self.sigma2_beta_true) != len(self.n):
            raise ValidationError("sigma2_beta_true needs one entry per group")

    @property
    def num_groups(self) -> int:
        return len(self.n)


@dataclass
class ScenarioTruth:
    """Fixed latent quantities shared by all replicates of a scenario."""

    config: ScenarioConfig
    grid: TimeGrid
    basis: BasisSystem
    beta_true: list[np.ndarray]
    Lambda_true: np.ndarray  # (R, L_true)
    Phi_true: list[np.ndarray]  # per group (R, K_true_s)
    f_true: list[np.ndarray]  # per group (n_s, T)
    sigma2_eps_true: np.ndarray  # (S,)
    Sigma_f_true: list[np.ndarray] = field(default_factory=list)  # per group (T, T)

    @property
    def loadings_time_shared(self) -> np.ndarray:
        return self.basis.B @ self.Lambda_true

    def loadings_time_specific(self, s: int) -> np.ndarray:
        return self.basis.B @ self.Phi_true[s]


def scenario_preset(name: str, replicates: int = 1, seed: int = 0, snr: float = 2.0) -> ScenarioConfig:
    """Named two-group scenario, e.g. "A-322-n40-80" or "B-300-n40-40".

    The letter is cosmetic; the digits give (L, K_1, K_2) and the suffix
    the group sample sizes.
    """
    m = re.fullmatch(r"([A-Za-z])-(\d)(\d)(\d)-n(\d+)-(\d+)", name.strip())
    if not m:
        raise ValidationError(
            f"cannot parse preset '{name}'; expected like 'A-322-n40-80'"
        )
    L, k1, k2 = int(m.group(2)), int(m.group(3)), int(m.group(4))
    n1, n2 = int(m.group(5)), int(m.group(6))
    return ScenarioConfig(
        L_true=L,
        K_true=(k1, k2),
        n=(n1, n2),
        sigma2_beta_true=(0.2, 0.4),
        snr=snr,
        replicates=replicates,
        seed=seed,
        name=name.strip(),
    )


def generate_truth(config: ScenarioConfig, rng: np.random.Generator | None = None) -> ScenarioTruth:
    """Draw the fixed latent truth for a scenario.

    Mean coefficients have iid N(0, sigma2_beta_s) entries, loadings iid
    standard normal entries, and the signal curves are drawn once from
    N(B beta_s, Sigma_f_s).  A group with no factors at all would force a
    zero noise variance, which is rejected.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    grid = TimeGrid(np.linspace(0.0, 1.0, config.T))
    basis = build_basis_system(grid, config.num_basis)
    R = basis.num_basis
    Lambda = rng.standard_normal((R, config.L_true))
    beta, Phi, f_true, sigma2_eps, Sigma_f = [], [], [], [], []
    for s in range(config.num_groups):
        if config.L_true == 0 and config.K_true[s] == 0:
            raise DegenerateError(
                f"group {s} has no shared or specific factors: zero signal variance"
            )
        beta.append(np.sqrt(config.sigma2_beta_true[s]) * rng.standard_normal(R))
        Phi.append(rng.standard_normal((R, config.K_true[s])))
        BL = basis.B @ Lambda
        BP = basis.B @ Phi[s]
        cov = BL @ BL.T + BP @ BP.T
        Sigma_f.append(cov)
        sigma2_eps.append(np.trace(cov) / (config.T * config.snr))
        # exact draw from N(B beta, Sigma_f): push standard normal scores
        # through the low-rank square root
        n_s = config.n[s]
        signal = rng.standard_normal((n_s, config.L_true)) @ BL.T
        signal += rng.standard_normal((n_s, config.K_true[s])) @ BP.T
        f_true.append(signal + (basis.B @ beta[s])[None, :])
    return ScenarioTruth(
        config=config,
        grid=grid,
        basis=basis,
        beta_true=beta,
        Lambda_true=Lambda,
        Phi_true=Phi,
        f_true=f_true,
        sigma2_eps_true=np.array(sigma2_eps),
        Sigma_f_true=Sigma_f,
    )


def generate_replicate(
    truth: ScenarioTruth, replicate_index: int, rng: np.random.Generator | None = None
) -> FunctionalDataset:
    """Add fresh noise to the fixed signal curves.

    With the default rng the noise stream depends only on the scenario seed
    and the replicate index, so replicates are independent and any one of
    them can be regenerated bit-for-bit.
    """
    if rng is None:
        rng = np.random.default_rng([truth.config.seed, int(replicate_index)])
    groups = []
    for s in range(truth.config.num_groups):
        noise = np.sqrt(truth.sigma2_eps_true[s]) * rng.standard_normal(
            truth.f_true[s].shape
        )
        groups.append(GroupData(group_id=f"group{s + 1}", Y=truth.f_true[s] + noise))
    return FunctionalDataset(grid=truth.grid, groups=groups)
