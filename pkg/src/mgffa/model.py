"""Data containers, model state, and deterministic model quantities.

A curve for subject i in group s is modeled as B (beta_s + Lambda eta_is +
Phi_s rho_is) plus iid Gaussian noise, where Lambda and Phi_s are stored in
expanded form as an auxiliary matrix times a vector of column scales.
"""

from dataclasses import dataclass

import numpy as np

from .basis import BasisSystem, TimeGrid
from .cusp import CuspState
from .exceptions import InvalidDimensionError, InvalidStateError

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GroupData:
    """Curves for one group: Y has one row per subject, one column per time."""

    group_id: str
    Y: np.ndarray

    def __post_init__(self):
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if self.Y.shape[0] < 1:
            raise InvalidDimensionError(f"group {self.group_id} has no subjects")
        if not np.all(np.isfinite(self.Y)):
            raise InvalidStateError(f"group {self.group_id} contains missing values")

    @property
    def num_subjects(self) -> int:
        return self.Y.shape[0]


@dataclass
class FunctionalDataset:
    """Grouped curves observed on a single common time grid."""

    grid: TimeGrid
    groups: list[GroupData]

    def __post_init__(self):
        if not self.groups:
            raise InvalidDimensionError("dataset needs at least one group")
        T = len(self.grid)
        for g in self.groups:
            if g.Y.shape[1] != T:
                raise InvalidDimensionError(
                    f"group {g.group_id} has {g.Y.shape[1]} time points, grid has {T}"
                )
        ids = [g.group_id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise InvalidStateError("group ids must be unique")

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    @property
    def group_ids(self) -> list[str]:
        return [g.group_id for g in self.groups]

    @property
    def group_sizes(self) -> list[int]:
        return [g.num_subjects for g in self.groups]


@dataclass
class ExpansionBlock:
    """One expanded loading block: loadings = xi * diag(gamma).

    xi is R x H, gamma length H, signs the R x H matrix of prior means for
    xi with entries in {-1, +1}, and cusp the block's shrinkage state.
    """

    xi: np.ndarray
    gamma: np.ndarray
    signs: np.ndarray
    cusp: CuspState

    @property
    def loadings(self) -> np.ndarray:
        """Materialize xi * diag(gamma); never stored separately."""
        return self.xi * self.gamma

    @property
    def num_columns(self) -> int:
        return self.gamma.size


@dataclass
class ModelState:
    """One full MCMC state across all groups."""

    beta: list[np.ndarray]
    sigma2_eps: np.ndarray
    sigma2_beta: np.ndarray
    shared: ExpansionBlock
    specific: list[ExpansionBlock]
    eta: list[np.ndarray]
    rho: list[np.ndarray]

    @property
    def num_groups(self) -> int:
        return len(self.beta)

    def validate(self):
        if np.any(self.sigma2_eps <= 0.0) or np.any(self.sigma2_beta <= 0.0):
            raise InvalidStateError("variances must be strictly positive")


def coefficient_matrix(state: ModelState, s: int) -> np.ndarray:
    """Per-subject basis coefficients for group s: beta + eta Lam' + rho Phi'."""
    coef = state.eta[s] @ state.shared.loadings.T
    coef += state.rho[s] @ state.specific[s].loadings.T
    coef += state.beta[s][None, :]
    return coef


def reconstruct_curves(state: ModelState, basis: BasisSystem) -> list[np.ndarray]:
    """Noise-free curves f_is = B (beta_s + Lambda eta_is + Phi_s rho_is).

    Returns one n_s x T matrix per group.
    """
    R = basis.num_basis
    for s in range(state.num_groups):
        if state.beta[s].shape != (R,):
            raise InvalidDimensionError(
                f"beta[{s}] has length {state.beta[s].shape}, basis has {R} columns"
            )
        if state.eta[s].shape[1] != state.shared.num_columns:
            raise InvalidDimensionError("eta width does not match shared block")
        if state.rho[s].shape[1] != state.specific[s].num_columns:
            raise InvalidDimensionError("rho width does not match specific block")
    return [coefficient_matrix(state, s) @ basis.B.T for s in range(state.num_groups)]


def log_likelihood(state: ModelState, data: FunctionalDataset, basis: BasisSystem) -> float:
    """Gaussian log likelihood of the data under the current state."""
    if np.any(state.sigma2_eps <= 0.0):
        raise InvalidStateError("sigma2_eps must be strictly positive")
    curves = reconstruct_curves(state, basis)
    total = 0.0
    for s, g in enumerate(data.groups):
        resid = g.Y - curves[s]
        n_obs = resid.size
        sigma2 = state.sigma2_eps[s]
        total += -0.5 * n_obs * (LOG_2PI + np.log(sigma2))
        total += -0.5 * np.sum(resid**2) / sigma2
    return float(total)


def marginal_covariances(state: ModelState, basis: BasisSystem, group: int) -> dict:
    """Marginal T x T covariance pieces for one group.

    Returns the shared piece B Lam Lam' B', the group piece B Phi Phi' B',
    and the diagonal noise piece; their sum is the marginal covariance of
    one observed curve.
    """
    T = basis.num_points
    BL = basis.B @ state.shared.loadings
    BP = basis.B @ state.specific[group].loadings
    return {
        "shared": BL @ BL.T,
        "specific": BP @ BP.T,
        "noise": state.sigma2_eps[group] * np.eye(T),
    }
