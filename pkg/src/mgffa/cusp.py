"""Cumulative shrinkage machinery for one expansion block.

Each loading block (the shared one and one per group) carries a vector of
column scales gamma whose prior variance theta_l * sigma2_gamma_l is switched
between a spike (theta = v0) and a slab (theta = 1) by a latent indicator
z_l drawn against stick-breaking weights.  Higher-index columns accumulate
spike probability, so redundant columns are shrunk away and the number of
active columns is simply #{l : z_l > l}.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidStateError, NumericalError

NU_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class CuspHyper:
    """Hyperparameters of one shrinkage block.

    a1, a2 parameterize the inverse-gamma prior on the column scale
    variances, v0 is the spike variance multiplier, (a_alpha, b_alpha) the
    shape/rate gamma prior on the stick concentration, and iota the first
    Beta parameter of the sticks.
    """

    a1: float = 10.0
    a2: float = 30.0
    v0: float = 0.001
    a_alpha: float = 2.0
    b_alpha: float = 1.0
    iota: float = 1.0

    def __post_init__(self):
        for name in ("a1", "a2", "a_alpha", "b_alpha", "iota"):
            if getattr(self, name) <= 0.0:
                raise InvalidStateError(f"hyperparameter {name} must be positive")
        if not 0.0 < self.v0 < 1.0:
            raise InvalidStateError(f"v0 must lie in (0, 1), got {self.v0}")


@dataclass
class CuspState:
    """Mutable shrinkage state for one block of H columns.

    z holds 1-based indicator values in 1..H, nu the stick fractions with
    nu[H-1] fixed to 1, omega the stick weights (a simplex), pi their
    cumulative sums, theta the per-column spike/slab variance factor, and
    sigma2_gamma the per-column scale variances.
    """

    z: np.ndarray
    nu: np.ndarray
    omega: np.ndarray
    pi: np.ndarray
    theta: np.ndarray
    sigma2_gamma: np.ndarray
    alpha: float
    hyper: CuspHyper

    @property
    def size(self) -> int:
        return self.z.size


def stick_weights(nu: np.ndarray) -> np.ndarray:
    """Weights omega_h = nu_h * prod_{m<h} (1 - nu_m)."""
    nu = np.asarray(nu, dtype=float)
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - nu[:-1])))
    return nu * remaining


def theta_from_indicators(z: np.ndarray, v0: float) -> np.ndarray:
    """Spike variance v0 where z_l <= l (1-based), slab 1 otherwise."""
    ladder = np.arange(1, z.size + 1)
    return np.where(z <= ladder, v0, 1.0)


def count_active(z: np.ndarray) -> int:
    """Number of active columns, #{l : z_l > l} with 1-based l."""
    z = np.asarray(z)
    return int(np.sum(z > np.arange(1, z.size + 1)))


def sample_cusp_prior(hyper: CuspHyper, size: int, rng: np.random.Generator) -> CuspState:
    """Draw a full shrinkage state from its prior."""
    alpha = rng.gamma(hyper.a_alpha, 1.0 / hyper.b_alpha)
    nu = np.empty(size)
    if size > 1:
        nu[:-1] = rng.beta(hyper.iota, hyper.iota * alpha, size=size - 1)
    nu[-1] = 1.0
    omega = stick_weights(nu)
    pi = np.cumsum(omega)
    z = _categorical_rows(np.tile(omega, (size, 1)), rng)
    theta = theta_from_indicators(z, hyper.v0)
    sigma2_gamma = hyper.a2 / rng.standard_gamma(hyper.a1, size=size)
    return CuspState(
        z=z,
        nu=nu,
        omega=omega,
        pi=pi,
        theta=theta,
        sigma2_gamma=sigma2_gamma,
        alpha=float(alpha),
        hyper=hyper,
    )


def indicator_log_weights(gamma: np.ndarray, cusp: CuspState) -> np.ndarray:
    """Unnormalized log posterior weights of z, one row per column index l.

    Row l mixes the spike density (columns h <= l) with the slab density
    (columns h > l), each weighted by the current stick weights.
    """
    H = cusp.size
    gamma = np.asarray(gamma, dtype=float)
    spike_var = cusp.hyper.v0 * cusp.sigma2_gamma
    slab_var = cusp.sigma2_gamma
    log_spike = -0.5 * (np.log(2.0 * np.pi * spike_var) + gamma**2 / spike_var)
    log_slab = -0.5 * (np.log(2.0 * np.pi * slab_var) + gamma**2 / slab_var)
    with np.errstate(divide="ignore"):
        log_omega = np.log(cusp.omega)
    spike_region = np.tril(np.ones((H, H), dtype=bool))  # h <= l in 1-based terms
    return log_omega[None, :] + np.where(
        spike_region, log_spike[:, None], log_slab[:, None]
    )


def _categorical_rows(prob: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One 1-based categorical draw per row of a row-stochastic matrix."""
    cum = np.cumsum(prob, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(prob.shape[0])
    return 1 + np.sum(cum < u[:, None], axis=1)


def row_softmax(logw: np.ndarray) -> np.ndarray:
    """Row-normalize log weights; invariant to per-row additive constants."""
    top = logw.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise NumericalError("all indicator weights underflowed to zero mass")
    w = np.exp(logw - top)
    return w / w.sum(axis=1, keepdims=True)


def sample_indicators(gamma: np.ndarray, cusp: CuspState, rng: np.random.Generator) -> np.ndarray:
    """Categorical update of the indicators z, then theta deterministically.

    Computed in log space; adding a constant to every log weight leaves the
    draw distribution unchanged.
    """
    prob = row_softmax(indicator_log_weights(gamma, cusp))
    cusp.z = _categorical_rows(prob, rng)
    cusp.theta = theta_from_indicators(cusp.z, cusp.hyper.v0)
    return cusp.z


def sample_sticks(cusp: CuspState, rng: np.random.Generator) -> np.ndarray:
    """Beta update of the stick fractions given z; refreshes omega and pi.

    nu_h ~ Beta(iota + #{z_l = h}, iota * alpha + #{z_l > h}) for h < H and
    nu_H stays fixed at 1 (finite truncation).
    """
    H = cusp.size
    hyper = cusp.hyper
    if H > 1:
        heads = np.arange(1, H)
        n_eq = np.array([np.sum(cusp.z == h) for h in heads], dtype=float)
        n_gt = np.array([np.sum(cusp.z > h) for h in heads], dtype=float)
        cusp.nu[:-1] = rng.beta(hyper.iota + n_eq, hyper.iota * cusp.alpha + n_gt)
    cusp.nu[-1] = 1.0
    cusp.omega = stick_weights(cusp.nu)
    cusp.pi = np.cumsum(cusp.omega)
    return cusp.nu


def sample_alpha(cusp: CuspState, rng: np.random.Generator) -> float:
    """Gamma update of the stick concentration (shape-rate convention).

    alpha ~ Gamma(a_alpha + H - 1, b_alpha - sum_{h<H} log(1 - nu_h)); the
    sticks are clamped just below 1 so the rate stays finite.
    """
    hyper = cusp.hyper
    nu_head = np.minimum(cusp.nu[:-1], NU_CLAMP)
    shape = hyper.a_alpha + (cusp.size - 1)
    rate = hyper.b_alpha - np.sum(np.log1p(-nu_head))
    cusp.alpha = float(rng.gamma(shape, 1.0 / rate))
    return cusp.alpha


def sample_gamma_scales(gamma: np.ndarray, cusp: CuspState, rng: np.random.Generator) -> np.ndarray:
    """Inverse-gamma update of the per-column scale variances.

    sigma2_gamma_l ~ Inv-Gamma(a1 + 1/2, a2 + gamma_l^2 / (2 theta_l)),
    independently per column.
    """
    hyper = cusp.hyper
    gamma = np.asarray(gamma, dtype=float)
    shape = hyper.a1 + 0.5
    rate = hyper.a2 + gamma**2 / (2.0 * cusp.theta)
    cusp.sigma2_gamma = rate / rng.standard_gamma(shape, size=cusp.size)
    return cusp.sigma2_gamma
