"""Gibbs sampler: conjugate full-conditional updates and the chain driver.

Every continuous parameter has a closed-form conditional by conjugacy; the
*_conditional functions expose the analytic moments so the sampling kernels
stay one thin draw on top of them and tests can check the moments directly
against brute-force oracles.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import expit

from . import cusp as cusp_ops
from .basis import BasisSystem, build_basis_system
from .cusp import CuspHyper, count_active, sample_cusp_prior
from .exceptions import (
    ChainAbortError,
    DegenerateError,
    InvalidStateError,
    NumericalError,
    ValidationError,
)
from .model import ExpansionBlock, FunctionalDataset, ModelState, coefficient_matrix

CHOL_JITTER = 1e-10

SHARED = "shared"


@dataclass
class SamplerConfig:
    """Chain length, truncation levels, and prior hyperparameters.

    a_eps/b_eps switch the noise-variance prior from the default flat prior
    to a proper inverse-gamma; the flat prior is the production default and
    the proper one exists for prior-sensitive validation runs.
    """

    iterations: int
    burn_in: int
    thin: int = 1
    L_max: int = 10
    K_max: int = 10
    hyper_shared: CuspHyper = field(default_factory=CuspHyper)
    hyper_specific: CuspHyper = field(default_factory=CuspHyper)
    a_beta: float = 1.0
    b_beta: float = 1.0
    a_eps: float | None = None
    b_eps: float | None = None
    num_basis: int | None = None
    ridge: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0 or self.burn_in >= self.iterations:
            raise ValidationError(
                f"need 0 <= burn_in < iterations, got {self.burn_in}/{self.iterations}"
            )
        if self.thin < 1:
            raise ValidationError(f"thin must be >= 1, got {self.thin}")
        if self.L_max < 1 or self.K_max < 1:
            raise ValidationError("L_max and K_max must be >= 1")
        if self.a_beta <= 0.0 or self.b_beta <= 0.0:
            raise ValidationError("a_beta and b_beta must be positive")
        if (self.a_eps is None) != (self.b_eps is None):
            raise ValidationError("a_eps and b_eps must be set together")
        if self.a_eps is not None and (self.a_eps <= 0.0 or self.b_eps <= 0.0):
            raise ValidationError("a_eps and b_eps must be positive when set")
        if self.num_basis is not None and self.num_basis < 4:
            raise ValidationError("num_basis must be >= 4")
        if self.ridge <= 0.0:
            raise ValidationError("ridge must be positive")


@dataclass
class PosteriorDraws:
    """Retained draws plus the per-draw active-factor configuration.

    Loading matrices are stored materialized (xi * diag(gamma)); the stored
    z vectors are what the configs column counts were computed from.
    """

    iteration: np.ndarray  # (M,) absolute iteration numbers
    beta: np.ndarray  # (M, S, R)
    sigma2_eps: np.ndarray  # (M, S)
    sigma2_beta: np.ndarray  # (M, S)
    lam: np.ndarray  # (M, R, L_max)
    phi: list[np.ndarray]  # per group (M, R, K_max)
    eta: list[np.ndarray]  # per group (M, n_s, L_max)
    rho: list[np.ndarray]  # per group (M, n_s, K_max)
    z_shared: np.ndarray  # (M, L_max)
    z_specific: np.ndarray  # (M, S, K_max)
    configs: np.ndarray  # (M, 1 + S): L*, K*_1..K*_S
    group_ids: list[str]

    @property
    def num_draws(self) -> int:
        return self.iteration.size

    @property
    def num_groups(self) -> int:
        return len(self.group_ids)


def _chol_lower(prec: np.ndarray) -> np.ndarray:
    """Cholesky with a single jitter retry, then NumericalError."""
    try:
        return np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(prec + CHOL_JITTER * np.eye(prec.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"precision matrix of size {prec.shape[0]} is not positive definite"
        ) from exc


def _chol_solve(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return cho_solve((chol, True), rhs, check_finite=False)


def _draw_mvn_precision(mean: np.ndarray, chol_lower: np.ndarray, rng) -> np.ndarray:
    """Draw N(mean, P^-1) given lower Cholesky L of the precision P."""
    z = rng.standard_normal(mean.size)
    return mean + solve_triangular(chol_lower, z, trans="T", lower=True, check_finite=False)


# ---------------------------------------------------------------------------
# mean coefficients and variances


def _beta_conditional(state, data, basis, s):
    g = data.groups[s]
    sigma2 = state.sigma2_eps[s]
    prec = (g.num_subjects / sigma2) * basis.gram + state.sigma2_beta[s] ** -1 * basis.Omega
    factor_coef = state.eta[s] @ state.shared.loadings.T
    factor_coef += state.rho[s] @ state.specific[s].loadings.T
    resid_sum = g.Y.sum(axis=0) - (factor_coef @ basis.B.T).sum(axis=0)
    rhs = basis.B.T @ resid_sum / sigma2
    chol = _chol_lower(prec)
    return _chol_solve(chol, rhs), prec, chol


def beta_conditional(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, s: int
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and precision of the group mean coefficients.

    Precision (n_s / sigma2_eps) B'B + Omega / sigma2_beta; the mean solves
    it against B' applied to the summed factor-free residuals.
    """
    mean, prec, _ = _beta_conditional(state, data, basis, s)
    return mean, prec


def sample_beta(state: ModelState, data: FunctionalDataset, basis: BasisSystem, rng) -> None:
    for s in range(state.num_groups):
        mean, _, chol = _beta_conditional(state, data, basis, s)
        state.beta[s] = _draw_mvn_precision(mean, chol, rng)


def sigma_eps_conditional(
    state: ModelState,
    data: FunctionalDataset,
    basis: BasisSystem,
    config: SamplerConfig,
    s: int,
) -> tuple[float, float]:
    """Inverse-gamma shape and rate for the group noise variance.

    Under the flat prior the shape is n_s T / 2 - 1 and the rate RSS / 2.
    """
    g = data.groups[s]
    curves = coefficient_matrix(state, s) @ basis.B.T
    rss = float(np.sum((g.Y - curves) ** 2))
    n_obs = g.Y.size
    if config.a_eps is not None:
        return config.a_eps + n_obs / 2.0, config.b_eps + rss / 2.0
    if n_obs <= 2:
        raise InvalidStateError(
            f"flat noise prior gives an improper posterior for {n_obs} observations"
        )
    if rss == 0.0:
        raise DegenerateError(f"group {g.group_id} has zero residual sum of squares")
    return n_obs / 2.0 - 1.0, rss / 2.0


def sample_sigma_eps(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, config: SamplerConfig, rng
) -> None:
    for s in range(state.num_groups):
        shape, rate = sigma_eps_conditional(state, data, basis, config, s)
        state.sigma2_eps[s] = rate / rng.standard_gamma(shape)


def sigma_beta_conditional(
    state: ModelState, basis: BasisSystem, config: SamplerConfig, s: int
) -> tuple[float, float]:
    """Inverse-gamma shape and rate for the mean smoothing variance."""
    quad = float(state.beta[s] @ basis.Omega @ state.beta[s])
    R = basis.num_basis
    return config.a_beta + R / 2.0, config.b_beta + quad / 2.0


def sample_sigma_beta(
    state: ModelState, basis: BasisSystem, config: SamplerConfig, rng
) -> None:
    for s in range(state.num_groups):
        shape, rate = sigma_beta_conditional(state, basis, config, s)
        state.sigma2_beta[s] = rate / rng.standard_gamma(shape)


# ---------------------------------------------------------------------------
# expansion blocks


def _get_block(state: ModelState, which) -> ExpansionBlock:
    return state.shared if which == SHARED else state.specific[which]


def _block_scores(state: ModelState, which, s: int) -> np.ndarray:
    """Factor scores multiplying this block's loadings for group s."""
    return state.eta[s] if which == SHARED else state.rho[s]


def _block_groups(state: ModelState, which) -> list[int]:
    """Groups whose likelihood involves this block."""
    return list(range(state.num_groups)) if which == SHARED else [which]


def _partial_residual(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, which, s: int
) -> np.ndarray:
    """Residual curves for group s excluding this block's contribution."""
    if which == SHARED:
        coef = state.rho[s] @ state.specific[s].loadings.T
    else:
        coef = state.eta[s] @ state.shared.loadings.T
    coef += state.beta[s][None, :]
    return data.groups[s].Y - coef @ basis.B.T


def sign_posterior_prob(xi: np.ndarray) -> np.ndarray:
    """P(sign = +1 | xi) = 1 / (1 + exp(-2 xi)), elementwise.

    Ratio of the two unit-variance normal densities centered at +1 and -1.
    """
    return expit(2.0 * np.asarray(xi))


def sample_signs(block: ExpansionBlock, rng) -> None:
    prob = sign_posterior_prob(block.xi)
    block.signs = np.where(rng.random(block.xi.shape) < prob, 1.0, -1.0)


def _xi_conditional(state, data, basis, which):
    block = _get_block(state, which)
    H = block.num_columns
    R = basis.num_basis
    G = np.zeros((H, H))
    C = np.zeros((basis.num_points, H))
    for s in _block_groups(state, which):
        scaled = _block_scores(state, which, s) * block.gamma[None, :]
        resid = _partial_residual(state, data, basis, which, s)
        w = 1.0 / state.sigma2_eps[s]
        G += w * (scaled.T @ scaled)
        C += w * (resid.T @ scaled)
    prec = np.kron(G, basis.gram)
    prec.flat[:: prec.shape[0] + 1] += 1.0
    rhs = block.signs.ravel(order="F") + (basis.B.T @ C).ravel(order="F")
    chol = _chol_lower(prec)
    mean = _chol_solve(chol, rhs)
    return mean, prec, chol


def xi_conditional(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, which
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and precision of vec(xi), column-major stacking.

    Precision I + G kron B'B with G the noise-weighted outer-product sum of
    the scaled scores gamma * scores; the prior mean is the sign matrix.
    """
    mean, prec, _ = _xi_conditional(state, data, basis, which)
    return mean, prec


def sample_xi(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, which, rng
) -> None:
    block = _get_block(state, which)
    mean, _, chol = _xi_conditional(state, data, basis, which)
    draw = _draw_mvn_precision(mean, chol, rng)
    block.xi = draw.reshape((basis.num_basis, block.num_columns), order="F")


def gamma_conditional(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, which, l: int
) -> tuple[float, float]:
    """Posterior mean and variance of one column scale gamma_l.

    Conditions on every other column at its current value; the likelihood
    sees gamma_l through the column direction B xi_l.
    """
    block = _get_block(state, which)
    u = basis.B @ block.xi[:, l]
    u2 = float(u @ u)
    drop = block.loadings
    drop = np.delete(drop, l, axis=1)
    prior_var = block.cusp.theta[l] * block.cusp.sigma2_gamma[l]
    prec = 1.0 / prior_var
    lin = 0.0
    for s in _block_groups(state, which):
        scores = _block_scores(state, which, s)
        others = np.delete(scores, l, axis=1)
        resid = _partial_residual(state, data, basis, which, s)
        resid = resid - (others @ drop.T) @ basis.B.T
        w = 1.0 / state.sigma2_eps[s]
        col = scores[:, l]
        prec += w * float(col @ col) * u2
        lin += w * float(col @ (resid @ u))
    var = 1.0 / prec
    return var * lin, var


def sample_gamma_sequential(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, which, rng
) -> None:
    """Scan the columns in order, each conditioned on the freshest values."""
    block = _get_block(state, which)
    for l in range(block.num_columns):
        mu, var = gamma_conditional(state, data, basis, which, l)
        block.gamma[l] = mu + math.sqrt(var) * rng.standard_normal()


def rescale_expansion(block: ExpansionBlock) -> None:
    """Normalize each column of xi to unit mean absolute value.

    gamma absorbs the scale, so the materialized loadings are unchanged;
    all-zero columns are left alone.
    """
    d = np.mean(np.abs(block.xi), axis=0)
    d[d == 0.0] = 1.0
    block.xi = block.xi / d[None, :]
    block.gamma = block.gamma * d


def _factor_conditional(state, data, basis, which, s):
    block = _get_block(state, which)
    W = basis.B @ block.loadings
    prec = W.T @ W / state.sigma2_eps[s]
    prec.flat[:: prec.shape[0] + 1] += 1.0
    resid = _partial_residual(state, data, basis, which, s)
    rhs = resid @ W / state.sigma2_eps[s]
    chol = _chol_lower(prec)
    means = _chol_solve(chol, rhs.T).T
    return means, prec, chol


def factor_conditional(
    state: ModelState, data: FunctionalDataset, basis: BasisSystem, which, s: int
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means (n_s x H) and common precision of one group's scores.

    which selects the shared scores eta (conditioning on rho) or the
    group-specific scores rho (conditioning on eta).
    """
    means, prec, _ = _factor_conditional(state, data, basis, which, s)
    return means, prec


def _draw_scores(means, chol, rng):
    noise = solve_triangular(
        chol,
        rng.standard_normal((means.shape[1], means.shape[0])),
        trans="T",
        lower=True,
        check_finite=False,
    )
    return means + noise.T


def sample_eta(state: ModelState, data: FunctionalDataset, basis: BasisSystem, rng) -> None:
    for s in range(state.num_groups):
        means, _, chol = _factor_conditional(state, data, basis, SHARED, s)
        state.eta[s] = _draw_scores(means, chol, rng)


def sample_rho(state: ModelState, data: FunctionalDataset, basis: BasisSystem, s: int, rng) -> None:
    means, _, chol = _factor_conditional(state, data, basis, s, s)
    state.rho[s] = _draw_scores(means, chol, rng)


def sample_factors(state: ModelState, data: FunctionalDataset, basis: BasisSystem, rng) -> None:
    """Update eta for every group, then rho for every group."""
    sample_eta(state, data, basis, rng)
    for s in range(state.num_groups):
        sample_rho(state, data, basis, s, rng)


# ---------------------------------------------------------------------------
# chain driver


def _prior_expansion_block(
    hyper: CuspHyper, num_basis: int, num_columns: int, rng
) -> ExpansionBlock:
    cusp = sample_cusp_prior(hyper, num_columns, rng)
    signs = np.where(rng.random((num_basis, num_columns)) < 0.5, -1.0, 1.0)
    xi = signs + rng.standard_normal((num_basis, num_columns))
    gamma = np.sqrt(cusp.theta * cusp.sigma2_gamma) * rng.standard_normal(num_columns)
    return ExpansionBlock(xi=xi, gamma=gamma, signs=signs, cusp=cusp)


def sample_prior_state(
    data: FunctionalDataset, basis: BasisSystem, config: SamplerConfig, rng
) -> ModelState:
    """Draw a full model state from the priors.

    Used both to initialize the chain and as the marginal simulator in
    joint-distribution validation.  Under the flat noise prior there is
    nothing to draw from, so sigma2_eps falls back to the per-group sample
    variance of the data.
    """
    S = data.num_groups
    R = basis.num_basis
    omega_chol = _chol_lower(basis.Omega)
    sigma2_beta = config.b_beta / rng.standard_gamma(config.a_beta, size=S)
    beta = [
        math.sqrt(sigma2_beta[s])
        * solve_triangular(omega_chol, rng.standard_normal(R), trans="T", lower=True)
        for s in range(S)
    ]
    if config.a_eps is not None:
        sigma2_eps = config.b_eps / rng.standard_gamma(config.a_eps, size=S)
    else:
        sigma2_eps = np.array([max(np.var(g.Y), 1e-8) for g in data.groups])
    shared = _prior_expansion_block(config.hyper_shared, R, config.L_max, rng)
    specific = [
        _prior_expansion_block(config.hyper_specific, R, config.K_max, rng) for _ in range(S)
    ]
    eta = [rng.standard_normal((g.num_subjects, config.L_max)) for g in data.groups]
    rho = [rng.standard_normal((g.num_subjects, config.K_max)) for g in data.groups]
    return ModelState(
        beta=beta,
        sigma2_eps=sigma2_eps,
        sigma2_beta=sigma2_beta,
        shared=shared,
        specific=specific,
        eta=eta,
        rho=rho,
    )


def _activate_block(block: ExpansionBlock) -> None:
    """Put every column of a block in the slab state.

    The chain then starts at the truncation upper bound and the shrinkage
    prior prunes columns the data do not support, which mixes much better
    than growing factors out of an all-spike start.
    """
    H = block.num_columns
    block.cusp.z = np.full(H, H, dtype=int)
    block.cusp.theta = cusp_ops.theta_from_indicators(block.cusp.z, block.cusp.hyper.v0)


def _set_block_loadings(block: ExpansionBlock, loadings: np.ndarray, rng) -> None:
    """Write initial loading columns into the expanded (xi, gamma) form."""
    R, H = block.xi.shape
    q = min(loadings.shape[1], H)
    xi = block.signs + 0.1 * rng.standard_normal((R, H))
    gamma = np.zeros(H)
    for l in range(q):
        scale = np.mean(np.abs(loadings[:, l]))
        if scale > 0.0:
            xi[:, l] = loadings[:, l] / scale
            gamma[l] = scale
    block.xi = xi
    block.gamma = gamma
    block.signs = np.where(xi >= 0.0, 1.0, -1.0)


def initial_chain_state(
    data: FunctionalDataset, basis: BasisSystem, config: SamplerConfig, rng
) -> ModelState:
    """Data-informed starting state for the chain.

    The posterior over factor configurations has nearly absorbing modes in
    which shared columns impersonate group-specific ones (or vice versa),
    so the start decides which mode a finite chain explores.  Credit is
    therefore assigned the way the model means it: subject curves are
    ridge-projected onto the basis, shared columns start from directions
    that carry variance in every group, and each group's leftover
    covariance seeds its specific block.  All shrinkage indicators start
    active; pruning is left to the prior.
    """
    state = sample_prior_state(data, basis, config, rng)
    for block in [state.shared, *state.specific]:
        _activate_block(block)

    R = basis.num_basis
    S = data.num_groups
    proj = basis.gram + 1e-8 * np.trace(basis.gram) * np.eye(R)
    proj_chol = _chol_lower(proj)
    centered, covs = [], []
    for s, g in enumerate(data.groups):
        c = cho_solve((proj_chol, True), basis.B.T @ g.Y.T).T
        state.beta[s] = c.mean(axis=0)
        centered.append(c - c.mean(axis=0))
        covs.append(centered[-1].T @ centered[-1] / g.num_subjects)

    # Shared columns from the harmonic-type mean of the group covariances:
    # the parallel sum is dominated by every group's covariance, so a
    # direction carried by only one group is damped to the others' noise
    # floor, while genuinely common directions keep their scale.
    delta = max(1e-3 * float(np.trace(np.mean(covs, axis=0))) / R, 1e-8)
    inv_sum = sum(np.linalg.inv(C + delta * np.eye(R)) for C in covs)
    harmonic = S * np.linalg.inv(inv_sum)
    vals, vecs = np.linalg.eigh(harmonic)
    order = np.argsort(vals)[::-1]
    floor = float(np.median(vals))
    keep = order[: config.L_max - 1]
    shared0 = vecs[:, keep] * np.sqrt(np.clip(vals[keep] - floor, 0.0, None))[None, :]
    _set_block_loadings(state.shared, shared0, rng)
    lam = state.shared.loadings
    lam_gram = lam.T @ lam + 1e-10 * np.eye(config.L_max)
    for s in range(S):
        state.eta[s] = np.linalg.solve(lam_gram, lam.T @ centered[s].T).T

    # specific columns: leading eigenpairs of each group's residual
    # covariance, again with its own noise floor subtracted
    for s in range(S):
        resid = centered[s] - state.eta[s] @ lam.T
        res_cov = resid.T @ resid / data.groups[s].num_subjects
        vals, vecs = np.linalg.eigh(res_cov)
        order = np.argsort(vals)[::-1]
        floor = float(np.median(vals))
        keep = order[: config.K_max - 1]
        spec0 = vecs[:, keep] * np.sqrt(np.clip(vals[keep] - floor, 0.0, None))[None, :]
        _set_block_loadings(state.specific[s], spec0, rng)
        phi = state.specific[s].loadings
        phi_gram = phi.T @ phi + 1e-10 * np.eye(config.K_max)
        state.rho[s] = np.linalg.solve(phi_gram, phi.T @ resid.T).T

    for s, g in enumerate(data.groups):
        fitted = (
            state.beta[s][None, :]
            + state.eta[s] @ state.shared.loadings.T
            + state.rho[s] @ state.specific[s].loadings.T
        ) @ basis.B.T
        state.sigma2_eps[s] = max(float(np.mean((g.Y - fitted) ** 2)), 1e-8)
    return state


def _update_cusp_block(block: ExpansionBlock, rng) -> None:
    cusp_ops.sample_gamma_scales(block.gamma, block.cusp, rng)
    cusp_ops.sample_indicators(block.gamma, block.cusp, rng)
    cusp_ops.sample_sticks(block.cusp, rng)
    cusp_ops.sample_alpha(block.cusp, rng)


def gibbs_sweep(
    state: ModelState,
    data: FunctionalDataset,
    basis: BasisSystem,
    config: SamplerConfig,
    rng,
    rescale: bool = True,
) -> None:
    """One full systematic scan over all conditionals, in place.

    rescale=False skips the deterministic expansion rescaling, which keeps
    the sweep a pure composition of exact conditional updates.
    """
    sample_beta(state, data, basis, rng)
    sample_sigma_eps(state, data, basis, config, rng)
    sample_sigma_beta(state, basis, config, rng)

    sample_signs(state.shared, rng)
    sample_xi(state, data, basis, SHARED, rng)
    sample_gamma_sequential(state, data, basis, SHARED, rng)
    if rescale:
        rescale_expansion(state.shared)
    sample_eta(state, data, basis, rng)
    _update_cusp_block(state.shared, rng)

    for s in range(state.num_groups):
        block = state.specific[s]
        sample_signs(block, rng)
        sample_xi(state, data, basis, s, rng)
        sample_gamma_sequential(state, data, basis, s, rng)
        if rescale:
            rescale_expansion(block)
        sample_rho(state, data, basis, s, rng)
        _update_cusp_block(block, rng)


def _failing_update(exc: BaseException) -> str:
    """Name of the deepest sampler function on the exception's traceback."""
    names = []
    tb = exc.__traceback__
    while tb is not None:
        names.append(tb.tb_frame.f_code.co_name)
        tb = tb.tb_next
    for name in reversed(names):
        if name.startswith(("sample_", "rescale_")):
            return name
    return names[-1] if names else "gibbs_sweep"


def state_configuration(state: ModelState) -> tuple[int, ...]:
    """Active-factor configuration (L*, K*_1, ..., K*_S) of one state."""
    counts = [count_active(state.shared.cusp.z)]
    counts += [count_active(b.cusp.z) for b in state.specific]
    return tuple(counts)


def run_chain(
    data: FunctionalDataset, config: SamplerConfig, basis: BasisSystem | None = None
) -> PosteriorDraws:
    """Run the full sampler and return the retained draws.

    Reproducible bit-for-bit from config.seed.  Any update failure aborts
    with the iteration index and the update name attached.
    """
    rng = np.random.default_rng(config.seed)
    if basis is None:
        T = len(data.grid)
        R = config.num_basis if config.num_basis is not None else max(4, round(T / 2))
        basis = build_basis_system(data.grid, R, config.ridge)
    S = data.num_groups
    R = basis.num_basis
    state = initial_chain_state(data, basis, config, rng)

    num_retained = (config.iterations - config.burn_in) // config.thin
    sizes = data.group_sizes
    out = PosteriorDraws(
        iteration=np.zeros(num_retained, dtype=int),
        beta=np.zeros((num_retained, S, R)),
        sigma2_eps=np.zeros((num_retained, S)),
        sigma2_beta=np.zeros((num_retained, S)),
        lam=np.zeros((num_retained, R, config.L_max)),
        phi=[np.zeros((num_retained, R, config.K_max)) for _ in range(S)],
        eta=[np.zeros((num_retained, n, config.L_max)) for n in sizes],
        rho=[np.zeros((num_retained, n, config.K_max)) for n in sizes],
        z_shared=np.zeros((num_retained, config.L_max), dtype=int),
        z_specific=np.zeros((num_retained, S, config.K_max), dtype=int),
        configs=np.zeros((num_retained, 1 + S), dtype=int),
        group_ids=data.group_ids,
    )

    kept = 0
    for it in range(1, config.iterations + 1):
        try:
            gibbs_sweep(state, data, basis, config, rng)
        except Exception as exc:  # noqa: BLE001 - annotate and re-raise
            raise ChainAbortError(it, _failing_update(exc), exc) from exc
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            out.iteration[kept] = it
            for s in range(S):
                out.beta[kept, s] = state.beta[s]
                out.phi[s][kept] = state.specific[s].loadings
                out.eta[s][kept] = state.eta[s]
                out.rho[s][kept] = state.rho[s]
                out.z_specific[kept, s] = state.specific[s].cusp.z
            out.sigma2_eps[kept] = state.sigma2_eps
            out.sigma2_beta[kept] = state.sigma2_beta
            out.lam[kept] = state.shared.loadings
            out.z_shared[kept] = state.shared.cusp.z
            out.configs[kept] = state_configuration(state)
            kept += 1
    return out
