"""Posterior identification: modal configuration, draw alignment, and
covariance-space loading extraction.

Loading draws are only identified up to rotation, sign, and column
permutation, so summaries either cancel those transformations exactly
(curve means, covariance operators) or fix them explicitly (varimax plus
signed-permutation alignment, eigenvector sign conventions).
"""

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .basis import BasisSystem
from .exceptions import InvalidDimensionError
from .gibbs import PosteriorDraws

VARIMAX_TOL = 1e-8
VARIMAX_MAX_ITER = 500
ALIGN_TOL = 1e-6
ALIGN_MAX_ITER = 100


@dataclass(frozen=True)
class FactorConfiguration:
    """Selected number of active shared and group-specific factors."""

    L_star: int
    K_star: tuple[int, ...]

    def as_tuple(self) -> tuple[int, ...]:
        return (self.L_star, *self.K_star)


@dataclass
class IdentifiedLoadings:
    """Covariance-derived loadings in time space plus the mean covariances."""

    shared: np.ndarray  # (T, L*)
    specific: list[np.ndarray]  # per group (T, K*_s)
    sigma_shared: np.ndarray  # (T, T)
    sigma_specific: list[np.ndarray]
    sigma_total: list[np.ndarray]


def modal_configuration(draws: PosteriorDraws) -> tuple[FactorConfiguration, np.ndarray]:
    """Most frequent active-factor configuration and the draws that match it.

    Ties break toward the smallest total factor count, then lexicographic
    order.
    """
    if draws.num_draws == 0:
        raise InvalidDimensionError("no retained draws")
    counts = Counter(tuple(int(v) for v in row) for row in draws.configs)
    best = max(counts.items(), key=lambda kv: (kv[1], -sum(kv[0]), tuple(-c for c in kv[0])))
    config = FactorConfiguration(L_star=best[0][0], K_star=tuple(best[0][1:]))
    member = np.array(
        [tuple(row) == best[0] for row in draws.configs], dtype=bool
    )
    return config, np.flatnonzero(member)


def varimax_criterion(loadings: np.ndarray) -> float:
    """Sum over columns of the variance of the squared loadings."""
    p = loadings.shape[0]
    sq = loadings**2
    return float(np.sum(np.mean(sq**2, axis=0) - np.mean(sq, axis=0) ** 2))


def varimax(loadings: np.ndarray) -> np.ndarray:
    """Orthogonal rotation maximizing the varimax criterion.

    Iterative SVD updates; stops when the criterion gain drops below 1e-8
    or after 500 iterations.  Returns the q x q rotation, identity for a
    single column.
    """
    p, q = loadings.shape
    if q <= 1:
        return np.eye(q)
    rotation = np.eye(q)
    crit = varimax_criterion(loadings)
    for _ in range(VARIMAX_MAX_ITER):
        rotated = loadings @ rotation
        target = rotated**3 - rotated * np.mean(rotated**2, axis=0, keepdims=True)
        u, _, vt = np.linalg.svd(loadings.T @ target)
        rotation_new = u @ vt
        crit_new = varimax_criterion(loadings @ rotation_new)
        if crit_new <= crit + VARIMAX_TOL:
            if crit_new > crit:
                rotation = rotation_new
            break
        rotation = rotation_new
        crit = crit_new
    return rotation


def _best_signed_permutation(loadings: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Signed permutation P minimizing ||loadings P - reference||_F^2.

    Solved exactly as an assignment problem: the sign of each pairing is
    free, so the cost of sending column j to slot k is the squared distance
    at the optimal sign.
    """
    q = loadings.shape[1]
    dots = loadings.T @ reference  # (j, k)
    col_norms = np.sum(loadings**2, axis=0)
    ref_norms = np.sum(reference**2, axis=0)
    cost = col_norms[:, None] + ref_norms[None, :] - 2.0 * np.abs(dots)
    rows, cols = linear_sum_assignment(cost)
    P = np.zeros((q, q))
    signs = np.where(dots[rows, cols] >= 0.0, 1.0, -1.0)
    P[rows, cols] = signs
    return P


def rsp_align(
    loading_draws: list[np.ndarray], score_draws: list[np.ndarray] | None = None
) -> tuple[list[np.ndarray], list[np.ndarray] | None]:
    """Varimax-rotate each draw, then align all draws by signed permutation.

    The reference starts as the first rotated draw and is re-set to the
    mean of the aligned draws until the total squared discrepancy moves by
    less than 1e-6 (or 100 outer iterations).  Matching transforms applied
    to the scores keep every draw's loadings-times-scores product intact.
    """
    if not loading_draws:
        return [], score_draws
    q = loading_draws[0].shape[1]
    if q == 0:
        return [m.copy() for m in loading_draws], (
            None if score_draws is None else [s.copy() for s in score_draws]
        )
    aligned = []
    scores = None if score_draws is None else []
    for m, lam in enumerate(loading_draws):
        rot = varimax(lam)
        aligned.append(lam @ rot)
        if scores is not None:
            scores.append(score_draws[m] @ rot)
    reference = aligned[0].copy()
    last_total = np.inf
    for _ in range(ALIGN_MAX_ITER):
        total = 0.0
        for m, lam in enumerate(aligned):
            P = _best_signed_permutation(lam, reference)
            aligned[m] = lam @ P
            if scores is not None:
                scores[m] = scores[m] @ P
            total += float(np.sum((aligned[m] - reference) ** 2))
        if abs(last_total - total) < ALIGN_TOL:
            break
        last_total = total
        reference = np.mean(aligned, axis=0)
    return aligned, scores


def active_loading_draws(
    draws: PosteriorDraws, indices: np.ndarray, which
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Active columns of the loadings plus matching scores per retained draw.

    which is "shared" or a group index; active columns are those whose
    indicator exceeds its own position, so every draw in a single modal
    configuration yields the same column count.
    """
    lams, scs = [], []
    for m in indices:
        if which == "shared":
            z = draws.z_shared[m]
            lam = draws.lam[m]
            score = np.vstack([draws.eta[s][m] for s in range(draws.num_groups)])
        else:
            z = draws.z_specific[m, which]
            lam = draws.phi[which][m]
            score = draws.rho[which][m]
        active = z > np.arange(1, z.size + 1)
        lams.append(lam[:, active])
        scs.append(score[:, active])
    return lams, scs


def posterior_mean_curves(
    draws: PosteriorDraws, basis: BasisSystem, indices: np.ndarray | None = None
) -> list[dict]:
    """Posterior mean curves and pointwise 95% bands per group.

    Averages B (beta + Lambda eta + Phi rho) over the selected draws; the
    result is invariant to any draw alignment because the products cancel
    the transforms.
    """
    if indices is None:
        indices = np.arange(draws.num_draws)
    if indices.size == 0:
        raise InvalidDimensionError("no draws selected")
    out = []
    for s in range(draws.num_groups):
        stack = np.empty((indices.size, draws.eta[s].shape[1], basis.num_points))
        for j, m in enumerate(indices):
            coef = draws.beta[m, s][None, :] + draws.eta[s][m] @ draws.lam[m].T
            coef += draws.rho[s][m] @ draws.phi[s][m].T
            stack[j] = coef @ basis.B.T
        out.append(
            {
                "mean": stack.mean(axis=0),
                "lower": np.quantile(stack, 0.025, axis=0),
                "upper": np.quantile(stack, 0.975, axis=0),
            }
        )
    return out


def covariance_summaries(
    draws: PosteriorDraws, basis: BasisSystem, indices: np.ndarray | None = None
) -> dict:
    """Posterior mean covariance operators in time space.

    sigma_total per group is exactly sigma_shared + sigma_specific[s].
    """
    if indices is None:
        indices = np.arange(draws.num_draws)
    if indices.size == 0:
        raise InvalidDimensionError("no draws selected")
    T = basis.num_points
    sigma_shared = np.zeros((T, T))
    sigma_specific = [np.zeros((T, T)) for _ in range(draws.num_groups)]
    for m in indices:
        BL = basis.B @ draws.lam[m]
        sigma_shared += BL @ BL.T
        for s in range(draws.num_groups):
            BP = basis.B @ draws.phi[s][m]
            sigma_specific[s] += BP @ BP.T
    sigma_shared /= indices.size
    sigma_specific = [m / indices.size for m in sigma_specific]
    sigma_total = [sigma_shared + m for m in sigma_specific]
    return {
        "shared": sigma_shared,
        "specific": sigma_specific,
        "total": sigma_total,
    }


def _top_eigenpairs(sym: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading k eigenpairs of a symmetrized matrix, eigenvalues descending."""
    sym = 0.5 * (sym + sym.T)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    return vals[order[:k]], vecs[:, order[:k]]


def _fix_column_signs(mat: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive."""
    if mat.shape[1] == 0:
        return mat
    idx = np.argmax(np.abs(mat), axis=0)
    flips = np.where(mat[idx, np.arange(mat.shape[1])] < 0.0, -1.0, 1.0)
    return mat * flips


def covariance_derived_loadings(
    summaries: dict, config: FactorConfiguration
) -> IdentifiedLoadings:
    """Identified loadings as scaled leading eigenvectors.

    The shared loadings come from the spectral decomposition of the shared
    covariance; each group's loadings come from what is left of its total
    covariance after removing the shared rank-L* part, with any negative
    eigenvalues from rounding clipped to zero before the square root.
    """
    sigma_shared = summaries["shared"]
    T = sigma_shared.shape[0]
    if config.L_star > 0:
        vals, vecs = _top_eigenpairs(sigma_shared, config.L_star)
        vals = np.clip(vals, 0.0, None)
        shared = _fix_column_signs(vecs * np.sqrt(vals)[None, :])
    else:
        shared = np.zeros((T, 0))
    specific = []
    for s, sigma_total in enumerate(summaries["total"]):
        residual = sigma_total - shared @ shared.T
        k = config.K_star[s]
        if k == 0:
            specific.append(np.zeros((T, 0)))
            continue
        vals, vecs = _top_eigenpairs(residual, k)
        positive = vals > 1e-12 * max(float(np.max(np.abs(vals))), 1e-300)
        if np.sum(positive) < k:
            warnings.warn(
                f"group {s}: only {int(np.sum(positive))} positive eigenvalues "
                f"for {k} requested components",
                stacklevel=2,
            )
            vals, vecs = vals[positive], vecs[:, positive]
        vals = np.clip(vals, 0.0, None)
        specific.append(_fix_column_signs(vecs * np.sqrt(vals)[None, :]))
    return IdentifiedLoadings(
        shared=shared,
        specific=specific,
        sigma_shared=sigma_shared,
        sigma_specific=summaries["specific"],
        sigma_total=summaries["total"],
    )
