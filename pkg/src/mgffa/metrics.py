"""Evaluation metrics and MCMC convergence diagnostics."""

import numpy as np

from .exceptions import DegenerateError, InvalidDimensionError, UndefinedMetricError

GEWEKE_BATCHES = 20


def rv_coefficient(X: np.ndarray, Y: np.ndarray) -> float:
    """Similarity of two matrices' Gram structures, in [0, 1].

    RV = tr(XX'YY') / sqrt(tr((XX')^2) tr((YY')^2)); the inputs may have
    different column counts but must share the row count.  Invariant to
    orthogonal right-multiplication and nonzero rescaling of either input.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise InvalidDimensionError(
            f"row counts differ: {X.shape[0]} vs {Y.shape[0]}"
        )
    cross = float(np.sum((X.T @ Y) ** 2))  # tr(XX'YY') = ||X'Y||_F^2
    xx = float(np.sum((X.T @ X) ** 2))
    yy = float(np.sum((Y.T @ Y) ** 2))
    if xx == 0.0 or yy == 0.0:
        raise UndefinedMetricError("RV undefined for a zero Gram matrix")
    return cross / np.sqrt(xx * yy)


def pointwise_mse(f_true: np.ndarray, f_hat: np.ndarray) -> np.ndarray:
    """Mean squared error over subjects at each time point, length T."""
    f_true = np.atleast_2d(np.asarray(f_true, dtype=float))
    f_hat = np.atleast_2d(np.asarray(f_hat, dtype=float))
    if f_true.shape != f_hat.shape:
        raise InvalidDimensionError(
            f"shape mismatch: {f_true.shape} vs {f_hat.shape}"
        )
    return np.mean((f_true - f_hat) ** 2, axis=0)


def total_mse(f_true: np.ndarray, f_hat: np.ndarray) -> float:
    """Time average of the pointwise mean squared errors."""
    return float(np.mean(pointwise_mse(f_true, f_hat)))


def _batch_means_variance(window: np.ndarray, num_batches: int) -> float:
    """Spectral variance at frequency zero by batch means."""
    batch = window.size // num_batches
    if batch < 1:
        raise InvalidDimensionError(
            f"window of {window.size} too short for {num_batches} batches"
        )
    trimmed = window[: batch * num_batches].reshape(num_batches, batch)
    means = trimmed.mean(axis=1)
    return batch * float(np.var(means, ddof=1))


def geweke_diagnostic(chain: np.ndarray, frac_a: float = 0.1, frac_b: float = 0.5) -> float:
    """Z-score comparing the first 10% to the last 50% of a chain.

    Window variances are spectral density estimates at frequency zero from
    20 batch means per window, so autocorrelation inflates them instead of
    the z-score.
    """
    chain = np.asarray(chain, dtype=float).ravel()
    if chain.size < 100:
        raise InvalidDimensionError(f"chain length {chain.size} < 100")
    n_a = int(frac_a * chain.size)
    n_b = int(frac_b * chain.size)
    head = chain[:n_a]
    tail = chain[-n_b:]
    var_a = _batch_means_variance(head, GEWEKE_BATCHES)
    var_b = _batch_means_variance(tail, GEWEKE_BATCHES)
    if var_a == 0.0 or var_b == 0.0:
        raise DegenerateError("zero variance in a Geweke window")
    return float((head.mean() - tail.mean()) / np.sqrt(var_a / n_a + var_b / n_b))
