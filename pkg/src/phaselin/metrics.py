"""Evaluation metrics: scale-invariant normalized MSE and Monte-Carlo MSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, UndefinedMetricError
from .linear import AffineEstimator
from .model import NoiseSpec, SignalPrior, measure, sample_signal


@dataclass(frozen=True)
class NmseResult:
    """Normalized MSE together with the optimal rescaling of the estimate."""

    nmse: float
    alpha: complex


def n_mse(x, x_hat) -> NmseResult:
    """min over alpha of ||x - alpha x_hat||^2 / ||x||^2.

    The minimizer is the projection coefficient of x onto x_hat, complex in
    the complex case and real in the real case, which makes the metric blind
    to global scale and phase of the estimate.  A zero estimate gets
    alpha = 0 and nmse = 1 by convention; a zero truth has no meaningful
    normalization and is rejected.
    """
    x = np.asarray(x)
    x_hat = np.asarray(x_hat)
    if x.shape != x_hat.shape:
        raise DimensionMismatchError(
            f"truth and estimate shapes differ: {x.shape} vs {x_hat.shape}"
        )
    x_energy = float(np.vdot(x, x).real)
    if x_energy == 0.0:
        raise UndefinedMetricError("normalized MSE is undefined for a zero ground truth")
    h_energy = float(np.vdot(x_hat, x_hat).real)
    if h_energy == 0.0:
        return NmseResult(nmse=1.0, alpha=0.0)
    alpha = np.vdot(x_hat, x) / h_energy
    if not np.iscomplexobj(x) and not np.iscomplexobj(x_hat):
        alpha = float(alpha.real)
    resid = x - alpha * x_hat
    nmse = float(np.vdot(resid, resid).real) / x_energy
    return NmseResult(nmse=max(nmse, 0.0), alpha=alpha)


def _as_affine_apply(estimator):
    """Normalize the estimator argument to a batch-capable callable."""
    if isinstance(estimator, AffineEstimator):
        W, b = estimator.gain, estimator.offset
    elif isinstance(estimator, tuple) and len(estimator) == 2:
        W, b = (np.asarray(a) for a in estimator)
    elif callable(estimator):
        return estimator
    else:
        raise TypeError(
            "estimator must be an AffineEstimator, a (gain, offset) pair, or a callable"
        )
    return lambda Y: W @ Y + b[:, None]


def empirical_mse(estimator, A, prior: SignalPrior, noise: NoiseSpec | None,
                  trials: int, rng: np.random.Generator):
    """Monte-Carlo mean squared error E||x_hat - x||^2 of any estimator.

    ``estimator`` maps a (m, trials) batch of intensity columns to (n, trials)
    estimate columns; affine forms are vectorized automatically.  Returns the
    sample mean and its standard error.
    """
    if trials < 2:
        raise ValueError(f"trials must be >= 2 to report a standard error, got {trials}")
    apply = _as_affine_apply(estimator)
    X = sample_signal(prior, rng, size=trials)
    Y = measure(np.asarray(A, dtype=prior.field.dtype), X, noise, rng)
    X_hat = np.asarray(apply(Y))
    err = X_hat - X
    sq = np.sum(np.abs(err) ** 2, axis=0)
    mse = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / np.sqrt(trials))
    return mse, se
