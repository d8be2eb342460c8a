"""Estimator-object layer over the functional core.

Thin wrappers exposing the solvers through the usual fit/predict/transform
conventions: rows are samples, one intensity vector per row in, one signal
estimate per row out.  The underlying math lives in the functional modules;
these classes only hold configuration, canonicalize inputs, and loop over
rows, which keeps them pipeline- and grid-search-friendly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .baselines import BaselineOptions, fienup, gerchberg_saxton, wirtinger_flow
from .exceptions import DimensionMismatchError
from .iterative import FixedMatrix, FixedScaledIdentity, IterativeOptions, iterative_phaselin
from .linear import build_estimator, estimate
from .model import NoiseSpec, SignalPrior, check_matrix, spawn_rng
from .spectral import SpectralOptions, spectral_initializer


def _check_obs_rows(Y, m: int) -> np.ndarray:
    Y = check_array(Y, ensure_2d=True)
    if Y.shape[1] != m:
        raise DimensionMismatchError(
            f"expected {m} intensity columns per row, got {Y.shape[1]}"
        )
    return Y


class PhaseLin(BaseEstimator):
    """Affine MSE-optimal estimator with a fit/predict interface.

    fit() solves the estimator coefficients from the configured problem
    moments (the training data arguments are ignored; everything the solve
    needs is a parameter).  predict maps rows of intensities to rows of
    signal estimates.
    """

    def __init__(self, matrix=None, prior_mean=None, error_cov=None,
                 signal_noise_cov=None, meas_noise_mean=None, meas_noise_cov=None,
                 field=None):
        self.matrix = matrix
        self.prior_mean = prior_mean
        self.error_cov = error_cov
        self.signal_noise_cov = signal_noise_cov
        self.meas_noise_mean = meas_noise_mean
        self.meas_noise_cov = meas_noise_cov
        self.field = field

    def fit(self, X=None, y=None):
        if self.matrix is None or self.prior_mean is None or self.error_cov is None:
            raise ValueError("matrix, prior_mean and error_cov are required to fit")
        prior = SignalPrior(self.prior_mean, self.error_cov, field=self.field)
        noise = NoiseSpec(signal_cov=self.signal_noise_cov,
                          meas_mean=self.meas_noise_mean,
                          meas_cov=self.meas_noise_cov)
        self.estimator_ = build_estimator(self.matrix, prior, noise)
        self.predicted_mse_ = self.estimator_.predicted_mse
        self.regularization_ = self.estimator_.regularization
        return self

    def predict(self, Y) -> np.ndarray:
        if not hasattr(self, "estimator_"):
            raise ValueError("this PhaseLin instance is not fitted yet; call fit() first")
        Y = _check_obs_rows(Y, self.estimator_.n_meas)
        return estimate(self.estimator_, Y.T).T


class SpectralInitializer(BaseEstimator, TransformerMixin):
    """Transformer from intensity rows to spectral initial-guess rows."""

    def __init__(self, matrix=None, preprocessing=None, tol=1e-10, max_iter=1000,
                 scale_to_measurements=True, meas_noise_mean=None, seed=0):
        self.matrix = matrix
        self.preprocessing = preprocessing
        self.tol = tol
        self.max_iter = max_iter
        self.scale_to_measurements = scale_to_measurements
        self.meas_noise_mean = meas_noise_mean
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.matrix is None:
            raise ValueError("matrix is required")
        self.matrix_, self.field_ = check_matrix(self.matrix)
        return self

    def transform(self, Y) -> np.ndarray:
        if not hasattr(self, "matrix_"):
            self.fit()
        Y = _check_obs_rows(Y, self.matrix_.shape[0])
        opts = SpectralOptions(preprocessing=self.preprocessing, power_iter_tol=self.tol,
                               power_iter_max=self.max_iter,
                               scale_to_measurements=self.scale_to_measurements)
        noise_mean = NoiseSpec(meas_mean=self.meas_noise_mean).meas_noise_mean(self.matrix_.shape[0])
        out = np.empty((Y.shape[0], self.matrix_.shape[1]), dtype=self.field_.dtype)
        for i, row in enumerate(Y):
            out[i] = spectral_initializer(self.matrix_, row, opts, spawn_rng(self.seed, i),
                                          meas_noise_mean=noise_mean)
        return out


class _RowSolver(BaseEstimator):
    """Shared plumbing: canonicalize the matrix, spectral start, row loop."""

    def fit(self, X=None, y=None):
        if self.matrix is None:
            raise ValueError("matrix is required")
        self.matrix_, self.field_ = check_matrix(self.matrix)
        return self

    def _initial_guess(self, y, i):
        return spectral_initializer(self.matrix_, y, SpectralOptions(),
                                    spawn_rng(self.seed, i))

    def predict(self, Y) -> np.ndarray:
        if not hasattr(self, "matrix_"):
            self.fit()
        Y = _check_obs_rows(Y, self.matrix_.shape[0])
        out = np.empty((Y.shape[0], self.matrix_.shape[1]), dtype=self.field_.dtype)
        for i, row in enumerate(Y):
            out[i] = self._solve(row, self._initial_guess(row, i))
        return out


class IterativePhaseLin(_RowSolver):
    """Iteratively re-centered affine estimation, one solve per row."""

    def __init__(self, matrix=None, t_max=15, beta=1.0, error_cov=None, stop_tol=0.0,
                 signal_noise_cov=None, meas_noise_mean=None, meas_noise_cov=None, seed=0):
        self.matrix = matrix
        self.t_max = t_max
        self.beta = beta
        self.error_cov = error_cov
        self.stop_tol = stop_tol
        self.signal_noise_cov = signal_noise_cov
        self.meas_noise_mean = meas_noise_mean
        self.meas_noise_cov = meas_noise_cov
        self.seed = seed

    def _solve(self, y, x0):
        policy = FixedMatrix(self.error_cov) if self.error_cov is not None \
            else FixedScaledIdentity(self.beta)
        opts = IterativeOptions(t_max=self.t_max, error_cov_policy=policy,
                                stop_tol=self.stop_tol)
        noise = NoiseSpec(signal_cov=self.signal_noise_cov,
                          meas_mean=self.meas_noise_mean,
                          meas_cov=self.meas_noise_cov)
        x_hat, _ = iterative_phaselin(self.matrix_, y, noise, x0, opts)
        return x_hat


class GerchbergSaxton(_RowSolver):
    def __init__(self, matrix=None, max_iters=1000, tol=1e-8, seed=0):
        self.matrix = matrix
        self.max_iters = max_iters
        self.tol = tol
        self.seed = seed

    def _solve(self, y, x0):
        opts = BaselineOptions(max_iters=self.max_iters, tol=self.tol)
        return gerchberg_saxton(self.matrix_, y, x0, opts)


class Fienup(_RowSolver):
    def __init__(self, matrix=None, beta=0.9, max_iters=1000, tol=1e-8, seed=0):
        self.matrix = matrix
        self.beta = beta
        self.max_iters = max_iters
        self.tol = tol
        self.seed = seed

    def _solve(self, y, x0):
        opts = BaselineOptions(max_iters=self.max_iters, tol=self.tol, fienup_beta=self.beta)
        return fienup(self.matrix_, y, x0, opts)


class WirtingerFlow(_RowSolver):
    def __init__(self, matrix=None, step_size=None, max_iters=1000, tol=1e-8, seed=0):
        self.matrix = matrix
        self.step_size = step_size
        self.max_iters = max_iters
        self.tol = tol
        self.seed = seed

    def _solve(self, y, x0):
        opts = BaselineOptions(max_iters=self.max_iters, tol=self.tol, step_size=self.step_size)
        return wirtinger_flow(self.matrix_, y, x0, opts)
