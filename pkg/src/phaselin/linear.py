"""MSE-optimal affine estimation of a signal from squared-magnitude data.

The estimator is linear in the observed intensities: ``x_hat = W y + b``.
Its coefficients come from the exact joint second-order moments of the
signal and the intensities under the measurement model, which are available
in closed form for both the real and the circularly-symmetric complex case.
All covariance solves go through a Cholesky factorization with an escalating
diagonal regularization ladder, never an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import (
    InconsistentMomentsError,
    SingularObservationCovarianceError,
)
from .model import NoiseSpec, ScalarField, SignalPrior, check_matrix
from .validation import as_field_array, as_real_array, check_hermitian_psd

#: relative tolerance on imaginary residue of quantities that must be real
IMAG_TOL = 1e-10

#: rungs of the diagonal loading ladder, relative to mean diagonal of C_y
REG_LADDER = tuple(10.0 ** k for k in range(-10, -3))

#: predicted MSE more negative than this (relative to the prior trace) is an error
MSE_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class FoldedNormalMoments:
    """Mean/variance/covariance of the squares of two jointly Gaussian reals."""

    mean1: float
    mean2: float
    var1: float
    var2: float
    cov: float


def folded_normal_moments(mu1: float, mu2: float, var1: float, var2: float,
                          cov12: float) -> FoldedNormalMoments:
    """Second-order moments of ``(z1**2, z2**2)`` for Gaussian ``(z1, z2)``.

    Scalar reference implementation of the quantities the matrix-valued
    observation covariance is assembled from; kept as a cross-check target.
    """
    from .exceptions import DegenerateCovarianceError

    if var1 < 0 or var2 < 0:
        raise DegenerateCovarianceError(f"variances must be >= 0, got ({var1}, {var2})")
    if abs(cov12) > np.sqrt(var1 * var2) + 1e-12:
        raise DegenerateCovarianceError(
            f"covariance {cov12} violates the Cauchy-Schwarz bound for variances ({var1}, {var2})"
        )
    return FoldedNormalMoments(
        mean1=var1 + mu1 ** 2,
        mean2=var2 + mu2 ** 2,
        var1=2.0 * var1 ** 2 + 4.0 * mu1 ** 2 * var1,
        var2=2.0 * var2 ** 2 + 4.0 * mu2 ** 2 * var2,
        cov=4.0 * mu1 * mu2 * cov12 + 2.0 * cov12 ** 2,
    )


@dataclass(frozen=True)
class PhasedMoments:
    """Moments of the pre-magnitude linear measurement ``A x + w``."""

    field: ScalarField
    lin_mean: np.ndarray
    lin_cov: np.ndarray


def lin_measurement_cov(A: np.ndarray, error_cov: np.ndarray,
                        signal_noise_cov: np.ndarray | None = None) -> np.ndarray:
    """Covariance of ``A x + w``; constant in the signal mean, so cacheable."""
    C = A @ error_cov @ A.conj().T
    if signal_noise_cov is not None:
        C = C + signal_noise_cov
    return (C + C.conj().T) / 2.0


def phased_moments(A, prior: SignalPrior, noise: NoiseSpec | None = None,
                   lin_cov: np.ndarray | None = None) -> PhasedMoments:
    """First and second moments of the linear measurement before the magnitude.

    ``lin_cov`` may carry a precomputed covariance (it does not depend on the
    prior mean); it is trusted as-is apart from a PSD sanity check.
    """
    field = prior.field
    A = as_field_array(A, field, "measurement matrix", ndim=2)
    if A.shape[1] != prior.dim:
        from .exceptions import DimensionMismatchError

        raise DimensionMismatchError(
            f"measurement matrix has {A.shape[1]} columns but the prior has dimension {prior.dim}"
        )
    z_mean = A @ prior.mean
    if lin_cov is None:
        C_w = noise.signal_noise_cov(A.shape[0], field) if noise is not None else None
        lin_cov = lin_measurement_cov(A, prior.error_cov, C_w)
    else:
        lin_cov = as_field_array(lin_cov, field, "linear measurement covariance", ndim=2)
        check_hermitian_psd(lin_cov, "linear measurement covariance")
    return PhasedMoments(field=field, lin_mean=z_mean, lin_cov=lin_cov)


def observation_mean(moments: PhasedMoments, meas_noise_mean=None) -> np.ndarray:
    """Expected intensity vector. Same closed form over both fields."""
    d = np.diagonal(moments.lin_cov)
    if not moments.field.is_real:
        scale = max(float(np.abs(d).max(initial=0.0)), 1.0)
        if float(np.abs(d.imag).max(initial=0.0)) > IMAG_TOL * scale:
            raise InconsistentMomentsError(
                "diagonal of the linear measurement covariance has a nonreal residue"
            )
    y_mean = d.real + np.abs(moments.lin_mean) ** 2
    if meas_noise_mean is not None:
        y_mean = y_mean + meas_noise_mean
    return y_mean


def cross_covariance(A, prior: SignalPrior, moments: PhasedMoments) -> np.ndarray:
    """Covariance between the signal and the intensities, shape (n, m).

    The real case carries an extra factor of two relative to the
    circularly-symmetric complex case.
    """
    A = as_field_array(A, prior.field, "measurement matrix", ndim=2)
    base = (prior.error_cov @ A.conj().T) * moments.lin_mean[None, :]
    return 2.0 * base if prior.field.is_real else base


def observation_covariance(moments: PhasedMoments, meas_noise_cov=None) -> np.ndarray:
    """Covariance of the intensity vector, real symmetric in both fields."""
    z, C = moments.lin_mean, moments.lin_cov
    if moments.field.is_real:
        C_y = (4.0 * np.outer(z, z) + 2.0 * C) * C
    else:
        C_y = 2.0 * (np.outer(z, z.conj()) * C.conj()).real + (C * C.conj()).real
    C_y = np.asarray(C_y, dtype=np.float64)
    if meas_noise_cov is not None:
        C_y = C_y + meas_noise_cov
    asym = float(np.abs(C_y - C_y.T).max(initial=0.0))
    scale = max(float(np.abs(C_y).max(initial=0.0)), 1.0)
    if asym > IMAG_TOL * scale:
        raise InconsistentMomentsError(
            f"intensity covariance is asymmetric beyond roundoff: {asym:.3e}"
        )
    return (C_y + C_y.T) / 2.0


def _factor_obs_cov(C_y: np.ndarray):
    """Cholesky-factor C_y with escalating diagonal loading.

    Returns (factorization, loading actually applied).  Raises
    SingularObservationCovarianceError once the ladder is exhausted.
    """
    m = C_y.shape[0]
    unit = float(np.trace(C_y)) / max(m, 1)
    for rel in (0.0,) + REG_LADDER:
        lam = rel * unit
        try:
            target = C_y if lam == 0.0 else C_y + lam * np.eye(m)
            return cho_factor(target, lower=True), lam
        except np.linalg.LinAlgError:
            continue
    w_min = float(np.linalg.eigvalsh(C_y).min()) if m else 0.0
    raise SingularObservationCovarianceError(
        f"intensity covariance is numerically singular even after diagonal loading "
        f"(min eigenvalue ~ {w_min:.3e})",
        smallest_eigenvalue=w_min,
    )


def _solve_obs(cho, B: np.ndarray) -> np.ndarray:
    # the factor is real; split a complex right-hand side into two real solves
    if np.iscomplexobj(B):
        return cho_solve(cho, B.real) + 1j * cho_solve(cho, B.imag)
    return cho_solve(cho, B)


def _clamped_mse(raw: float, prior_trace: float) -> float:
    if raw >= 0.0:
        return raw
    if raw >= -MSE_CLAMP_TOL * max(prior_trace, 1.0):
        return 0.0
    raise InconsistentMomentsError(
        f"predicted MSE is negative beyond roundoff: {raw:.6e}"
    )


def predicted_mse(error_cov: np.ndarray, cross_cov: np.ndarray,
                  obs_cov: np.ndarray) -> float:
    """Exact mean squared error of the optimal affine intensity estimator."""
    prior_trace = float(np.trace(error_cov).real)
    if not np.any(cross_cov):
        return prior_trace
    cho, _ = _factor_obs_cov(obs_cov)
    S = _solve_obs(cho, cross_cov.conj().T)
    raw = prior_trace - float(np.trace(cross_cov @ S).real)
    return _clamped_mse(raw, prior_trace)


@dataclass(frozen=True)
class AffineEstimator:
    """Fitted affine map from intensities to a signal estimate.

    ``gain`` is (n, m), ``offset`` is (n,), and the stored moments are the
    ones the coefficients were solved from.  ``regularization`` records the
    diagonal loading that was needed to factor ``obs_cov`` (0.0 normally).
    """

    field: ScalarField
    gain: np.ndarray
    offset: np.ndarray
    obs_mean: np.ndarray
    cross_cov: np.ndarray
    obs_cov: np.ndarray
    predicted_mse: float
    regularization: float = 0.0

    @property
    def n_signal(self) -> int:
        return self.gain.shape[0]

    @property
    def n_meas(self) -> int:
        return self.gain.shape[1]


def build_estimator(A, prior: SignalPrior, noise: NoiseSpec | None = None, *,
                    lin_cov: np.ndarray | None = None) -> AffineEstimator:
    """Solve for the MSE-optimal affine estimator of the signal.

    ``lin_cov`` lets callers reuse the covariance of ``A x + w`` across
    repeated builds that differ only in the prior mean.
    """
    A, _ = check_matrix(A, prior.field)
    m = A.shape[0]
    moments = phased_moments(A, prior, noise, lin_cov=lin_cov)
    y_mean = observation_mean(moments, noise.meas_noise_mean(m) if noise is not None else None)
    C_xy = cross_covariance(A, prior, moments)
    C_y = observation_covariance(moments, noise.meas_noise_cov(m) if noise is not None else None)
    prior_trace = float(np.trace(prior.error_cov).real)

    if not np.any(C_xy):
        # degenerate prior or pure-noise coupling: the best affine estimate
        # is the prior mean itself
        W = np.zeros((prior.dim, m), dtype=prior.field.dtype)
        return AffineEstimator(
            field=prior.field, gain=W, offset=prior.mean.copy(), obs_mean=y_mean,
            cross_cov=C_xy, obs_cov=C_y, predicted_mse=prior_trace, regularization=0.0,
        )

    cho, lam = _factor_obs_cov(C_y)
    S = _solve_obs(cho, C_xy.conj().T)          # solves C_y S = C_xy^H
    W = S.conj().T
    raw = prior_trace - float(np.trace(C_xy @ S).real)
    mse = _clamped_mse(raw, prior_trace)
    b = prior.mean - W @ y_mean
    return AffineEstimator(
        field=prior.field, gain=W, offset=b, obs_mean=y_mean,
        cross_cov=C_xy, obs_cov=C_y, predicted_mse=mse, regularization=lam,
    )


def estimate(est: AffineEstimator, y) -> np.ndarray:
    """Apply a fitted estimator to one intensity vector or a batch of columns."""
    y = as_real_array(y, "intensity vector")
    if y.ndim not in (1, 2) or y.shape[0] != est.n_meas:
        from .exceptions import DimensionMismatchError

        raise DimensionMismatchError(
            f"intensity input must have {est.n_meas} rows, got shape {y.shape}"
        )
    if y.ndim == 1:
        return est.gain @ y + est.offset
    return est.gain @ y + est.offset[:, None]
