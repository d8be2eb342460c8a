"""Problem description: scalar field, signal prior, noise model, sampling.

The measurement model throughout the package is

    y = |A x + w|^2 + v

with ``x`` drawn around a known mean with known covariance, ``w`` zero-mean
noise added before the squared magnitude, and ``v`` noise (possibly with a
nonzero mean) added after it.  Arrays follow the column convention: a single
signal is ``(n,)``, a batch is ``(n, t)`` with one column per draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DegenerateCovarianceError, DimensionMismatchError
from .validation import (
    PSD_TOL,
    as_field_array,
    as_real_array,
    check_hermitian_psd,
    check_square,
    check_vector,
)


class ScalarField(Enum):
    """Base field of the signal and measurement matrix."""

    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is ScalarField.REAL else np.complex128

    @property
    def is_real(self) -> bool:
        return self is ScalarField.REAL

    @classmethod
    def coerce(cls, value) -> "ScalarField":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown scalar field {value!r}, expected 'real' or 'complex'") from None


def infer_field(*arrays) -> ScalarField:
    """Complex if any array is complex, real otherwise."""
    for arr in arrays:
        if arr is not None and np.iscomplexobj(np.asarray(arr)):
            return ScalarField.COMPLEX
    return ScalarField.REAL


@dataclass(frozen=True)
class SignalPrior:
    """First and second moments of the unknown signal.

    ``mean`` is the deterministic component, ``error_cov`` the covariance of
    the perturbation around it.  In the complex case the perturbation is
    circularly symmetric, so ``error_cov`` fully describes it.
    """

    mean: np.ndarray
    error_cov: np.ndarray
    field: ScalarField

    def __init__(self, mean, error_cov, field=None):
        if field is None:
            field = infer_field(mean, error_cov)
        field = ScalarField.coerce(field)
        mean = as_field_array(mean, field, "signal mean", ndim=1)
        n = mean.shape[0]
        cov = np.asarray(error_cov)
        if cov.ndim == 0:
            # scalar shorthand for an isotropic covariance
            cov = float(cov) * np.eye(n)
        cov = as_field_array(cov, field, "signal error covariance", ndim=2)
        check_square(cov, n, "signal error covariance")
        check_hermitian_psd(cov, "signal error covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "error_cov", cov)
        object.__setattr__(self, "field", field)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def isotropic(cls, mean, variance: float, field=None) -> "SignalPrior":
        if variance < 0:
            raise DegenerateCovarianceError(f"signal variance must be >= 0, got {variance}")
        return cls(mean, variance, field=field)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise entering before and after the squared magnitude.

    Any component may be omitted (``None`` means exactly zero) or given as a
    scalar shorthand: a variance for the covariances, a constant level for
    ``meas_mean``.  Shapes are only checked against the measurement count at
    the point of use via the accessor methods.
    """

    signal_cov: object = None
    meas_mean: object = None
    meas_cov: object = None

    def signal_noise_cov(self, m: int, field: ScalarField):
        """Covariance of the pre-magnitude noise, or None if absent."""
        if self.signal_cov is None:
            return None
        cov = np.asarray(self.signal_cov)
        if cov.ndim == 0:
            var = float(cov.real)
            if var < 0:
                raise DegenerateCovarianceError(f"signal noise variance must be >= 0, got {var}")
            return None if var == 0.0 else var * np.eye(m, dtype=field.dtype)
        cov = as_field_array(cov, field, "signal noise covariance", ndim=2)
        check_square(cov, m, "signal noise covariance")
        return check_hermitian_psd(cov, "signal noise covariance")

    def meas_noise_mean(self, m: int):
        """Mean of the post-magnitude noise, or None if zero."""
        if self.meas_mean is None:
            return None
        mean = np.asarray(self.meas_mean)
        if mean.ndim == 0:
            level = float(mean)
            return None if level == 0.0 else np.full(m, level)
        mean = as_real_array(mean, "measurement noise mean", ndim=1)
        return check_vector(mean, m, "measurement noise mean")

    def meas_noise_cov(self, m: int):
        """Covariance of the post-magnitude noise, or None if absent."""
        if self.meas_cov is None:
            return None
        cov = np.asarray(self.meas_cov)
        if cov.ndim == 0:
            var = float(cov)
            if var < 0:
                raise DegenerateCovarianceError(f"measurement noise variance must be >= 0, got {var}")
            return None if var == 0.0 else var * np.eye(m)
        cov = as_real_array(cov, "measurement noise covariance", ndim=2)
        check_square(cov, m, "measurement noise covariance")
        return check_hermitian_psd(cov, "measurement noise covariance")

    @classmethod
    def noiseless(cls) -> "NoiseSpec":
        return cls()

    @classmethod
    def isotropic(cls, *, signal_var=0.0, meas_var=0.0, meas_mean=0.0) -> "NoiseSpec":
        return cls(signal_cov=signal_var or None, meas_mean=meas_mean or None, meas_cov=meas_var or None)


def psd_factor(C: np.ndarray, name: str = "covariance") -> np.ndarray:
    """Factor ``C = L L^H`` for sampling, tolerating semidefinite input.

    Tries a Cholesky factorization, once more with a trace-scaled jitter,
    then falls back to an eigendecomposition with small negative eigenvalues
    clamped to zero.  Raises DegenerateCovarianceError if the matrix is
    indefinite beyond roundoff.
    """
    C = np.asarray(C)
    n = C.shape[0]
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * float(np.trace(C).real) / max(n, 1)
    if jitter > 0:
        try:
            return np.linalg.cholesky(C + jitter * np.eye(n, dtype=C.dtype))
        except np.linalg.LinAlgError:
            pass
    w, V = np.linalg.eigh((C + C.conj().T) / 2.0)
    scale = max(float(w[-1]) if n else 0.0, 1.0)
    if n and float(w[0]) < -PSD_TOL * scale:
        raise DegenerateCovarianceError(
            f"{name} is indefinite: min eigenvalue {float(w[0]):.3e}"
        )
    return V * np.sqrt(np.clip(w, 0.0, None))


def gaussian_sample(L: np.ndarray, field: ScalarField, rng: np.random.Generator, size=None):
    """Zero-mean Gaussian draw(s) with covariance ``L L^H``.

    Complex draws are circularly symmetric.  Returns ``(n,)`` for
    ``size=None`` and ``(n, size)`` otherwise.
    """
    n = L.shape[0]
    shape = (L.shape[1],) if size is None else (L.shape[1], int(size))
    if field.is_real:
        return L @ rng.standard_normal(shape)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return L @ (g / np.sqrt(2.0))


def sample_signal(prior: SignalPrior, rng: np.random.Generator, size=None):
    """Draw signal realization(s) from the prior."""
    L = psd_factor(prior.error_cov, "signal error covariance")
    draw = gaussian_sample(L, prior.field, rng, size=size)
    return prior.mean + draw if size is None else prior.mean[:, None] + draw


def measure(A: np.ndarray, x: np.ndarray, noise: NoiseSpec | None = None,
            rng: np.random.Generator | None = None):
    """Apply the measurement model to one signal or a batch of columns."""
    z = A @ x
    m = A.shape[0]
    field = infer_field(A)
    size = None if z.ndim == 1 else z.shape[1]
    if noise is not None:
        C_w = noise.signal_noise_cov(m, field)
        if C_w is not None:
            if rng is None:
                raise ValueError("rng is required to sample noise")
            z = z + gaussian_sample(psd_factor(C_w, "signal noise covariance"), field, rng, size=size)
    y = np.abs(z) ** 2
    if noise is not None:
        v_mean = noise.meas_noise_mean(m)
        if v_mean is not None:
            y = y + (v_mean if size is None else v_mean[:, None])
        C_v = noise.meas_noise_cov(m)
        if C_v is not None:
            if rng is None:
                raise ValueError("rng is required to sample noise")
            y = y + gaussian_sample(psd_factor(C_v, "measurement noise covariance"),
                                    ScalarField.REAL, rng, size=size)
    return y


def make_gaussian_matrix(m: int, n: int, field, rng: np.random.Generator) -> np.ndarray:
    """Random measurement matrix with i.i.d. unit-variance Gaussian entries."""
    field = ScalarField.coerce(field)
    if field.is_real:
        return rng.standard_normal((m, n))
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2.0)


def random_psd(n: int, rng: np.random.Generator, field=ScalarField.REAL, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random PSD matrix, mostly for tests and demos."""
    B = make_gaussian_matrix(n, 2 * n, field, rng)
    C = B @ B.conj().T / (2 * n)
    return scale * (C + C.conj().T) / 2.0


def spawn_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator identified by (master_seed, key path).

    Streams depend only on the key, not on the order streams are created in,
    so per-trial randomness is reproducible under any execution schedule.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def check_matrix(A, field: ScalarField | None = None) -> tuple[np.ndarray, ScalarField]:
    """Canonicalize a measurement matrix, inferring the field if not given."""
    arr = np.asarray(A)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"measurement matrix must be 2-dimensional, got shape {arr.shape}")
    if field is None:
        field = infer_field(arr)
    return as_field_array(arr, field, "measurement matrix", ndim=2), field
