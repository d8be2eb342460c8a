"""Spectral initial guess from intensity measurements.

Builds the measurement-weighted matrix ``D = (1/m) sum_k t(y_k) a_k a_k^H``
(rows ``a_k^H`` of the matrix, preprocessing ``t``) and returns its dominant
eigenvector, phase-fixed and optionally rescaled to match the total measured
energy.  The eigenvector is found by plain power iteration; no deflation or
shifting, so a sign-degenerate spectrum surfaces as a convergence error
rather than a silently wrong direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateInitializerError, PowerIterationError
from .model import ScalarField, check_matrix
from .validation import as_real_array, check_vector

#: coordinates below this magnitude do not anchor the phase convention
PHASE_FIX_TOL = 1e-12


@dataclass(frozen=True)
class SpectralOptions:
    """Knobs for the spectral initializer.

    ``preprocessing`` maps measured intensities to the weights of D; identity
    by default, pluggable because better choices exist in the literature.
    """

    preprocessing: Optional[Callable] = None
    power_iter_tol: float = 1e-10
    power_iter_max: int = 1000
    scale_to_measurements: bool = True

    def __post_init__(self):
        if self.power_iter_max < 1:
            raise ValueError(f"power_iter_max must be >= 1, got {self.power_iter_max}")
        if not self.power_iter_tol > 0:
            raise ValueError(f"power_iter_tol must be > 0, got {self.power_iter_tol}")


def _fix_phase(v: np.ndarray, field: ScalarField) -> np.ndarray:
    """Rotate so the first non-negligible coordinate is real and positive."""
    idx = np.flatnonzero(np.abs(v) > PHASE_FIX_TOL)
    if idx.size == 0:
        return v
    pivot = v[idx[0]]
    if field.is_real:
        return -v if pivot < 0 else v
    return v * (pivot.conjugate() / abs(pivot))


def _dominant_eigenvector(D: np.ndarray, field: ScalarField, tol: float,
                          max_iter: int, rng: np.random.Generator):
    n = D.shape[0]
    v = rng.standard_normal(n).astype(field.dtype)
    if not field.is_real:
        v = v + 1j * rng.standard_normal(n)
    v = v / np.linalg.norm(v)
    residual = np.inf
    for _ in range(max_iter):
        w = D @ v
        lam = float(np.vdot(v, w).real)     # Rayleigh quotient, real since D is Hermitian
        residual = float(np.linalg.norm(w - lam * v))
        if residual <= tol * max(abs(lam), np.finfo(float).tiny):
            return v, lam
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            # landed exactly in the null space; re-randomize the direction
            v = rng.standard_normal(n).astype(field.dtype)
            if not field.is_real:
                v = v + 1j * rng.standard_normal(n)
            v = v / np.linalg.norm(v)
            continue
        v = w / nrm
    raise PowerIterationError(
        f"power iteration did not reach tolerance {tol:g} in {max_iter} steps "
        f"(last residual {residual:.3e})",
        residual=residual,
    )


def spectral_initializer(A, y, opts: SpectralOptions | None = None,
                         rng: np.random.Generator | None = None,
                         meas_noise_mean=None) -> np.ndarray:
    """Initial signal guess from (measurement matrix, intensities).

    ``meas_noise_mean`` is subtracted from y before the energy-matching step
    so a known noise floor does not inflate the guess.  The returned vector
    has its first non-negligible coordinate real and positive.
    """
    opts = opts or SpectralOptions()
    rng = rng if rng is not None else np.random.default_rng(0)
    A, field = check_matrix(A)
    m = A.shape[0]
    y = check_vector(as_real_array(y, "intensity vector", ndim=1), m, "intensity vector")

    t = y if opts.preprocessing is None else as_real_array(opts.preprocessing(y), "preprocessed intensities")
    D = (A.conj().T * t[None, :]) @ A / m
    D = (D + D.conj().T) / 2.0
    if float(np.abs(D).max(initial=0.0)) < np.finfo(float).tiny:
        raise DegenerateInitializerError(
            "weighted measurement matrix is numerically zero; intensities carry no direction"
        )

    v, _ = _dominant_eigenvector(D, field, opts.power_iter_tol, opts.power_iter_max, rng)
    v = _fix_phase(v, field)

    if not opts.scale_to_measurements:
        return v
    floor = 0.0 if meas_noise_mean is None else meas_noise_mean
    target = float(np.sum(np.maximum(y - floor, 0.0)))
    current = float(np.sum(np.abs(A @ v) ** 2))
    if current == 0.0:
        raise DegenerateInitializerError(
            "dominant eigenvector lies in the null space of the measurement matrix"
        )
    return v * np.sqrt(target / current)
