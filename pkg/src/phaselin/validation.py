"""Input validation helpers shared by the estimator modules.

Everything here either returns a canonicalized ``numpy`` array (C-contiguous,
float64 or complex128) or raises one of the package exceptions.  Tolerances
for symmetry/PSD checks are relative to the matrix trace, so the zero matrix
passes them.
"""

from __future__ import annotations

import numpy as np

from .exceptions import (
    DegenerateCovarianceError,
    DimensionMismatchError,
    FieldMismatchError,
)

#: relative tolerance for Hermitian-symmetry and PSD checks
PSD_TOL = 1e-10


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def as_real_array(x, name: str, ndim: int | None = None) -> np.ndarray:
    """Coerce to a float64 array, rejecting complex input."""
    arr = np.asarray(x)
    if np.iscomplexobj(arr):
        raise FieldMismatchError(f"{name} must be real-valued")
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatchError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return check_finite(arr, name)


def as_field_array(x, field, name: str, ndim: int | None = None) -> np.ndarray:
    """Coerce to the dtype of ``field``.

    Real input is accepted for a complex field (widened), complex input is
    rejected for a real field: a complex array is evidence of a mixed-field
    instance, not of a representation choice.
    """
    arr = np.asarray(x)
    if field.is_real and np.iscomplexobj(arr):
        raise FieldMismatchError(f"{name} is complex but the declared field is real")
    arr = np.ascontiguousarray(arr, dtype=field.dtype)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatchError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return check_finite(arr, name)


def check_vector(v: np.ndarray, n: int, name: str) -> np.ndarray:
    if v.shape != (n,):
        raise DimensionMismatchError(f"{name} must have shape ({n},), got {v.shape}")
    return v


def check_square(C: np.ndarray, n: int, name: str) -> np.ndarray:
    if C.shape != (n, n):
        raise DimensionMismatchError(f"{name} must have shape ({n}, {n}), got {C.shape}")
    return C


def check_hermitian_psd(C: np.ndarray, name: str, tol: float = PSD_TOL) -> np.ndarray:
    """Validate that ``C`` is Hermitian PSD within ``tol`` relative to its trace."""
    scale = max(float(np.trace(C).real), float(np.abs(C).max(initial=0.0)))
    herm_err = float(np.abs(C - C.conj().T).max(initial=0.0))
    if herm_err > tol * max(scale, 1.0):
        raise DegenerateCovarianceError(
            f"{name} is not Hermitian: max asymmetry {herm_err:.3e} (scale {scale:.3e})"
        )
    w_min = float(np.linalg.eigvalsh((C + C.conj().T) / 2.0).min()) if C.size else 0.0
    if w_min < -tol * max(scale, 1.0):
        raise DegenerateCovarianceError(
            f"{name} is not positive semidefinite: min eigenvalue {w_min:.3e}"
        )
    return C


def same_field(*tagged):
    """Return the common field of the given objects, raising on a mix."""
    fields = {obj.field for obj in tagged if obj is not None}
    if len(fields) > 1:
        names = ", ".join(sorted(f.value for f in fields))
        raise FieldMismatchError(f"mixed scalar fields in one problem instance: {names}")
    return fields.pop()
