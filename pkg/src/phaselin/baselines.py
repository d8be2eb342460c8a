"""Classical phase-retrieval solvers for dense measurement matrices.

Alternating projections (Gerchberg-Saxton), its relaxed variant (Fienup),
and plain gradient descent on the intensity loss (Wirtinger flow).  All
three take the measured intensities, an initial guess, and shared options;
with ``full_output=True`` they also return an info dict with the iteration
history, scipy-style.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DimensionMismatchError, StepSizeError
from .model import infer_field
from .validation import as_real_array, check_finite

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class BaselineOptions:
    max_iters: int = 1000
    #: gradient step for Wirtinger flow; None picks 0.1 / ||A||_2^2
    step_size: Optional[float] = None
    #: relative residual below which iteration stops
    tol: float = 1e-8
    fienup_beta: float = 0.9

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")


def _phase(z: np.ndarray) -> np.ndarray:
    """z / |z| with the zero entries sent to 1, keeping updates defined."""
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def _prepare(A, y, x0):
    A = np.asarray(A)
    if A.ndim != 2:
        raise DimensionMismatchError(f"measurement matrix must be 2-dimensional, got {A.shape}")
    m, n = A.shape
    y = as_real_array(y, "intensity vector", ndim=1)
    if y.shape[0] != m:
        raise DimensionMismatchError(f"intensities must have length {m}, got {y.shape[0]}")
    field = infer_field(A, x0)
    A = np.ascontiguousarray(A, dtype=field.dtype)
    check_finite(A, "measurement matrix")
    x0 = np.ascontiguousarray(np.asarray(x0), dtype=field.dtype)
    if x0.shape != (n,):
        raise DimensionMismatchError(f"initial guess must have shape ({n},), got {x0.shape}")
    check_finite(x0, "initial guess")
    clamped = int(np.count_nonzero(y < 0))
    if clamped:
        warnings.warn(
            f"{clamped} negative intensities clamped to 0 before taking amplitudes",
            RuntimeWarning,
            stacklevel=3,
        )
    return A, y, x0, clamped


def _projected_descent(A, y, x0, opts: BaselineOptions, beta: float, full_output: bool):
    """Shared loop for the projection methods; beta = 1 is the plain version."""
    A, y, x, clamped = _prepare(A, y, x0)
    amp = np.sqrt(np.maximum(y, 0.0))
    # all-zero intensities leave nothing to normalize by; fall back to absolute
    denom = float(np.linalg.norm(amp)) or 1.0
    A_pinv = np.linalg.pinv(A)      # one rank-revealing factorization, reused every iteration

    z = A @ x
    residuals = [float(np.linalg.norm(np.abs(z) - amp)) / denom]
    it = 0
    while residuals[-1] > opts.tol and it < opts.max_iters:
        target = amp * _phase(z)
        if beta == 1.0:
            x = A_pinv @ target
        else:
            x = x - beta * (A_pinv @ (z - target))
        z = A @ x
        residuals.append(float(np.linalg.norm(np.abs(z) - amp)) / denom)
        it += 1
    if not full_output:
        return x
    info = {
        "iterations": it,
        "residuals": residuals,
        "converged": residuals[-1] <= opts.tol,
        "clamped": clamped,
    }
    return x, info


def gerchberg_saxton(A, y, x0, opts: BaselineOptions | None = None, full_output: bool = False):
    """Alternating projections between the range of A and the amplitude set.

    Each step replaces the magnitudes of A x with the measured amplitudes
    and maps back by least squares.  The measurement residual is
    non-increasing by construction.
    """
    return _projected_descent(A, y, x0, opts or BaselineOptions(), 1.0, full_output)


def fienup(A, y, x0, opts: BaselineOptions | None = None, full_output: bool = False):
    """Relaxed projection update x <- x - beta A^+ (A x - amp * phase(A x)).

    At beta = 1 this routes through the identical code path as
    gerchberg_saxton, so the two produce bit-equal iterates there.
    """
    opts = opts or BaselineOptions()
    return _projected_descent(A, y, x0, opts, opts.fienup_beta, full_output)


def intensity_loss(A, y, x) -> float:
    """(1/4m) sum of squared intensity misfits; the Wirtinger flow objective."""
    d = np.abs(A @ x) ** 2 - y
    return float(np.sum(d * d)) / (4.0 * A.shape[0])


def wirtinger_flow(A, y, x0, opts: BaselineOptions | None = None, full_output: bool = False):
    """Gradient descent on the squared intensity misfit.

    The default step is 0.1 over the squared spectral norm of A.  A loss
    exceeding ten times its starting value aborts with a step-size error
    rather than returning garbage.
    """
    opts = opts or BaselineOptions()
    A, y, x, _ = _prepare(A, y, x0)
    m = A.shape[0]
    step = opts.step_size if opts.step_size is not None else 0.1 / float(np.linalg.norm(A, 2)) ** 2

    z = A @ x
    d = np.abs(z) ** 2 - y
    loss0 = float(np.sum(d * d)) / (4.0 * m)
    losses = [loss0]
    it = 0
    converged = False
    while it < opts.max_iters:
        g = A.conj().T @ (d * z) / m
        x = x - step * g
        z = A @ x
        d = np.abs(z) ** 2 - y
        loss = float(np.sum(d * d)) / (4.0 * m)
        losses.append(loss)
        it += 1
        if loss0 > 0 and loss > 10.0 * loss0:
            raise StepSizeError(
                f"intensity loss grew to {loss:.3e} from {loss0:.3e}; step {step:.3e} is too large"
            )
        if float(np.linalg.norm(step * g)) <= opts.tol * max(float(np.linalg.norm(x)), _TINY):
            converged = True
            break
    if not full_output:
        return x
    info = {"iterations": it, "losses": losses, "step": step, "converged": converged}
    return x, info
