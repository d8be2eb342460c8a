"""Iterative refinement: re-center the prior at the previous estimate.

Each pass rebuilds the affine estimator around the current center with the
error covariance held fixed (the covariance policy decides its value once,
from the initial guess).  Since the intensity-independent part of the
moments depends only on that fixed covariance, it is computed once and
reused across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

import numpy as np

from .exceptions import PhaselinError, ZeroInitialGuessError
from .linear import build_estimator, estimate, lin_measurement_cov
from .metrics import n_mse
from .model import NoiseSpec, SignalPrior, check_matrix


@dataclass(frozen=True)
class FixedMatrix:
    """Use the given error covariance at every iteration."""

    matrix: np.ndarray


@dataclass(frozen=True)
class FixedScaledIdentity:
    """Error covariance (beta^2 ||x0||^2 / n) I, set once from the initial guess."""

    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


CovariancePolicy = Union[FixedMatrix, FixedScaledIdentity]


@dataclass(frozen=True)
class IterativeOptions:
    t_max: int = 15
    error_cov_policy: CovariancePolicy = dc_field(default_factory=FixedScaledIdentity)
    stop_tol: float = 0.0
    #: per-iteration multiplier on the error covariance; 1.0 keeps it fixed
    cov_decay: float = 1.0

    def __post_init__(self):
        if self.t_max < 0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if not self.cov_decay > 0:
            raise ValueError(f"cov_decay must be > 0, got {self.cov_decay}")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    predicted_mse: float
    nmse: Optional[float]
    regularization: float


@dataclass
class IterationTrace:
    records: list

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_csv(self) -> str:
        lines = ["t,predicted_mse,nmse,regularization"]
        for r in self.records:
            nmse = "" if r.nmse is None else repr(r.nmse)
            lines.append(f"{r.t},{r.predicted_mse!r},{nmse},{r.regularization!r}")
        return "\n".join(lines) + "\n"


def _resolve_error_cov(policy: CovariancePolicy, x0: np.ndarray, dtype) -> np.ndarray:
    if isinstance(policy, FixedMatrix):
        return np.asarray(policy.matrix)
    n = x0.shape[0]
    sigma2 = policy.beta ** 2 * float(np.vdot(x0, x0).real) / n
    return sigma2 * np.eye(n, dtype=dtype)


def iterative_phaselin(A, y, noise: NoiseSpec | None, x0,
                       opts: IterativeOptions | None = None, *,
                       truth=None):
    """Run t_max + 1 estimator builds, each centered at the previous output.

    Returns the final estimate and a per-iteration trace of predicted MSE,
    normalized MSE against ``truth`` when given, and the diagonal loading
    each covariance solve needed.  A zero initial guess is rejected up front:
    it zeroes the signal-intensity coupling and the loop never leaves it.
    """
    opts = opts or IterativeOptions()
    A, fld = check_matrix(A)
    x0 = np.asarray(x0, dtype=fld.dtype)
    if not np.any(x0):
        raise ZeroInitialGuessError(
            "initial guess is identically zero, so the estimator reduces to the prior mean forever"
        )
    error_cov = _resolve_error_cov(opts.error_cov_policy, x0, fld.dtype)

    lin_cov = None
    if opts.cov_decay == 1.0:
        C_w = noise.signal_noise_cov(A.shape[0], fld) if noise is not None else None
        lin_cov = lin_measurement_cov(A, np.asarray(error_cov, dtype=fld.dtype), C_w)

    center = x0
    records = []
    prev = None
    for t in range(opts.t_max + 1):
        try:
            prior = SignalPrior(center, error_cov, field=fld)
            est = build_estimator(A, prior, noise, lin_cov=lin_cov)
            x_hat = estimate(est, y)
        except PhaselinError as exc:
            exc.args = (f"iteration {t}: {exc.args[0]}",) + exc.args[1:]
            exc.iteration = t
            raise
        nmse = n_mse(truth, x_hat).nmse if truth is not None else None
        records.append(IterationRecord(t=t, predicted_mse=est.predicted_mse,
                                       nmse=nmse, regularization=est.regularization))
        if prev is not None and opts.stop_tol > 0:
            if np.linalg.norm(x_hat - prev) <= opts.stop_tol * np.linalg.norm(prev):
                center = x_hat
                break
        prev = x_hat
        center = x_hat
        if opts.cov_decay != 1.0:
            error_cov = opts.cov_decay * error_cov
    return center, IterationTrace(records)
