"""Experiment runner: sweeps over oversampling ratios, oracle validation.

A sweep cell is one (ratio, method set) combination; every trial inside a
cell draws a fresh Gaussian measurement matrix, a ground-truth signal, and
intensities, runs the spectral initializer once, and feeds the same initial
guess to every requested method.  Per-trial randomness comes from streams
keyed by (master seed, cell, trial), so results do not depend on execution
order or the worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baselines import BaselineOptions, fienup, gerchberg_saxton, wirtinger_flow
from .exceptions import ConfigError, PhaselinError
from .iterative import FixedScaledIdentity, IterativeOptions, iterative_phaselin
from .linear import (
    build_estimator,
    cross_covariance,
    observation_covariance,
    observation_mean,
    phased_moments,
)
from .metrics import empirical_mse, n_mse
from .model import (
    NoiseSpec,
    ScalarField,
    SignalPrior,
    make_gaussian_matrix,
    measure,
    random_psd,
    sample_signal,
    spawn_rng,
)
from .spectral import SpectralOptions, spectral_initializer

KNOWN_METHODS = ("phaselin", "phaselin-iterative", "gs", "fienup", "wf", "spectral")

#: ResultRecord CSV column order; downstream consumers rely on it
CSV_COLUMNS = (
    "method", "field", "n", "m", "trial", "seed", "nmse",
    "predicted_mse", "iterations", "wall_time_ms", "regularized", "error",
)

WORKERS_ENV = "PHASELIN_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    """Protocol of one benchmark sweep."""

    field: ScalarField
    n: int
    ratios: tuple
    methods: tuple
    trials: int
    t_max: int = 15
    sigma_z2: float = 0.0
    sigma_y2: float = 1e-6
    meas_mean: float = 0.0
    prior_scale: float = 2.0
    seed: int = 0
    output: Optional[str] = None
    beta: float = 1.0
    max_iters: int = 1000
    baseline_tol: float = 1e-8
    fienup_beta: float = 0.9
    wf_step: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "field", ScalarField.coerce(self.field))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.t_max < 0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if not self.ratios:
            raise ValueError("at least one oversampling ratio is required")
        for r in self.ratios:
            if round(r * self.n) < 1:
                raise ValueError(f"ratio {r} yields no measurements at n={self.n}")
        if not self.methods:
            raise ValueError("at least one method is required")
        for meth in self.methods:
            if meth not in KNOWN_METHODS:
                raise ValueError(f"unknown method {meth!r}; known: {', '.join(KNOWN_METHODS)}")
        for name in ("sigma_z2", "sigma_y2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.prior_scale > 0:
            raise ValueError(f"prior_scale must be > 0, got {self.prior_scale}")

    def meas_counts(self):
        return tuple(int(round(r * self.n)) for r in self.ratios)

    def noise(self) -> NoiseSpec:
        return NoiseSpec(
            signal_cov=self.sigma_z2 or None,
            meas_mean=self.meas_mean or None,
            meas_cov=self.sigma_y2 or None,
        )

    def baseline_options(self) -> BaselineOptions:
        return BaselineOptions(max_iters=self.max_iters, step_size=self.wf_step,
                               tol=self.baseline_tol, fienup_beta=self.fienup_beta)


_CONFIG_KEYS = {
    "field": str,
    "n": int,
    "ratios": "float_list",
    "methods": "str_list",
    "trials": int,
    "t_max": int,
    "sigma_z2": float,
    "sigma_y2": float,
    "meas_mean": float,
    "prior_scale": float,
    "seed": int,
    "output": str,
    "beta": float,
    "max_iters": int,
    "baseline_tol": float,
    "fienup_beta": float,
    "wf_step": float,
}

_REQUIRED_KEYS = ("field", "n", "ratios", "methods", "trials")


def parse_config(path) -> ExperimentConfig:
    """Read a flat key = value config file (comments with #, lists comma-separated)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip().lower(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate config key {key!r}", line=lineno)
        kind = _CONFIG_KEYS[key]
        try:
            if kind == "float_list":
                values[key] = tuple(float(p) for p in val.split(",") if p.strip())
            elif kind == "str_list":
                values[key] = tuple(p.strip() for p in val.split(",") if p.strip())
            else:
                values[key] = kind(val)
        except ValueError:
            raise ConfigError(f"cannot parse value for {key!r}: {val!r}", line=lineno) from None
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    try:
        return ExperimentConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ResultRecord:
    method: str
    field: str
    n: int
    m: int
    trial: int
    seed: int
    nmse: float
    predicted_mse: Optional[float] = None
    iterations: Optional[int] = None
    wall_time_ms: float = 0.0
    regularized: Optional[bool] = None
    error: str = ""


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(int(raw), 1)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _run_method(method: str, A, y, x0, truth, config: ExperimentConfig):
    """Returns (nmse, predicted_mse, iterations, regularized)."""
    if method == "spectral":
        return n_mse(truth, x0).nmse, None, None, None
    if method in ("phaselin", "phaselin-iterative"):
        t_max = config.t_max if method == "phaselin-iterative" else 0
        opts = IterativeOptions(t_max=t_max, error_cov_policy=FixedScaledIdentity(config.beta))
        x_hat, trace = iterative_phaselin(A, y, config.noise(), x0, opts)
        reg = any(rec.regularization > 0 for rec in trace)
        return n_mse(truth, x_hat).nmse, trace.records[-1].predicted_mse, len(trace), reg
    opts = config.baseline_options()
    runner = {"gs": gerchberg_saxton, "fienup": fienup, "wf": wirtinger_flow}[method]
    x_hat, info = runner(A, y, x0, opts, full_output=True)
    return n_mse(truth, x_hat).nmse, None, info["iterations"], None


def run_trial(config: ExperimentConfig, cell: int, m: int, trial: int):
    """One problem instance, all methods; returns records in method order."""
    rng = spawn_rng(config.seed, cell, trial)
    fld = config.field
    A = make_gaussian_matrix(m, config.n, fld, rng)
    truth_prior = SignalPrior(np.zeros(config.n, dtype=fld.dtype), config.prior_scale, field=fld)
    x = sample_signal(truth_prior, rng)
    y = measure(A, x, config.noise(), rng)

    base = dict(field=fld.value, n=config.n, m=m, trial=trial, seed=config.seed)
    try:
        x0 = spectral_initializer(A, y, SpectralOptions(), rng,
                                  meas_noise_mean=config.noise().meas_noise_mean(m))
    except PhaselinError as exc:
        tag = type(exc).__name__
        return [ResultRecord(method=meth, nmse=1.0, error=tag, **base) for meth in config.methods]

    records = []
    for meth in config.methods:
        start = time.perf_counter()
        try:
            nmse, pred, iters, reg = _run_method(meth, A, y, x0, x, config)
            err = ""
        except (PhaselinError, np.linalg.LinAlgError, FloatingPointError) as exc:
            nmse, pred, iters, reg = 1.0, None, None, None
            err = type(exc).__name__
        elapsed_ms = (time.perf_counter() - start) * 1e3
        records.append(ResultRecord(method=meth, nmse=nmse, predicted_mse=pred,
                                    iterations=iters, wall_time_ms=elapsed_ms,
                                    regularized=reg, error=err, **base))
    return records


def run_sweep(config: ExperimentConfig):
    """Run every (cell, trial), deterministically ordered; returns (records, medians)."""
    tasks = [(cell, m, trial)
             for cell, m in enumerate(config.meas_counts())
             for trial in range(config.trials)]
    workers = _worker_count()
    results = {}
    if workers == 1:
        for cell, m, trial in tasks:
            results[(cell, trial)] = run_trial(config, cell, m, trial)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {(cell, trial): pool.submit(run_trial, config, cell, m, trial)
                       for cell, m, trial in tasks}
        results = {key: fut.result() for key, fut in futures.items()}
    records = []
    for cell in range(len(config.ratios)):
        for trial in range(config.trials):
            records.extend(results[(cell, trial)])
    return records, aggregate_medians(records, config)


def aggregate_medians(records, config: ExperimentConfig):
    """Median nmse per (method, measurement count), in config order."""
    out = []
    for m in config.meas_counts():
        for meth in config.methods:
            vals = [r.nmse for r in records if r.m == m and r.method == meth]
            if vals:
                out.append((meth, m, float(np.median(vals))))
    return out


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(config: ExperimentConfig, records) -> str:
    """Render records with the fixed column order and a config echo line.

    The wall-time column is part of the schema but left empty: timings are
    not reproducible across runs and every file must be byte-identical for a
    given seed, whatever the worker count.
    """
    echo = (f"# field={config.field.value} n={config.n}"
            f" ratios={','.join(repr(r) for r in config.ratios)}"
            f" methods={','.join(config.methods)} trials={config.trials}"
            f" t_max={config.t_max} sigma_z2={config.sigma_z2!r} sigma_y2={config.sigma_y2!r}"
            f" meas_mean={config.meas_mean!r} prior_scale={config.prior_scale!r}"
            f" seed={config.seed}")
    lines = [echo, ",".join(CSV_COLUMNS)]
    for r in records:
        cells = [r.method, r.field, str(r.n), str(r.m), str(r.trial), str(r.seed),
                 _fmt_cell(r.nmse), _fmt_cell(r.predicted_mse), _fmt_cell(r.iterations),
                 "", _fmt_cell(r.regularized), r.error]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_sweep_csv(config: ExperimentConfig, records, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(records_to_csv(config, records))


# ---------------------------------------------------------------------------
# Monte-Carlo oracle validation of the moment formulas


@dataclass(frozen=True)
class MomentCheck:
    field: str
    instance: int
    quantity: str
    max_se_units: float
    sample: np.ndarray
    closed: np.ndarray
    se: np.ndarray


@dataclass(frozen=True)
class MomentReport:
    entries: list
    samples: int

    @property
    def max_se_units(self) -> float:
        return max((e.max_se_units for e in self.entries), default=0.0)

    def passed(self, threshold: float = 3.0) -> bool:
        return self.max_se_units <= threshold

    def summary(self) -> str:
        lines = [f"moment validation over {self.samples} samples per instance"]
        for e in self.entries:
            lines.append(f"  {e.field:7s} #{e.instance} {e.quantity:13s} "
                         f"max deviation {e.max_se_units:6.3f} SE")
        lines.append(f"worst case: {self.max_se_units:.3f} SE")
        return "\n".join(lines)


def _se_units(sample, closed, se):
    dev = np.abs(sample - closed)
    with np.errstate(divide="ignore", invalid="ignore"):
        units = np.where(se > 0, dev / np.where(se > 0, se, 1.0),
                         np.where(dev <= 1e-12, 0.0, np.inf))
    return float(units.max(initial=0.0))


def _random_validation_instance(field: ScalarField, rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(2, 9))
    A = make_gaussian_matrix(m, n, field, rng)
    x_bar = make_gaussian_matrix(n, 1, field, rng)[:, 0]
    C_e = random_psd(n, rng, field)
    if rng.random() < 0.5:
        noise = NoiseSpec()
    else:
        noise = NoiseSpec(
            signal_cov=random_psd(m, rng, field, scale=0.2),
            meas_mean=0.2 * rng.standard_normal(m),
            meas_cov=random_psd(m, rng, ScalarField.REAL, scale=0.2),
        )
    return A, SignalPrior(x_bar, C_e, field=field), noise


def validate_moments(seed: int = 0, samples: int = 10 ** 6, instances: int = 10) -> MomentReport:
    """Compare closed-form (obs mean, cross cov, obs cov) against sample moments.

    Random small instances over both fields; reports, per quantity, the worst
    entrywise deviation in units of its Monte-Carlo standard error.
    """
    entries = []
    t = samples
    for f_idx, field in enumerate((ScalarField.REAL, ScalarField.COMPLEX)):
        for idx in range(instances):
            rng = spawn_rng(seed, f_idx, idx)
            A, prior, noise = _random_validation_instance(field, rng)
            m = A.shape[0]

            X = sample_signal(prior, rng, size=t)
            Y = measure(A, X, noise, rng)

            moments = phased_moments(A, prior, noise)
            y_bar = observation_mean(moments, noise.meas_noise_mean(m))
            C_xy = cross_covariance(A, prior, moments)
            C_y = observation_covariance(moments, noise.meas_noise_cov(m))

            y_mean_s = Y.mean(axis=1)
            y_se = Y.std(axis=1, ddof=1) / np.sqrt(t)
            entries.append(MomentCheck(field.value, idx, "obs_mean",
                                       _se_units(y_mean_s, y_bar, y_se),
                                       y_mean_s, y_bar, y_se))

            Yc = Y - y_mean_s[:, None]
            Xc = X - X.mean(axis=1)[:, None]
            Yc2 = Yc * Yc

            def cov_with_se(Vc):
                # rows of Vc are real signal components; y is always real
                mean_p = Vc @ Yc.T / t
                second = (Vc * Vc) @ Yc2.T / t
                se = np.sqrt(np.maximum(second - mean_p ** 2, 0.0)) / np.sqrt(t)
                return Vc @ Yc.T / (t - 1), se

            s_re, se_re = cov_with_se(np.ascontiguousarray(Xc.real))
            entries.append(MomentCheck(field.value, idx, "cross_cov_re",
                                       _se_units(s_re, C_xy.real, se_re),
                                       s_re, C_xy.real, se_re))
            if not field.is_real:
                s_im, se_im = cov_with_se(np.ascontiguousarray(Xc.imag))
                entries.append(MomentCheck(field.value, idx, "cross_cov_im",
                                           _se_units(s_im, C_xy.imag, se_im),
                                           s_im, C_xy.imag, se_im))

            cy_s = Yc @ Yc.T / (t - 1)
            mean_p = Yc @ Yc.T / t
            cy_se = np.sqrt(np.maximum(Yc2 @ Yc2.T / t - mean_p ** 2, 0.0)) / np.sqrt(t)
            entries.append(MomentCheck(field.value, idx, "obs_cov",
                                       _se_units(cy_s, C_y, cy_se),
                                       cy_s, C_y, cy_se))
    return MomentReport(entries=entries, samples=samples)


# ---------------------------------------------------------------------------
# Predicted-vs-empirical MSE cross-check


@dataclass(frozen=True)
class MseCheckResult:
    field: str
    n: int
    m: int
    trials: int
    predicted: float
    empirical: float
    std_error: float
    rel_gap: float

    def summary(self) -> str:
        return (f"{self.field} n={self.n} m={self.m} trials={self.trials}: "
                f"predicted {self.predicted:.6g}, empirical {self.empirical:.6g} "
                f"(+/- {self.std_error:.2g}), relative gap {self.rel_gap:.4%}")


def mse_check(n: int, m: int, field, trials: int, seed: int = 0,
              with_meas_noise: bool = True) -> MseCheckResult:
    """Empirical MSE of the affine estimator against its closed-form prediction."""
    field = ScalarField.coerce(field)
    rng = spawn_rng(seed, 0)
    A = make_gaussian_matrix(m, n, field, rng)
    x_bar = make_gaussian_matrix(n, 1, field, rng)[:, 0]
    prior = SignalPrior(x_bar, random_psd(n, rng, field), field=field)
    noise = NoiseSpec(signal_cov=0.1, meas_mean=0.5, meas_cov=1.0) if with_meas_noise else NoiseSpec()
    est = build_estimator(A, prior, noise)
    emp, se = empirical_mse(est, A, prior, noise, trials, rng)
    rel = abs(emp - est.predicted_mse) / est.predicted_mse if est.predicted_mse > 0 else abs(emp)
    return MseCheckResult(field=field.value, n=n, m=m, trials=trials,
                          predicted=est.predicted_mse, empirical=emp,
                          std_error=se, rel_gap=rel)
