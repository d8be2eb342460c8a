"""Command-line front end.

Subcommands: ``gen`` writes a synthetic problem to files, ``solve`` runs one
method on files, ``sweep`` runs a benchmark from a config file, ``validate``
runs the Monte-Carlo moment oracles, ``mse-check`` compares the closed-form
MSE against simulation.  Exit codes: 0 success, 1 a validation threshold
failed, 2 usage or input-file errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import io
from .exceptions import ConfigError, PhaselinError
from .harness import mse_check, parse_config, run_sweep, validate_moments, write_sweep_csv
from .iterative import FixedScaledIdentity, IterativeOptions, iterative_phaselin
from .metrics import n_mse
from .model import (
    NoiseSpec,
    ScalarField,
    SignalPrior,
    make_gaussian_matrix,
    measure,
    sample_signal,
    spawn_rng,
)
from .baselines import BaselineOptions, fienup, gerchberg_saxton, wirtinger_flow
from .spectral import SpectralOptions, spectral_initializer


def _add_noise_args(p):
    p.add_argument("--sigma-z2", type=float, default=0.0, help="signal noise variance")
    p.add_argument("--sigma-y2", type=float, default=0.0, help="measurement noise variance")
    p.add_argument("--meas-mean", type=float, default=0.0, help="measurement noise mean")


def _noise_from(args) -> NoiseSpec:
    return NoiseSpec(signal_cov=args.sigma_z2 or None,
                     meas_mean=args.meas_mean or None,
                     meas_cov=args.sigma_y2 or None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaselin",
                                     description="Phase retrieval via MSE-optimal linear estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic problem and write A/x/y files")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--field", choices=["real", "complex"], default="complex")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prior-scale", type=float, default=2.0,
                   help="signal covariance scale (x drawn with mean 0)")
    _add_noise_args(p)
    p.add_argument("--out-prefix", required=True, help="writes <prefix>A.csv, <prefix>x.csv, <prefix>y.csv")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="run one method on a problem stored in files")
    p.add_argument("--matrix", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--method", required=True,
                   choices=["phaselin", "phaselin-iterative", "gs", "fienup", "wf", "spectral"])
    p.add_argument("--seed", type=int, default=0, help="seed for the spectral start")
    p.add_argument("--t-max", type=int, default=15)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--fienup-beta", type=float, default=0.9)
    p.add_argument("--wf-step", type=float, default=None)
    _add_noise_args(p)
    p.add_argument("--out", help="write the estimate to this file")
    p.add_argument("--trace", help="write the per-iteration trace CSV here (phaselin methods)")
    p.add_argument("--truth", help="ground-truth file; prints the normalized MSE")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="run a benchmark sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the output path from the config")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="Monte-Carlo validation of the moment formulas")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--threshold", type=float, default=3.0, help="pass bound in standard errors")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("mse-check", help="closed-form MSE against simulation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--field", choices=["real", "complex"], default="complex")
    p.add_argument("--trials", type=int, default=10 ** 5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=0.02, help="pass bound on the relative gap")
    p.add_argument("--no-meas-noise", action="store_true")
    p.set_defaults(func=_cmd_mse_check)
    return parser


def _cmd_gen(args) -> int:
    field = ScalarField.coerce(args.field)
    rng = spawn_rng(args.seed)
    A = make_gaussian_matrix(args.m, args.n, field, rng)
    prior = SignalPrior(np.zeros(args.n, dtype=field.dtype), args.prior_scale, field=field)
    x = sample_signal(prior, rng)
    y = measure(A, x, _noise_from(args), rng)
    io.save_matrix(f"{args.out_prefix}A.csv", A, field)
    io.save_vector(f"{args.out_prefix}x.csv", x, field)
    io.save_vector(f"{args.out_prefix}y.csv", y, ScalarField.REAL)
    print(f"wrote {args.out_prefix}A.csv, {args.out_prefix}x.csv, {args.out_prefix}y.csv")
    return 0


def _cmd_solve(args) -> int:
    A, field = io.load_matrix(args.matrix)
    y, y_field = io.load_vector(args.obs)
    if not y_field.is_real:
        raise ConfigError(f"{args.obs}: intensities must be a real vector file")
    noise = _noise_from(args)
    rng = spawn_rng(args.seed)
    x0 = spectral_initializer(A, y, SpectralOptions(), rng,
                              meas_noise_mean=noise.meas_noise_mean(A.shape[0]))
    trace = None
    if args.method == "spectral":
        x_hat = x0
    elif args.method in ("phaselin", "phaselin-iterative"):
        t_max = args.t_max if args.method == "phaselin-iterative" else 0
        opts = IterativeOptions(t_max=t_max, error_cov_policy=FixedScaledIdentity(args.beta))
        x_hat, trace = iterative_phaselin(A, y, noise, x0, opts)
    else:
        opts = BaselineOptions(max_iters=args.max_iters, step_size=args.wf_step,
                               tol=args.tol, fienup_beta=args.fienup_beta)
        runner = {"gs": gerchberg_saxton, "fienup": fienup, "wf": wirtinger_flow}[args.method]
        x_hat = runner(A, y, x0, opts)
    if args.out:
        io.save_vector(args.out, x_hat, field)
        print(f"wrote {args.out}")
    if args.trace:
        if trace is None:
            raise ConfigError("--trace applies only to the phaselin methods")
        with open(args.trace, "w", encoding="ascii", newline="\n") as fh:
            fh.write(trace.to_csv())
        print(f"wrote {args.trace}")
    if args.truth:
        truth, _ = io.load_vector(args.truth)
        print(f"nmse {n_mse(truth, x_hat).nmse!r}")
    return 0


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    if args.out:
        config = replace(config, output=args.out)
    if not config.output:
        raise ConfigError("no output path: set 'output' in the config or pass --out")
    records, medians = run_sweep(config)
    write_sweep_csv(config, records, config.output)
    for meth, m, med in medians:
        print(f"median nmse {meth} m={m}: {med:.6g}")
    print(f"wrote {len(records)} records to {config.output}")
    return 0


def _cmd_validate(args) -> int:
    report = validate_moments(seed=args.seed, samples=args.samples, instances=args.instances)
    print(report.summary())
    if report.passed(args.threshold):
        print(f"PASS (all checks within {args.threshold:g} standard errors)")
        return 0
    print(f"FAIL (worst deviation exceeds {args.threshold:g} standard errors)")
    return 1


def _cmd_mse_check(args) -> int:
    result = mse_check(args.n, args.m, args.field, args.trials, seed=args.seed,
                       with_meas_noise=not args.no_meas_noise)
    print(result.summary())
    if result.rel_gap <= args.tol:
        print(f"PASS (gap within {args.tol:.2%})")
        return 0
    print(f"FAIL (gap exceeds {args.tol:.2%})")
    return 1


def cli_entry(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PhaselinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_entry())


if __name__ == "__main__":
    main()
