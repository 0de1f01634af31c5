"""Command line front end.

Three subcommands, all driven by a single JSON config file:

* certify     stability certificate for (Gamma, beta0) under a regularizer
* solve       one forward-backward solve plus a posteriori optimality checks
* experiment  Monte-Carlo sweeps (noise stability, consistency, sharpness,
              identification profile) with CSV/JSON outputs

Exit codes for certify encode the verdict so scripts can branch on it:
0 stable, 2 certified outside, 3 boundary or otherwise inconclusive,
4 restricted injectivity failed, 1 configuration or IO error.  solve and
experiment exit 0 on success and 1 on configuration or IO errors; a solve
that hits max_iter still exits 0 with converged=false in the payload.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import config as cfgmod
from .certificate import certify_uniqueness, check_model_stability
from .config import ConfigError
from .experiments import (
    consistency_sweep,
    identification_profile,
    noise_stability_sweep,
    sharpness_experiment,
    write_plot_csv,
    write_records_csv,
    write_summary_json,
)
from .problems import ProblemInstance, canonical_parameters, generate_instance, make_signal
from .solver import forward_backward

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_OUTSIDE = 2
EXIT_INCONCLUSIVE = 3
EXIT_INJECTIVITY = 4


def _vector_from(cfg, key, base_dir, context):
    if f"{key}_csv" in cfg or key in cfg:
        m = cfgmod.matrix_from_config(cfg, key, base_dir, context)
        v = np.asarray(m, dtype=float).squeeze()
        if v.ndim == 0:
            v = v.reshape(1)
        if v.ndim != 1:
            raise ConfigError(f"{context}: {key} must be a vector")
        return v
    raise ConfigError(f"{context} is missing {key!r}")


def _resolve_beta0(cfg, reg, base_dir, seed_override):
    if "beta0" in cfg or "beta0_csv" in cfg:
        return _vector_from(cfg, "beta0", base_dir, "config")
    if "signal" in cfg:
        seed = seed_override if seed_override is not None else int(cfg.get("seed", 0))
        spec = cfgmod.signal_from_config(cfg["signal"])
        return make_signal(spec, reg, np.random.default_rng(seed))
    raise ConfigError("config needs 'beta0' (inline or CSV) or a 'signal' section")


def _resolve_gamma(cfg, base_dir):
    if "gamma" in cfg or "gamma_csv" in cfg:
        g = cfgmod.matrix_from_config(cfg, "gamma", base_dir, "config")
        return g
    if "design" in cfg:
        spec = cfgmod.design_from_config(cfg["design"], base_dir)
        if spec.kind == "explicit":
            x = spec.matrix
            return x.T @ x / x.shape[0]
        # population operator: rows are drawn from this covariance
        return spec.covariance
    raise ConfigError("config needs 'gamma' (inline or CSV) or a 'design' section")


def _write_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def cmd_certify(args) -> int:
    cfg = cfgmod.load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    reg = cfgmod.regularizer_from_config(cfgmod.require_key(cfg, "regularizer", "config"))
    tol = cfgmod.tolerances_from_config(cfg.get("tolerances", {}))
    gamma = _resolve_gamma(cfg, base_dir)
    beta0 = _resolve_beta0(cfg, reg, base_dir, args.seed)

    report = check_model_stability(
        gamma, beta0, reg,
        zero_tol=tol["zero_tol"], ri_tol=tol["ri_tol"],
        injectivity_tol=tol["injectivity_tol"],
    )
    cert = report.certificate
    payload = {
        "stable": report.stable,
        "inconclusive": report.inconclusive,
        "usable": cert.usable,
        "subspace_dim": cert.subspace_dim,
        "smallest_singular": cert.injectivity.smallest_singular,
        "descriptor": {"kind": cert.geometry.descriptor.kind,
                       "data": cert.geometry.descriptor.data},
        "eta": cert.eta.tolist() if cert.eta is not None else None,
    }
    if cert.verdict is not None:
        payload.update(
            status=cert.verdict.status,
            margin=cert.verdict.margin,
            tangent_residual=cert.verdict.tangent_residual,
        )

    os.makedirs(args.out, exist_ok=True)
    _write_json(payload, os.path.join(args.out, "certificate.json"))

    if not cert.usable:
        if not args.quiet:
            print(f"unusable: restricted injectivity failed "
                  f"(smallest singular {cert.injectivity.smallest_singular:.3e})")
        return EXIT_INJECTIVITY
    if not args.quiet:
        print(f"{cert.verdict.status}: margin {cert.verdict.margin:.6g}, "
              f"tangent residual {cert.verdict.tangent_residual:.3e}, "
              f"model dim {cert.subspace_dim}")
    if report.stable:
        return EXIT_OK
    if report.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OUTSIDE


def _resolve_instance(cfg, reg, base_dir, seed_override):
    has_xy = any(k in cfg for k in ("x", "x_csv"))
    if has_xy:
        x = cfgmod.matrix_from_config(cfg, "x", base_dir, "config")
        y = _vector_from(cfg, "y", base_dir, "config")
        if y.shape[0] != x.shape[0]:
            raise ConfigError(f"y has length {y.shape[0]} but x has {x.shape[0]} rows")
        beta0 = None
        if "beta0" in cfg or "beta0_csv" in cfg:
            beta0 = _vector_from(cfg, "beta0", base_dir, "config")
        zeros = np.zeros(x.shape[1]) if beta0 is None else beta0
        return ProblemInstance(x=x, beta0=zeros, w=np.zeros(x.shape[0]), y=y, seed=-1), beta0
    needed = [k for k in ("design", "signal", "noise_sigma") if k not in cfg]
    if needed:
        raise ConfigError(
            "config needs either x/y data or design+signal+noise_sigma "
            f"(missing {needed})"
        )
    seed = seed_override if seed_override is not None else int(cfg.get("seed", 0))
    inst = generate_instance(
        cfgmod.design_from_config(cfg["design"], base_dir),
        cfgmod.signal_from_config(cfg["signal"]),
        float(cfg["noise_sigma"]),
        seed,
        reg,
    )
    return inst, inst.beta0


def cmd_solve(args) -> int:
    cfg = cfgmod.load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    reg = cfgmod.regularizer_from_config(cfgmod.require_key(cfg, "regularizer", "config"))
    tol = cfgmod.tolerances_from_config(cfg.get("tolerances", {}))
    opts = cfgmod.solve_options_from_config(cfg.get("solver", {}))
    if "lambda" not in cfg:
        raise ConfigError("config needs 'lambda' (penalty weight before the 1/n scaling)")
    lam = float(cfg["lambda"])
    inst, beta0 = _resolve_instance(cfg, reg, base_dir, args.seed)

    theta = canonical_parameters(inst, lam)
    result = forward_backward(theta, reg, opts)
    uniq = certify_uniqueness(
        theta, result.beta, reg,
        zero_tol=tol["zero_tol"], ri_tol=tol["ri_tol"],
        injectivity_tol=tol["injectivity_tol"],
    )
    desc = reg.descriptor(result.beta, tol["zero_tol"])

    payload = {
        "beta": result.beta.tolist(),
        "iterations": result.iterations,
        "converged": result.converged,
        "fp_residual": result.fp_residual,
        "objective": result.objective,
        "step": result.step,
        "identification_iter": result.identification_iter,
        "mu": theta.mu,
        "descriptor": {"kind": desc.kind, "data": desc.data},
        "dual_certificate": {
            "status": uniq.verdict.status,
            "margin": uniq.verdict.margin,
            "tangent_residual": uniq.verdict.tangent_residual,
        },
        "unique": uniq.unique,
    }
    if beta0 is not None:
        payload["error_norm"] = float(np.linalg.norm(result.beta - beta0))

    os.makedirs(args.out, exist_ok=True)
    _write_json(payload, os.path.join(args.out, "solution.json"))

    if not args.quiet:
        state = "converged" if result.converged else "hit max_iter"
        print(f"{state} after {result.iterations} iterations, "
              f"objective {result.objective:.6g}, model {desc}, "
              f"unique={uniq.unique}")
    return EXIT_OK


_RUNNERS = {
    "noise_stability": noise_stability_sweep,
    "consistency": consistency_sweep,
    "sharpness": sharpness_experiment,
    "identification_profile": identification_profile,
}


def cmd_experiment(args) -> int:
    cfg = cfgmod.load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    kind, config = cfgmod.experiment_from_config(cfg, base_dir)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)

    result = _RUNNERS[kind](config)

    os.makedirs(args.out, exist_ok=True)
    write_records_csv(result.records, os.path.join(args.out, "records.csv"))
    write_summary_json(result, os.path.join(args.out, "summary.json"))
    write_plot_csv(result, os.path.join(args.out, "plot.csv"))

    if not args.quiet:
        for row in result.summary:
            print(f"{kind} @ {row.sweep_value:g}: "
                  f"identification rate {row.identification_rate:.3f} "
                  f"({row.converged_count}/{row.trials} converged)")
        print(f"wrote records.csv, summary.json, plot.csv to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partlysmooth",
        description="Model-stability certificates and solvers for partly smooth regularizers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON config file")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress prints")

    p = sub.add_parser("certify", parents=[common],
                       help="stability certificate for (gamma, beta0)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("solve", parents=[common],
                       help="single forward-backward solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", parents=[common],
                       help="Monte-Carlo sweep driven by the config's experiment section")
    p.add_argument("--trials", type=int, default=None, help="override trials per sweep point")
    p.add_argument("--jobs", type=int, default=None, help="parallel worker count")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
