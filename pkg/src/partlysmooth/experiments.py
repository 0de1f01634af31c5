"""Monte-Carlo experiments for model recovery.

Four harnesses, all built on the same trial engine:

* noise_stability_sweep: fixed design, noise level swept; measures how often
  the solver recovers the exact active model of beta0 when the certificate
  says it should.
* consistency_sweep: sample size swept with fresh Gaussian designs per trial
  and mu_n = c * n^(-exponent), 0 < exponent < 1/2; measures recovery rate
  as n grows.
* sharpness_experiment: mu swept at a fixed small noise level on an instance
  whose certificate is strictly outside; recovery should essentially never
  happen, including in the noiseless limit.
* identification_profile: noise sweep with per-iterate model traces; reports
  when the solver's iterates lock onto their final model.

Every trial is reproducible from (config, base_seed): setup draws (fixed
design, signal) use base_seed, trial k overall uses base_seed + 1 + k.
Records are emitted in task order regardless of the parallelism degree.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .certificate import Certificate, check_model_stability
from .problems import (
    DesignSpec,
    SignalSpec,
    canonical_parameters,
    correlation_noise,
    generate_instance,
    make_design,
    make_signal,
)
from .regularizers import RI_TOL, ZERO_TOL, Regularizer, same_model
from .solver import SolveOptions, forward_backward

SWEEP_KINDS = ("noise_levels", "sample_sizes", "mu_values")
MU_RULE_KINDS = ("fixed", "proportional", "power")


@dataclass(frozen=True)
class MuRule:
    """Penalty schedule.

    fixed: mu = value.  proportional: mu = scale * sigma (scale defaults to
    2 / certificate margin).  power: mu = scale * n^(-exponent) with
    0 < exponent < 1/2 (defaults: scale 1, exponent 1/4).
    """

    kind: str
    value: Optional[float] = None
    scale: Optional[float] = None
    exponent: Optional[float] = None

    def __post_init__(self):
        if self.kind not in MU_RULE_KINDS:
            raise ValueError(f"unknown mu rule kind {self.kind!r}")
        if self.kind == "fixed" and (self.value is None or self.value <= 0):
            raise ValueError("fixed mu rule needs value > 0")
        if self.kind == "power":
            exp = 0.25 if self.exponent is None else self.exponent
            if not 0 < exp < 0.5:
                raise ValueError(f"power rule exponent must be in (0, 1/2), got {exp}")
            object.__setattr__(self, "exponent", exp)
            object.__setattr__(self, "scale", 1.0 if self.scale is None else float(self.scale))

    def resolve(self, sigma: Optional[float], n: int) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "proportional":
            if self.scale is None:
                raise ValueError("proportional mu rule has no scale set")
            if sigma is None or sigma <= 0:
                raise ValueError("proportional mu rule needs sigma > 0")
            return float(self.scale) * float(sigma)
        return float(self.scale) * float(n) ** (-float(self.exponent))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a harness needs, minus the experiment kind itself."""

    regularizer: Regularizer
    design: DesignSpec
    signal: SignalSpec
    sweep_kind: str
    sweep_values: tuple
    mu_rule: MuRule
    trials: int
    base_seed: int = 0
    noise_sigma: Optional[float] = None
    solve: SolveOptions = SolveOptions()
    jobs: Optional[int] = None
    zero_tol: float = ZERO_TOL
    ri_tol: float = RI_TOL

    def __post_init__(self):
        if self.sweep_kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.sweep_kind!r}")
        values = tuple(float(v) for v in self.sweep_values)
        if not values:
            raise ValueError("sweep_values must be nonempty")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        object.__setattr__(self, "sweep_values", values)


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    n: int
    sigma: float
    mu: float
    identified: bool
    boundary_flag: bool
    error_norm: float
    eps_norm: float
    identification_iter: Optional[int]
    converged: bool
    certificate_margin: float


@dataclass(frozen=True)
class SummaryRow:
    sweep_value: float
    trials: int
    converged_count: int
    boundary_count: int
    identification_rate: float
    mean_error_ratio: float
    max_error_ratio: float
    mean_identification_iter: float


@dataclass
class ProfileStats:
    identification_iters: list
    finite_fraction: float
    post_match_fraction: float


@dataclass
class ExperimentResult:
    kind: str
    records: list
    summary: list
    certificate: Optional[Certificate] = None
    noiseless_identified: Optional[dict] = None
    profile: Optional[ProfileStats] = None


# ---------------------------------------------------------------------------
# trial engine


def _run_task(task):
    """One Monte-Carlo trial; module-level so worker processes can import it."""
    (reg, design, signal, sigma, mu, seed, opts, zero_tol, target, margin, boundary) = task
    inst = generate_instance(design, signal, sigma, seed, reg)
    theta = canonical_parameters(inst, lam=mu * inst.n)
    res = forward_backward(theta, reg, opts)
    desc = reg.descriptor(res.beta, zero_tol)
    identified = bool(res.converged and same_model(desc, target))
    record = TrialRecord(
        seed=seed,
        n=inst.n,
        sigma=sigma,
        mu=mu,
        identified=identified,
        boundary_flag=boundary,
        error_norm=float(np.linalg.norm(res.beta - inst.beta0)),
        eps_norm=float(np.linalg.norm(correlation_noise(inst))),
        identification_iter=res.identification_iter,
        converged=res.converged,
        certificate_margin=margin,
    )
    return record, res.model_trace, desc


def _run_tasks(tasks, jobs):
    jobs = jobs if jobs is not None else (os.cpu_count() or 1)
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _summarize(records_by_value):
    rows = []
    for value, records in records_by_value:
        conv = [r for r in records if r.converged]
        boundary = [r for r in records if r.boundary_flag]
        eligible = [r for r in conv if not r.boundary_flag]
        rate = (
            sum(r.identified for r in eligible) / len(eligible) if eligible else float("nan")
        )
        ratios = [r.error_norm / r.eps_norm for r in conv if r.eps_norm > 0]
        iters = [r.identification_iter for r in conv if r.identification_iter is not None]
        rows.append(
            SummaryRow(
                sweep_value=value,
                trials=len(records),
                converged_count=len(conv),
                boundary_count=len(boundary),
                identification_rate=rate,
                mean_error_ratio=float(np.mean(ratios)) if ratios else float("nan"),
                max_error_ratio=float(np.max(ratios)) if ratios else float("nan"),
                mean_identification_iter=float(np.mean(iters)) if iters else float("nan"),
            )
        )
    return rows


def _fixed_setup(config: ExperimentConfig):
    """Draw the shared design and signal once from base_seed."""
    rng = np.random.default_rng(config.base_seed)
    x = make_design(config.design, rng)
    beta0 = make_signal(config.signal, config.regularizer, rng)
    if x.shape[1] != beta0.shape[0]:
        raise ValueError("design and signal dimensions differ")
    gamma = x.T @ x / x.shape[0]
    report = check_model_stability(
        gamma, beta0, config.regularizer, config.zero_tol, config.ri_tol
    )
    return x, beta0, report


def _certificate_fields(report):
    cert = report.certificate
    if not cert.usable:
        return float("nan"), False
    return cert.verdict.margin, cert.verdict.status == "boundary"


def _proportional_scale(config, report):
    """Fill in the default scale c = 2 / margin for proportional rules."""
    rule = config.mu_rule
    if rule.kind != "proportional" or rule.scale is not None:
        return rule
    cert = report.certificate
    if not cert.usable or cert.verdict.margin <= 0:
        raise ValueError(
            "default proportional mu rule needs a certified instance "
            "(positive margin); set the scale explicitly"
        )
    return replace(rule, scale=2.0 / cert.verdict.margin)


def noise_stability_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Recovery rate and error ratios across noise levels on a fixed design."""
    if config.sweep_kind != "noise_levels":
        raise ValueError("noise_stability_sweep needs sweep_kind='noise_levels'")
    x, beta0, report = _fixed_setup(config)
    rule = _proportional_scale(config, report)
    margin, boundary = _certificate_fields(report)
    target = config.regularizer.descriptor(beta0, config.zero_tol)
    design = DesignSpec.explicit(x)
    signal = SignalSpec.explicit(beta0)

    tasks = []
    counter = 0
    for sigma in config.sweep_values:
        mu = rule.resolve(sigma, x.shape[0])
        for _ in range(config.trials):
            seed = config.base_seed + 1 + counter
            counter += 1
            tasks.append(
                (config.regularizer, design, signal, sigma, mu, seed,
                 config.solve, config.zero_tol, target, margin, boundary)
            )
    outs = _run_tasks(tasks, config.jobs)
    records = [o[0] for o in outs]
    by_value = _group(records, config.sweep_values, config.trials)
    return ExperimentResult(
        kind="noise_stability",
        records=records,
        summary=_summarize(by_value),
        certificate=report.certificate,
    )


def consistency_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Recovery rate across sample sizes with fresh designs per trial."""
    if config.sweep_kind != "sample_sizes":
        raise ValueError("consistency_sweep needs sweep_kind='sample_sizes'")
    if config.design.kind != "gaussian_rows":
        raise ValueError("consistency_sweep needs a gaussian_rows design")
    if config.mu_rule.kind != "power":
        raise ValueError("consistency_sweep needs a power mu rule")
    sizes = [int(v) for v in config.sweep_values]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sample sizes must be strictly increasing, got {sizes}")
    sigma = config.noise_sigma
    if sigma is None or sigma < 0:
        raise ValueError("consistency_sweep needs noise_sigma >= 0")

    rng = np.random.default_rng(config.base_seed)
    beta0 = make_signal(config.signal, config.regularizer, rng)
    cov = config.design.covariance
    # population certificate: the stability condition is checked on the
    # covariance the rows are drawn from
    report = check_model_stability(
        cov, beta0, config.regularizer, config.zero_tol, config.ri_tol
    )
    margin, boundary = _certificate_fields(report)
    target = config.regularizer.descriptor(beta0, config.zero_tol)
    signal = SignalSpec.explicit(beta0)

    tasks = []
    counter = 0
    for n in sizes:
        mu = config.mu_rule.resolve(sigma, n)
        design = DesignSpec.gaussian(cov, n)
        for _ in range(config.trials):
            seed = config.base_seed + 1 + counter
            counter += 1
            tasks.append(
                (config.regularizer, design, signal, sigma, mu, seed,
                 config.solve, config.zero_tol, target, margin, boundary)
            )
    outs = _run_tasks(tasks, config.jobs)
    records = [o[0] for o in outs]
    by_value = _group(records, [float(s) for s in sizes], config.trials)
    return ExperimentResult(
        kind="consistency",
        records=records,
        summary=_summarize(by_value),
        certificate=report.certificate,
    )


def sharpness_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Non-recovery across a mu grid on an instance certified outside."""
    if config.sweep_kind != "mu_values":
        raise ValueError("sharpness_experiment needs sweep_kind='mu_values'")
    sigma = config.noise_sigma
    if sigma is None or sigma < 0:
        raise ValueError("sharpness_experiment needs noise_sigma >= 0")
    x, beta0, report = _fixed_setup(config)
    cert = report.certificate
    if cert.usable and cert.verdict.status == "interior":
        warnings.warn(
            "sharpness experiment on an instance whose certificate is strictly "
            "interior; recovery is expected there", stacklevel=2,
        )
    margin, boundary = _certificate_fields(report)
    target = config.regularizer.descriptor(beta0, config.zero_tol)
    design = DesignSpec.explicit(x)
    signal = SignalSpec.explicit(beta0)

    # deterministic noiseless check per mu: the solution should be off the
    # model of beta0 even with w = 0
    noiseless = {}
    for mu in config.sweep_values:
        rec, _, _ = _run_task(
            (config.regularizer, design, signal, 0.0, mu, config.base_seed,
             config.solve, config.zero_tol, target, margin, boundary)
        )
        noiseless[mu] = rec.identified

    tasks = []
    counter = 0
    for mu in config.sweep_values:
        for _ in range(config.trials):
            seed = config.base_seed + 1 + counter
            counter += 1
            tasks.append(
                (config.regularizer, design, signal, sigma, mu, seed,
                 config.solve, config.zero_tol, target, margin, boundary)
            )
    outs = _run_tasks(tasks, config.jobs)
    records = [o[0] for o in outs]
    by_value = _group(records, config.sweep_values, config.trials)
    return ExperimentResult(
        kind="sharpness",
        records=records,
        summary=_summarize(by_value),
        certificate=report.certificate,
        noiseless_identified=noiseless,
    )


def identification_profile(config: ExperimentConfig) -> ExperimentResult:
    """Noise sweep with model traces; reports identification statistics."""
    if config.sweep_kind != "noise_levels":
        raise ValueError("identification_profile needs sweep_kind='noise_levels'")
    traced = replace(config, solve=replace(config.solve, trace_models=True))
    x, beta0, report = _fixed_setup(traced)
    rule = _proportional_scale(traced, report)
    margin, boundary = _certificate_fields(report)
    target = traced.regularizer.descriptor(beta0, traced.zero_tol)
    design = DesignSpec.explicit(x)
    signal = SignalSpec.explicit(beta0)

    tasks = []
    counter = 0
    for sigma in traced.sweep_values:
        mu = rule.resolve(sigma, x.shape[0])
        for _ in range(traced.trials):
            seed = traced.base_seed + 1 + counter
            counter += 1
            tasks.append(
                (traced.regularizer, design, signal, sigma, mu, seed,
                 traced.solve, traced.zero_tol, target, margin, boundary)
            )
    outs = _run_tasks(tasks, traced.jobs)
    records = [o[0] for o in outs]

    iters = []
    matches = 0
    finite = 0
    converged_total = 0
    for record, trace, final_desc in outs:
        if not record.converged:
            continue
        converged_total += 1
        k = record.identification_iter
        if k is not None and k < traced.solve.max_iter:
            finite += 1
            iters.append(k)
        # the retrospective definition makes every post-identification
        # descriptor equal the final one; verify, then compare to the target
        assert all(same_model(d, final_desc) for d in trace[k:]), "trace inconsistency"
        if same_model(final_desc, target):
            matches += 1
    profile = ProfileStats(
        identification_iters=iters,
        finite_fraction=finite / converged_total if converged_total else float("nan"),
        post_match_fraction=matches / converged_total if converged_total else float("nan"),
    )
    by_value = _group(records, traced.sweep_values, traced.trials)
    return ExperimentResult(
        kind="identification_profile",
        records=records,
        summary=_summarize(by_value),
        certificate=report.certificate,
        profile=profile,
    )


def _group(records, values, trials):
    out = []
    for i, v in enumerate(values):
        out.append((float(v), records[i * trials:(i + 1) * trials]))
    return out


def find_certified_design(reg, covariance, n, beta0, min_margin=0.0, base_seed=0, max_tries=100):
    """Search design seeds until the empirical covariance certifies beta0.

    Returns (x, stability_report, seed).  Raises if no draw within
    max_tries produces a stable certificate with margin >= min_margin.
    """
    spec = DesignSpec.gaussian(covariance, n)
    beta0 = np.asarray(beta0, dtype=float)
    for k in range(max_tries):
        seed = base_seed + k
        x = make_design(spec, np.random.default_rng(seed))
        report = check_model_stability(x.T @ x / n, beta0, reg)
        if report.stable and report.certificate.verdict.margin >= min_margin:
            return x, report, seed
    raise RuntimeError(
        f"no certified design with margin >= {min_margin} in {max_tries} draws"
    )


# ---------------------------------------------------------------------------
# serialization


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


RECORD_COLUMNS = (
    "seed", "n", "sigma", "mu", "identified", "boundary_flag", "error_norm",
    "eps_norm", "identification_iter", "converged", "certificate_margin",
)

SUMMARY_COLUMNS = (
    "sweep_value", "trials", "converged_count", "boundary_count",
    "identification_rate", "mean_error_ratio", "max_error_ratio",
    "mean_identification_iter",
)


def write_records_csv(records, path):
    """One row per trial, floats at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])


def write_summary_json(result: ExperimentResult, path):
    """Aggregate summary: one entry per sweep point plus certificate info."""
    payload = {
        "kind": result.kind,
        "rows": [
            {c: getattr(row, c) for c in SUMMARY_COLUMNS} for row in result.summary
        ],
    }
    cert = result.certificate
    if cert is not None:
        payload["certificate"] = {
            "usable": cert.usable,
            "subspace_dim": cert.subspace_dim,
            "smallest_singular": cert.injectivity.smallest_singular,
        }
        if cert.usable:
            payload["certificate"]["status"] = cert.verdict.status
            payload["certificate"]["margin"] = cert.verdict.margin
            payload["certificate"]["tangent_residual"] = cert.verdict.tangent_residual
    if result.noiseless_identified is not None:
        payload["noiseless_identified"] = {
            _fmt(mu): bool(v) for mu, v in result.noiseless_identified.items()
        }
    if result.profile is not None:
        payload["profile"] = {
            "identification_iters": result.profile.identification_iters,
            "finite_fraction": result.profile.finite_fraction,
            "post_match_fraction": result.profile.post_match_fraction,
        }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=True)
        fh.write("\n")


def write_plot_csv(result: ExperimentResult, path):
    """Long-format summary table, one row per sweep point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in result.summary:
            writer.writerow([_fmt(getattr(row, c)) for c in SUMMARY_COLUMNS])
