"""Forward-backward splitting for regularized quadratic objectives.

The problem is parameterized by theta = (mu, u, Gamma) and reads

    E(beta) = J(beta) + (1/(2 mu)) <Gamma beta, beta> - (1/mu) <beta, u>
              + (1/(2 mu)) <Gamma^+ u, u>.

With mu = lambda/n, u = X^T y / n and Gamma = X^T X / n this is
J(beta) + ||X beta - y||^2 / (2 n mu), so E is nonnegative whenever u lies
in the image of Gamma.

Iteration:  beta <- prox_{tau mu J}(beta + tau (u - Gamma beta)) with a
fixed step 0 < tau < 2 / ||Gamma||.  Along the way the solver tracks the
active-model descriptor of every iterate, so the first iteration after
which the model never changes again (the identification point) can be
reported retrospectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import check_symmetric, pseudoinverse, spectral_norm, _as_vector
from .regularizers import Regularizer

DEFAULT_MAX_ITER = 100_000
DEFAULT_FP_TOL = 1e-10
DEFAULT_ZERO_TOL = 1e-8
# relative step as a fraction of the stability limit 2/||Gamma||
DEFAULT_STEP_FRACTION = 0.9

IMAGE_TOL = 1e-8


@dataclass(frozen=True)
class CanonicalParameters:
    """Scale-free problem data theta = (mu, u, Gamma).

    mu >= 0 is the penalty weight per sample, u the response correlation and
    Gamma the (symmetric PSD) design covariance.  Solving requires mu > 0;
    u must lie in the image of Gamma (see image_residual), which holds by
    construction for u = X^T y / n with y in the row space of X.
    """

    mu: float
    u: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        if not np.isfinite(self.mu) or self.mu < 0:
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")
        u = _as_vector(self.u, name="u")
        gamma = check_symmetric(self.gamma, name="gamma")
        if gamma.shape[0] != u.shape[0]:
            raise ValueError("u and gamma dimensions differ")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    def image_residual(self) -> float:
        """|| Gamma Gamma^+ u - u ||, zero when u is in Im(Gamma)."""
        pg = pseudoinverse(self.gamma)
        return float(np.linalg.norm(self.gamma @ (pg @ self.u) - self.u))


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for forward_backward.

    step=None picks tau = 0.9 * (2 / ||Gamma||).  An explicit step must
    satisfy 0 < tau < 2 / ||Gamma|| or the solve is refused.  trace_models
    additionally stores the per-iterate descriptor sequence on the result.
    """

    step: Optional[float] = None
    max_iter: int = DEFAULT_MAX_ITER
    fp_tol: float = DEFAULT_FP_TOL
    zero_tol: float = DEFAULT_ZERO_TOL
    trace_models: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.fp_tol <= 0:
            raise ValueError("fp_tol must be > 0")


@dataclass
class SolveResult:
    """Outcome of a forward-backward run.

    iterations counts prox steps actually taken.  objective_trace[k] is the
    objective value after k steps (index 0 is the initial point), so descent
    can be audited a posteriori.  identification_iter is the first iterate
    index from which the model descriptor stays equal to the final one
    (0 when the initial point already carries the final model); it is None
    for non-converged runs.  model_trace is populated only when
    trace_models was set, aligned with objective_trace.
    """

    beta: np.ndarray
    iterations: int
    converged: bool
    fp_residual: float
    objective: float
    objective_trace: np.ndarray
    step: float
    identification_iter: Optional[int]
    model_trace: Optional[list] = None


def objective(theta: CanonicalParameters, reg: Regularizer, beta) -> float:
    """Penalized objective E(beta, theta); requires mu > 0."""
    if theta.mu <= 0:
        raise ValueError(f"objective needs mu > 0, got {theta.mu}")
    beta = _as_vector(beta, theta.dim, "beta")
    pg_u = pseudoinverse(theta.gamma) @ theta.u
    quad = 0.5 * beta @ (theta.gamma @ beta) - beta @ theta.u + 0.5 * pg_u @ theta.u
    return reg.value(beta) + quad / theta.mu


def forward_backward(
    theta: CanonicalParameters,
    reg: Regularizer,
    opts: SolveOptions = SolveOptions(),
    beta_init=None,
) -> SolveResult:
    """Minimize E(., theta) by forward-backward splitting.

    Parameters
    ----------
    theta : CanonicalParameters
        Problem data; mu must be strictly positive.
    reg : Regularizer
        The penalty J.
    opts : SolveOptions
        Step size, stopping rule, model tracing.
    beta_init : array, optional
        Starting point (default: the zero vector).

    Returns
    -------
    SolveResult
        Converged means the relative fixed-point residual
        ||beta_{k+1} - beta_k|| <= fp_tol * max(1, ||beta_k||) was met
        within max_iter steps; otherwise the result is flagged, not raised.
    """
    if theta.mu <= 0:
        raise ValueError(f"forward-backward needs mu > 0, got {theta.mu}")
    lip = spectral_norm(theta.gamma)
    if opts.step is None:
        tau = DEFAULT_STEP_FRACTION * 2.0 / lip if lip > 0 else 1.0
    else:
        tau = float(opts.step)
        if tau <= 0 or (lip > 0 and tau >= 2.0 / lip):
            raise ValueError(
                f"step {tau} outside the stable range (0, {2.0 / lip if lip > 0 else np.inf})"
            )

    if beta_init is None:
        beta = np.zeros(theta.dim)
    else:
        beta = _as_vector(beta_init, theta.dim, "beta_init").copy()

    mu, u, gam = theta.mu, theta.u, theta.gamma
    # constant part of the objective, computed once per solve
    const = 0.5 * (pseudoinverse(gam) @ u) @ u

    def energy(b, gam_b):
        return reg.value(b) + (0.5 * b @ gam_b - b @ u + const) / mu

    gam_beta = gam @ beta
    trace = [energy(beta, gam_beta)]
    desc = reg.descriptor(beta, opts.zero_tol)
    models = [desc] if opts.trace_models else None
    run_start = 0  # first iterate of the current descriptor run

    converged = False
    fp_residual = np.inf
    k = 0
    for k in range(1, opts.max_iter + 1):
        beta_next = reg.prox(beta + tau * (u - gam_beta), tau * mu)
        fp_residual = float(np.linalg.norm(beta_next - beta))
        threshold = opts.fp_tol * max(1.0, float(np.linalg.norm(beta)))
        desc_next = reg.descriptor(beta_next, opts.zero_tol)
        if desc_next != desc:
            run_start = k
            desc = desc_next
        gam_beta = gam @ beta_next
        trace.append(energy(beta_next, gam_beta))
        if opts.trace_models:
            models.append(desc_next)
        beta = beta_next
        if fp_residual <= threshold:
            converged = True
            break

    return SolveResult(
        beta=beta,
        iterations=k,
        converged=converged,
        fp_residual=fp_residual,
        objective=trace[-1],
        objective_trace=np.asarray(trace),
        step=tau,
        identification_iter=run_start if converged else None,
        model_trace=models,
    )


def solve_path(
    thetas,
    reg: Regularizer,
    opts: SolveOptions = SolveOptions(),
    beta_init=None,
) -> list:
    """Solve a sequence of problems sharing (u, Gamma) with warm starts.

    The mu values must be positive and non-increasing (homotopy from loose
    to tight penalty).  Each solve starts from the previous solution.
    """
    thetas = list(thetas)
    if not thetas:
        return []
    first = thetas[0]
    for t in thetas:
        if t.mu <= 0:
            raise ValueError("every mu on the path must be > 0")
        if t.u.shape != first.u.shape or not np.array_equal(t.u, first.u):
            raise ValueError("path parameters must share u")
        if not np.array_equal(t.gamma, first.gamma):
            raise ValueError("path parameters must share gamma")
    mus = [t.mu for t in thetas]
    if any(b > a for a, b in zip(mus, mus[1:])):
        raise ValueError(f"mu values must be non-increasing along the path, got {mus}")

    results = []
    warm = beta_init
    for t in thetas:
        res = forward_backward(t, reg, opts, beta_init=warm)
        results.append(res)
        warm = res.beta
    return results
