"""Synthetic regression instances and their canonical parameters.

An instance is y = X beta0 + w with a design X (explicit, or rows drawn
i.i.d. from N(0, Sigma)), a structured ground truth beta0 and Gaussian
noise w.  Generation is fully determined by a single integer seed through
numpy's default PCG64 generator; draws happen in the fixed order
design, signal, noise.

The canonical parameters of (instance, lambda) are

    mu = lambda / n,  u = X^T y / n,  Gamma = X^T X / n,

and the effective noise seen by the solver is eps = X^T w / n = u -
Gamma beta0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .linalg import check_covariance, _as_matrix, _as_vector
from .regularizers import GroupL1L2, Nuclear, Regularizer
from .solver import CanonicalParameters

DEFAULT_AMPLITUDE_RANGE = (1.0, 2.0)


@dataclass(frozen=True)
class DesignSpec:
    """How to produce the design matrix.

    kind "explicit" carries the matrix itself; kind "gaussian_rows" draws n
    rows from N(0, covariance).
    """

    kind: str
    matrix: Optional[np.ndarray] = None
    covariance: Optional[np.ndarray] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.kind == "explicit":
            if self.matrix is None:
                raise ValueError("explicit design needs a matrix")
            object.__setattr__(self, "matrix", _as_matrix(self.matrix, "design matrix"))
        elif self.kind == "gaussian_rows":
            if self.covariance is None or self.n is None:
                raise ValueError("gaussian_rows design needs covariance and n")
            cov = check_covariance(self.covariance)
            if int(self.n) < 1:
                raise ValueError("n must be >= 1")
            object.__setattr__(self, "covariance", cov)
            object.__setattr__(self, "n", int(self.n))
        else:
            raise ValueError(f"unknown design kind {self.kind!r}")

    @property
    def p(self) -> int:
        return self.matrix.shape[1] if self.kind == "explicit" else self.covariance.shape[0]

    @classmethod
    def explicit(cls, matrix) -> "DesignSpec":
        return cls(kind="explicit", matrix=matrix)

    @classmethod
    def gaussian(cls, covariance, n: int) -> "DesignSpec":
        return cls(kind="gaussian_rows", covariance=covariance, n=n)


@dataclass(frozen=True)
class SignalSpec:
    """How to produce the ground-truth vector.

    Kinds: "explicit" (the vector itself), "sparse" (support_size entries,
    random support and signs, amplitudes uniform in amplitude_range),
    "group_sparse" (active_groups groups filled the same way),
    "low_rank" (a p0 x p0 matrix of the given rank with singular values in
    amplitude_range, vectorized column-major) and "piecewise_constant"
    (segments blocks; consecutive levels differ by an amplitude_range step,
    so every breakpoint is genuinely active).
    """

    kind: str
    beta0: Optional[np.ndarray] = None
    p: Optional[int] = None
    support_size: Optional[int] = None
    active_groups: Optional[int] = None
    rank: Optional[int] = None
    segments: Optional[int] = None
    amplitude_range: Tuple[float, float] = DEFAULT_AMPLITUDE_RANGE

    def __post_init__(self):
        lo, hi = self.amplitude_range
        if not (0 < lo <= hi):
            raise ValueError(f"amplitude range must satisfy 0 < lo <= hi, got {self.amplitude_range}")
        if self.kind == "explicit":
            if self.beta0 is None:
                raise ValueError("explicit signal needs beta0")
            v = _as_vector(self.beta0, name="beta0")
            object.__setattr__(self, "beta0", v)
            object.__setattr__(self, "p", v.shape[0])
        elif self.kind == "sparse":
            if self.p is None or self.support_size is None:
                raise ValueError("sparse signal needs p and support_size")
            if not 0 <= self.support_size <= self.p:
                raise ValueError("support_size out of range")
        elif self.kind == "group_sparse":
            if self.active_groups is None:
                raise ValueError("group_sparse signal needs active_groups")
        elif self.kind == "low_rank":
            if self.rank is None:
                raise ValueError("low_rank signal needs rank")
        elif self.kind == "piecewise_constant":
            if self.p is None or self.segments is None:
                raise ValueError("piecewise_constant signal needs p and segments")
            if not 1 <= self.segments <= self.p:
                raise ValueError("segments out of range")
        else:
            raise ValueError(f"unknown signal kind {self.kind!r}")

    @classmethod
    def explicit(cls, beta0) -> "SignalSpec":
        return cls(kind="explicit", beta0=beta0)

    @classmethod
    def sparse(cls, p: int, support_size: int, amplitude_range=DEFAULT_AMPLITUDE_RANGE) -> "SignalSpec":
        return cls(kind="sparse", p=p, support_size=support_size, amplitude_range=amplitude_range)

    @classmethod
    def group_sparse(cls, active_groups: int, amplitude_range=DEFAULT_AMPLITUDE_RANGE) -> "SignalSpec":
        return cls(kind="group_sparse", active_groups=active_groups, amplitude_range=amplitude_range)

    @classmethod
    def low_rank(cls, rank: int, amplitude_range=DEFAULT_AMPLITUDE_RANGE) -> "SignalSpec":
        return cls(kind="low_rank", rank=rank, amplitude_range=amplitude_range)

    @classmethod
    def piecewise_constant(cls, p: int, segments: int, amplitude_range=DEFAULT_AMPLITUDE_RANGE) -> "SignalSpec":
        return cls(kind="piecewise_constant", p=p, segments=segments, amplitude_range=amplitude_range)


@dataclass(frozen=True)
class ProblemInstance:
    x: np.ndarray
    beta0: np.ndarray
    w: np.ndarray
    y: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _amplitudes(rng, size, amplitude_range):
    lo, hi = amplitude_range
    return rng.uniform(lo, hi, size=size) * rng.choice([-1.0, 1.0], size=size)


def make_design(spec: DesignSpec, rng) -> np.ndarray:
    if spec.kind == "explicit":
        return spec.matrix.copy()
    # factor the covariance through its symmetric PSD square root; tiny
    # negative eigenvalues from roundoff are clipped
    vals, vecs = np.linalg.eigh(spec.covariance)
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    z = rng.standard_normal((spec.n, spec.covariance.shape[0]))
    return z @ root.T


def make_signal(spec: SignalSpec, reg: Regularizer, rng) -> np.ndarray:
    """Draw a ground truth matching the regularizer's structure."""
    if spec.kind == "explicit":
        return spec.beta0.copy()
    if spec.kind == "sparse":
        beta = np.zeros(spec.p)
        support = rng.choice(spec.p, size=spec.support_size, replace=False)
        beta[np.sort(support)] = _amplitudes(rng, spec.support_size, spec.amplitude_range)
        return beta
    if spec.kind == "group_sparse":
        if not isinstance(reg, GroupL1L2):
            raise ValueError("group_sparse signals need a group regularizer")
        if not 0 <= spec.active_groups <= len(reg.groups):
            raise ValueError("active_groups out of range")
        beta = np.zeros(reg.p)
        chosen = rng.choice(len(reg.groups), size=spec.active_groups, replace=False)
        for i in np.sort(chosen):
            g = reg.groups[i]
            beta[g] = _amplitudes(rng, g.size, spec.amplitude_range)
        return beta
    if spec.kind == "low_rank":
        if not isinstance(reg, Nuclear):
            raise ValueError("low_rank signals need a nuclear-norm regularizer")
        p0 = reg.shape[0]
        if not 0 <= spec.rank <= p0:
            raise ValueError("rank out of range")
        qu, _ = np.linalg.qr(rng.standard_normal((p0, spec.rank)))
        qv, _ = np.linalg.qr(rng.standard_normal((p0, spec.rank)))
        lo, hi = spec.amplitude_range
        sv = rng.uniform(lo, hi, size=spec.rank)
        return ((qu * sv) @ qv.T).ravel(order="F")
    if spec.kind == "piecewise_constant":
        # segment levels follow a signed random walk so adjacent levels
        # always differ by at least the lower amplitude bound
        sizes = _segment_sizes(spec.p, spec.segments, rng)
        steps = _amplitudes(rng, spec.segments, spec.amplitude_range)
        levels = np.cumsum(steps)
        return np.repeat(levels, sizes)
    raise ValueError(f"unknown signal kind {spec.kind!r}")


def _segment_sizes(p, k, rng):
    # k positive integers summing to p, uniform over compositions
    if k == 1:
        return np.array([p])
    cuts = np.sort(rng.choice(p - 1, size=k - 1, replace=False)) + 1
    edges = np.concatenate([[0], cuts, [p]])
    return np.diff(edges)


def generate_instance(
    design: DesignSpec,
    signal: SignalSpec,
    noise_sigma: float,
    seed: int,
    reg: Regularizer,
) -> ProblemInstance:
    """Draw a full instance from one seed (design, then signal, then noise)."""
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    x = make_design(design, rng)
    beta0 = make_signal(signal, reg, rng)
    if x.shape[1] != beta0.shape[0]:
        raise ValueError(
            f"design has p={x.shape[1]} columns but the signal has length {beta0.shape[0]}"
        )
    w = noise_sigma * rng.standard_normal(x.shape[0])
    return ProblemInstance(x=x, beta0=beta0, w=w, y=x @ beta0 + w, seed=int(seed))


def canonical_parameters(instance: ProblemInstance, lam: float) -> CanonicalParameters:
    """theta = (lambda/n, X^T y / n, X^T X / n)."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    n = instance.n
    x = instance.x
    return CanonicalParameters(mu=lam / n, u=x.T @ instance.y / n, gamma=x.T @ x / n)


def correlation_noise(instance: ProblemInstance) -> np.ndarray:
    """eps = X^T w / n, the noise term entering the canonical parameters."""
    return instance.x.T @ instance.w / instance.n


def load_matrix_csv(path) -> np.ndarray:
    """Read a dense matrix from a comma-separated text file."""
    m = np.loadtxt(path, delimiter=",", ndmin=2)
    return _as_matrix(m, f"matrix from {path}")
