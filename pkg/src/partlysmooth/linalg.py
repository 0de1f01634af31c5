"""Dense linear-algebra helpers shared across the package.

Subspaces travel as explicit orthonormal bases (p x d arrays) because every
downstream computation (restricted operators, tangent projections,
pre-certificates) is cheapest in basis coordinates.  All routines work on
plain float64 ndarrays; nothing here is sparse-aware.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# default tolerances, shared by the rest of the package
ORTHO_TOL = 1e-10
SYM_TOL = 1e-10
PSD_TOL = -1e-8
RANK_TOL = 1e-10
INJECTIVITY_TOL = 1e-8


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _as_vector(v, dim=None, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def check_symmetric(a, tol=SYM_TOL, name="operator"):
    """Validate symmetry of a square matrix and return it as float64."""
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > tol:
        raise ValueError(f"{name} is not symmetric to tolerance {tol}")
    return a


def check_covariance(a, name="covariance"):
    """Validate that `a` is symmetric positive semidefinite.

    Eigenvalues are allowed to dip slightly negative (>= -1e-8) to absorb
    roundoff in empirical covariances.
    """
    a = check_symmetric(a, name=name)
    if a.size:
        lo = float(np.linalg.eigvalsh(a).min())
        if lo < PSD_TOL:
            raise ValueError(f"{name} has eigenvalue {lo:.3e} below {PSD_TOL}")
    return a


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of R^p stored as an orthonormal basis.

    The basis is a p x d array with orthonormal columns; d may be zero
    (the trivial subspace).  Instances are immutable.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError(f"basis must be 2-d, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("basis has non-finite entries")
        if b.shape[1] > b.shape[0]:
            raise ValueError(f"basis has more columns than rows: {b.shape}")
        if b.shape[1]:
            gram = b.T @ b
            if np.max(np.abs(gram - np.eye(b.shape[1]))) > ORTHO_TOL:
                raise ValueError(f"basis columns not orthonormal to {ORTHO_TOL}")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace, as a full p x p matrix."""
        return self.basis @ self.basis.T

    @classmethod
    def trivial(cls, p: int) -> "Subspace":
        return cls(np.zeros((p, 0)))

    @classmethod
    def full(cls, p: int) -> "Subspace":
        return cls(np.eye(p))

    @classmethod
    def coordinates(cls, p: int, indices) -> "Subspace":
        """Span of the given coordinate axes of R^p."""
        idx = np.asarray(sorted(indices), dtype=int)
        if idx.size and (idx[0] < 0 or idx[-1] >= p):
            raise ValueError(f"coordinate index out of range for p={p}")
        if len(set(idx.tolist())) != idx.size:
            raise ValueError("duplicate coordinate indices")
        b = np.zeros((p, idx.size))
        b[idx, np.arange(idx.size)] = 1.0
        return cls(b)

    @classmethod
    def span(cls, columns, rank_tol=RANK_TOL) -> "Subspace":
        """Orthonormalize the column span of an arbitrary p x k array."""
        a = _as_matrix(columns, "columns")
        if a.shape[1] == 0:
            return cls.trivial(a.shape[0])
        u, s, _ = np.linalg.svd(a, full_matrices=False)
        r = int(np.sum(s > rank_tol * (s[0] if s.size else 1.0)))
        return cls(u[:, :r])


def project(v, subspace: Subspace) -> np.ndarray:
    """Orthogonal projection of a vector onto the subspace."""
    v = _as_vector(v, subspace.ambient_dim, "v")
    b = subspace.basis
    return b @ (b.T @ v)


def restricted_operator(gamma, subspace: Subspace) -> np.ndarray:
    """P_T Gamma P_T as a full p x p matrix, for symmetric Gamma."""
    gamma = check_symmetric(gamma, name="gamma")
    if gamma.shape[0] != subspace.ambient_dim:
        raise ValueError("operator and subspace ambient dimensions differ")
    b = subspace.basis
    return b @ (b.T @ gamma @ b) @ b.T


def pseudoinverse(a, rank_tol=RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular value cutoff."""
    a = _as_matrix(a, "matrix")
    if a.size == 0:
        return a.T.copy()
    return np.linalg.pinv(a, rcond=rank_tol)


@dataclass(frozen=True)
class InjectivityReport:
    """Outcome of a restricted-injectivity test.

    smallest_singular is sigma_min of Gamma restricted to the subspace;
    it is +inf for the trivial subspace, where injectivity holds vacuously.
    """

    holds: bool
    smallest_singular: float


def restricted_injectivity(gamma, subspace: Subspace, tol=INJECTIVITY_TOL) -> InjectivityReport:
    """Test ker(Gamma) ∩ T = {0} via the smallest singular value of Gamma B."""
    gamma = check_symmetric(gamma, name="gamma")
    if gamma.shape[0] != subspace.ambient_dim:
        raise ValueError("operator and subspace ambient dimensions differ")
    if subspace.dim == 0:
        return InjectivityReport(holds=True, smallest_singular=np.inf)
    s = np.linalg.svd(gamma @ subspace.basis, compute_uv=False)
    smin = float(s[-1])
    return InjectivityReport(holds=smin > tol, smallest_singular=smin)


def spectral_norm(a) -> float:
    """Largest singular value (= largest |eigenvalue| for symmetric input)."""
    a = _as_matrix(a, "matrix")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def subspace_distance(t1: Subspace, t2: Subspace) -> float:
    """Operator-norm distance between the orthogonal projectors.

    Equals the sine of the largest principal angle when the subspaces have
    equal dimension, and 1.0 whenever the dimensions differ.
    """
    if t1.ambient_dim != t2.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    return spectral_norm(t1.projector() - t2.projector())
