"""Partly smooth regularizers and their local model geometry.

Four penalties share one interface: the l1 norm, the group l1-l2 norm, the
nuclear norm on square matrices (handled as column-major vectorized p0 x p0
matrices), and the analysis-l1 penalty ||D^T beta||_1 for a fixed analysis
operator D.

Each regularizer knows how to

* evaluate itself,
* compute its proximal map  argmin_x 0.5 ||x - beta||^2 + gamma J(x),
* read off the active model of a point (a discrete descriptor plus the
  tangent subspace T and the model vector e = P_T(subdifferential)), and
* classify a candidate dual vector against the subdifferential at that
  model: strictly inside its relative interior, on the boundary, or outside.

The classification is what drives every stability certificate downstream, so
its margin conventions are fixed here once: margin > 0 means strict interior,
with magnitude measuring the distance to the boundary in the natural dual
norm of the penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg
import scipy.optimize

from .linalg import RANK_TOL, Subspace, _as_matrix, _as_vector, project

ZERO_TOL = 1e-8
RI_TOL = 1e-6

# inner solver knobs for the analysis-l1 prox (dual projected gradient)
PROX_INNER_TOL = 1e-9
PROX_INNER_MAX_ITER = 10_000


@dataclass(frozen=True)
class ModelDescriptor:
    """Discrete identity of an active model.

    data is a sorted tuple of indices (support, active groups, cosupport)
    or a single integer (matrix rank), depending on the regularizer kind.
    """

    kind: str
    data: Union[tuple, int]

    def __str__(self):
        return f"{self.kind}:{self.data}"


def same_model(a: ModelDescriptor, b: ModelDescriptor) -> bool:
    """Exact descriptor equality; mixing regularizer kinds is an error."""
    if a.kind != b.kind:
        raise ValueError(f"cannot compare models of kind {a.kind!r} and {b.kind!r}")
    return a.data == b.data


@dataclass(frozen=True)
class ModelGeometry:
    """Local geometry of a regularizer at a point.

    subspace is the model tangent space T, model_vector is
    e = P_T(subdifferential).  offset is the affine shift of the
    subdifferential; it differs from e only for analysis regularizers
    (where it is D_J sign(D^T beta)_J) and is None otherwise.
    """

    descriptor: ModelDescriptor
    subspace: Subspace
    model_vector: np.ndarray
    offset: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CertificateVerdict:
    """Position of a dual vector relative to the subdifferential.

    status is one of "interior", "boundary", "outside".  margin is the
    distance to the boundary measured in the penalty's dual norm (negative
    when outside).  tangent_residual is || P_T eta - e ||; a vector that
    fails the tangent equation is outside regardless of margin.
    """

    status: str
    margin: float
    tangent_residual: float


class Regularizer:
    """Common interface; concrete penalties subclass this."""

    kind: str = ""

    # -- interface ---------------------------------------------------------
    def value(self, beta) -> float:
        raise NotImplementedError

    def prox(self, beta, gamma: float) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self, beta, zero_tol: float = ZERO_TOL) -> ModelDescriptor:
        """Cheap discrete descriptor, suitable for per-iterate tracking."""
        raise NotImplementedError

    def model(self, beta, zero_tol: float = ZERO_TOL) -> ModelGeometry:
        """Full local geometry (descriptor, tangent subspace, model vector)."""
        raise NotImplementedError

    def _interior_margin(self, geometry: ModelGeometry, eta: np.ndarray) -> float:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    # -- shared logic ------------------------------------------------------
    def ri_membership(self, geometry: ModelGeometry, eta, tol: float = RI_TOL) -> CertificateVerdict:
        """Classify eta against the subdifferential at the given geometry."""
        eta = _as_vector(eta, geometry.subspace.ambient_dim, "eta")
        residual = float(np.linalg.norm(project(eta, geometry.subspace) - geometry.model_vector))
        margin = self._interior_margin(geometry, eta)
        if residual > tol or margin < -tol:
            status = "outside"
        elif margin > tol:
            status = "interior"
        else:
            status = "boundary"
        return CertificateVerdict(status=status, margin=margin, tangent_residual=residual)

    def _check_gamma(self, gamma: float) -> float:
        gamma = float(gamma)
        if not np.isfinite(gamma) or gamma < 0:
            raise ValueError(f"prox weight must be finite and >= 0, got {gamma}")
        return gamma


class L1(Regularizer):
    """The l1 norm.  Model: support set, sign vector on the support."""

    kind = "l1"

    def value(self, beta) -> float:
        beta = _as_vector(beta, name="beta")
        return float(np.abs(beta).sum())

    def prox(self, beta, gamma: float) -> np.ndarray:
        beta = _as_vector(beta, name="beta")
        gamma = self._check_gamma(gamma)
        return np.sign(beta) * np.maximum(np.abs(beta) - gamma, 0.0)

    def descriptor(self, beta, zero_tol: float = ZERO_TOL) -> ModelDescriptor:
        beta = _as_vector(beta, name="beta")
        support = np.flatnonzero(np.abs(beta) > zero_tol)
        return ModelDescriptor(self.kind, tuple(support.tolist()))

    def model(self, beta, zero_tol: float = ZERO_TOL) -> ModelGeometry:
        beta = _as_vector(beta, name="beta")
        desc = self.descriptor(beta, zero_tol)
        support = list(desc.data)
        sub = Subspace.coordinates(beta.shape[0], support)
        e = np.zeros_like(beta)
        e[support] = np.sign(beta[support])
        return ModelGeometry(desc, sub, e)

    def _interior_margin(self, geometry, eta) -> float:
        off = np.ones(eta.shape[0], dtype=bool)
        off[list(geometry.descriptor.data)] = False
        worst = float(np.abs(eta[off]).max()) if off.any() else 0.0
        return 1.0 - worst

    def to_config(self) -> dict:
        return {"kind": self.kind}


class GroupL1L2(Regularizer):
    """Sum of euclidean norms over a fixed partition of the coordinates."""

    kind = "group_l1l2"

    def __init__(self, groups):
        blocks = [np.asarray(sorted(g), dtype=int) for g in groups]
        if not blocks:
            raise ValueError("need at least one group")
        flat = np.concatenate(blocks) if blocks else np.array([], dtype=int)
        p = int(flat.max()) + 1 if flat.size else 0
        seen = np.zeros(p, dtype=bool)
        for b in blocks:
            if b.size == 0:
                raise ValueError("empty group")
            if b.min() < 0:
                raise ValueError("negative coordinate index in group")
            if seen[b].any():
                raise ValueError("groups overlap")
            seen[b] = True
        if not seen.all():
            missing = np.flatnonzero(~seen)
            raise ValueError(f"groups do not cover coordinates {missing.tolist()}")
        self.groups = blocks
        self.p = p

    def value(self, beta) -> float:
        beta = _as_vector(beta, self.p, "beta")
        return float(sum(np.linalg.norm(beta[g]) for g in self.groups))

    def prox(self, beta, gamma: float) -> np.ndarray:
        beta = _as_vector(beta, self.p, "beta")
        gamma = self._check_gamma(gamma)
        out = np.zeros_like(beta)
        for g in self.groups:
            nrm = np.linalg.norm(beta[g])
            if nrm > gamma:
                out[g] = beta[g] * (1.0 - gamma / nrm)
        return out

    def descriptor(self, beta, zero_tol: float = ZERO_TOL) -> ModelDescriptor:
        beta = _as_vector(beta, self.p, "beta")
        active = tuple(
            i for i, g in enumerate(self.groups) if np.linalg.norm(beta[g]) > zero_tol
        )
        return ModelDescriptor(self.kind, active)

    def model(self, beta, zero_tol: float = ZERO_TOL) -> ModelGeometry:
        beta = _as_vector(beta, self.p, "beta")
        desc = self.descriptor(beta, zero_tol)
        coords = [j for i in desc.data for j in self.groups[i].tolist()]
        sub = Subspace.coordinates(self.p, coords)
        e = np.zeros_like(beta)
        for i in desc.data:
            g = self.groups[i]
            e[g] = beta[g] / np.linalg.norm(beta[g])
        return ModelGeometry(desc, sub, e)

    def _interior_margin(self, geometry, eta) -> float:
        active = set(geometry.descriptor.data)
        worst = 0.0
        for i, g in enumerate(self.groups):
            if i not in active:
                worst = max(worst, float(np.linalg.norm(eta[g])))
        return 1.0 - worst

    def to_config(self) -> dict:
        return {"kind": self.kind, "groups": [g.tolist() for g in self.groups]}


class Nuclear(Regularizer):
    """Nuclear norm of a square matrix, vectorized column-major.

    Vectors of length p0*p0 are reshaped with order="F"; the model of a
    point is its numerical rank, with the usual fixed-rank tangent space
    { U A^T + B V^T } of dimension p0^2 - (p0 - r)^2.
    """

    kind = "nuclear"

    def __init__(self, shape):
        shape = tuple(int(s) for s in shape)
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] < 1:
            raise ValueError(f"need a square matrix shape, got {shape}")
        self.shape = shape
        self.p = shape[0] * shape[1]

    def _mat(self, beta) -> np.ndarray:
        beta = _as_vector(beta, self.p, "beta")
        return beta.reshape(self.shape, order="F")

    def _vec(self, m) -> np.ndarray:
        return np.asarray(m, dtype=float).ravel(order="F")

    def value(self, beta) -> float:
        return float(np.linalg.svd(self._mat(beta), compute_uv=False).sum())

    def prox(self, beta, gamma: float) -> np.ndarray:
        gamma = self._check_gamma(gamma)
        u, s, vt = np.linalg.svd(self._mat(beta), full_matrices=False)
        return self._vec(u @ (np.maximum(s - gamma, 0.0)[:, None] * vt))

    def descriptor(self, beta, zero_tol: float = ZERO_TOL) -> ModelDescriptor:
        s = np.linalg.svd(self._mat(beta), compute_uv=False)
        return ModelDescriptor(self.kind, int(np.sum(s > zero_tol)))

    def model(self, beta, zero_tol: float = ZERO_TOL) -> ModelGeometry:
        m = self._mat(beta)
        u, s, vt = np.linalg.svd(m, full_matrices=True)
        r = int(np.sum(s > zero_tol))
        desc = ModelDescriptor(self.kind, r)
        p0 = self.shape[0]
        # orthonormal Frobenius basis of {U A^T + B V^T}: all u_i v_j^T with
        # i < r or j < r (complementary pairs span the normal space)
        cols = []
        for i in range(p0):
            for j in range(p0):
                if i < r or j < r:
                    cols.append(np.outer(u[:, i], vt[j, :]).ravel(order="F"))
        basis = np.stack(cols, axis=1) if cols else np.zeros((self.p, 0))
        e = self._vec(u[:, :r] @ vt[:r, :])
        return ModelGeometry(desc, Subspace(basis), e)

    def _interior_margin(self, geometry, eta) -> float:
        # spectral norm of the normal-space part of eta
        h = self._mat(eta)
        normal = h - self._mat(project(eta, geometry.subspace))
        worst = float(np.linalg.norm(normal, 2)) if normal.size else 0.0
        return 1.0 - worst

    def to_config(self) -> dict:
        return {"kind": self.kind, "matrix_shape": list(self.shape)}


class AnalysisL1(Regularizer):
    """The analysis penalty ||D^T beta||_1 for a fixed p x q operator D.

    The model of a point is the cosupport I = { i : (D^T beta)_i = 0 },
    with tangent space T = ker(D_I^T).  The prox has no closed form; it is
    computed through the dual problem min_{||v||_inf <= gamma} ||beta - D v||^2
    by accelerated projected gradient with adaptive restart.
    """

    kind = "analysis_l1"

    def __init__(self, operator):
        d = _as_matrix(operator, "analysis operator")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"analysis operator must be nonempty, got shape {d.shape}")
        self.operator = d
        self.p, self.q = d.shape
        sv = np.linalg.svd(d, compute_uv=False)
        self._lipschitz = float(sv[0] ** 2) if sv.size else 0.0

    def value(self, beta) -> float:
        beta = _as_vector(beta, self.p, "beta")
        return float(np.abs(self.operator.T @ beta).sum())

    def prox(self, beta, gamma: float) -> np.ndarray:
        beta = _as_vector(beta, self.p, "beta")
        gamma = self._check_gamma(gamma)
        if gamma == 0.0 or self._lipschitz == 0.0:
            return beta.copy()
        d = self.operator
        step = 1.0 / self._lipschitz
        v = np.zeros(self.q)
        v_prev = v
        t = 1.0
        for _ in range(PROX_INNER_MAX_ITER):
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = v + ((t - 1.0) / t_next) * (v - v_prev)
            grad_y = -d.T @ (beta - d @ y)
            v_next = np.clip(y - step * grad_y, -gamma, gamma)
            # honest fixed-point residual of the unaccelerated map at v_next
            grad_v = -d.T @ (beta - d @ v_next)
            mapped = np.clip(v_next - step * grad_v, -gamma, gamma)
            residual = float(np.linalg.norm(mapped - v_next))
            if residual <= PROX_INNER_TOL:
                return beta - d @ mapped
            # restart the momentum when it points uphill
            if np.dot(y - v_next, v_next - v) > 0.0:
                t_next = 1.0
            v_prev, v, t = v, v_next, t_next
        raise RuntimeError(
            f"analysis prox did not converge in {PROX_INNER_MAX_ITER} iterations "
            f"(fixed-point residual {residual:.3e} > {PROX_INNER_TOL})"
        )

    def _cosupport(self, beta, zero_tol):
        z = self.operator.T @ beta
        return z, np.flatnonzero(np.abs(z) <= zero_tol)

    def descriptor(self, beta, zero_tol: float = ZERO_TOL) -> ModelDescriptor:
        beta = _as_vector(beta, self.p, "beta")
        _, cosupport = self._cosupport(beta, zero_tol)
        return ModelDescriptor(self.kind, tuple(cosupport.tolist()))

    def model(self, beta, zero_tol: float = ZERO_TOL) -> ModelGeometry:
        beta = _as_vector(beta, self.p, "beta")
        z, cosupport = self._cosupport(beta, zero_tol)
        desc = ModelDescriptor(self.kind, tuple(cosupport.tolist()))
        if cosupport.size:
            basis = scipy.linalg.null_space(self.operator[:, cosupport].T)
            sub = Subspace(basis)
        else:
            sub = Subspace.full(self.p)
        signs = np.where(np.abs(z) > zero_tol, np.sign(z), 0.0)
        offset = self.operator @ signs
        e = project(offset, sub)
        return ModelGeometry(desc, sub, e, offset=offset)

    def _interior_margin(self, geometry, eta) -> float:
        cosupport = np.asarray(geometry.descriptor.data, dtype=int)
        if cosupport.size == 0:
            return 1.0
        if geometry.offset is None:
            raise ValueError("analysis geometry is missing its subdifferential offset")
        d_i = self.operator[:, cosupport]
        rhs = eta - geometry.offset
        # reduce against an orthonormal basis of Im(D_I) so that the equality
        # system stays consistent when eta only satisfies the tangent
        # equation up to tolerance
        u, s, _ = np.linalg.svd(d_i, full_matrices=False)
        rank = int(np.sum(s > RANK_TOL * s[0])) if s.size else 0
        if rank == 0:
            return 1.0
        b = u[:, :rank]
        k = cosupport.size
        # variables (u_I, t): minimize t subject to B^T D_I u = B^T rhs,
        # -t <= u_i <= t
        c = np.zeros(k + 1)
        c[-1] = 1.0
        a_eq = np.hstack([b.T @ d_i, np.zeros((rank, 1))])
        b_eq = b.T @ rhs
        a_ub = np.block([
            [np.eye(k), -np.ones((k, 1))],
            [-np.eye(k), -np.ones((k, 1))],
        ])
        bounds = [(None, None)] * k + [(0, None)]
        res = scipy.optimize.linprog(
            c, A_ub=a_ub, b_ub=np.zeros(2 * k), A_eq=a_eq, b_eq=b_eq,
            bounds=bounds, method="highs",
        )
        if res.status == 2:  # infeasible: not even in the affine hull
            return -np.inf
        if not res.success:
            raise RuntimeError(f"interior-margin LP failed: {res.message}")
        return 1.0 - float(res.x[-1])

    def to_config(self) -> dict:
        return {
            "kind": self.kind,
            "operator_shape": list(self.operator.shape),
            "operator": self.operator.tolist(),
        }


_KINDS = {
    "l1": L1,
    "group_l1l2": GroupL1L2,
    "nuclear": Nuclear,
    "analysis_l1": AnalysisL1,
}


def from_config(cfg: dict) -> Regularizer:
    """Build a regularizer from its config dictionary (see to_config)."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError("regularizer config must be a dict with a 'kind' key")
    kind = cfg["kind"]
    if kind == "l1":
        return L1()
    if kind == "group_l1l2":
        if "groups" not in cfg:
            raise ValueError("group_l1l2 config needs 'groups'")
        return GroupL1L2(cfg["groups"])
    if kind == "nuclear":
        if "matrix_shape" not in cfg:
            raise ValueError("nuclear config needs 'matrix_shape'")
        return Nuclear(cfg["matrix_shape"])
    if kind == "analysis_l1":
        if "operator" not in cfg:
            raise ValueError("analysis_l1 config needs 'operator'")
        op = np.asarray(cfg["operator"], dtype=float)
        if "operator_shape" in cfg:
            expect = tuple(cfg["operator_shape"])
            if op.shape != expect:
                raise ValueError(f"operator shape {op.shape} != declared {expect}")
        return AnalysisL1(op)
    raise ValueError(f"unknown regularizer kind {kind!r}")
