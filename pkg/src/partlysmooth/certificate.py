"""Model-stability certificates.

Given the population (or empirical) covariance Gamma and a target vector
beta0, the linearized pre-certificate is

    eta = Gamma (P_T Gamma P_T)^+ e,

where T and e are the tangent space and model vector of the regularizer at
beta0.  When ker(Gamma) does not meet T and eta lies strictly inside the
subdifferential at beta0, the active model of beta0 is stable: low-noise,
well-tuned solves recover it exactly.  A strictly-outside eta certifies the
opposite.  A boundary verdict is inconclusive and reported as such.

The same membership test applied to eta = (u - Gamma beta)/mu at a solver
output beta checks first-order optimality a posteriori; combined with
restricted injectivity on the tangent space at beta it certifies that beta
is the unique minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import (
    INJECTIVITY_TOL,
    InjectivityReport,
    check_symmetric,
    pseudoinverse,
    restricted_injectivity,
)
from .regularizers import RI_TOL, ZERO_TOL, CertificateVerdict, ModelGeometry, Regularizer


@dataclass(frozen=True)
class Certificate:
    """Pre-certificate vector plus everything needed to interpret it.

    eta and verdict are None when restricted injectivity fails (the
    pre-certificate is not defined there; usable is False).
    """

    eta: Optional[np.ndarray]
    verdict: Optional[CertificateVerdict]
    injectivity: InjectivityReport
    geometry: ModelGeometry

    @property
    def usable(self) -> bool:
        return self.injectivity.holds

    @property
    def subspace_dim(self) -> int:
        return self.geometry.subspace.dim


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    inconclusive: bool
    certificate: Certificate


def linearized_precertificate(
    gamma,
    beta0,
    reg: Regularizer,
    zero_tol: float = ZERO_TOL,
    ri_tol: float = RI_TOL,
    injectivity_tol: float = INJECTIVITY_TOL,
) -> Certificate:
    """Compute the pre-certificate of (gamma, beta0) under the regularizer.

    The restricted operator is inverted in basis coordinates: with B an
    orthonormal basis of T, (P_T Gamma P_T)^+ e = B (B^T Gamma B)^+ B^T e,
    so eta = Gamma B (B^T Gamma B)^+ (B^T e).
    """
    gamma = check_symmetric(gamma, name="gamma")
    geometry = reg.model(beta0, zero_tol)
    if gamma.shape[0] != geometry.subspace.ambient_dim:
        raise ValueError("gamma and beta0 dimensions differ")
    injectivity = restricted_injectivity(gamma, geometry.subspace, injectivity_tol)
    if not injectivity.holds:
        return Certificate(eta=None, verdict=None, injectivity=injectivity, geometry=geometry)
    b = geometry.subspace.basis
    if b.shape[1]:
        reduced = pseudoinverse(b.T @ gamma @ b) @ (b.T @ geometry.model_vector)
        eta = gamma @ (b @ reduced)
    else:
        eta = np.zeros(gamma.shape[0])
    verdict = reg.ri_membership(geometry, eta, ri_tol)
    return Certificate(eta=eta, verdict=verdict, injectivity=injectivity, geometry=geometry)


def check_model_stability(
    gamma,
    beta0,
    reg: Regularizer,
    zero_tol: float = ZERO_TOL,
    ri_tol: float = RI_TOL,
    injectivity_tol: float = INJECTIVITY_TOL,
) -> StabilityReport:
    """Decide stability of the active model of beta0 under gamma.

    stable requires restricted injectivity plus a strict-interior verdict.
    A boundary verdict sets inconclusive (the linearized test cannot decide
    either way there).
    """
    cert = linearized_precertificate(gamma, beta0, reg, zero_tol, ri_tol, injectivity_tol)
    if not cert.usable:
        return StabilityReport(stable=False, inconclusive=False, certificate=cert)
    status = cert.verdict.status
    return StabilityReport(
        stable=status == "interior",
        inconclusive=status == "boundary",
        certificate=cert,
    )


def dual_certificate_at_solution(
    theta,
    beta,
    reg: Regularizer,
    zero_tol: float = ZERO_TOL,
    ri_tol: float = RI_TOL,
) -> CertificateVerdict:
    """Classify eta = (u - Gamma beta)/mu at the model of beta itself."""
    if theta.mu <= 0:
        raise ValueError(f"dual certificate needs mu > 0, got {theta.mu}")
    beta = np.asarray(beta, dtype=float)
    eta = (theta.u - theta.gamma @ beta) / theta.mu
    geometry = reg.model(beta, zero_tol)
    return reg.ri_membership(geometry, eta, ri_tol)


@dataclass(frozen=True)
class UniquenessReport:
    unique: bool
    verdict: CertificateVerdict
    injectivity: InjectivityReport


def certify_uniqueness(
    theta,
    beta,
    reg: Regularizer,
    zero_tol: float = ZERO_TOL,
    ri_tol: float = RI_TOL,
    injectivity_tol: float = INJECTIVITY_TOL,
) -> UniquenessReport:
    """Check whether beta is the unique minimizer for theta.

    Sufficient condition: the dual certificate at beta is strictly interior
    and Gamma is injective on the tangent space at beta.
    """
    verdict = dual_certificate_at_solution(theta, beta, reg, zero_tol, ri_tol)
    geometry = reg.model(np.asarray(beta, dtype=float), zero_tol)
    injectivity = restricted_injectivity(theta.gamma, geometry.subspace, injectivity_tol)
    return UniquenessReport(
        unique=verdict.status == "interior" and injectivity.holds,
        verdict=verdict,
        injectivity=injectivity,
    )
