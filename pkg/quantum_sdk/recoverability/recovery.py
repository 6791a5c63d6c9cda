"""
Petz recovery map and the sufficiency tests built on it.

The recovery map of ``(Phi, sigma)`` is

    Phi_sigma(X) = sigma^(1/2) Phi^*(Phi(sigma)^(-1/2) X Phi(sigma)^(-1/2)) sigma^(1/2)

with inverses taken on ``supp Phi(sigma)``. On the orthogonal complement of that
support it is completed by ``X -> Tr[Q X] sigma`` so that the result is a channel
on all of ``B(K)``; the completion does not change its action on ``L_{Phi(sigma)}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .divergences import check_alpha, dpi_gap, renyi_sandwiched
from .errors import DomainError, PreconditionError, StructuralError, SupportError
from .linalg_core import (
    ComplexMatrix,
    apply_on_support,
    as_matrix,
    dagger,
    frobenius,
    hermitian_eig,
    hermitian_part,
    power_weights,
    trace_norm,
)
from .quantum_objects import DensityMatrix, QuantumChannel, support_contained
from .schemas import ExtendedReal, OptionalExtendedReal
from .sigma_lp import InterpolationFunction, SigmaLpContext, weighted_inner, weighted_norm
from .tolerances import Tolerances, resolve

logger = logging.getLogger(__name__)


def _require_support(rho: DensityMatrix, sigma: DensityMatrix, tol: Tolerances) -> None:
    if rho.dim != sigma.dim:
        raise StructuralError(f"states of dimension {rho.dim} and {sigma.dim}")
    if not support_contained(rho, sigma, tol.support):
        raise SupportError("supp(rho) is not contained in supp(sigma)")


def _require_channel_input(channel: QuantumChannel, sigma: DensityMatrix) -> None:
    if channel.dim_in != sigma.dim:
        raise StructuralError(f"channel input dimension {channel.dim_in} does not match state dimension {sigma.dim}")


def petz_map(channel: QuantumChannel, sigma: DensityMatrix, tolerances: Optional[Tolerances] = None) -> QuantumChannel:
    """Kraus operators ``sigma^(1/2) K_i^* Phi(sigma)^(-1/2)`` plus the completion on ``ker Phi(sigma)``."""
    tol = resolve(tolerances)
    _require_channel_input(channel, sigma)
    image = DensityMatrix(channel.apply(sigma.matrix), tol)
    inverse_root = apply_on_support(image.spectrum, power_weights(-0.5), tol)
    root = apply_on_support(sigma.spectrum, power_weights(0.5), tol)
    ops: List[ComplexMatrix] = [root @ dagger(K) @ inverse_root for K in channel.kraus_ops]
    complement = image.support.complement
    if complement.shape[1]:
        spectrum = sigma.spectrum
        for value, vec in zip(spectrum.eigenvalues, spectrum.eigenvectors.T):
            if value <= 0:
                continue
            for k in range(complement.shape[1]):
                ops.append(np.sqrt(value) * np.outer(vec, complement[:, k].conj()))
        logger.debug("petz map completed on a %d-dimensional kernel", complement.shape[1])
    petz = QuantumChannel(tuple(ops), tol, validate=False).reduced()
    return QuantumChannel(petz.kraus_ops, tol)


def petz_formula(channel: QuantumChannel, sigma: DensityMatrix, X, tolerances: Optional[Tolerances] = None):
    """Direct evaluation of the recovery formula, without a Kraus set."""
    tol = resolve(tolerances)
    image = channel.apply(sigma.matrix)
    inverse_root = apply_on_support(hermitian_eig(image, tol), power_weights(-0.5), tol)
    root = apply_on_support(sigma.spectrum, power_weights(0.5), tol)
    return root @ channel.adjoint_apply(inverse_root @ as_matrix(X) @ inverse_root) @ root


def adjoint_pairing_check(
    channel: QuantumChannel,
    sigma: DensityMatrix,
    X,
    Y,
    tolerances: Optional[Tolerances] = None,
    petz: Optional[QuantumChannel] = None,
) -> float:
    """``|<Phi_sigma(X), Y>_sigma - <X, Phi(Y)>_{Phi(sigma)}|`` for ``X`` in ``L_{Phi(sigma)}``, ``Y`` in ``L_sigma``."""
    tol = resolve(tolerances)
    petz = petz or petz_map(channel, sigma, tol)
    source = SigmaLpContext(sigma, tol)
    target = SigmaLpContext.from_matrix(channel.apply(sigma.matrix), tol)
    X = target.check(X, "X")
    Y = source.check(Y, "Y")
    lhs = weighted_inner(petz.apply(X), Y, source)
    rhs = weighted_inner(X, channel.apply(Y), target)
    return abs(lhs - rhs)


class SufficiencyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    dpi_lhs: ExtendedReal
    dpi_rhs: ExtendedReal
    gap: OptionalExtendedReal = None
    recovery_error: float
    sufficient: bool
    equality: Optional[bool] = None
    tau_norm_residual: Optional[float] = None
    tau_recovery_error: Optional[float] = None
    tau_norm_preserved: Optional[bool] = None
    tolerances: Tolerances

    @model_validator(mode="after")
    def _sufficient_matches_error(self):
        if self.sufficient != (self.recovery_error <= self.tolerances.suff):
            raise ValueError("sufficient must equal recovery_error <= tolerances.suff")
        return self


def recovery_error(
    channel: QuantumChannel, rho: DensityMatrix, petz: QuantumChannel
) -> float:
    """``|| Phi_sigma(Phi(rho)) - rho ||_1``."""
    return trace_norm(petz.apply(channel.apply(rho.matrix)) - rho.matrix)


def is_sufficient(
    channel: QuantumChannel,
    rho: DensityMatrix,
    sigma: DensityMatrix,
    tol: Optional[float] = None,
    alpha=2,
    tolerances: Optional[Tolerances] = None,
    petz: Optional[QuantumChannel] = None,
) -> SufficiencyReport:
    tolerances = resolve(tolerances)
    if tol is not None:
        tolerances = tolerances.model_copy(update={"suff": tol})
    _require_channel_input(channel, sigma)
    _require_support(rho, sigma, tolerances)
    petz = petz or petz_map(channel, sigma, tolerances)
    error = recovery_error(channel, rho, petz)
    gap = dpi_gap(channel, rho, sigma, alpha, "renyi_sandwiched", tolerances)
    return SufficiencyReport(
        alpha=gap.alpha,
        dpi_lhs=gap.lhs,
        dpi_rhs=gap.rhs,
        gap=gap.gap,
        recovery_error=error,
        sufficient=error <= tolerances.suff,
        equality=None if gap.gap is None else abs(gap.gap) <= tolerances.gap,
        tolerances=tolerances,
    )


def _require_alpha_above_one(alpha, tol: Tolerances) -> float:
    a = check_alpha(alpha, tol)
    if a <= 1:
        raise DomainError(f"alpha must exceed 1, got {a}")
    return a


def tau_state(rho: DensityMatrix, sigma: DensityMatrix, alpha, tolerances: Optional[Tolerances] = None) -> DensityMatrix:
    """Normalized ``sigma^(1/4) X^(p/2) sigma^(1/4)`` with ``X = sigma^(-1/2q) rho sigma^(-1/2q)`` and ``p = alpha``."""
    tol = resolve(tolerances)
    p = _require_alpha_above_one(alpha, tol)
    _require_support(rho, sigma, tol)
    ctx = SigmaLpContext(sigma, tol)
    X = ctx.conjugated(rho.matrix, Fraction(p))
    middle = apply_on_support(hermitian_eig(hermitian_part(X), tol), power_weights(p / 2.0), tol)
    quarter = ctx.weights(0.25)
    tau = ctx.embed(quarter[:, None] * middle * quarter[None, :])
    tau = hermitian_part(tau)
    return DensityMatrix(tau / np.trace(tau).real, tol)


@dataclass(frozen=True)
class IsometryReport:
    applicable: bool
    p: float
    norm_before: float
    norm_after: float
    residuals: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((r for _, r in self.residuals), default=0.0)


def isometry_along_interpolation(
    channel: QuantumChannel,
    Y,
    p,
    sigma: DensityMatrix,
    theta_grid: Sequence[float] = (0.25, 0.5, 0.75),
    tolerances: Optional[Tolerances] = None,
) -> IsometryReport:
    """Norm preservation of ``Phi`` along the interpolation family of ``Y`` when it holds at ``Y``."""
    tol = resolve(tolerances)
    _require_channel_input(channel, sigma)
    source = SigmaLpContext(sigma, tol)
    target = SigmaLpContext.from_matrix(channel.apply(sigma.matrix), tol)
    f = InterpolationFunction.build(Y, p, source)
    before = f.norm_Y
    after = weighted_norm(channel.apply(f.Y), f.p, target)
    if abs(after - before) > tol.isometry * max(1.0, before):
        logger.info("interpolation isometry not applicable: %.6g -> %.6g", before, after)
        return IsometryReport(applicable=False, p=float(f.p), norm_before=before, norm_after=after)
    residuals = []
    for theta in theta_grid:
        exponent = 1 / Fraction(float(theta))
        value = f(float(theta))
        residual = abs(weighted_norm(channel.apply(value), exponent, target) - weighted_norm(value, exponent, source))
        residuals.append((float(theta), residual))
    return IsometryReport(applicable=True, p=float(f.p), norm_before=before, norm_after=after, residuals=residuals)


def main_theorem_experiment(
    channel: QuantumChannel,
    rho: DensityMatrix,
    sigma: DensityMatrix,
    alpha,
    tolerances: Optional[Tolerances] = None,
    tau_path: bool = True,
    petz: Optional[QuantumChannel] = None,
) -> SufficiencyReport:
    """DPI sides, gap and recovery error; on equality also the midpoint-state path of the converse."""
    tol = resolve(tolerances)
    a = _require_alpha_above_one(alpha, tol)
    petz = petz or petz_map(channel, sigma, tol)
    report = is_sufficient(channel, rho, sigma, alpha=a, tolerances=tol, petz=petz)
    if not (tau_path and report.equality):
        return report
    tau = tau_state(rho, sigma, a, tol)
    source = SigmaLpContext(sigma, tol)
    target = SigmaLpContext.from_matrix(channel.apply(sigma.matrix), tol)
    norm_before = weighted_norm(tau.matrix, 2, source)
    norm_after = weighted_norm(channel.apply(tau.matrix), 2, target)
    residual = abs(norm_after - norm_before)
    return report.model_copy(
        update={
            "tau_norm_residual": residual,
            "tau_recovery_error": recovery_error(channel, tau, petz),
            "tau_norm_preserved": residual <= tol.isometry * max(1.0, norm_before),
        }
    )


@dataclass(frozen=True)
class L2EqualityReport:
    divergence_gap: float
    recovery_error: float
    gap_tolerance: float
    recovery_tolerance: float

    @property
    def equality(self) -> bool:
        return self.divergence_gap <= self.gap_tolerance

    @property
    def recovered(self) -> bool:
        return self.recovery_error <= self.recovery_tolerance

    @property
    def consistent(self) -> bool:
        return self.equality == self.recovered


def l2_equality_check(
    channel: QuantumChannel,
    rho: DensityMatrix,
    sigma: DensityMatrix,
    tolerances: Optional[Tolerances] = None,
    petz: Optional[QuantumChannel] = None,
) -> L2EqualityReport:
    """Equality of the order-2 sandwiched divergence under ``Phi`` against exact Petz recovery."""
    tol = resolve(tolerances)
    _require_channel_input(channel, sigma)
    _require_support(rho, sigma, tol)
    petz = petz or petz_map(channel, sigma, tol)
    before = renyi_sandwiched(rho, sigma, 2, tol)
    after = renyi_sandwiched(channel.apply_state(rho), channel.apply_state(sigma), 2, tol)
    return L2EqualityReport(
        divergence_gap=abs(before.value - after.value),
        recovery_error=recovery_error(channel, rho, petz),
        gap_tolerance=tol.gap,
        recovery_tolerance=tol.l2_recovery,
    )


UnitalMap = Callable[[ComplexMatrix], ComplexMatrix]


@dataclass(frozen=True)
class SchwarzReport:
    min_eigenvalues: List[float]
    tolerance: float

    @property
    def minimum(self) -> float:
        return min(self.min_eigenvalues, default=0.0)

    @property
    def holds(self) -> bool:
        return self.minimum >= -self.tolerance


def schwarz_check(
    psi: UnitalMap,
    samples: Sequence,
    dim: Optional[int] = None,
    tolerance: float = 1e-9,
    tolerances: Optional[Tolerances] = None,
) -> SchwarzReport:
    """Smallest eigenvalue of ``Psi(X^*X) - Psi(X^*)Psi(X)`` for each sample ``X``."""
    tol = resolve(tolerances)
    matrices = [as_matrix(X, square=True, name="sample") for X in samples]
    if dim is None:
        if not matrices:
            raise StructuralError("schwarz_check needs a dimension or at least one sample")
        dim = matrices[0].shape[0]
    image = psi(np.eye(dim, dtype=np.complex128))
    unital_residual = frobenius(image - np.eye(image.shape[0]))
    if unital_residual > tol.num * math.sqrt(dim):
        raise PreconditionError(f"map is not unital (residual {unital_residual:.3e})")
    minima = []
    for X in matrices:
        defect = psi(dagger(X) @ X) - psi(dagger(X)) @ psi(X)
        minima.append(float(np.linalg.eigvalsh(hermitian_part(defect))[0]))
    return SchwarzReport(min_eigenvalues=minima, tolerance=tolerance)


def random_operators(dim: int, count: int, seed) -> List[ComplexMatrix]:
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(count)]
