"""
Quantum relative entropies in nats.

Support violations are not errors: the affected divergences take the value
+inf and carry ``support_violation=True`` so sweeps can aggregate them.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import DomainError, StructuralError
from .linalg_core import hermitian_part, log_on_support, matrix_power_on_support
from .quantum_objects import DensityMatrix, QuantumChannel, support_contained
from .schemas import ExtendedReal, OptionalExtendedReal
from .sigma_lp import SigmaLpContext, weighted_norm
from .tolerances import Tolerances, resolve

logger = logging.getLogger(__name__)

DivergenceKind = Literal["umegaki", "renyi_standard", "renyi_sandwiched", "dmax"]
DIVERGENCE_KINDS = ("umegaki", "renyi_standard", "renyi_sandwiched", "dmax")
NATS_PER_BIT = math.log(2.0)


class DivergenceResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: ExtendedReal
    finite: bool
    support_violation: bool = False
    kind: DivergenceKind
    alpha: Optional[float] = None
    unit: Literal["nats", "bits"] = "nats"

    @model_validator(mode="after")
    def _finite_matches_value(self):
        if self.finite == math.isinf(self.value):
            raise ValueError("finite must be false exactly when value is +inf")
        return self

    def in_bits(self) -> "DivergenceResult":
        if self.unit == "bits":
            return self
        return self.model_copy(update={"value": to_bits(self.value), "unit": "bits"})


def to_bits(value: float) -> float:
    return value / NATS_PER_BIT


def _result(value: float, kind: str, alpha: Optional[float] = None, support_violation: bool = False):
    return DivergenceResult(
        value=value, finite=not math.isinf(value), support_violation=support_violation, kind=kind, alpha=alpha
    )


def _infinite(kind: str, alpha: Optional[float] = None, support_violation: bool = True) -> DivergenceResult:
    return _result(math.inf, kind, alpha, support_violation)


def check_alpha(alpha, tolerances: Optional[Tolerances] = None) -> float:
    tol = resolve(tolerances)
    try:
        value = float(Fraction(alpha)) if isinstance(alpha, str) else float(alpha)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"cannot parse alpha {alpha!r}") from exc
    if not value > 0 or math.isnan(value):
        raise DomainError(f"alpha must be positive, got {value}")
    if abs(value - 1.0) < tol.alpha_guard:
        raise DomainError(f"alpha = {value} lies inside the excluded band around 1; use the Umegaki entropy")
    return value


def _check_pair(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.dim != sigma.dim:
        raise StructuralError(f"states of dimension {rho.dim} and {sigma.dim}")


def umegaki(rho: DensityMatrix, sigma: DensityMatrix, tolerances: Optional[Tolerances] = None) -> DivergenceResult:
    """``Tr rho (log rho - log sigma)``."""
    tol = resolve(tolerances)
    _check_pair(rho, sigma)
    if not support_contained(rho, sigma, tol.support):
        return _infinite("umegaki")
    values = rho.spectrum.eigenvalues
    values = values[values > 0]
    entropy_term = float(np.sum(values * np.log(values)))
    cross_term = float(np.trace(rho.matrix @ log_on_support(sigma.matrix, tol)).real)
    return _result(entropy_term - cross_term, "umegaki")


def _trace_of_power(M, alpha: float) -> float:
    values = np.clip(np.linalg.eigvalsh(hermitian_part(M)), 0.0, None)
    return float(np.sum(values[values > 0] ** alpha))


def _from_trace(trace: float, alpha: float) -> float:
    if trace <= 0.0:
        # log 0 with a negative prefactor
        return math.inf
    return math.log(trace) / (alpha - 1.0)


def renyi_standard(
    rho: DensityMatrix, sigma: DensityMatrix, alpha, tolerances: Optional[Tolerances] = None
) -> DivergenceResult:
    """``log(Tr rho^alpha sigma^(1-alpha)) / (alpha - 1)``."""
    tol = resolve(tolerances)
    a = check_alpha(alpha, tol)
    _check_pair(rho, sigma)
    contained = support_contained(rho, sigma, tol.support)
    if a > 1 and not contained:
        return _infinite("renyi_standard", a)
    rho_power = matrix_power_on_support(rho.matrix, a, tol)
    sigma_power = matrix_power_on_support(sigma.matrix, 1.0 - a, tol)
    trace = float(np.trace(rho_power @ sigma_power).real)
    return _result(_from_trace(trace, a), "renyi_standard", a, support_violation=not contained)


def renyi_sandwiched_trace(
    rho: DensityMatrix, sigma: DensityMatrix, alpha, tolerances: Optional[Tolerances] = None
) -> DivergenceResult:
    """``log Tr (sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a / (a - 1)`` for every admissible ``a``."""
    tol = resolve(tolerances)
    a = check_alpha(alpha, tol)
    _check_pair(rho, sigma)
    if not support_contained(rho, sigma, tol.support):
        return _infinite("renyi_sandwiched", a)
    weight = matrix_power_on_support(sigma.matrix, (1.0 - a) / (2.0 * a), tol)
    trace = _trace_of_power(weight @ rho.matrix @ weight, a)
    return _result(_from_trace(trace, a), "renyi_sandwiched", a)


def renyi_sandwiched(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    alpha,
    tolerances: Optional[Tolerances] = None,
    context: Optional[SigmaLpContext] = None,
) -> DivergenceResult:
    """``(a / (a - 1)) log ||rho||_{a,sigma}`` for ``a > 1``; the trace formula below 1."""
    tol = resolve(tolerances)
    a = check_alpha(alpha, tol)
    _check_pair(rho, sigma)
    if a < 1:
        return renyi_sandwiched_trace(rho, sigma, a, tol)
    if not support_contained(rho, sigma, tol.support):
        return _infinite("renyi_sandwiched", a)
    ctx = context or SigmaLpContext(sigma, tol)
    norm = weighted_norm(rho.matrix, Fraction(a), ctx)
    return _result(a / (a - 1.0) * math.log(norm), "renyi_sandwiched", a)


def dmax(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    tolerances: Optional[Tolerances] = None,
    context: Optional[SigmaLpContext] = None,
) -> DivergenceResult:
    """``log inf{lambda : rho <= lambda sigma}``."""
    tol = resolve(tolerances)
    _check_pair(rho, sigma)
    if not support_contained(rho, sigma, tol.support):
        return _infinite("dmax")
    ctx = context or SigmaLpContext(sigma, tol)
    return _result(math.log(weighted_norm(rho.matrix, math.inf, ctx)), "dmax")


def divergence(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    kind: str,
    alpha=None,
    tolerances: Optional[Tolerances] = None,
) -> DivergenceResult:
    if kind == "umegaki":
        return umegaki(rho, sigma, tolerances)
    if kind == "dmax":
        return dmax(rho, sigma, tolerances)
    if kind not in DIVERGENCE_KINDS:
        raise DomainError(f"unknown divergence kind {kind!r}; expected one of {', '.join(DIVERGENCE_KINDS)}")
    if alpha is None:
        raise DomainError(f"{kind} needs an alpha")
    if kind == "renyi_standard":
        return renyi_standard(rho, sigma, alpha, tolerances)
    return renyi_sandwiched(rho, sigma, alpha, tolerances)


def classical_renyi(p, q, alpha) -> float:
    """Renyi divergence ``log(sum p^a q^(1-a)) / (a - 1)`` of two probability vectors."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise StructuralError("distributions of different length")
    a = float(alpha)
    overlap = (p > 0) & (q > 0)
    if a > 1 and np.any((p > 0) & (q <= 0)):
        return math.inf
    trace = float(np.sum(p[overlap] ** a * q[overlap] ** (1.0 - a)))
    return _from_trace(trace, a)


class DpiGap(BaseModel):
    """``D(rho||sigma) - D(Phi(rho)||Phi(sigma))``; undefined when both sides are infinite."""

    model_config = ConfigDict(frozen=True)

    kind: DivergenceKind
    alpha: Optional[float] = None
    lhs: ExtendedReal
    rhs: ExtendedReal
    gap: OptionalExtendedReal = None
    undefined: bool = False


def dpi_gap(
    channel: QuantumChannel,
    rho: DensityMatrix,
    sigma: DensityMatrix,
    alpha=None,
    kind: str = "renyi_sandwiched",
    tolerances: Optional[Tolerances] = None,
) -> DpiGap:
    tol = resolve(tolerances)
    if channel.dim_in != rho.dim:
        raise StructuralError(f"channel input dimension {channel.dim_in} does not match state dimension {rho.dim}")
    before = divergence(rho, sigma, kind, alpha, tol)
    after = divergence(channel.apply_state(rho), channel.apply_state(sigma), kind, alpha, tol)
    if math.isinf(before.value) and math.isinf(after.value):
        return DpiGap(kind=kind, alpha=before.alpha, lhs=before.value, rhs=after.value, undefined=True)
    return DpiGap(kind=kind, alpha=before.alpha, lhs=before.value, rhs=after.value, gap=before.value - after.value)
