"""
sigma-weighted L_p spaces on the support of a reference state.

Operators are compressed to ``supp(sigma)`` before any computation; in the
compressed frame sigma is diagonal, so its complex powers are diagonal
scalings. ``SigmaLpContext.embed`` maps results back to the full space.
"""

from __future__ import annotations

import logging
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from .errors import DegenerateInputError, DomainError, StructuralError, SupportError
from .linalg_core import (
    TINY,
    ComplexMatrix,
    Exponent,
    SpectralDecomposition,
    apply_on_support,
    as_exponent,
    as_matrix,
    dagger,
    frobenius,
    hermitian_eig,
    hermitian_part,
    polar,
    power_weights,
    schatten_norm,
)
from .quantum_objects import DensityMatrix
from .tolerances import Tolerances, resolve

logger = logging.getLogger(__name__)

DEFAULT_T_GRID: Tuple[float, ...] = tuple(np.linspace(-5.0, 5.0, 41))


def holder_conjugate(p) -> Exponent:
    """``q`` with ``1/p + 1/q = 1``; exact for rational ``p``."""
    exponent = as_exponent(p)
    if math.isinf(exponent):
        return Fraction(1)
    if exponent == 1:
        return math.inf
    return exponent / (exponent - 1)


def _scale(weights: np.ndarray, X: ComplexMatrix) -> ComplexMatrix:
    # diag(w) X diag(w)
    return weights[:, None] * X * weights[None, :]


class SigmaLpContext:
    """Reference state with its support and a write-once cache of powers."""

    def __init__(self, sigma: DensityMatrix, tolerances: Optional[Tolerances] = None):
        self.sigma = sigma
        self.tolerances = tolerances if tolerances is not None else sigma.tolerances
        self.support = sigma.support
        basis = self.support.basis
        self._basis = basis
        self._eigenvalues = np.real(np.einsum("ia,ij,ja->a", basis.conj(), sigma.matrix, basis))
        self._power_cache: Dict[complex, ComplexMatrix] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_matrix(cls, matrix, tolerances: Optional[Tolerances] = None) -> "SigmaLpContext":
        tol = resolve(tolerances)
        return cls(DensityMatrix(matrix, tol), tol)

    @property
    def dim(self) -> int:
        return self.sigma.dim

    @property
    def rank(self) -> int:
        return self.support.rank

    def weights(self, z) -> npt.NDArray[np.complex128]:
        """Diagonal of ``sigma^z`` in the compressed frame."""
        return np.exp(complex(z) * np.log(self._eigenvalues))

    def power(self, z) -> ComplexMatrix:
        key = complex(z)
        cached = self._power_cache.get(key)
        if cached is not None:
            return cached
        with self._lock:
            if key not in self._power_cache:
                value = self.embed(np.diag(self.weights(key)))
                value.setflags(write=False)
                self._power_cache[key] = value
            return self._power_cache[key]

    def leakage(self, Y) -> float:
        Y = as_matrix(Y, square=True)
        P = self.support.projector
        return frobenius(Y - P @ Y @ P)

    def contains(self, Y) -> bool:
        Y = as_matrix(Y, square=True)
        if Y.shape[0] != self.dim:
            return False
        return self.leakage(Y) <= self.tolerances.support * max(frobenius(Y), TINY)

    def check(self, Y, name: str = "operator") -> ComplexMatrix:
        Y = as_matrix(Y, square=True, name=name)
        if Y.shape[0] != self.dim:
            raise StructuralError(f"{name} has dimension {Y.shape[0]}, reference state has {self.dim}")
        if not self.contains(Y):
            raise SupportError(f"{name} leaves supp(sigma) (leakage {self.leakage(Y):.3e})")
        return Y

    def compress(self, Y, name: str = "operator") -> ComplexMatrix:
        Y = self.check(Y, name)
        return dagger(self._basis) @ Y @ self._basis

    def embed(self, Z: ComplexMatrix) -> ComplexMatrix:
        return self._basis @ Z @ dagger(self._basis)

    def conjugated(self, Y, p) -> ComplexMatrix:
        """Compressed ``sigma^(-1/2q) Y sigma^(-1/2q)``."""
        q = holder_conjugate(p)
        exponent = 0.0 if math.isinf(q) else -0.5 / float(q)
        return _scale(self.weights(exponent), self.compress(Y))


def weighted_norm(Y, p, ctx: SigmaLpContext) -> float:
    """``|| sigma^((1-p)/2p) Y sigma^((1-p)/2p) ||_p``; the trace norm at ``p = 1``."""
    exponent = as_exponent(p)
    if exponent == 1:
        return schatten_norm(ctx.check(Y), 1)
    return schatten_norm(ctx.conjugated(Y, exponent), exponent)


def weighted_inner(Z, Y, ctx: SigmaLpContext) -> complex:
    """``Tr Z sigma^(-1/2) Y sigma^(-1/2)``."""
    Zc = ctx.compress(Z, "Z")
    Yc = _scale(ctx.weights(-0.5), ctx.compress(Y, "Y"))
    return complex(np.sum(Zc.T * Yc))


def _require_interior_exponent(p) -> Fraction:
    exponent = as_exponent(p)
    if math.isinf(exponent) or exponent == 1:
        raise DomainError(f"exponent must lie strictly between 1 and infinity, got {exponent}")
    return exponent


def _psd_power(modulus: ComplexMatrix, z, tol: Tolerances) -> ComplexMatrix:
    return apply_on_support(hermitian_eig(hermitian_part(modulus), tol), power_weights(z), tol)


def dual_witness(Y, p, ctx: SigmaLpContext) -> ComplexMatrix:
    """Norming functional: ``||Z||_{q,sigma} = 1`` and ``<Z, Y>_sigma = ||Y||_{p,sigma}``."""
    exponent = _require_interior_exponent(p)
    tol = ctx.tolerances
    norm = weighted_norm(Y, exponent, ctx)
    if norm < tol.degenerate_norm:
        raise DegenerateInputError(f"weighted norm {norm:.3e} is too small for a dual witness")
    X = ctx.conjugated(Y, exponent)
    U, modulus = polar(X, tol)
    p_float = float(exponent)
    W = _psd_power(modulus, p_float - 1.0, tol) @ dagger(U) / norm ** (p_float - 1.0)
    return ctx.embed(_scale(ctx.weights(0.5 / p_float), W))


class StripFunction(ABC):
    """Operator-valued function on ``0 <= Re z <= 1`` with values in ``L_sigma``."""

    ctx: SigmaLpContext

    @abstractmethod
    def evaluate(self, z: complex) -> ComplexMatrix:
        ...

    def __call__(self, z: complex) -> ComplexMatrix:
        return self.evaluate(z)

    def scaled(self, coefficient: complex = 1.0, rate: complex = 0.0) -> "LinearStripFunction":
        """``coefficient * exp(rate * z) * h(z)``."""
        return LinearStripFunction((StripTerm(self, coefficient, rate),))

    def __add__(self, other: "StripFunction") -> "LinearStripFunction":
        return LinearStripFunction(_terms(self) + _terms(other))


def _check_strip(z: complex, slack: float = 1e-12) -> complex:
    z = complex(z)
    if not -slack <= z.real <= 1.0 + slack:
        raise DomainError(f"z = {z} lies outside the strip 0 <= Re z <= 1")
    return z


@dataclass(frozen=True, eq=False)
class InterpolationFunction(StripFunction):
    """``z -> ||Y||^(1-zp) sigma^((1-z)/2) U |X|^(zp) sigma^((1-z)/2)`` with ``X = U|X|``."""

    Y: ComplexMatrix
    p: Fraction
    norm_Y: float
    X: ComplexMatrix
    U: ComplexMatrix
    absX: ComplexMatrix
    ctx: SigmaLpContext = field(repr=False)

    @classmethod
    def build(cls, Y, p, ctx: SigmaLpContext) -> "InterpolationFunction":
        exponent = _require_interior_exponent(p)
        Y = ctx.check(Y, "Y")
        norm = weighted_norm(Y, exponent, ctx)
        if norm < ctx.tolerances.degenerate_norm:
            raise DegenerateInputError("interpolation of a zero operator")
        X = ctx.conjugated(Y, exponent)
        U, modulus = polar(X, ctx.tolerances)
        return cls(Y=Y, p=exponent, norm_Y=norm, X=X, U=U, absX=hermitian_part(modulus), ctx=ctx)

    @cached_property
    def _modulus_spectrum(self) -> SpectralDecomposition:
        return hermitian_eig(self.absX, self.ctx.tolerances)

    def evaluate(self, z: complex) -> ComplexMatrix:
        z = _check_strip(z)
        p = float(self.p)
        modulus_power = apply_on_support(self._modulus_spectrum, power_weights(z * p), self.ctx.tolerances)
        core = _scale(self.ctx.weights((1.0 - z) / 2.0), self.U @ modulus_power)
        return np.exp((1.0 - z * p) * math.log(self.norm_Y)) * self.ctx.embed(core)

    def left_boundary_norm(self, t: float) -> float:
        return weighted_norm(self.evaluate(1j * t), math.inf, self.ctx)

    def right_boundary_norm(self, t: float) -> float:
        return weighted_norm(self.evaluate(1.0 + 1j * t), 1, self.ctx)


@dataclass(frozen=True, eq=False)
class ConstantStripFunction(StripFunction):
    Y: ComplexMatrix
    ctx: SigmaLpContext = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "Y", self.ctx.check(self.Y, "Y"))

    def evaluate(self, z: complex) -> ComplexMatrix:
        _check_strip(z)
        return self.Y


@dataclass(frozen=True)
class StripTerm:
    function: StripFunction
    coefficient: complex = 1.0
    rate: complex = 0.0

    def evaluate(self, z: complex) -> ComplexMatrix:
        return self.coefficient * np.exp(self.rate * z) * self.function.evaluate(z)


def _terms(h: StripFunction) -> Tuple[StripTerm, ...]:
    if isinstance(h, LinearStripFunction):
        return h.terms
    return (StripTerm(h),)


@dataclass(frozen=True, eq=False)
class LinearStripFunction(StripFunction):
    """Finite sum of exponentially weighted strip functions over one reference state."""

    terms: Tuple[StripTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise StructuralError("a linear strip function needs at least one term")
        contexts = {id(term.function.ctx) for term in self.terms}
        if len(contexts) != 1:
            raise StructuralError("all terms must share one reference state")

    @property
    def ctx(self) -> SigmaLpContext:
        return self.terms[0].function.ctx

    def evaluate(self, z: complex) -> ComplexMatrix:
        z = _check_strip(z)
        return sum(term.evaluate(z) for term in self.terms)

    def scaled(self, coefficient: complex = 1.0, rate: complex = 0.0) -> "LinearStripFunction":
        return LinearStripFunction(
            tuple(StripTerm(t.function, t.coefficient * coefficient, t.rate + rate) for t in self.terms)
        )


@dataclass(frozen=True)
class ThreeLinesPoint:
    theta: float
    value: float
    bound: float
    geometric_bound: float
    slack: float
    equality: bool


@dataclass(frozen=True)
class ThreeLinesReport:
    """Interior norms against boundary suprema over a finite ``t`` grid (an under-approximation in general)."""

    points: List[ThreeLinesPoint]
    left_supremum: float
    right_supremum: float
    t_grid: Tuple[float, ...]
    tolerance: float

    @property
    def bound(self) -> float:
        return max(self.left_supremum, self.right_supremum)

    @property
    def min_slack(self) -> float:
        return min(point.slack for point in self.points)

    @property
    def holds(self) -> bool:
        return self.min_slack >= -self.tolerance

    @property
    def equality_everywhere(self) -> bool:
        return all(point.equality for point in self.points)


def _interior_exponent(theta: float) -> Fraction:
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    return 1 / Fraction(theta)


def three_lines_check(
    h: StripFunction,
    theta_grid: Sequence[float],
    t_grid: Optional[Sequence[float]] = None,
    tolerance: float = 1e-9,
) -> ThreeLinesReport:
    ctx = h.ctx
    ts = tuple(float(t) for t in (t_grid if t_grid is not None else DEFAULT_T_GRID))
    left = max(weighted_norm(h(1j * t), math.inf, ctx) for t in ts)
    right = max(weighted_norm(h(1.0 + 1j * t), 1, ctx) for t in ts)
    bound = max(left, right)
    threshold = tolerance * max(1.0, bound)
    points = []
    for theta in theta_grid:
        theta = float(theta)
        value = weighted_norm(h(theta), _interior_exponent(theta), ctx)
        slack = bound - value
        points.append(
            ThreeLinesPoint(
                theta=theta,
                value=value,
                bound=bound,
                geometric_bound=left ** (1.0 - theta) * right**theta,
                slack=slack,
                equality=abs(slack) <= threshold,
            )
        )
    report = ThreeLinesReport(points=points, left_supremum=left, right_supremum=right, t_grid=ts, tolerance=threshold)
    logger.debug("three-lines check: bound %.6g, min slack %.3e", bound, report.min_slack)
    return report


def holomorphy_residual(h: StripFunction, z: complex, step: float = 1e-5) -> float:
    """Relative Cauchy-Riemann residual ``||d_x h + i d_y h|| / ||d_x h||`` from central differences."""
    z = complex(z)
    if not step < z.real < 1.0 - step:
        raise DomainError(f"z = {z} is not an interior point at step {step}")
    dx = (h(z + step) - h(z - step)) / (2.0 * step)
    dy = (h(z + 1j * step) - h(z - 1j * step)) / (2.0 * step)
    return frobenius(dx + 1j * dy) / max(frobenius(dx), TINY)
