"""
Dense complex matrix primitives.

Hermitian spectral decompositions, functional calculus restricted to the
support of a positive semidefinite matrix, Schatten norms and the polar
decomposition. Every power of a matrix in the toolkit is taken through
``apply_on_support``; zero eigenvalues are mapped to zero for every exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .errors import DomainError, StructuralError
from .tolerances import Tolerances, resolve

ComplexMatrix = npt.NDArray[np.complex128]
Exponent = Union[Fraction, float]

EPS = float(np.finfo(float).eps)
TINY = float(np.finfo(float).tiny)


def as_matrix(A, *, square: bool = False, name: str = "matrix") -> ComplexMatrix:
    """Coerce ``A`` to a finite 2-D complex array."""
    arr = np.asarray(A, dtype=np.complex128)
    if arr.ndim != 2 or arr.size == 0:
        raise StructuralError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise StructuralError(f"{name} must be square, got shape {arr.shape}")
    return arr


def dagger(A: ComplexMatrix) -> ComplexMatrix:
    return A.conj().T


def hermitian_part(A: ComplexMatrix) -> ComplexMatrix:
    return 0.5 * (A + A.conj().T)


def frobenius(A: ComplexMatrix) -> float:
    return float(np.linalg.norm(A))


def is_hermitian(A: ComplexMatrix, tol: float) -> bool:
    return frobenius(A - dagger(A)) <= tol * max(frobenius(A), TINY)


def as_exponent(p) -> Exponent:
    """Parse a Schatten exponent; finite values are kept as exact fractions."""
    if isinstance(p, str):
        text = p.strip().lower()
        if text in {"inf", "infinity", "∞"}:
            return math.inf
        try:
            p = Fraction(text)
        except ValueError as exc:
            raise DomainError(f"cannot parse exponent {p!r}") from exc
    if isinstance(p, float) and math.isinf(p):
        if p < 0:
            raise DomainError("exponent must be >= 1")
        return math.inf
    try:
        value = Fraction(p)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"cannot parse exponent {p!r}") from exc
    if value < 1:
        raise DomainError(f"exponent must be >= 1, got {float(value)}")
    return value


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in descending order with orthonormal eigenvector columns."""

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: ComplexMatrix

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    def reconstruct(self) -> ComplexMatrix:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ dagger(V)

    def reconstruction_error(self, A: ComplexMatrix) -> float:
        return frobenius(self.reconstruct() - A)

    def orthonormality_error(self) -> float:
        V = self.eigenvectors
        return frobenius(dagger(V) @ V - np.eye(V.shape[1]))


@dataclass(frozen=True, eq=False)
class SupportProjection:
    projector: ComplexMatrix
    rank: int
    cutoff: float
    basis: ComplexMatrix
    complement: ComplexMatrix

    @property
    def dim(self) -> int:
        return int(self.projector.shape[0])

    @property
    def is_full(self) -> bool:
        return self.rank == self.dim


class PolarDecomposition(NamedTuple):
    isometry: ComplexMatrix
    modulus: ComplexMatrix


def _normalize_phases(vectors: ComplexMatrix) -> ComplexMatrix:
    # first significant entry of every column becomes real positive
    magnitudes = np.abs(vectors)
    if vectors.size == 0:
        return vectors
    threshold = 1e-8 * magnitudes.max(axis=0, keepdims=True)
    first = np.argmax(magnitudes > threshold, axis=0)
    pivots = vectors[first, np.arange(vectors.shape[1])]
    moduli = np.abs(pivots)
    phases = np.ones_like(pivots)
    nonzero = moduli > 0
    phases[nonzero] = pivots[nonzero] / moduli[nonzero]
    return vectors * np.conj(phases)


def hermitian_eig(A, tolerances: Optional[Tolerances] = None) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending."""
    tol = resolve(tolerances)
    A = as_matrix(A, square=True)
    if not is_hermitian(A, tol.herm):
        raise StructuralError("matrix is not Hermitian within tolerance")
    values, vectors = np.linalg.eigh(hermitian_part(A))
    values = values[::-1].copy()
    vectors = _normalize_phases(vectors[:, ::-1])
    return SpectralDecomposition(eigenvalues=values, eigenvectors=vectors)


def spectral_cutoff(eigenvalues: npt.NDArray[np.float64], rel_cutoff: Optional[float] = None) -> float:
    """Absolute cutoff ``rel_cutoff * lambda_max``; ``rel_cutoff`` defaults to ``dim * eps``."""
    if eigenvalues.size == 0:
        return 0.0
    rel = rel_cutoff if rel_cutoff is not None else eigenvalues.size * EPS
    return rel * max(float(np.max(eigenvalues)), 0.0)


def require_psd(decomp: SpectralDecomposition, tolerances: Optional[Tolerances] = None) -> None:
    tol = resolve(tolerances)
    values = decomp.eigenvalues
    scale = max(float(np.max(np.abs(values))), TINY)
    if values[-1] < -tol.psd * scale:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {values[-1]:.3e})")


def _support_mask(decomp: SpectralDecomposition, tol: Tolerances, cutoff: Optional[float]) -> npt.NDArray[np.bool_]:
    cut = cutoff if cutoff is not None else spectral_cutoff(decomp.eigenvalues, tol.rel_cutoff)
    return decomp.eigenvalues > cut


def apply_on_support(
    decomp: SpectralDecomposition,
    fn: Callable[[npt.NDArray[np.float64]], np.ndarray],
    tolerances: Optional[Tolerances] = None,
    cutoff: Optional[float] = None,
) -> ComplexMatrix:
    """``sum_k fn(lambda_k) P_k`` over eigenvalues above the cutoff."""
    tol = resolve(tolerances)
    require_psd(decomp, tol)
    mask = _support_mask(decomp, tol, cutoff)
    V = decomp.eigenvectors[:, mask]
    weights = np.asarray(fn(decomp.eigenvalues[mask]), dtype=np.complex128)
    return (V * weights) @ dagger(V)


def power_weights(z: complex) -> Callable[[npt.NDArray[np.float64]], np.ndarray]:
    z = complex(z)
    return lambda lam: np.exp(z * np.log(lam))


def matrix_power_on_support(
    A,
    z: complex,
    tolerances: Optional[Tolerances] = None,
    cutoff: Optional[float] = None,
) -> ComplexMatrix:
    """``A^z`` on ``supp(A)`` and 0 on its kernel, for positive semidefinite ``A``."""
    return apply_on_support(hermitian_eig(A, tolerances), power_weights(z), tolerances, cutoff)


def log_on_support(A, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    return apply_on_support(hermitian_eig(A, tolerances), np.log, tolerances)


def schatten_norm(A, p) -> float:
    """Schatten p-norm from singular values; ``p = inf`` is the operator norm."""
    exponent = as_exponent(p)
    A = as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    top = float(s[0])
    if top == 0.0:
        return 0.0
    if math.isinf(exponent):
        return top
    if exponent == 1:
        return float(np.sum(s))
    p_float = float(exponent)
    # scaled sum keeps large exponents from overflowing
    return top * float(np.sum((s / top) ** p_float)) ** (1.0 / p_float)


def trace_norm(A) -> float:
    return schatten_norm(A, 1)


def polar(A, tolerances: Optional[Tolerances] = None) -> PolarDecomposition:
    """``A = U |A|`` with ``U`` a partial isometry whose initial space is ``supp |A|``."""
    tol = resolve(tolerances)
    A = as_matrix(A, square=True)
    W, s, Vh = np.linalg.svd(A)
    cut = spectral_cutoff(s, tol.rel_cutoff)
    keep = s > cut
    Wk, sk, Vk = W[:, keep], s[keep], Vh[keep, :]
    return PolarDecomposition(isometry=Wk @ Vk, modulus=(dagger(Vk) * sk) @ Vk)


def support_projection(
    A,
    rel_cutoff: Optional[float] = None,
    cutoff: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
) -> SupportProjection:
    """Projector onto eigenvectors of ``A`` whose eigenvalue exceeds the cutoff."""
    tol = resolve(tolerances)
    decomp = hermitian_eig(A, tol)
    require_psd(decomp, tol)
    cut = cutoff if cutoff is not None else spectral_cutoff(
        decomp.eigenvalues, rel_cutoff if rel_cutoff is not None else tol.rel_cutoff
    )
    mask = decomp.eigenvalues > cut
    basis = decomp.eigenvectors[:, mask]
    return SupportProjection(
        projector=basis @ dagger(basis),
        rank=int(mask.sum()),
        cutoff=cut,
        basis=basis,
        complement=decomp.eigenvectors[:, ~mask],
    )


def direct_sum(*blocks: ComplexMatrix) -> ComplexMatrix:
    return scipy.linalg.block_diag(*blocks).astype(np.complex128)


def unitary_residual(U: ComplexMatrix) -> float:
    return frobenius(dagger(U) @ U - np.eye(U.shape[1]))


def null_space(A: ComplexMatrix, atol: float) -> ComplexMatrix:
    """Orthonormal columns spanning right singular vectors with singular value <= ``atol``."""
    _, s, Vh = scipy.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > atol))
    return Vh[rank:].conj().T
