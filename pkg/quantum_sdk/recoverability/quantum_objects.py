"""
Quantum states and channels.

Channels are stored as Kraus sets; the Choi matrix (input system first,
``J = sum_ij |i><j| (x) Phi(|i><j|)``) and the row-major superoperator are
computed on first access and cached. Random instances are drawn from numpy's
PCG64 generator (``numpy.random.default_rng``), so a seed fixes every draw.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, InitVar
from functools import cached_property
from typing import Iterable, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, StructuralError
from .linalg_core import (
    ComplexMatrix,
    SpectralDecomposition,
    SupportProjection,
    apply_on_support,
    power_weights,
    as_matrix,
    dagger,
    frobenius,
    hermitian_eig,
    hermitian_part,
    is_hermitian,
    require_psd,
    spectral_cutoff,
    support_projection,
)
from .tolerances import Tolerances, default_tolerances

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite unit-trace matrix; read-only after construction."""

    matrix: ComplexMatrix
    tolerances: Tolerances = field(default_factory=default_tolerances)

    def __post_init__(self):
        A = as_matrix(self.matrix, square=True, name="density matrix")
        tol = self.tolerances
        if not is_hermitian(A, tol.herm):
            raise StructuralError("density matrix is not Hermitian within tolerance")
        A = hermitian_part(A)
        try:
            require_psd(hermitian_eig(A, tol), tol)
        except DomainError as exc:
            raise StructuralError(f"invalid state: {exc}") from exc
        trace = float(np.trace(A).real)
        if abs(trace - 1.0) > tol.num:
            raise StructuralError(f"invalid state: trace is {trace!r}, expected 1")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @classmethod
    def from_vector(cls, psi, tolerances: Optional[Tolerances] = None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), tolerances or default_tolerances())

    @classmethod
    def maximally_mixed(cls, dim: int, tolerances: Optional[Tolerances] = None) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=np.complex128) / dim, tolerances or default_tolerances())

    @classmethod
    def from_diagonal(cls, weights, tolerances: Optional[Tolerances] = None) -> "DensityMatrix":
        return cls(np.diag(np.asarray(weights, dtype=np.complex128)), tolerances or default_tolerances())

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return hermitian_eig(self.matrix, self.tolerances)

    @cached_property
    def support(self) -> SupportProjection:
        return support_projection(self.matrix, tolerances=self.tolerances)

    @property
    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def power(self, z: complex) -> ComplexMatrix:
        return apply_on_support(self.spectrum, power_weights(z), self.tolerances)


def _kraus_tuple(kraus_ops: Iterable) -> Tuple[ComplexMatrix, ...]:
    ops = tuple(as_matrix(K, name="Kraus operator") for K in kraus_ops)
    if not ops:
        raise StructuralError("a channel needs at least one Kraus operator")
    shape = ops[0].shape
    if any(K.shape != shape for K in ops):
        raise StructuralError("Kraus operators must share one shape")
    return ops


@dataclass(frozen=True)
class ChannelValidation:
    tp_residual: float
    choi_min_eigenvalue: float
    trace_preserving: bool
    completely_positive: bool

    @property
    def is_cptp(self) -> bool:
        return self.trace_preserving and self.completely_positive


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Completely positive trace-preserving map ``X -> sum_i K_i X K_i^*``."""

    kraus_ops: Tuple[ComplexMatrix, ...]
    tolerances: Tolerances = field(default_factory=default_tolerances)
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool):
        ops = _kraus_tuple(self.kraus_ops)
        for K in ops:
            K.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)
        if validate:
            report = validate_channel(self)
            if not report.is_cptp:
                raise StructuralError(
                    "channel is not CPTP within tolerance "
                    f"(trace-preservation residual {report.tp_residual:.3e}, "
                    f"Choi min eigenvalue {report.choi_min_eigenvalue:.3e})"
                )

    @classmethod
    def from_kraus(cls, kraus_ops: Sequence, tolerances: Optional[Tolerances] = None) -> "QuantumChannel":
        return cls(tuple(kraus_ops), tolerances or default_tolerances())

    @classmethod
    def from_choi(
        cls, choi, dim_in: int, dim_out: int, tolerances: Optional[Tolerances] = None
    ) -> "QuantumChannel":
        tol = tolerances or default_tolerances()
        J = as_matrix(choi, square=True, name="Choi matrix")
        if J.shape[0] != dim_in * dim_out:
            raise StructuralError(f"Choi matrix of size {J.shape[0]} does not match {dim_in}x{dim_out}")
        return cls(_kraus_from_choi(J, dim_in, dim_out, tol), tol)

    @property
    def dim_in(self) -> int:
        return int(self.kraus_ops[0].shape[1])

    @property
    def dim_out(self) -> int:
        return int(self.kraus_ops[0].shape[0])

    @cached_property
    def _stack(self) -> np.ndarray:
        return np.stack(self.kraus_ops)

    @cached_property
    def choi(self) -> ComplexMatrix:
        vecs = np.stack([K.T.reshape(-1) for K in self.kraus_ops])
        J = vecs.T @ vecs.conj()
        J.setflags(write=False)
        return J

    @cached_property
    def superoperator(self) -> ComplexMatrix:
        """Matrix acting on row-major vectorizations: ``vec(Phi(X)) = S vec(X)``."""
        S = sum(np.kron(K, K.conj()) for K in self.kraus_ops)
        S.setflags(write=False)
        return S

    def apply(self, X) -> ComplexMatrix:
        X = as_matrix(X)
        if X.shape != (self.dim_in, self.dim_in):
            raise StructuralError(f"expected a {self.dim_in}x{self.dim_in} input, got {X.shape}")
        K = self._stack
        return np.einsum("kab,bc,kdc->ad", K, X, K.conj())

    def adjoint_apply(self, Y) -> ComplexMatrix:
        Y = as_matrix(Y)
        if Y.shape != (self.dim_out, self.dim_out):
            raise StructuralError(f"expected a {self.dim_out}x{self.dim_out} input, got {Y.shape}")
        K = self._stack
        return np.einsum("kba,bc,kcd->ad", K.conj(), Y, K)

    def apply_state(self, rho: DensityMatrix) -> DensityMatrix:
        return DensityMatrix(self.apply(rho.matrix), rho.tolerances)

    def reduced(self) -> "QuantumChannel":
        """Same channel with at most ``dim_in * dim_out`` Kraus operators."""
        if len(self.kraus_ops) <= self.dim_in * self.dim_out:
            return self
        return QuantumChannel(
            _kraus_from_choi(self.choi, self.dim_in, self.dim_out, self.tolerances), self.tolerances, validate=False
        )

    def choi_distance(self, other: "QuantumChannel") -> float:
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise StructuralError("channels act between different spaces")
        return frobenius(self.choi - other.choi)


def _kraus_from_choi(J: ComplexMatrix, dim_in: int, dim_out: int, tol: Tolerances) -> Tuple[ComplexMatrix, ...]:
    decomp = hermitian_eig(J, tol)
    try:
        require_psd(decomp, tol)
    except DomainError as exc:
        raise StructuralError(f"Choi matrix is not positive: {exc}") from exc
    cut = spectral_cutoff(decomp.eigenvalues, tol.rel_cutoff)
    ops = []
    for value, vec in zip(decomp.eigenvalues, decomp.eigenvectors.T):
        if value <= cut:
            break
        ops.append(np.sqrt(value) * vec.reshape(dim_in, dim_out).T)
    if not ops:
        raise StructuralError("Choi matrix is zero")
    return tuple(ops)


def validate_channel(channel: QuantumChannel) -> ChannelValidation:
    tol = channel.tolerances
    gram = sum(dagger(K) @ K for K in channel.kraus_ops)
    tp_residual = frobenius(gram - np.eye(channel.dim_in))
    values = np.linalg.eigvalsh(hermitian_part(channel.choi))
    choi_min = float(values[0])
    return ChannelValidation(
        tp_residual=tp_residual,
        choi_min_eigenvalue=choi_min,
        trace_preserving=tp_residual <= tol.num,
        completely_positive=choi_min >= -tol.num * max(1.0, float(values[-1])),
    )


def apply(channel: QuantumChannel, X) -> ComplexMatrix:
    return channel.apply(X)


def adjoint_apply(channel: QuantumChannel, X) -> ComplexMatrix:
    return channel.adjoint_apply(X)


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """``second o first``; Kraus set of all products, reduced through the Choi matrix if large."""
    if first.dim_out != second.dim_in:
        raise StructuralError(f"cannot compose: output {first.dim_out} does not feed input {second.dim_in}")
    products = [K2 @ K1 for K1 in first.kraus_ops for K2 in second.kraus_ops]
    composed = QuantumChannel(tuple(products), first.tolerances, validate=False).reduced()
    return QuantumChannel(composed.kraus_ops, first.tolerances)


def identity_channel(dim: int, tolerances: Optional[Tolerances] = None) -> QuantumChannel:
    return QuantumChannel((np.eye(dim, dtype=np.complex128),), tolerances or default_tolerances())


def unitary_channel(U, tolerances: Optional[Tolerances] = None) -> QuantumChannel:
    return QuantumChannel((as_matrix(U, square=True),), tolerances or default_tolerances())


def dephasing_channel(dim: int, tolerances: Optional[Tolerances] = None) -> QuantumChannel:
    ops = []
    for k in range(dim):
        P = np.zeros((dim, dim), dtype=np.complex128)
        P[k, k] = 1.0
        ops.append(P)
    return QuantumChannel(tuple(ops), tolerances or default_tolerances())


def partial_trace_channel(
    dim_left: int, dim_right: int, which: Literal["L", "R"] = "R", tolerances: Optional[Tolerances] = None
) -> QuantumChannel:
    """Trace out one factor of ``H_L (x) H_R``."""
    keep, drop = (dim_left, dim_right) if which == "R" else (dim_right, dim_left)
    identity = np.eye(keep, dtype=np.complex128)
    ops = []
    for j in range(drop):
        bra = np.zeros((1, drop), dtype=np.complex128)
        bra[0, j] = 1.0
        ops.append(np.kron(identity, bra) if which == "R" else np.kron(bra, identity))
    return QuantumChannel(tuple(ops), tolerances or default_tolerances())


def append_state_channel(
    omega: DensityMatrix, dim_left: int, tolerances: Optional[Tolerances] = None
) -> QuantumChannel:
    """``Y -> Y (x) omega``."""
    identity = np.eye(dim_left, dtype=np.complex128)
    spectrum = omega.spectrum
    ops = []
    for value, vec in zip(spectrum.eigenvalues, spectrum.eigenvectors.T):
        if value > 0:
            ops.append(np.sqrt(value) * np.kron(identity, vec.reshape(-1, 1)))
    return QuantumChannel(tuple(ops), tolerances or omega.tolerances)


def _complex_gaussian(rng: np.random.Generator, shape) -> ComplexMatrix:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_isometry(rows: int, cols: int, seed: SeedLike = None) -> ComplexMatrix:
    """Haar-distributed isometry from QR of a complex Gaussian matrix (phases fixed by ``diag R``)."""
    if rows < cols:
        raise StructuralError(f"no isometry from dimension {cols} into dimension {rows}")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(_complex_gaussian(rng, (rows, cols)))
    diagonal = np.diagonal(R)
    return Q * (diagonal / np.abs(diagonal))


def random_unitary(dim: int, seed: SeedLike = None) -> ComplexMatrix:
    return haar_isometry(dim, dim, seed)


def random_channel(
    dim_in: int, dim_out: int, env_dim: int, seed: SeedLike, tolerances: Optional[Tolerances] = None
) -> QuantumChannel:
    """Stinespring channel ``Tr_env[V X V^*]`` with a Haar isometry ``V: C^dim_in -> C^dim_out (x) C^env``."""
    if env_dim < 1:
        raise StructuralError("env_dim must be at least 1")
    if dim_out * env_dim < dim_in:
        raise StructuralError(f"no isometry from dimension {dim_in} into {dim_out}x{env_dim}")
    V = haar_isometry(dim_out * env_dim, dim_in, seed).reshape(dim_out, env_dim, dim_in)
    return QuantumChannel(tuple(V[:, e, :] for e in range(env_dim)), tolerances or default_tolerances())


def random_state(dim: int, rank: int, seed: SeedLike, tolerances: Optional[Tolerances] = None) -> DensityMatrix:
    """``G G^* / Tr(G G^*)`` for a complex Gaussian ``dim x rank`` matrix ``G``."""
    if not 1 <= rank <= dim:
        raise DomainError(f"rank must lie in [1, {dim}], got {rank}")
    rng = np.random.default_rng(seed)
    G = _complex_gaussian(rng, (dim, rank))
    rho = G @ dagger(G)
    return DensityMatrix(rho / np.trace(rho).real, tolerances or default_tolerances())


def support_contained(rho: DensityMatrix, sigma: DensityMatrix, tol: Optional[float] = None) -> bool:
    """``Tr[(I - P_sigma) rho] <= tol``."""
    if rho.dim != sigma.dim:
        raise StructuralError(f"states of dimension {rho.dim} and {sigma.dim}")
    threshold = sigma.tolerances.support if tol is None else tol
    leakage = float(np.trace(rho.matrix).real - np.trace(sigma.support.projector @ rho.matrix).real)
    return leakage <= threshold


def tensor(A, B) -> ComplexMatrix:
    return np.kron(as_matrix(A), as_matrix(B))


def partial_trace(X, dims: Tuple[int, int], which: Literal["L", "R"] = "R") -> ComplexMatrix:
    """Trace out the left (``"L"``) or right (``"R"``) factor of a bipartite operator."""
    dim_left, dim_right = dims
    X = as_matrix(X, square=True)
    if X.shape[0] != dim_left * dim_right:
        raise StructuralError(f"operator of size {X.shape[0]} is not {dim_left}x{dim_right}")
    blocks = X.reshape(dim_left, dim_right, dim_left, dim_right)
    if which == "R":
        return np.einsum("ajbj->ab", blocks)
    if which == "L":
        return np.einsum("iaib->ab", blocks)
    raise StructuralError(f"unknown factor {which!r}")
