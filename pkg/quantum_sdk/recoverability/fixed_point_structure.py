"""
Fixed points of ``Omega = Phi_sigma o Phi`` and the block factorization.

The fixed-point algebra of ``Omega^*`` is a finite-dimensional *-algebra, so
after a unitary change of basis it reads ``U^* (+)_n B(H_n^L) (x) I_{H_n^R} U``.
``decompose`` recovers ``U`` and the blocks from random elements of the algebra:

1. fixed points from the null space of ``Omega^* - id`` on row-major vectorizations;
2. the center, as the elements of the algebra commuting with two random ones;
3. minimal central projections from eigenvalue clusters of a random central element;
4. inside each block, the commutant ``I (x) B(H_R)``; eigen-clusters of a random
   Hermitian commutant element give ``d_R`` and ``d_L``, and a random commutant
   element transports the ``L`` basis between the clusters;
5. ``L`` and ``R`` bases rotated to diagonalize ``A_L`` and ``sigma_R``, phases fixed.

When ``sigma`` is not faithful everything runs on ``supp(sigma)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DecompositionError, PreconditionError, StructuralError
from .linalg_core import (
    ComplexMatrix,
    as_matrix,
    dagger,
    direct_sum,
    frobenius,
    hermitian_eig,
    hermitian_part,
    null_space,
    trace_norm,
    unitary_residual,
)
from .quantum_objects import (
    DensityMatrix,
    QuantumChannel,
    compose,
    partial_trace,
    random_channel,
    random_unitary,
    validate_channel,
)
from .recovery import petz_map
from .tolerances import Tolerances, default_tolerances, resolve

logger = logging.getLogger(__name__)

# eigenvalue clustering of random algebra elements
MERGE_GAP = 1e-10
SPLIT_GAP = 1e-8
# averaging changes below this are geometric; growth afterwards is rounding drift
DRIFT_ONSET = 1e-4


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Matrix of a linear map on ``B(C^dim)`` acting on row-major vectorizations."""

    matrix: ComplexMatrix
    dim: int

    def __post_init__(self):
        M = as_matrix(self.matrix, square=True, name="superoperator")
        if M.shape[0] != self.dim**2:
            raise StructuralError(f"superoperator of size {M.shape[0]} does not act on {self.dim}x{self.dim} matrices")
        object.__setattr__(self, "matrix", M)

    @classmethod
    def from_channel(cls, channel: QuantumChannel, adjoint: bool = False) -> "SuperOperator":
        if channel.dim_in != channel.dim_out:
            raise StructuralError("superoperators are formed for channels on one space")
        S = np.array(channel.superoperator)
        return cls(S.conj().T if adjoint else S, channel.dim_in)

    def apply(self, X) -> ComplexMatrix:
        X = as_matrix(X, square=True)
        return (self.matrix @ X.reshape(-1)).reshape(self.dim, self.dim)

    def adjoint(self) -> "SuperOperator":
        return SuperOperator(self.matrix.conj().T, self.dim)

    def agreement_residual(self, channel: QuantumChannel, adjoint: bool = False) -> float:
        worst = 0.0
        for i in range(self.dim):
            for j in range(self.dim):
                unit = np.zeros((self.dim, self.dim), dtype=np.complex128)
                unit[i, j] = 1.0
                reference = channel.adjoint_apply(unit) if adjoint else channel.apply(unit)
                worst = max(worst, frobenius(self.apply(unit) - reference))
        return worst


def _hermitian_basis(vectors: ComplexMatrix, dim: int) -> List[ComplexMatrix]:
    """Orthonormal Hermitian basis of a *-closed span given by vectorized columns."""
    count = vectors.shape[1]
    if count == 0:
        return []
    candidates = []
    for column in vectors.T:
        X = column.reshape(dim, dim)
        candidates.append(hermitian_part(X))
        candidates.append(hermitian_part(-1j * X))
    real_stack = np.array([np.concatenate([H.real.reshape(-1), H.imag.reshape(-1)]) for H in candidates]).T
    left, _, _ = scipy.linalg.svd(real_stack, full_matrices=False)
    basis = []
    for column in left[:, :count].T:
        half = dim * dim
        H = (column[:half] + 1j * column[half:]).reshape(dim, dim)
        basis.append(hermitian_part(H))
    return basis


def _null_threshold(M: ComplexMatrix, tol: Tolerances) -> float:
    return tol.null_space * max(1.0, float(np.linalg.norm(M, 2)))


def fixed_point_basis(
    omega: QuantumChannel,
    adjoint: bool = True,
    hermitian: bool = True,
    tolerances: Optional[Tolerances] = None,
) -> List[ComplexMatrix]:
    """Orthonormal basis of the fixed points of ``Omega^*`` (or of ``Omega`` with ``adjoint=False``)."""
    tol = resolve(tolerances)
    superop = SuperOperator.from_channel(omega, adjoint=adjoint)
    shifted = superop.matrix - np.eye(superop.matrix.shape[0])
    vectors = null_space(shifted, _null_threshold(shifted, tol))
    if hermitian:
        return _hermitian_basis(vectors, omega.dim_in)
    return [column.reshape(omega.dim_in, omega.dim_in) for column in vectors.T]


def _vectorized(basis: Sequence[ComplexMatrix]) -> ComplexMatrix:
    return np.array([B.reshape(-1) for B in basis]).T


@dataclass(frozen=True, eq=False)
class ConditionalExpectation:
    """Heisenberg-picture projection onto the fixed-point algebra, as a superoperator on ``B(supp sigma)``."""

    superoperator: SuperOperator
    fixed_algebra_basis: Tuple[ComplexMatrix, ...]
    tolerances: Tolerances
    doublings: int = 0
    support_basis: Optional[ComplexMatrix] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.superoperator.dim

    def apply(self, X) -> ComplexMatrix:
        return self.superoperator.apply(X)

    def adjoint_apply(self, X) -> ComplexMatrix:
        return self.superoperator.adjoint().apply(X)

    def compress(self, X) -> ComplexMatrix:
        X = as_matrix(X, square=True)
        if self.support_basis is None:
            return X
        return dagger(self.support_basis) @ X @ self.support_basis

    def idempotence_residual(self) -> float:
        E = self.superoperator.matrix
        return frobenius(E @ E - E)

    def unitality_residual(self) -> float:
        identity = np.eye(self.dim, dtype=np.complex128)
        return frobenius(self.apply(identity) - identity)

    def module_residual(self, A, X, B) -> float:
        """``|| E(AXB) - A E(X) B ||`` for ``A``, ``B`` in the fixed algebra."""
        A, X, B = (as_matrix(M, square=True) for M in (A, X, B))
        return frobenius(self.apply(A @ X @ B) - A @ self.apply(X) @ B)

    def invariance_residual(self, sigma: DensityMatrix) -> float:
        """``|| E^*(sigma) - sigma ||_1``."""
        s = self.compress(sigma.matrix)
        return trace_norm(self.adjoint_apply(s) - s)

    def commutation_residual(self, superop: SuperOperator) -> float:
        """``max(|| T o E - E ||, || E o T - E ||)``."""
        E = self.superoperator.matrix
        T = superop.matrix
        return max(frobenius(T @ E - E), frobenius(E @ T - E))

    def distance(self, other: "ConditionalExpectation") -> float:
        return frobenius(self.superoperator.matrix - other.superoperator.matrix)

    def random_fixed_element(self, rng: np.random.Generator) -> ComplexMatrix:
        coefficients = rng.standard_normal(len(self.fixed_algebra_basis)) + 1j * rng.standard_normal(
            len(self.fixed_algebra_basis)
        )
        return sum(c * F for c, F in zip(coefficients, self.fixed_algebra_basis))


def _working_space(
    omega: QuantumChannel, sigma: DensityMatrix, tol: Tolerances
) -> Tuple[QuantumChannel, DensityMatrix, Optional[ComplexMatrix]]:
    """Restriction of ``(Omega, sigma)`` to ``supp(sigma)``; ``None`` basis when sigma is faithful."""
    if omega.dim_in != omega.dim_out or omega.dim_in != sigma.dim:
        raise StructuralError(
            f"channel {omega.dim_in}->{omega.dim_out} does not act on states of dimension {sigma.dim}"
        )
    drift = trace_norm(omega.apply(sigma.matrix) - sigma.matrix)
    if drift > tol.fix:
        raise PreconditionError(f"sigma is not invariant under the channel (drift {drift:.3e})")
    support = sigma.support
    if support.is_full:
        return omega, sigma, None
    B = support.basis
    working = QuantumChannel(tuple(dagger(B) @ K @ B for K in omega.kraus_ops), tol, validate=False)
    leak = validate_channel(working).tp_residual
    if leak > tol.fix:
        raise PreconditionError(f"channel does not preserve supp(sigma) (residual {leak:.3e})")
    logger.debug("working on supp(sigma) of dimension %d", support.rank)
    return working, DensityMatrix(dagger(B) @ sigma.matrix @ B, tol), B


def cesaro_mean(superop: SuperOperator, doublings: int) -> SuperOperator:
    """``(1/n) sum_{k<n} T^k`` for ``n = 2**doublings`` by the doubling recurrence."""
    size = superop.matrix.shape[0]
    mean = np.eye(size, dtype=np.complex128)
    power = superop.matrix.copy()
    for _ in range(doublings):
        mean = 0.5 * (mean + power @ mean)
        power = power @ power
    return SuperOperator(mean, superop.dim)


def _averaged_limit(T: ComplexMatrix, tol: Tolerances) -> Tuple[ComplexMatrix, int]:
    """Powers of ``(id + T)/2``; the best iterate when rounding drift sets in before ``tol.fix``."""
    average = 0.5 * (np.eye(T.shape[0], dtype=np.complex128) + T)
    best, best_change, best_doubling = average, math.inf, 0
    for doubling in range(1, tol.cesaro_max_doublings + 1):
        squared = average @ average
        change = frobenius(squared - average) / max(1.0, frobenius(squared))
        average = squared
        if change <= tol.fix:
            return squared, doubling
        if change < best_change:
            best, best_change, best_doubling = squared, change, doubling
        elif best_change < DRIFT_ONSET:
            logger.debug("averaging drifted after %d doublings (best change %.3e)", doubling, best_change)
            return best, best_doubling
    raise ConvergenceError(f"averaging did not settle after {tol.cesaro_max_doublings} doublings")


def _spectral_projector(T: ComplexMatrix, tol: Tolerances) -> ComplexMatrix:
    """Projector onto the eigenvalue-1 space of ``T`` along the range of ``T - id``."""
    shifted = T - np.eye(T.shape[0], dtype=np.complex128)
    threshold = _null_threshold(shifted, tol)
    right = null_space(shifted, threshold)
    left = null_space(dagger(shifted), threshold)
    if right.shape[1] != left.shape[1] or right.shape[1] == 0:
        raise ConvergenceError(
            f"eigenvalue 1 is not semisimple ({right.shape[1]} right and {left.shape[1]} left fixed vectors)"
        )
    return right @ np.linalg.solve(dagger(left) @ right, dagger(left))


def _is_projection(E: ComplexMatrix, T: ComplexMatrix, dim: int, tol: Tolerances) -> bool:
    """Unital within ``tol.num``, idempotent and absorbing ``T`` on both sides within ``tol.fix``."""
    identity = np.eye(dim, dtype=np.complex128).reshape(-1)
    if float(np.linalg.norm(E @ identity - identity)) > tol.num:
        return False
    residual = max(frobenius(E @ E - E), frobenius(T @ E - E), frobenius(E @ T - E))
    return residual <= tol.fix * max(1.0, frobenius(E))


def conditional_expectation(
    omega: QuantumChannel, sigma: DensityMatrix, tolerances: Optional[Tolerances] = None
) -> ConditionalExpectation:
    """Limit of the averaged powers of ``Omega^*``; requires ``Omega(sigma) = sigma``."""
    tol = resolve(tolerances)
    working, _, basis = _working_space(omega, sigma, tol)
    T = SuperOperator.from_channel(working, adjoint=True).matrix
    limit: Optional[ComplexMatrix] = None
    try:
        limit, doublings = _averaged_limit(T, tol)
    except ConvergenceError as exc:
        logger.warning("%s; using the spectral projector", exc)
    if limit is not None and not _is_projection(limit, T, working.dim_in, tol):
        logger.warning(
            "averaged limit after %d doublings is not a unital idempotent; using the spectral projector", doublings
        )
        limit = None
    if limit is None:
        limit, doublings = _spectral_projector(T, tol), 0
        if not _is_projection(limit, T, working.dim_in, tol):
            raise ConvergenceError("spectral projector of the channel is not a unital idempotent")
    else:
        logger.debug("conditional expectation converged after %d doublings", doublings)
    return ConditionalExpectation(
        superoperator=SuperOperator(limit, working.dim_in),
        fixed_algebra_basis=tuple(fixed_point_basis(working, adjoint=True, tolerances=tol)),
        tolerances=tol,
        doublings=doublings,
        support_basis=basis,
    )


def fixed_space_angle(omega: QuantumChannel, expectation: ConditionalExpectation) -> float:
    """Largest principal angle between the fixed points of ``Omega`` and of ``E^*`` on ``supp(sigma)``."""
    tol = expectation.tolerances
    B = expectation.support_basis
    working = omega
    if B is not None:
        working = QuantumChannel(tuple(dagger(B) @ K @ B for K in omega.kraus_ops), tol, validate=False)
    of_channel = _vectorized(fixed_point_basis(working, adjoint=False, hermitian=False, tolerances=tol))
    shifted = expectation.superoperator.adjoint().matrix - np.eye(expectation.superoperator.matrix.shape[0])
    of_expectation = null_space(shifted, _null_threshold(shifted, tol))
    if of_channel.shape[1] != of_expectation.shape[1]:
        return math.pi / 2
    return float(np.max(scipy.linalg.subspace_angles(of_channel, of_expectation)))


@dataclass(frozen=True, eq=False)
class Block:
    d_L: int
    d_R: int
    sigma_R: DensityMatrix
    A_L: ComplexMatrix

    @property
    def size(self) -> int:
        return self.d_L * self.d_R


@dataclass(frozen=True, eq=False)
class BlockStructure:
    """``U sigma U^* = (+)_n A_n^L (x) sigma_n^R`` on ``supp(sigma)``."""

    unitary: ComplexMatrix
    blocks: Tuple[Block, ...]
    source: DensityMatrix
    support_basis: Optional[ComplexMatrix] = field(default=None, repr=False)
    tolerances: Tolerances = field(default_factory=default_tolerances, repr=False)
    attempts: int = 1

    @property
    def dim(self) -> int:
        return int(self.unitary.shape[0])

    @property
    def ambient_dim(self) -> int:
        return self.source.dim

    @property
    def offsets(self) -> List[int]:
        return list(np.cumsum([0] + [block.size for block in self.blocks]))

    def block_of(self, M: ComplexMatrix, index: int) -> ComplexMatrix:
        start, stop = self.offsets[index], self.offsets[index + 1]
        return M[start:stop, start:stop]

    def compress(self, X) -> ComplexMatrix:
        X = as_matrix(X, square=True)
        if self.support_basis is None:
            return X
        return dagger(self.support_basis) @ X @ self.support_basis

    def embed(self, X: ComplexMatrix) -> ComplexMatrix:
        if self.support_basis is None:
            return X
        return self.support_basis @ X @ dagger(self.support_basis)

    def to_blocks(self, X) -> ComplexMatrix:
        """``U X U^*`` in block coordinates."""
        return self.unitary @ self.compress(X) @ dagger(self.unitary)

    def from_blocks(self, M: ComplexMatrix) -> ComplexMatrix:
        return self.embed(dagger(self.unitary) @ M @ self.unitary)

    def assemble(self, left_factors: Sequence[ComplexMatrix]) -> ComplexMatrix:
        """``(+)_n B_n (x) sigma_n^R`` in block coordinates."""
        return direct_sum(*(np.kron(B, block.sigma_R.matrix) for B, block in zip(left_factors, self.blocks)))

    def reconstruction_residual(self) -> float:
        target = self.assemble([block.A_L for block in self.blocks])
        return trace_norm(self.to_blocks(self.source.matrix) - target)


def _cluster(values: np.ndarray) -> List[np.ndarray]:
    """Index groups of (descending) eigenvalues; an ambiguous gap raises ``DecompositionError``."""
    scale = max(float(np.max(np.abs(values))), 1e-300)
    diameter = float(values[0] - values[-1])
    if diameter <= MERGE_GAP * scale:
        return [np.arange(values.size)]
    groups, current = [], [0]
    for k in range(1, values.size):
        gap = float(values[k - 1] - values[k])
        if gap <= MERGE_GAP * scale:
            current.append(k)
        elif gap > SPLIT_GAP * diameter:
            groups.append(np.array(current))
            current = [k]
        else:
            raise DecompositionError(f"degenerate random element: eigenvalue gap {gap:.3e} is ambiguous")
    groups.append(np.array(current))
    return groups


def _random_hermitian(basis: Sequence[ComplexMatrix], rng: np.random.Generator) -> ComplexMatrix:
    coefficients = rng.standard_normal(len(basis))
    return hermitian_part(sum(c * F for c, F in zip(coefficients, basis)))


def _commutation_matrix(generators: Sequence[ComplexMatrix]) -> ComplexMatrix:
    """Stacked ``vec(Y) -> vec(G Y - Y G)`` for row-major vectorization."""
    m = generators[0].shape[0]
    identity = np.eye(m)
    return np.vstack([np.kron(G, identity) - np.kron(identity, G.T) for G in generators])


def _center(algebra: Sequence[ComplexMatrix], rng: np.random.Generator, tol: Tolerances) -> List[ComplexMatrix]:
    # an element of the algebra is central iff it commutes with two generic elements
    generators = [_random_hermitian(algebra, rng) for _ in range(2)]
    columns = []
    for F in algebra:
        commutators = np.concatenate([(F @ G - G @ F).reshape(-1) for G in generators])
        columns.append(np.concatenate([commutators.real, commutators.imag]))
    constraints = np.array(columns).T
    coefficients = null_space(constraints, _null_threshold(constraints, tol))
    return [hermitian_part(sum(c.real * F for c, F in zip(column, algebra))) for column in coefficients.T]


def _phase(value: complex) -> complex:
    modulus = abs(value)
    return value / modulus if modulus > 0 else 1.0


def _first_significant(column: np.ndarray) -> complex:
    magnitudes = np.abs(column)
    return column[int(np.argmax(magnitudes > 1e-8 * magnitudes.max()))]


def _split_block(
    Q: ComplexMatrix, algebra: Sequence[ComplexMatrix], rng: np.random.Generator, tol: Tolerances
) -> Tuple[ComplexMatrix, int, int]:
    """Basis of ``range(Q)`` adapted to ``H_L (x) H_R``, columns ordered ``a * d_R + j``."""
    m = Q.shape[1]
    generators = [dagger(Q) @ _random_hermitian(algebra, rng) @ Q for _ in range(2)]
    constraints = _commutation_matrix(generators)
    commutant = null_space(constraints, _null_threshold(constraints, tol))
    d_R = math.isqrt(commutant.shape[1])
    if d_R * d_R != commutant.shape[1] or m % d_R:
        raise DecompositionError(f"commutant of dimension {commutant.shape[1]} does not fit a block of size {m}")
    if d_R == 1:
        return Q, m, 1
    d_L = m // d_R

    def random_commutant() -> ComplexMatrix:
        g = rng.standard_normal(commutant.shape[1]) + 1j * rng.standard_normal(commutant.shape[1])
        return (commutant @ g).reshape(m, m)

    spectrum = hermitian_eig(hermitian_part(random_commutant()), tol)
    groups = _cluster(spectrum.eigenvalues)
    if len(groups) != d_R or any(group.size != d_L for group in groups):
        raise DecompositionError("commutant element has uneven eigenvalue multiplicities")
    spaces = [spectrum.eigenvectors[:, group] for group in groups]
    transport = random_commutant()
    scale = frobenius(transport)
    vectors = [spaces[0]]
    for space in spaces[1:]:
        W, s, Vh = np.linalg.svd(dagger(space) @ transport @ spaces[0])
        if s[-1] < SPLIT_GAP * scale or s[0] - s[-1] > SPLIT_GAP * s[0]:
            raise DecompositionError("degenerate transport between commutant eigenspaces")
        vectors.append(space @ (W @ Vh))
    local = np.stack(vectors, axis=2).reshape(m, d_L * d_R)
    return Q @ local, d_L, d_R


def _canonical_block(
    V: ComplexMatrix, d_L: int, d_R: int, sigma_w: DensityMatrix, tol: Tolerances
) -> Tuple[ComplexMatrix, Block]:
    """Rotate the block basis so ``A_L`` and ``sigma_R`` are diagonal, then fix phases."""
    compressed = dagger(V) @ sigma_w.matrix @ V
    left = hermitian_eig(partial_trace(compressed, (d_L, d_R), "R"), tol).eigenvectors
    right = hermitian_eig(partial_trace(compressed, (d_L, d_R), "L"), tol).eigenvectors
    V = V @ np.kron(left, right)
    columns = V.reshape(V.shape[0], d_L, d_R)
    alphas = np.array([np.conj(_phase(_first_significant(columns[:, a, 0]))) for a in range(d_L)])
    columns = columns * alphas[None, :, None]
    betas = np.array([np.conj(_phase(_first_significant(columns[:, 0, j]))) for j in range(d_R)])
    columns = columns * betas[None, None, :]
    V = columns.reshape(V.shape[0], d_L * d_R)
    compressed = hermitian_part(dagger(V) @ sigma_w.matrix @ V)
    A_L = hermitian_part(partial_trace(compressed, (d_L, d_R), "R"))
    reduced = hermitian_part(partial_trace(compressed, (d_L, d_R), "L"))
    sigma_R = DensityMatrix(reduced / np.trace(reduced).real, tol)
    return V, Block(d_L=d_L, d_R=d_R, sigma_R=sigma_R, A_L=A_L)


def _verify(structure: BlockStructure, sigma_w: DensityMatrix, algebra: Sequence[ComplexMatrix], tol: Tolerances):
    dim = structure.dim
    if sum(block.size for block in structure.blocks) != dim:
        raise DecompositionError("block sizes do not add up to the dimension")
    if unitary_residual(structure.unitary) > tol.fix * math.sqrt(dim):
        raise DecompositionError("assembled basis change is not unitary")
    target = structure.assemble([block.A_L for block in structure.blocks])
    residual = trace_norm(structure.unitary @ sigma_w.matrix @ dagger(structure.unitary) - target)
    if residual > tol.fix:
        raise DecompositionError(f"sigma is not reproduced by the blocks (residual {residual:.3e})")
    for block in structure.blocks:
        if not block.sigma_R.support.is_full:
            raise DecompositionError("a right factor of sigma is not invertible")
    for F in algebra:
        rotated = structure.unitary @ F @ dagger(structure.unitary)
        parts = [
            np.kron(partial_trace(structure.block_of(rotated, n), (b.d_L, b.d_R), "R") / b.d_R, np.eye(b.d_R))
            for n, b in enumerate(structure.blocks)
        ]
        if frobenius(rotated - direct_sum(*parts)) > tol.fix * max(1.0, frobenius(F)):
            raise DecompositionError("fixed-point algebra is not of the form X (x) I in the block basis")


def _decompose_attempt(
    algebra: List[ComplexMatrix],
    sigma_w: DensityMatrix,
    rng: np.random.Generator,
    tol: Tolerances,
) -> Tuple[ComplexMatrix, List[Block]]:
    center = _center(algebra, rng, tol)
    if not center:
        raise DecompositionError("fixed-point algebra has a trivial center")
    spectrum = hermitian_eig(_random_hermitian(center, rng), tol)
    pieces = []
    for group in _cluster(spectrum.eigenvalues):
        V, d_L, d_R = _split_block(spectrum.eigenvectors[:, group], algebra, rng, tol)
        pieces.append(_canonical_block(V, d_L, d_R, sigma_w, tol))
    pieces.sort(key=lambda piece: (piece[1].d_L, piece[1].d_R, float(np.trace(piece[1].A_L).real)), reverse=True)
    unitary = np.vstack([dagger(V) for V, _ in pieces])
    return unitary, [block for _, block in pieces]


def decompose(
    omega: QuantumChannel,
    sigma: DensityMatrix,
    seed: int = 0,
    tolerances: Optional[Tolerances] = None,
) -> BlockStructure:
    """Block factorization of the fixed-point algebra of ``Omega^*`` with ``sigma`` split accordingly."""
    tol = resolve(tolerances)
    working, sigma_w, basis = _working_space(omega, sigma, tol)
    algebra = fixed_point_basis(working, adjoint=True, tolerances=tol)
    attempts = tol.decompose_retries + 1
    failure: Optional[DecompositionError] = None
    for attempt in range(attempts):
        rng = np.random.default_rng((seed, attempt))
        try:
            unitary, blocks = _decompose_attempt(algebra, sigma_w, rng, tol)
            structure = BlockStructure(
                unitary=unitary,
                blocks=tuple(blocks),
                source=sigma,
                support_basis=basis,
                tolerances=tol,
                attempts=attempt + 1,
            )
            _verify(structure, sigma_w, algebra, tol)
            logger.info(
                "decomposed %d-dimensional algebra into blocks %s",
                len(algebra),
                [(b.d_L, b.d_R) for b in blocks],
            )
            return structure
        except DecompositionError as exc:
            logger.warning("decomposition attempt %d with seed %s failed: %s", attempt + 1, seed, exc)
            failure = exc
    raise DecompositionError(f"block decomposition failed after {attempts} attempts: {failure}") from failure


def membership_residual(rho: DensityMatrix, structure: BlockStructure) -> float:
    """Trace distance of ``U rho U^*`` to ``(+)_n Tr_R(rho_n) (x) sigma_n^R``, plus leakage outside ``supp(sigma)``."""
    if rho.dim != structure.ambient_dim:
        raise StructuralError(f"state of dimension {rho.dim} against a structure on {structure.ambient_dim}")
    leakage = 0.0
    if structure.support_basis is not None:
        leakage = float(np.trace(rho.matrix).real - np.trace(structure.compress(rho.matrix)).real)
    rotated = structure.to_blocks(rho.matrix)
    left = [
        partial_trace(structure.block_of(rotated, n), (block.d_L, block.d_R), "R")
        for n, block in enumerate(structure.blocks)
    ]
    return trace_norm(rotated - structure.assemble(left)) + abs(leakage)


def membership_test(rho: DensityMatrix, structure: BlockStructure, tol: Optional[float] = None) -> bool:
    threshold = structure.tolerances.fix if tol is None else tol
    return membership_residual(rho, structure) <= threshold


def build_sufficient_instance(structure: BlockStructure, seed) -> DensityMatrix:
    """``U^* ((+)_n B_n (x) sigma_n^R) U`` with random positive ``B_n``, normalized."""
    rng = np.random.default_rng(seed)
    left = []
    for block in structure.blocks:
        G = rng.standard_normal((block.d_L, block.d_L)) + 1j * rng.standard_normal((block.d_L, block.d_L))
        left.append(G @ dagger(G))
    rho = structure.from_blocks(structure.assemble(left))
    rho = hermitian_part(rho)
    return DensityMatrix(rho / np.trace(rho).real, structure.tolerances)


def structure_expectation(structure: BlockStructure) -> ConditionalExpectation:
    """``E(X) = U^* ((+)_n Tr_R[(I (x) sigma_n^R) X_n] (x) I_R) U`` on ``supp(sigma)``."""
    dim = structure.dim
    U = structure.unitary

    def expectation(X: ComplexMatrix) -> ComplexMatrix:
        rotated = U @ X @ dagger(U)
        parts = []
        for n, block in enumerate(structure.blocks):
            weighted = structure.block_of(rotated, n) @ np.kron(np.eye(block.d_L), block.sigma_R.matrix)
            parts.append(np.kron(partial_trace(weighted, (block.d_L, block.d_R), "R"), np.eye(block.d_R)))
        return dagger(U) @ direct_sum(*parts) @ U

    columns = []
    for i in range(dim):
        for j in range(dim):
            unit = np.zeros((dim, dim), dtype=np.complex128)
            unit[i, j] = 1.0
            columns.append(expectation(unit).reshape(-1))
    matrix = np.array(columns).T
    shifted = matrix - np.eye(dim * dim)
    fixed = null_space(shifted, _null_threshold(shifted, structure.tolerances))
    return ConditionalExpectation(
        superoperator=SuperOperator(matrix, dim),
        fixed_algebra_basis=tuple(_hermitian_basis(fixed, dim)),
        tolerances=structure.tolerances,
        support_basis=structure.support_basis,
    )


def sufficiency_structure(
    channel: QuantumChannel, sigma: DensityMatrix, seed: int = 0, tolerances: Optional[Tolerances] = None
) -> BlockStructure:
    """Decomposition of ``Phi_sigma o Phi``; its membership test decides sufficiency for ``{rho, sigma}``."""
    tol = resolve(tolerances)
    omega = compose(petz_map(channel, sigma, tol), channel)
    return decompose(omega, sigma, seed, tol)


@dataclass(frozen=True, eq=False)
class SufficientSetup:
    channel: QuantumChannel
    sigma: DensityMatrix
    rotation: ComplexMatrix
    block_dims: Tuple[Tuple[int, int], ...]


def random_sufficient_setup(
    block_dims: Sequence[Tuple[int, int]],
    seed,
    env_dim: int = 2,
    tolerances: Optional[Tolerances] = None,
) -> SufficientSetup:
    """Channel ``(+)_n id_L (x) Psi_n`` after a random rotation, with ``sigma = W^* ((+)_n A_n (x) s_n) W``."""
    tol = resolve(tolerances)
    dims = tuple((int(d_L), int(d_R)) for d_L, d_R in block_dims)
    if not dims or any(d_L < 1 or d_R < 1 for d_L, d_R in dims):
        raise StructuralError("block dimensions must be positive")
    dim = sum(d_L * d_R for d_L, d_R in dims)
    seeds = np.random.SeedSequence(seed).spawn(2 * len(dims) + 2)
    rotation = random_unitary(dim, seeds[0])
    rng = np.random.default_rng(seeds[1])
    kraus: List[ComplexMatrix] = []
    factors = []
    offset = 0
    for n, (d_L, d_R) in enumerate(dims):
        size = d_L * d_R
        if d_R == 1:
            inner: Tuple[ComplexMatrix, ...] = (np.eye(1, dtype=np.complex128),)
        else:
            inner = random_channel(d_R, d_R, env_dim, seeds[2 + 2 * n], tol).kraus_ops
        for K in inner:
            op = np.zeros((dim, dim), dtype=np.complex128)
            op[offset : offset + size, offset : offset + size] = np.kron(np.eye(d_L), K)
            kraus.append(op @ rotation)
        G = rng.standard_normal((d_L, d_L)) + 1j * rng.standard_normal((d_L, d_L))
        H = rng.standard_normal((d_R, d_R)) + 1j * rng.standard_normal((d_R, d_R))
        right = H @ dagger(H) + 0.1 * np.eye(d_R)
        factors.append(np.kron(G @ dagger(G) + 0.1 * np.eye(d_L), right / np.trace(right).real))
        offset += size
    block_sigma = direct_sum(*factors)
    sigma = hermitian_part(dagger(rotation) @ block_sigma @ rotation)
    return SufficientSetup(
        channel=QuantumChannel(tuple(kraus), tol),
        sigma=DensityMatrix(sigma / np.trace(sigma).real, tol),
        rotation=rotation,
        block_dims=dims,
    )
