"""
Invariant suites run by ``manage.py verify``.

Each suite is a list of checks over seeded random instances. A check records
the worst observed value against its threshold and, for every instance that
fails, the seed that reproduces it.
"""

import logging
import math
import zlib
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from quantum_sdk.recoverability.divergences import (
    classical_renyi,
    dmax,
    dpi_gap,
    renyi_sandwiched,
    renyi_standard,
    umegaki,
)
from quantum_sdk.recoverability.errors import RecoverabilityError
from quantum_sdk.recoverability.fixed_point_structure import (
    build_sufficient_instance,
    conditional_expectation,
    fixed_space_angle,
    membership_test,
    random_sufficient_setup,
    structure_expectation,
    sufficiency_structure,
)
from quantum_sdk.recoverability.linalg_core import frobenius, trace_norm
from quantum_sdk.recoverability.manager import block_layout
from quantum_sdk.recoverability.quantum_objects import (
    DensityMatrix,
    compose,
    random_channel,
    random_state,
    validate_channel,
)
from quantum_sdk.recoverability.recovery import (
    adjoint_pairing_check,
    is_sufficient,
    l2_equality_check,
    main_theorem_experiment,
    petz_map,
    schwarz_check,
)
from quantum_sdk.recoverability.sigma_lp import (
    InterpolationFunction,
    SigmaLpContext,
    dual_witness,
    holder_conjugate,
    holomorphy_residual,
    three_lines_check,
    weighted_inner,
    weighted_norm,
)
from quantum_sdk.recoverability.tolerances import Tolerances, resolve

logger = logging.getLogger(__name__)

SUITES = ('lp', 'divergences', 'recovery', 'structure')

P_VALUES = (Fraction(3, 2), Fraction(2), Fraction(3))
ORACLE_ALPHAS = (Fraction(3, 2), Fraction(2), Fraction(3), Fraction(10))
DPI_ALPHAS = (1.2, 2.0, 4.0)
GAP_ALPHAS = (1.5, 2.0, 4.0)
THETA_GRID = tuple(k / 10 for k in range(1, 10))
BOUNDARY_TS = (-2.0, -1.0, 0.0, 1.0, 2.0)


class UnknownSuiteError(ValueError):
    pass


class CheckFailure(BaseModel):
    seed: int
    detail: str


class CheckResult(BaseModel):
    name: str
    instances: int
    threshold: float
    worst: Optional[float] = Field(default=None, description="Largest recorded value; values above threshold fail")
    failures: List[CheckFailure] = Field(default_factory=list)
    passed: bool


class SuiteResult(BaseModel):
    suite: str
    seed: int
    checks: List[CheckResult]
    passed: bool

    def failures(self):
        for check in self.checks:
            for failure in check.failures:
                yield check.name, failure


class _Check:
    """Accumulates values of one check; ``value <= threshold`` passes unless ``ok`` says otherwise."""

    def __init__(self, name: str, threshold: float):
        self.name = name
        self.threshold = threshold
        self.instances = 0
        self.worst: Optional[float] = None
        self.failures: List[CheckFailure] = []

    def record(self, seed: int, value: float, ok: Optional[bool] = None, detail: str = ''):
        self.instances += 1
        if not math.isnan(value):
            self.worst = value if self.worst is None else max(self.worst, value)
        if ok is None:
            ok = value <= self.threshold
        if not ok:
            detail = detail or f'value {value:.3e} exceeds {self.threshold:.1e}'
            self.failures.append(CheckFailure(seed=seed, detail=detail))

    def error(self, seed: int, exc: Exception):
        self.instances += 1
        self.failures.append(CheckFailure(seed=seed, detail=f'{type(exc).__name__}: {exc}'))

    def result(self) -> CheckResult:
        return CheckResult(
            name=self.name,
            instances=self.instances,
            threshold=self.threshold,
            worst=self.worst,
            failures=self.failures,
            passed=not self.failures,
        )


def _seeds(seed: int, name: str, count: int) -> List[int]:
    sequence = np.random.SeedSequence((seed, zlib.crc32(name.encode())))
    return [int(s) for s in sequence.generate_state(count, np.uint32)]


def _mixed_state(dim: int, rng: np.random.Generator, tol: Tolerances) -> DensityMatrix:
    # half a random state, half maximally mixed: spectrum bounded below by 1/(2 dim)
    random = random_state(dim, dim, rng, tol).matrix
    return DensityMatrix(0.5 * random + 0.5 * np.eye(dim) / dim, tol)


def _gaussian(rng: np.random.Generator, rows: int, cols: Optional[int] = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


class VerificationService:
    """Runs the invariant suites; ``run`` returns one result per suite."""

    def __init__(self, tolerances: Optional[Tolerances] = None):
        self._tolerances = tolerances

    @property
    def tolerances(self) -> Tolerances:
        return resolve(self._tolerances)

    def run(self, suite: str, seed: int) -> List[SuiteResult]:
        if suite != 'all' and suite not in SUITES:
            raise UnknownSuiteError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES + ('all',))}")
        names = SUITES if suite == 'all' else (suite,)
        return [self.run_suite(name, seed) for name in names]

    def run_suite(self, name: str, seed: int) -> SuiteResult:
        runners: Dict[str, Callable[[int], List[_Check]]] = {
            'lp': self._lp_suite,
            'divergences': self._divergence_suite,
            'recovery': self._recovery_suite,
            'structure': self._structure_suite,
        }
        logger.info('running suite %s with seed %d', name, seed)
        checks = [check.result() for check in runners[name](seed)]
        result = SuiteResult(suite=name, seed=seed, checks=checks, passed=all(c.passed for c in checks))
        for check_name, failure in result.failures():
            logger.warning('suite %s, check %s failed for seed %d: %s', name, check_name, failure.seed, failure.detail)
        return result

    def _guarded(self, check: _Check, seeds: Sequence[int], body: Callable[[int, np.random.Generator], None]):
        for s in seeds:
            try:
                body(s, np.random.default_rng(s))
            except (RecoverabilityError, ValidationError, np.linalg.LinAlgError) as exc:
                check.error(s, exc)

    # sigma-weighted Lp spaces

    def _lp_suite(self, seed: int) -> List[_Check]:
        tol = self.tolerances
        midpoint = _Check('interpolation_midpoint', 1e-10)
        boundary = _Check('boundary_constancy', 1e-9)
        three_lines = _Check('three_lines_slack', 1e-9)
        witness = _Check('dual_witness_pairing', 1e-9)
        feasible = _Check('dual_feasible_bound', 1e-9)
        holomorphy = _Check('holomorphy', tol.holomorphy)

        def interpolation(s, rng):
            dim = int(rng.integers(2, 6))
            ctx = SigmaLpContext(_mixed_state(dim, rng, tol), tol)
            Y = _gaussian(rng, dim)
            p = P_VALUES[s % len(P_VALUES)]
            f = InterpolationFunction.build(Y, p, ctx)
            midpoint.record(s, frobenius(f(1.0 / float(p)) - Y) / max(1.0, frobenius(Y)))
            drift = max(
                max(abs(f.left_boundary_norm(t) - f.norm_Y), abs(f.right_boundary_norm(t) - f.norm_Y))
                for t in BOUNDARY_TS
            )
            boundary.record(s, drift / max(1.0, f.norm_Y))
            report = three_lines_check(f, THETA_GRID)
            three_lines.record(s, -report.min_slack / max(1.0, report.bound))
            h = f.scaled(0.5, 1j) + f
            holomorphy.record(s, max(holomorphy_residual(h, z) for z in (0.3 + 0.2j, 0.5, 0.7 - 1.0j)))

        def duality(s, rng):
            dim = int(rng.integers(2, 6))
            ctx = SigmaLpContext(_mixed_state(dim, rng, tol), tol)
            Y = _gaussian(rng, dim)
            for p in P_VALUES:
                q = holder_conjugate(p)
                norm = weighted_norm(Y, p, ctx)
                W = dual_witness(Y, p, ctx)
                pairing = weighted_inner(W, Y, ctx)
                witness.record(
                    s, max(abs(pairing - norm) / max(1.0, norm), abs(weighted_norm(W, q, ctx) - 1.0))
                )
                for _ in range(10):
                    Z = _gaussian(rng, dim)
                    Z = Z / weighted_norm(Z, q, ctx)
                    feasible.record(s, (abs(weighted_inner(Z, Y, ctx)) - norm) / max(1.0, norm))

        self._guarded(midpoint, _seeds(seed, 'lp.interpolation', 50), interpolation)
        self._guarded(witness, _seeds(seed, 'lp.duality', 20), duality)
        return [midpoint, boundary, three_lines, witness, feasible, holomorphy]

    # divergences

    def _divergence_suite(self, seed: int) -> List[_Check]:
        tol = self.tolerances
        oracle = _Check('commuting_oracle', 1e-10)
        worked = _Check('worked_value', 1e-12)
        dpi = _Check('data_processing', 1e-9)
        near_one = _Check('alpha_to_one', 1.0)
        near_infinity = _Check('alpha_to_infinity', 1e-3)
        support = _Check('support_violation', 0.0)

        def commuting(s, rng):
            dim = int(rng.integers(2, 17))
            p = 0.5 * rng.dirichlet(np.ones(dim)) + 0.5 / dim
            q = 0.5 * rng.dirichlet(np.ones(dim)) + 0.5 / dim
            rho, sigma = DensityMatrix.from_diagonal(p, tol), DensityMatrix.from_diagonal(q, tol)
            for alpha in ORACLE_ALPHAS:
                expected = classical_renyi(p, q, float(alpha))
                scale = max(1.0, abs(expected))
                for result in (renyi_sandwiched(rho, sigma, alpha, tol), renyi_standard(rho, sigma, alpha, tol)):
                    oracle.record(s, abs(result.value - expected) / scale)

        def processing(s, rng):
            dim = int(rng.integers(2, 7))
            channel = random_channel(dim, dim, int(rng.integers(1, 5)), rng, tol)
            rho, sigma = _mixed_state(dim, rng, tol), _mixed_state(dim, rng, tol)
            for alpha in DPI_ALPHAS:
                dpi.record(s, -dpi_gap(channel, rho, sigma, alpha, tolerances=tol).gap)

        def limits(s, rng):
            dim = int(rng.integers(2, 5))
            rho, sigma = _mixed_state(dim, rng, tol), _mixed_state(dim, rng, tol)
            relative = umegaki(rho, sigma, tol).value
            for h in (1e-3, 1e-4):
                near_one.record(s, abs(renyi_sandwiched(rho, sigma, 1.0 + h, tol).value - relative) / (10.0 * h))
            large = renyi_sandwiched(rho, sigma, 10_000, tol).value
            near_infinity.record(s, abs(large - dmax(rho, sigma, tol).value))

        self._guarded(oracle, _seeds(seed, 'divergences.oracle', 100), commuting)
        half, quarter = DensityMatrix.maximally_mixed(2, tol), DensityMatrix.from_diagonal([0.25, 0.75], tol)
        worked.record(seed, abs(renyi_sandwiched(half, quarter, 2, tol).value - math.log(4.0 / 3.0)))
        self._guarded(dpi, _seeds(seed, 'divergences.dpi', 1000), processing)
        self._guarded(near_one, _seeds(seed, 'divergences.limits', 50), limits)

        up, down = DensityMatrix.from_vector([1, 0], tol), DensityMatrix.from_vector([0, 1], tol)
        results = (dmax(up, down, tol), renyi_sandwiched(up, down, 2, tol), umegaki(up, down, tol))
        flagged = all(math.isinf(r.value) and r.support_violation and not r.finite for r in results)
        support.record(seed, 0.0 if flagged else 1.0, detail='orthogonal pure states were not flagged as +inf')
        return [oracle, worked, dpi, near_one, near_infinity, support]

    # Petz recovery and sufficiency

    def _recovery_suite(self, seed: int) -> List[_Check]:
        tol = self.tolerances
        fixes_sigma = _Check('petz_recovers_sigma', 1e-10)
        pairing = _Check('adjoint_pairing', 1e-10)
        is_channel = _Check('petz_is_channel', tol.num)
        schwarz = _Check('schwarz_inequality', 1e-9)
        constructed_gap = _Check('constructed_gap', 1e-9)
        constructed_recovery = _Check('constructed_recovery', 1e-8)
        insufficient = _Check('insufficient_positive_gap', 0.0)
        biconditional = _Check('l2_biconditional', 0.0)
        tau = _Check('tau_path', 1e-8)

        def petz_identities(s, rng):
            dim_in = int(rng.integers(2, 6))
            env = int(rng.integers(1, 4))
            lower = max(2, -(-dim_in // env))
            dim_out = int(rng.integers(lower, min(5, dim_in * env) + 1))
            channel = random_channel(dim_in, dim_out, env, rng, tol)
            sigma = _mixed_state(dim_in, rng, tol)
            petz = petz_map(channel, sigma, tol)
            recovered = petz.apply(channel.apply(sigma.matrix))
            fixes_sigma.record(s, trace_norm(recovered - sigma.matrix))
            X, Y = _gaussian(rng, dim_out), _gaussian(rng, dim_in)
            X, Y = X / frobenius(X), Y / frobenius(Y)
            pairing.record(s, adjoint_pairing_check(channel, sigma, X, Y, tol, petz=petz))
            is_channel.record(s, validate_channel(petz).tp_residual)
            samples = [_gaussian(rng, dim_in) for _ in range(5)]
            report = schwarz_check(petz.adjoint_apply, samples, dim_in, tolerances=tol)
            schwarz.record(s, -report.minimum)

        def constructed(s, rng):
            setup = random_sufficient_setup(block_layout(int(rng.integers(2, 6)), rng), s, 2, tol)
            structure = sufficiency_structure(setup.channel, setup.sigma, s, tol)
            rho = build_sufficient_instance(structure, rng)
            petz = petz_map(setup.channel, setup.sigma, tol)
            for alpha in GAP_ALPHAS:
                report = main_theorem_experiment(setup.channel, rho, setup.sigma, alpha, tol, petz=petz)
                constructed_gap.record(s, abs(report.gap))
                constructed_recovery.record(s, report.recovery_error)
                if alpha == 2.0:
                    if report.tau_norm_residual is None:
                        tau.record(s, math.inf, ok=False, detail='equality was not detected')
                    else:
                        tau.record(s, max(report.tau_norm_residual, report.tau_recovery_error))
            consistent = l2_equality_check(setup.channel, rho, setup.sigma, tol, petz=petz).consistent
            biconditional.record(s, 0.0 if consistent else 1.0)

        def random_instance(s, rng):
            dim = int(rng.integers(2, 6))
            channel = random_channel(dim, dim, int(rng.integers(1, 4)), rng, tol)
            rho, sigma = _mixed_state(dim, rng, tol), _mixed_state(dim, rng, tol)
            petz = petz_map(channel, sigma, tol)
            report = is_sufficient(channel, rho, sigma, tol=1e-6, tolerances=tol, petz=petz)
            if not report.sufficient:
                insufficient.record(s, -report.gap, ok=report.gap > 0, detail=f'gap {report.gap:.3e} is not positive')
            consistent = l2_equality_check(channel, rho, sigma, tol, petz=petz).consistent
            biconditional.record(s, 0.0 if consistent else 1.0)

        self._guarded(fixes_sigma, _seeds(seed, 'recovery.petz', 200), petz_identities)
        self._guarded(constructed_gap, _seeds(seed, 'recovery.constructed', 100), constructed)
        self._guarded(insufficient, _seeds(seed, 'recovery.random', 200), random_instance)
        return [
            fixes_sigma,
            pairing,
            is_channel,
            schwarz,
            constructed_gap,
            constructed_recovery,
            insufficient,
            biconditional,
            tau,
        ]

    # fixed points and block structure

    def _structure_suite(self, seed: int) -> List[_Check]:
        tol = self.tolerances
        reconstruction = _Check('sigma_reconstruction', 1e-8)
        idempotence = _Check('expectation_idempotence', 1e-8)
        unitality = _Check('expectation_unitality', 1e-10)
        invariance = _Check('expectation_invariance', 1e-9)
        module = _Check('expectation_module_property', 1e-8)
        angle = _Check('fixed_space_angle', 1e-7)
        agreement = _Check('expectation_agreement', 1e-7)
        membership = _Check('membership_agreement', 0.0)

        def setup_checks(s, rng):
            setup = random_sufficient_setup(block_layout(int(rng.integers(2, 6)), rng), s, 2, tol)
            omega = compose(petz_map(setup.channel, setup.sigma, tol), setup.channel)
            structure = sufficiency_structure(setup.channel, setup.sigma, s, tol)
            reconstruction.record(s, structure.reconstruction_residual())
            expectation = conditional_expectation(omega, setup.sigma, tol)
            idempotence.record(s, expectation.idempotence_residual())
            unitality.record(s, expectation.unitality_residual())
            invariance.record(s, expectation.invariance_residual(setup.sigma))
            A, B = expectation.random_fixed_element(rng), expectation.random_fixed_element(rng)
            X = _gaussian(rng, expectation.dim)
            scale = frobenius(A) * frobenius(X) * frobenius(B)
            module.record(s, expectation.module_residual(A, X, B) / max(1.0, scale))
            angle.record(s, fixed_space_angle(omega, expectation))
            agreement.record(s, structure_expectation(structure).distance(expectation))
            inside = build_sufficient_instance(structure, rng)
            outside = _mixed_state(setup.sigma.dim, rng, tol)
            for rho in (inside, outside):
                member = membership_test(rho, structure)
                sufficient = is_sufficient(setup.channel, rho, setup.sigma, tolerances=tol).sufficient
                membership.record(
                    s,
                    0.0 if member == sufficient else 1.0,
                    detail=f'membership {member} but is_sufficient {sufficient}',
                )

        self._guarded(reconstruction, _seeds(seed, 'structure.setup', 25), setup_checks)
        return [reconstruction, idempotence, unitality, invariance, module, angle, agreement, membership]


# Global service instance
verification_service = VerificationService()
