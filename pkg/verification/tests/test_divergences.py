import json
import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from quantum_sdk.recoverability.divergences import (
    DivergenceResult,
    classical_renyi,
    divergence,
    dmax,
    dpi_gap,
    renyi_sandwiched,
    renyi_sandwiched_trace,
    renyi_standard,
    umegaki,
)
from quantum_sdk.recoverability.errors import DomainError
from quantum_sdk.recoverability.linalg_core import trace_norm
from quantum_sdk.recoverability.quantum_objects import (
    DensityMatrix,
    dephasing_channel,
    identity_channel,
    random_channel,
    random_unitary,
)

from .helpers import mixed_state

LN_4_3 = math.log(4.0 / 3.0)
KINDS = (('umegaki', None), ('dmax', None), ('renyi_standard', 2), ('renyi_sandwiched', 2))


class WorkedValueTests(SimpleTestCase):
    def setUp(self):
        self.rho = DensityMatrix.maximally_mixed(2)
        self.sigma = DensityMatrix.from_diagonal([0.25, 0.75])

    def test_sandwiched_order_two(self):
        result = renyi_sandwiched(self.rho, self.sigma, 2)
        self.assertAlmostEqual(result.value, LN_4_3, places=12)
        self.assertAlmostEqual(result.value, 0.287682, places=6)
        self.assertAlmostEqual(result.in_bits().value, 0.415037, places=6)
        self.assertEqual(result.in_bits().unit, 'bits')

    def test_other_kinds(self):
        self.assertAlmostEqual(renyi_standard(self.rho, self.sigma, 2).value, LN_4_3, places=12)
        self.assertAlmostEqual(umegaki(self.rho, self.sigma).value, 0.5 * LN_4_3, places=12)
        self.assertAlmostEqual(dmax(self.rho, self.sigma).value, math.log(2.0), places=12)

    def test_equal_states_give_zero(self):
        sigma = mixed_state(3, 41)
        for kind, alpha in (('umegaki', None), ('dmax', None), ('renyi_standard', 0.5), ('renyi_sandwiched', 3)):
            self.assertAlmostEqual(divergence(sigma, sigma, kind, alpha).value, 0.0, places=10)

    def test_vanishes_exactly_for_equal_states(self):
        for seed in range(10):
            sigma = mixed_state(3, 900 + seed)
            far = mixed_state(3, 950 + seed)
            near = DensityMatrix((1 - 1e-12) * sigma.matrix + 1e-12 * far.matrix)
            for rho in (sigma, near, far):
                close = 0.5 * trace_norm(rho.matrix - sigma.matrix) <= 1e-6
                for kind, alpha in KINDS:
                    self.assertEqual(divergence(rho, sigma, kind, alpha).value <= 1e-9, close, (seed, kind))

    def test_unitary_invariance(self):
        for seed in range(10):
            rho, sigma = mixed_state(3, 1100 + seed), mixed_state(3, 1200 + seed)
            U = random_unitary(3, seed=1300 + seed)
            rotated_rho = DensityMatrix(U @ rho.matrix @ U.conj().T)
            rotated_sigma = DensityMatrix(U @ sigma.matrix @ U.conj().T)
            for kind, alpha in KINDS:
                value = divergence(rho, sigma, kind, alpha).value
                rotated = divergence(rotated_rho, rotated_sigma, kind, alpha).value
                self.assertLessEqual(abs(rotated - value), 1e-10 * max(1.0, value), kind)


class CommutingOracleTests(SimpleTestCase):
    def test_diagonal_pairs_match_classical_formula(self):
        rng = np.random.default_rng(51)
        for _ in range(10):
            dim = int(rng.integers(2, 17))
            p = 0.5 * rng.dirichlet(np.ones(dim)) + 0.5 / dim
            q = 0.5 * rng.dirichlet(np.ones(dim)) + 0.5 / dim
            rho, sigma = DensityMatrix.from_diagonal(p), DensityMatrix.from_diagonal(q)
            for alpha in (Fraction(3, 2), 2, 3, 10, 0.5):
                expected = classical_renyi(p, q, float(alpha))
                self.assertAlmostEqual(renyi_sandwiched(rho, sigma, alpha).value, expected, delta=1e-10 * max(1, abs(expected)))
                self.assertAlmostEqual(renyi_standard(rho, sigma, alpha).value, expected, delta=1e-10 * max(1, abs(expected)))

    def test_norm_and_trace_formulas_agree(self):
        rho, sigma = mixed_state(3, 61), mixed_state(3, 62)
        for alpha in (1.5, 2, 5):
            self.assertAlmostEqual(
                renyi_sandwiched(rho, sigma, alpha).value, renyi_sandwiched_trace(rho, sigma, alpha).value, places=10
            )


class SupportTests(SimpleTestCase):
    def test_orthogonal_pure_states_are_infinite(self):
        up, down = DensityMatrix.from_vector([1, 0]), DensityMatrix.from_vector([0, 1])
        for result in (dmax(up, down), umegaki(up, down), renyi_sandwiched(up, down, 2)):
            self.assertEqual(result.value, math.inf)
            self.assertFalse(result.finite)
            self.assertTrue(result.support_violation)
        self.assertEqual(json.loads(dmax(up, down).model_dump_json())['value'], 'inf')

    def test_standard_renyi_below_one_stays_finite(self):
        rho = DensityMatrix.maximally_mixed(2)
        sigma = DensityMatrix.from_diagonal([1.0, 0.0])
        result = renyi_standard(rho, sigma, 0.5)
        self.assertTrue(result.finite)
        self.assertTrue(result.support_violation)
        self.assertAlmostEqual(result.value, -2 * math.log(math.sqrt(0.5)), places=12)

    def test_result_validation(self):
        with self.assertRaises(ValueError):
            DivergenceResult(value=math.inf, finite=True, kind='dmax')
        parsed = DivergenceResult.model_validate_json('{"value": "inf", "finite": false, "kind": "dmax"}')
        self.assertEqual(parsed.value, math.inf)


class DomainTests(SimpleTestCase):
    def test_alpha_near_one_and_nonpositive(self):
        rho = DensityMatrix.maximally_mixed(2)
        for alpha in (1, 1 + 1e-8, 0, -2, 'x'):
            with self.assertRaises(DomainError):
                renyi_sandwiched(rho, rho, alpha)

    def test_unknown_kind(self):
        rho = DensityMatrix.maximally_mixed(2)
        with self.assertRaises(DomainError):
            divergence(rho, rho, 'petz', 2)
        with self.assertRaises(DomainError):
            divergence(rho, rho, 'renyi_sandwiched')


class LimitTests(SimpleTestCase):
    def test_alpha_limits(self):
        rho, sigma = mixed_state(3, 71), mixed_state(3, 72)
        relative = umegaki(rho, sigma).value
        for h in (1e-3, 1e-4):
            self.assertLessEqual(abs(renyi_sandwiched(rho, sigma, 1 + h).value - relative), 10 * h)
        self.assertLessEqual(abs(renyi_sandwiched(rho, sigma, 10_000).value - dmax(rho, sigma).value), 1e-3)

    def test_monotone_in_alpha(self):
        rho, sigma = mixed_state(3, 73), mixed_state(3, 74)
        values = [renyi_sandwiched(rho, sigma, alpha).value for alpha in (0.5, 1.5, 2, 4, 8)]
        self.assertEqual(values, sorted(values))


class DataProcessingTests(SimpleTestCase):
    def test_random_channels_do_not_increase_divergence(self):
        for seed in range(20):
            channel = random_channel(3, 3, 2, seed=seed)
            rho, sigma = mixed_state(3, 1000 + seed), mixed_state(3, 2000 + seed)
            for alpha in (1.2, 2, 4):
                self.assertGreaterEqual(dpi_gap(channel, rho, sigma, alpha).gap, -1e-9)

    def test_identity_and_dephasing(self):
        rho = DensityMatrix.from_vector([1, 1])
        sigma = DensityMatrix.from_diagonal([0.3, 0.7])
        self.assertAlmostEqual(dpi_gap(identity_channel(2), rho, sigma, 2).gap, 0.0, places=12)
        self.assertGreater(dpi_gap(dephasing_channel(2), rho, sigma, 2).gap, 1e-3)

    def test_gap_undefined_when_both_sides_are_infinite(self):
        up, down = DensityMatrix.from_vector([1, 0]), DensityMatrix.from_vector([0, 1])
        gap = dpi_gap(identity_channel(2), up, down, kind='dmax')
        self.assertTrue(gap.undefined)
        self.assertIsNone(gap.gap)
