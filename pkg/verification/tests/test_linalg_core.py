import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from quantum_sdk.recoverability.errors import DomainError, StructuralError
from quantum_sdk.recoverability.linalg_core import (
    as_exponent,
    as_matrix,
    direct_sum,
    hermitian_eig,
    matrix_power_on_support,
    null_space,
    polar,
    require_psd,
    schatten_norm,
    support_projection,
    trace_norm,
)
from quantum_sdk.recoverability.quantum_objects import random_unitary

from .helpers import gaussian


class HermitianEigTests(SimpleTestCase):
    def test_eigenvalues_descending_and_reconstruction(self):
        G = gaussian(4, 1)
        A = G + G.conj().T
        decomp = hermitian_eig(A)
        self.assertTrue(np.all(np.diff(decomp.eigenvalues) <= 0))
        self.assertLess(decomp.reconstruction_error(A), 1e-12)
        self.assertLess(decomp.orthonormality_error(), 1e-12)

    def test_non_hermitian_input_is_rejected(self):
        with self.assertRaises(StructuralError):
            hermitian_eig(np.array([[0, 1], [0, 0]]))

    def test_negative_eigenvalue_fails_psd_check(self):
        with self.assertRaises(DomainError):
            require_psd(hermitian_eig(np.diag([1.0, -1.0])))

    def test_as_matrix_rejects_nan(self):
        with self.assertRaises(StructuralError):
            as_matrix([[1.0, float('nan')], [0.0, 1.0]])


class FunctionalCalculusTests(SimpleTestCase):
    def test_negative_power_is_zero_on_kernel(self):
        A = np.diag([0.25, 0.75, 0.0])
        root = matrix_power_on_support(A, -0.5)
        np.testing.assert_allclose(np.diag(root).real, [2.0, 1.0 / math.sqrt(0.75), 0.0], atol=1e-12)

    def test_support_projection_rank(self):
        support = support_projection(np.diag([0.5, 0.5, 0.0]))
        self.assertEqual(support.rank, 2)
        self.assertFalse(support.is_full)
        self.assertEqual(support.complement.shape, (3, 1))

    def test_powers_add_on_the_support(self):
        V = random_unitary(4, seed=31)
        A = V @ np.diag([0.5, 0.3, 0.2, 0.0]) @ V.conj().T
        for a, b in ((0.5, 1.5), (-0.5, 2.0), (0.3 + 0.7j, -1.2)):
            product = matrix_power_on_support(A, a, cutoff=1e-12) @ matrix_power_on_support(A, b, cutoff=1e-12)
            np.testing.assert_allclose(product, matrix_power_on_support(A, a + b, cutoff=1e-12), atol=1e-10)

    def test_imaginary_power_is_unitary_on_the_support(self):
        V = random_unitary(4, seed=32)
        A = V @ np.diag([0.6, 0.3, 0.1, 0.0]) @ V.conj().T
        P = support_projection(A, cutoff=1e-12).projector
        for t in (-2.0, 0.7, 5.0):
            U = matrix_power_on_support(A, 1j * t, cutoff=1e-12)
            np.testing.assert_allclose(U @ U.conj().T, P, atol=1e-10)
            np.testing.assert_allclose(U.conj().T @ U, P, atol=1e-10)


class SchattenNormTests(SimpleTestCase):
    def test_diagonal_values(self):
        A = np.diag([3.0, 4.0])
        self.assertAlmostEqual(schatten_norm(A, 1), 7.0)
        self.assertAlmostEqual(schatten_norm(A, 2), 5.0)
        self.assertAlmostEqual(schatten_norm(A, math.inf), 4.0)
        self.assertAlmostEqual(trace_norm(-A), 7.0)

    def test_large_exponent_does_not_overflow(self):
        value = schatten_norm(np.diag([300.0, 400.0]), 10_000)
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(value, 400.0, places=6)

    def test_exponent_parsing(self):
        self.assertEqual(as_exponent('3/2'), Fraction(3, 2))
        self.assertEqual(as_exponent('inf'), math.inf)
        with self.assertRaises(DomainError):
            as_exponent(0.5)
        with self.assertRaises(DomainError):
            as_exponent('two')

    def test_unitary_invariance(self):
        A = gaussian(4, 33)
        U, V = random_unitary(4, seed=34), random_unitary(4, seed=35)
        for p in (1, Fraction(3, 2), 2, 4, math.inf):
            self.assertAlmostEqual(schatten_norm(U @ A @ V, p), schatten_norm(A, p), places=10)

    def test_holder_inequality(self):
        pairs = ((1, math.inf), (Fraction(3, 2), 3), (2, 2), (4, Fraction(4, 3)))
        for seed in range(20):
            A, B = gaussian(3, 100 + seed), gaussian(3, 200 + seed)
            for p, q in pairs:
                bound = schatten_norm(A, p) * schatten_norm(B, q)
                self.assertLessEqual(abs(np.trace(A @ B)), bound * (1 + 1e-12))


class DecompositionTests(SimpleTestCase):
    def test_polar_reconstructs(self):
        A = gaussian(3, 2)
        U, modulus = polar(A)
        np.testing.assert_allclose(U @ modulus, A, atol=1e-12)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(3), atol=1e-12)

    def test_polar_of_rank_deficient_matrix_is_partial_isometry(self):
        A = np.outer([1.0, 1j], [2.0, 0.0])
        U, modulus = polar(A)
        np.testing.assert_allclose(U @ modulus, A, atol=1e-12)
        np.testing.assert_allclose(U @ U.conj().T @ U, U, atol=1e-12)

    def test_null_space(self):
        kernel = null_space(np.array([[1.0, 1.0]]), 1e-12)
        self.assertEqual(kernel.shape, (2, 1))
        np.testing.assert_allclose(abs(kernel[:, 0]), [1 / math.sqrt(2)] * 2, atol=1e-12)

    def test_direct_sum(self):
        M = direct_sum(np.eye(2), 3 * np.eye(1))
        np.testing.assert_allclose(np.diag(M).real, [1.0, 1.0, 3.0])
