from django.test import SimpleTestCase, override_settings
from pydantic import ValidationError

from quantum_sdk.recoverability.quantum_objects import DensityMatrix
from quantum_sdk.recoverability.tolerances import Tolerances, default_tolerances, resolve


class ToleranceTests(SimpleTestCase):
    def test_defaults(self):
        tol = Tolerances()
        self.assertEqual(tol.suff, 1e-8)
        self.assertEqual(tol.fix, 1e-8)
        self.assertEqual(tol.cesaro_max_doublings, 60)
        self.assertIsNone(tol.rel_cutoff)

    def test_unknown_field_is_rejected(self):
        with self.assertRaises(ValidationError):
            Tolerances(sufficiency=1e-3)

    @override_settings(RECOVERABILITY_TOLERANCES={'suff': 1e-3})
    def test_settings_override_reaches_library_objects(self):
        self.assertEqual(default_tolerances().suff, 1e-3)
        self.assertEqual(DensityMatrix.maximally_mixed(2).tolerances.suff, 1e-3)

    def test_explicit_tolerances_win(self):
        tol = Tolerances(gap=1e-6)
        self.assertIs(resolve(tol), tol)
        self.assertEqual(resolve(None), default_tolerances())
