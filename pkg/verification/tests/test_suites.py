from unittest import mock

from django.test import SimpleTestCase

from verification.suite_service import P_VALUES, SUITES, UnknownSuiteError, VerificationService


class VerificationServiceTests(SimpleTestCase):
    def setUp(self):
        self.service = VerificationService()

    def assertSuitePasses(self, name, seed=7):
        [result] = self.service.run(name, seed)
        failures = [f'{check}: seed {failure.seed}: {failure.detail}' for check, failure in result.failures()]
        self.assertTrue(result.passed, failures)
        return result

    def test_divergence_suite(self):
        result = self.assertSuitePasses('divergences')
        self.assertIn('commuting_oracle', [check.name for check in result.checks])

    def test_recovery_suite(self):
        result = self.assertSuitePasses('recovery')
        self.assertIn('petz_recovers_sigma', [check.name for check in result.checks])

    def test_structure_suite(self):
        result = self.assertSuitePasses('structure')
        names = [check.name for check in result.checks]
        self.assertIn('expectation_unitality', names)
        self.assertIn('expectation_invariance', names)

    def test_lp_suite_other_seed(self):
        result = self.assertSuitePasses('lp', seed=2024)
        instances = {check.name: check.instances for check in result.checks}
        self.assertEqual(instances['dual_feasible_bound'], 200 * len(P_VALUES))
        self.assertEqual(instances['dual_witness_pairing'], 20 * len(P_VALUES))

    def test_unknown_suite(self):
        with self.assertRaises(UnknownSuiteError):
            self.service.run('entropy', 1)

    def test_all_runs_every_suite(self):
        with mock.patch.object(VerificationService, 'run_suite', side_effect=lambda name, seed: name) as run_suite:
            self.assertEqual(self.service.run('all', 1), list(SUITES))
        self.assertEqual(run_suite.call_count, len(SUITES))
