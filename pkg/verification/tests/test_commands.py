import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from quantum_sdk.recoverability.errors import DecompositionError
from quantum_sdk.recoverability.quantum_objects import (
    dephasing_channel,
    identity_channel,
    partial_trace_channel,
)

from verification.matrix_io import read_channel, read_structure, write_channel, write_matrix
from verification.suite_service import CheckFailure, CheckResult, SuiteResult


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.dir = Path(self._tmp.name)

    def matrix_file(self, name, A):
        path = self.dir / name
        write_matrix(np.asarray(A, dtype=complex), path)
        return str(path)

    def channel_file(self, name, channel):
        path = self.dir / name
        write_channel(channel, path)
        return str(path)

    def call(self, *args, **options):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()

    def assertExitCode(self, code, *args, **options):
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command(*args, stdout=out, stderr=StringIO(), **options)
        self.assertEqual(ctx.exception.returncode, code)
        return out.getvalue()


class ComputeCommandTests(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.rho = self.matrix_file('rho.json', np.eye(2) / 2)
        self.sigma = self.matrix_file('sigma.json', np.diag([0.25, 0.75]))

    def test_worked_value(self):
        result = json.loads(self.call('compute', rho=self.rho, sigma=self.sigma, alpha='2'))
        self.assertAlmostEqual(result['value'], 0.287682, places=6)
        self.assertEqual(result['unit'], 'nats')
        self.assertTrue(result['finite'])

    def test_bits(self):
        result = json.loads(self.call('compute', rho=self.rho, sigma=self.sigma, alpha='2', bits=True))
        self.assertAlmostEqual(result['value'], 0.415037, places=6)
        self.assertEqual(result['unit'], 'bits')

    def test_fractional_alpha_and_kinds(self):
        three_halves = json.loads(self.call('compute', rho=self.rho, sigma=self.sigma, alpha='3/2'))
        self.assertAlmostEqual(three_halves['alpha'], 1.5)
        umegaki = json.loads(self.call('compute', rho=self.rho, sigma=self.sigma, kind='umegaki'))
        self.assertAlmostEqual(umegaki['value'], 0.5 * np.log(4 / 3), places=12)

    def test_equal_states(self):
        result = json.loads(self.call('compute', rho=self.sigma, sigma=self.sigma, alpha='2'))
        self.assertAlmostEqual(result['value'], 0.0, places=12)

    def test_support_violation_exit_code(self):
        rho = self.matrix_file('pure0.json', np.diag([1.0, 0.0]))
        sigma = self.matrix_file('pure1.json', np.diag([0.0, 1.0]))
        out = self.assertExitCode(2, 'compute', rho=rho, sigma=sigma, kind='dmax')
        result = json.loads(out)
        self.assertEqual(result['value'], 'inf')
        self.assertFalse(result['finite'])
        self.assertTrue(result['support_violation'])

    def test_invalid_inputs_exit_code(self):
        self.assertExitCode(1, 'compute', rho=self.rho, sigma=self.sigma, alpha='1')
        self.assertExitCode(1, 'compute', rho=self.rho, sigma=self.sigma, alpha='2', kind='hellinger')
        self.assertExitCode(1, 'compute', rho=str(self.dir / 'missing.json'), sigma=self.sigma, alpha='2')
        not_a_state = self.matrix_file('bad.json', np.diag([0.7, 0.7]))
        self.assertExitCode(1, 'compute', rho=not_a_state, sigma=self.sigma, alpha='2')


class PetzCommandTests(CommandTestCase):
    def test_identity_channel(self):
        output = self.dir / 'petz.json'
        self.call(
            'petz',
            channel=self.channel_file('id.json', identity_channel(2)),
            sigma=self.matrix_file('sigma.json', np.diag([0.3, 0.7])),
            output=str(output),
        )
        self.assertLess(read_channel(output).choi_distance(identity_channel(2)), 1e-10)

    def test_dephasing_channel(self):
        output = self.dir / 'petz.json'
        self.call(
            'petz',
            channel=self.channel_file('deph.json', dephasing_channel(2)),
            sigma=self.matrix_file('sigma.json', np.diag([0.3, 0.7])),
            output=str(output),
        )
        self.assertLess(read_channel(output).choi_distance(dephasing_channel(2)), 1e-10)

    def test_dimension_mismatch(self):
        self.assertExitCode(
            1,
            'petz',
            channel=self.channel_file('id.json', identity_channel(3)),
            sigma=self.matrix_file('sigma.json', np.diag([0.3, 0.7])),
            output=str(self.dir / 'petz.json'),
        )


class SufficiencyCommandTests(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.sigma = self.matrix_file('sigma.json', np.diag([0.3, 0.7]))

    def test_identity_is_sufficient(self):
        rho = self.matrix_file('rho.json', [[0.5, 0.2], [0.2, 0.5]])
        report = json.loads(
            self.call('sufficiency', channel=self.channel_file('id.json', identity_channel(2)), rho=rho, sigma=self.sigma)
        )
        self.assertTrue(report['sufficient'])
        self.assertAlmostEqual(report['gap'], 0.0, places=12)

    def test_dephasing_coherent_state(self):
        rho = self.matrix_file('rho.json', [[0.5, 0.4], [0.4, 0.5]])
        report = json.loads(
            self.call(
                'sufficiency', channel=self.channel_file('deph.json', dephasing_channel(2)), rho=rho, sigma=self.sigma
            )
        )
        self.assertFalse(report['sufficient'])
        self.assertGreater(report['gap'], 0.0)
        self.assertGreater(report['recovery_error'], 0.1)

    def test_support_violation(self):
        rho = self.matrix_file('rho.json', np.diag([0.5, 0.5]))
        sigma = self.matrix_file('pure.json', np.diag([1.0, 0.0]))
        self.assertExitCode(
            2, 'sufficiency', channel=self.channel_file('id.json', identity_channel(2)), rho=rho, sigma=sigma
        )


class StructureCommandTests(CommandTestCase):
    def test_dephasing_gives_two_blocks(self):
        output = self.dir / 'structure.json'
        out = self.call(
            'structure',
            channel=self.channel_file('deph.json', dephasing_channel(2)),
            sigma=self.matrix_file('sigma.json', np.diag([0.3, 0.7])),
            seed=3,
            output=str(output),
        )
        self.assertIn('(1, 1), (1, 1)', out)
        payload = read_structure(output)
        self.assertEqual([(b.d_L, b.d_R) for b in payload.blocks], [(1, 1), (1, 1)])

    def test_partial_trace_gives_one_block(self):
        output = self.dir / 'structure.json'
        sigma = np.kron(np.diag([0.4, 0.6]), np.diag([0.1, 0.2, 0.7]))
        self.call(
            'structure',
            channel=self.channel_file('tr.json', partial_trace_channel(2, 3, 'R')),
            sigma=self.matrix_file('sigma.json', sigma),
            seed=3,
            output=str(output),
        )
        self.assertEqual([(b.d_L, b.d_R) for b in read_structure(output).blocks], [(2, 3)])

    def test_retry_exhaustion_exit_code(self):
        with mock.patch(
            'verification.management.commands.structure.sufficiency_structure',
            side_effect=DecompositionError('block decomposition failed after 6 attempts'),
        ):
            self.assertExitCode(
                3,
                'structure',
                channel=self.channel_file('id.json', identity_channel(2)),
                sigma=self.matrix_file('sigma.json', np.diag([0.3, 0.7])),
                seed=1,
                output=str(self.dir / 'structure.json'),
            )


class ExperimentCommandTests(CommandTestCase):
    def run_experiment(self, **options):
        report = json.loads(self.call('experiment', **options))
        report.pop('generated_at')
        return report

    def test_identity_channel_has_zero_gap(self):
        report = self.run_experiment(seed=5, dim=2, trials=1, alphas=[2.0], identity=True, no_constructed=True)
        self.assertEqual(report['aggregates']['records'], 1)
        record = report['records'][0]
        self.assertEqual(record['kind'], 'identity')
        self.assertAlmostEqual(record['gaps'][0]['gap'], 0.0, places=12)
        self.assertTrue(record['sufficient'])

    def test_same_seed_same_report(self):
        options = dict(seed=9, dim=2, trials=2, alphas=[2.0])
        self.assertEqual(self.run_experiment(**options), self.run_experiment(**options))

    def test_workers_do_not_change_records(self):
        options = dict(seed=9, dim=2, trials=3, alphas=[2.0], no_constructed=True)
        single = self.run_experiment(workers=1, **options)
        pooled = self.run_experiment(workers=2, **options)
        self.assertEqual(single['records'], pooled['records'])
        self.assertEqual(single['aggregates'], pooled['aggregates'])

    def test_config_file_and_output(self):
        config = self.dir / 'config.json'
        config.write_text(json.dumps({'dim': 2, 'trials': 1, 'alphas': [1.5], 'constructed': False}))
        output = self.dir / 'report.json'
        out = self.call('experiment', seed=1, config=str(config), output=str(output))
        self.assertIn('report written to', out)
        report = json.loads(output.read_text())
        self.assertEqual(report['config']['alphas'], [1.5])
        self.assertEqual(report['config']['seed'], 1)

    @override_settings(EXPERIMENT_WORKERS=2)
    def test_workers_default_from_settings(self):
        report = self.run_experiment(seed=2, dim=2, trials=1, alphas=[2.0], no_constructed=True)
        self.assertEqual(report['config']['workers'], 2)

    def test_invalid_config(self):
        self.assertExitCode(1, 'experiment', seed=1, alphas=[1.0])
        self.assertExitCode(1, 'experiment', seed=1, config=str(self.dir / 'missing.json'))


class VerifyCommandTests(CommandTestCase):
    def test_unknown_suite(self):
        self.assertExitCode(1, 'verify', suite='nonsense')

    def test_lp_suite_passes(self):
        out = self.call('verify', suite='lp', seed=3)
        self.assertIn('suite lp (seed 3)', out)
        self.assertIn('passed', out)

    @override_settings(VERIFY_SEED=11)
    def test_default_seed_from_settings(self):
        with mock.patch('verification.management.commands.verify.verification_service') as service:
            service.run.return_value = [SuiteResult(suite='lp', seed=11, checks=[], passed=True)]
            self.call('verify', suite='lp')
        service.run.assert_called_once_with('lp', 11)

    def test_failing_check_exit_code(self):
        failing = CheckResult(
            name='dual_witness_pairing',
            instances=1,
            threshold=1e-9,
            worst=1e-3,
            failures=[CheckFailure(seed=42, detail='value 1.000e-03 exceeds 1.0e-09')],
            passed=False,
        )
        result = SuiteResult(suite='lp', seed=3, checks=[failing], passed=False)
        with mock.patch('verification.management.commands.verify.verification_service') as service:
            service.run.return_value = [result]
            out = self.assertExitCode(4, 'verify', suite='lp', seed=3)
        self.assertIn('FAILED', out)
        self.assertIn('dual_witness_pairing: seed 42', out)
