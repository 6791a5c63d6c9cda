import json
import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from django.utils import timezone
from pydantic import ValidationError

from quantum_sdk.recoverability.errors import StructuralError
from quantum_sdk.recoverability.manager import ExperimentManager, block_layout
from quantum_sdk.recoverability.schemas import (
    Aggregates,
    ExperimentConfig,
    GapRecord,
    InstanceRecord,
    Report,
)


class BlockLayoutTests(SimpleTestCase):
    def test_layout_covers_dimension(self):
        rng = np.random.default_rng(0)
        for dim in range(1, 9):
            layout = block_layout(dim, rng)
            self.assertEqual(sum(d_L * d_R for d_L, d_R in layout), dim)
            self.assertTrue(all(d_L >= 1 and d_R >= 1 for d_L, d_R in layout))


class ExperimentConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = ExperimentConfig(seed=1)
        self.assertEqual(config.dim, 3)
        self.assertEqual(config.alphas, [1.5, 2.0, 4.0])
        self.assertTrue(config.constructed)

    def test_seed_is_required(self):
        with self.assertRaises(ValidationError):
            ExperimentConfig()

    def test_alphas_must_exceed_one(self):
        for alphas in ([1.0], [1.0005], [], [2.0, 0.5]):
            with self.assertRaises(ValidationError):
                ExperimentConfig(seed=1, alphas=alphas)
        self.assertEqual(ExperimentConfig(seed=1, alphas=[1.01]).alphas, [1.01])

    def test_unknown_field(self):
        with self.assertRaises(ValidationError):
            ExperimentConfig(seed=1, dimension=4)


class RecordSerializationTests(SimpleTestCase):
    def test_infinite_gap_written_as_string(self):
        record = GapRecord(alpha=2.0, lhs=math.inf, rhs=1.0, gap=math.inf)
        data = json.loads(record.model_dump_json())
        self.assertEqual(data['lhs'], 'inf')
        self.assertEqual(data['gap'], 'inf')
        self.assertEqual(GapRecord.model_validate_json(record.model_dump_json()).lhs, math.inf)

    def test_finite_gaps_skip_undefined_and_infinite(self):
        record = InstanceRecord(
            trial=0,
            seed=1,
            kind='random',
            gaps=[
                GapRecord(alpha=1.5, lhs=0.3, rhs=0.1, gap=0.2),
                GapRecord(alpha=2.0, lhs=math.inf, rhs=1.0, gap=math.inf),
                GapRecord(alpha=4.0, lhs=math.inf, rhs=math.inf, undefined=True),
            ],
        )
        self.assertEqual(record.finite_gaps, [0.2])

    def test_aggregates_must_match_records(self):
        config = ExperimentConfig(seed=1)
        records = [InstanceRecord(trial=0, seed=1, kind='random', gaps=[GapRecord(alpha=2.0, lhs=0.5, rhs=0.2, gap=0.3)])]
        Report(
            version='0.1.0',
            generated_at=timezone.now(),
            config=config,
            records=records,
            aggregates=Aggregates.from_records(records),
        )
        with self.assertRaises(ValidationError):
            Report(
                version='0.1.0',
                generated_at=timezone.now(),
                config=config,
                records=records,
                aggregates=Aggregates(records=1, passed=1, failed=0, errors=0, min_gap=0.1),
            )


class ExperimentManagerTests(SimpleTestCase):
    def test_small_sweep(self):
        report = ExperimentManager(ExperimentConfig(seed=21, dim=2, trials=2, alphas=[1.5, 2.0])).run()
        aggregates = report.aggregates
        self.assertEqual(aggregates.records, 4)
        self.assertEqual(aggregates.counts, {'random': 2, 'constructed': 2})
        self.assertEqual(aggregates.errors, 0)
        self.assertGreaterEqual(aggregates.min_gap, -1e-9)
        self.assertLessEqual(aggregates.max_recovery_error_constructed, 1e-8)
        for record in report.records:
            self.assertEqual(len(record.gaps), 2)
            self.assertIsNotNone(record.three_lines_slack)
            if record.kind == 'constructed':
                self.assertTrue(record.membership)
                self.assertTrue(record.sufficient)
        self.assertEqual([r.trial for r in report.records], [0, 0, 1, 1])

    def test_identity_sweep_is_sufficient(self):
        config = ExperimentConfig(seed=4, dim=3, trials=2, alphas=[2.0], identity=True, constructed=False)
        report = ExperimentManager(config).run()
        self.assertTrue(report.passed)
        for record in report.records:
            self.assertEqual(record.kind, 'identity')
            self.assertTrue(record.sufficient)
            self.assertTrue(record.tau_norm_preserved)
            self.assertAlmostEqual(record.gaps[0].gap, 0.0, places=12)

    def test_trial_errors_are_recorded(self):
        config = ExperimentConfig(seed=3, dim=2, trials=2, alphas=[2.0], constructed=False)
        with mock.patch(
            'quantum_sdk.recoverability.manager.random_channel', side_effect=StructuralError('channel is not CPTP')
        ):
            report = ExperimentManager(config).run()
        self.assertEqual(report.aggregates.errors, 2)
        self.assertFalse(report.passed)
        record = report.records[0]
        self.assertEqual(record.failures, ['error'])
        self.assertIn('StructuralError', record.error)
        self.assertFalse(record.passed)

    def test_invalid_measurement_is_recorded_as_error(self):
        def malformed(*args, **kwargs):
            return GapRecord(alpha='two', lhs=0.0, rhs=0.0)

        config = ExperimentConfig(seed=3, dim=2, trials=1, alphas=[2.0], constructed=False)
        with mock.patch('quantum_sdk.recoverability.manager.main_theorem_experiment', side_effect=malformed):
            report = ExperimentManager(config).run()
        self.assertEqual(report.aggregates.errors, 1)
        self.assertIn('ValidationError', report.records[0].error)
        self.assertEqual(report.records[0].failures, ['error'])
