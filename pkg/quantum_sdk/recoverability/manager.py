from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple

import numpy as np
from django.utils import timezone
from pydantic import ValidationError

from . import __version__
from .errors import RecoverabilityError
from .fixed_point_structure import (
    build_sufficient_instance,
    membership_test,
    random_sufficient_setup,
    sufficiency_structure,
)
from .quantum_objects import DensityMatrix, QuantumChannel, identity_channel, random_channel, random_state
from .recovery import l2_equality_check, main_theorem_experiment, petz_map
from .schemas import Aggregates, ExperimentConfig, GapRecord, InstanceRecord, Report
from .sigma_lp import InterpolationFunction, SigmaLpContext, three_lines_check

logger = logging.getLogger(__name__)

THETA_GRID = tuple(k / 10 for k in range(1, 10))
DPI_SLACK = 1e-9
EQUALITY_SLACK = 1e-9


def block_layout(dim: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Random split of ``dim`` into blocks ``(d_L, d_R)``."""
    layout = []
    remaining = dim
    while remaining:
        size = int(rng.integers(1, remaining + 1))
        divisors = [d for d in range(1, size + 1) if size % d == 0]
        d_R = int(rng.choice(divisors))
        layout.append((size // d_R, d_R))
        remaining -= size
    return layout


class ExperimentManager:
    """Seeded sweep over random and block-built instances; records are merged in trial order."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.tolerances = config.tolerances

    def run(self) -> Report:
        seeds = np.random.SeedSequence(self.config.seed).spawn(self.config.trials)
        logger.info("running %d trials on %d worker(s)", self.config.trials, self.config.workers)
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                batches = list(pool.map(self._run_trial, range(self.config.trials), seeds))
        else:
            batches = [self._run_trial(trial, seed) for trial, seed in enumerate(seeds)]
        records = [record for batch in batches for record in batch]
        report = Report(
            version=__version__,
            generated_at=timezone.now(),
            config=self.config,
            records=records,
            aggregates=Aggregates.from_records(records),
        )
        logger.info(
            "experiment finished: %d records, %d failed", report.aggregates.records, report.aggregates.failed
        )
        return report

    def _run_trial(self, trial: int, seed: np.random.SeedSequence) -> List[InstanceRecord]:
        random_seed, constructed_seed = (int(s.generate_state(1, np.uint64)[0]) for s in seed.spawn(2))
        kind = "identity" if self.config.identity else "random"
        records = [self._guarded(trial, random_seed, kind, self._random_instance)]
        if self.config.constructed:
            records.append(self._guarded(trial, constructed_seed, "constructed", self._constructed_instance))
        return records

    def _guarded(self, trial: int, seed: int, kind: str, build: Callable[[InstanceRecord], None]) -> InstanceRecord:
        record = InstanceRecord(trial=trial, seed=seed, kind=kind)
        try:
            build(record)
        except (RecoverabilityError, ValidationError, np.linalg.LinAlgError) as exc:
            logger.warning("trial %d (%s, seed %d) failed: %s", trial, kind, seed, exc)
            record.error = f"{type(exc).__name__}: {exc}"
            record.failures.append("error")
        record.passed = not record.failures
        return record

    def _random_instance(self, record: InstanceRecord) -> None:
        rng = np.random.default_rng(record.seed)
        dim = self.config.dim
        if self.config.identity:
            channel = identity_channel(dim, self.tolerances)
        else:
            channel = random_channel(dim, dim, self.config.env_dim, rng, self.tolerances)
        rho = random_state(dim, dim, rng, self.tolerances)
        sigma = random_state(dim, dim, rng, self.tolerances)
        self._measure(record, channel, rho, sigma)

    def _constructed_instance(self, record: InstanceRecord) -> None:
        rng = np.random.default_rng(record.seed)
        layout = block_layout(self.config.dim, rng)
        setup = random_sufficient_setup(layout, int(rng.integers(2**63)), self.config.env_dim, self.tolerances)
        structure = sufficiency_structure(setup.channel, setup.sigma, int(rng.integers(2**31)), self.tolerances)
        rho = build_sufficient_instance(structure, rng)
        record.membership = membership_test(rho, structure)
        self._measure(record, setup.channel, rho, setup.sigma)
        if not record.membership:
            record.failures.append("membership")
        if record.recovery_error is not None and record.recovery_error > self.tolerances.suff:
            record.failures.append("recovery")
        if any(abs(gap) > EQUALITY_SLACK for gap in record.finite_gaps):
            record.failures.append("equality")

    def _measure(self, record: InstanceRecord, channel: QuantumChannel, rho: DensityMatrix, sigma: DensityMatrix):
        petz = petz_map(channel, sigma, self.tolerances)
        tau_checks = []
        for alpha in self.config.alphas:
            report = main_theorem_experiment(channel, rho, sigma, alpha, self.tolerances, petz=petz)
            record.gaps.append(
                GapRecord(
                    alpha=alpha, lhs=report.dpi_lhs, rhs=report.dpi_rhs, gap=report.gap, undefined=report.gap is None
                )
            )
            record.recovery_error = report.recovery_error
            record.sufficient = report.sufficient
            if report.tau_norm_preserved is not None:
                tau_checks.append(report.tau_norm_preserved)
        if tau_checks:
            record.tau_norm_preserved = all(tau_checks)
            if not record.tau_norm_preserved:
                record.failures.append("tau")
        l2 = l2_equality_check(channel, rho, sigma, self.tolerances, petz=petz)
        record.l2_gap = l2.divergence_gap
        record.l2_consistent = l2.consistent
        if not l2.consistent:
            record.failures.append("l2")
        if any(gap < -DPI_SLACK for gap in record.finite_gaps):
            record.failures.append("dpi")
        f = InterpolationFunction.build(rho.matrix, self.config.alphas[0], SigmaLpContext(sigma, self.tolerances))
        three_lines = three_lines_check(f, THETA_GRID)
        record.three_lines_slack = three_lines.min_slack
        if not three_lines.holds:
            record.failures.append("three-lines")
