"""Pydantic models for experiment configuration and reports."""

from __future__ import annotations

import math
from datetime import datetime
from typing import Annotated, Any, Dict, List, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator, model_validator

from .tolerances import Tolerances, default_tolerances


def _parse_extended(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in {"inf", "+inf", "infinity"}:
        return math.inf
    if isinstance(value, str) and value.strip().lower() in {"-inf", "-infinity"}:
        return -math.inf
    return value


def _serialize_extended(value: float) -> Any:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


ExtendedReal = Annotated[
    float,
    BeforeValidator(_parse_extended),
    PlainSerializer(_serialize_extended, when_used="json"),
]
"""Float that may be +inf; written to JSON as the string ``"inf"``."""

OptionalExtendedReal = Optional[ExtendedReal]

ALPHA_MARGIN = 1e-3


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(default=3, ge=2, le=16, description="Dimension of the input space")
    env_dim: int = Field(default=2, ge=1, description="Environment dimension of random Stinespring channels")
    trials: int = Field(default=10, ge=1, description="Number of seeded trials")
    alphas: List[float] = Field(default_factory=lambda: [1.5, 2.0, 4.0], description="Sandwiched Renyi orders")
    seed: int = Field(ge=0, lt=2**64, description="Root seed; trial seeds are spawned from it")
    tolerances: Tolerances = Field(default_factory=default_tolerances)
    output_path: Optional[str] = Field(default=None, description="Report destination; stdout when empty")
    workers: int = Field(default=1, ge=1, description="Threads running trials")
    identity: bool = Field(default=False, description="Force the identity channel for random instances")
    constructed: bool = Field(default=True, description="Also run a block-built sufficient instance per trial")

    @field_validator("alphas")
    @classmethod
    def _alphas_above_one(cls, alphas: List[float]) -> List[float]:
        if not alphas:
            raise ValueError("at least one alpha is required")
        for alpha in alphas:
            if not alpha > 1.0 + ALPHA_MARGIN:
                raise ValueError(f"alpha {alpha} must exceed 1 + {ALPHA_MARGIN}")
        return alphas


class GapRecord(BaseModel):
    alpha: float
    lhs: ExtendedReal
    rhs: ExtendedReal
    gap: OptionalExtendedReal = None
    undefined: bool = False


class InstanceRecord(BaseModel):
    trial: int
    seed: int
    kind: Literal["random", "identity", "constructed"]
    gaps: List[GapRecord] = Field(default_factory=list)
    recovery_error: Optional[float] = None
    sufficient: Optional[bool] = None
    membership: Optional[bool] = None
    l2_gap: Optional[float] = None
    l2_consistent: Optional[bool] = None
    three_lines_slack: Optional[float] = None
    tau_norm_preserved: Optional[bool] = None
    passed: bool = True
    failures: List[str] = Field(default_factory=list)
    error: Optional[str] = None

    @property
    def finite_gaps(self) -> List[float]:
        return [g.gap for g in self.gaps if g.gap is not None and not math.isinf(g.gap)]


class Aggregates(BaseModel):
    records: int
    passed: int
    failed: int
    errors: int
    min_gap: OptionalExtendedReal = None
    min_gap_not_sufficient: OptionalExtendedReal = None
    max_recovery_error_constructed: Optional[float] = None
    l2_violations: int = 0
    counts: Dict[str, int] = Field(default_factory=dict)

    @classmethod
    def from_records(cls, records: List[InstanceRecord]) -> "Aggregates":
        gaps = [gap for r in records for gap in r.finite_gaps]
        not_sufficient = [gap for r in records if r.sufficient is False for gap in r.finite_gaps]
        constructed = [r.recovery_error for r in records if r.kind == "constructed" and r.recovery_error is not None]
        counts: Dict[str, int] = {}
        for r in records:
            counts[r.kind] = counts.get(r.kind, 0) + 1
        return cls(
            records=len(records),
            passed=sum(r.passed for r in records),
            failed=sum(not r.passed for r in records),
            errors=sum(r.error is not None for r in records),
            min_gap=min(gaps, default=None),
            min_gap_not_sufficient=min(not_sufficient, default=None),
            max_recovery_error_constructed=max(constructed, default=None),
            l2_violations=sum(r.l2_consistent is False for r in records),
            counts=counts,
        )


class Report(BaseModel):
    version: str
    generated_at: datetime
    config: ExperimentConfig
    records: List[InstanceRecord]
    aggregates: Aggregates

    @model_validator(mode="after")
    def _aggregates_match_records(self):
        if self.aggregates != Aggregates.from_records(self.records):
            raise ValueError("aggregates do not match the records")
        return self

    @property
    def passed(self) -> bool:
        return self.aggregates.failed == 0
