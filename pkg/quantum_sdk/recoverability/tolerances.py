from __future__ import annotations

from functools import lru_cache
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class Tolerances(BaseModel):
    """Numerical thresholds carried by states, channels and reports."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    herm: float = Field(default=1e-10, gt=0, description="Relative Hermiticity tolerance")
    psd: float = Field(default=1e-10, gt=0, description="Relative tolerance on negative eigenvalues")
    recon: float = Field(default=1e-10, gt=0, description="Relative reconstruction tolerance of factorizations")
    num: float = Field(default=1e-10, gt=0, description="Generic numerical tolerance (trace, trace preservation, CP)")
    rel_cutoff: Optional[float] = Field(
        default=None, gt=0, description="Relative spectral cutoff; None means dim * machine epsilon"
    )
    support: float = Field(default=1e-10, ge=0, description="Allowed trace leakage outside a support")
    alpha_guard: float = Field(default=1e-6, gt=0, description="Excluded band around alpha = 1")
    gap: float = Field(default=1e-10, ge=0, description="Absolute DPI gap (nats) treated as equality")
    suff: float = Field(default=1e-8, ge=0, description="Trace-norm recovery error treated as sufficient")
    l2_recovery: float = Field(default=1e-6, ge=0, description="Recovery side of the alpha = 2 equality test")
    fix: float = Field(default=1e-8, gt=0, description="Fixed-point and block structure checks")
    cesaro_max_doublings: int = Field(default=60, ge=1, description="Averaging doublings before giving up")
    null_space: float = Field(default=1e-9, gt=0, description="Singular values below this span a null space")
    isometry: float = Field(default=1e-9, gt=0, description="Relative norm-preservation tolerance")
    holomorphy: float = Field(default=1e-6, gt=0, description="Relative Cauchy-Riemann residual bound")
    degenerate_norm: float = Field(default=1e-14, gt=0, description="Norms below this are treated as zero")
    decompose_retries: int = Field(default=5, ge=0, description="Reseeded retries of the block decomposition")


def _configured_overrides() -> dict:
    try:
        from django.conf import settings
        from django.core.exceptions import ImproperlyConfigured
    except ImportError:  # pragma: no cover
        return {}
    try:
        return dict(getattr(settings, "RECOVERABILITY_TOLERANCES", {}) or {})
    except ImproperlyConfigured:
        return {}


@lru_cache(maxsize=1)
def default_tolerances() -> Tolerances:
    """Tolerances from ``settings.RECOVERABILITY_TOLERANCES`` over the model defaults."""
    return Tolerances(**_configured_overrides())


def resolve(tolerances: Optional[Tolerances]) -> Tolerances:
    return tolerances if tolerances is not None else default_tolerances()
