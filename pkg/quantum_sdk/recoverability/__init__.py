"""Recoverability toolkit: sigma-weighted Lp norms, quantum divergences, Petz recovery and fixed-point structures."""

__version__ = "0.1.0"
