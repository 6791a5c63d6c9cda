"""Numerical services behind the petzlab management commands."""
