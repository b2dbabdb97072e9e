"""Distributionally robust stopping thresholds."""
