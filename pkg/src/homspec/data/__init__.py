"""Bundled data files: Sellmeier sets, golden configuration and calibration sweeps."""
