"""Fitting free source parameters to quoted spectra and visibilities."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NotMeasurable
from .interference import BeamsplitterSpec, FilterSpec, scan_hom, visibility
from .source import CollectionSpec, CrystalSpec, PumpSpec, build_jsa
from .spectral import FrequencyGrid, bandwidth_nm_to_thz, fwhm, intensity_of, marginal


def signal_fwhm_thz(pump: PumpSpec, crystal: CrystalSpec, grid: FrequencyGrid) -> float:
    jsi = intensity_of(build_jsa(pump, crystal, grid))
    return fwhm(grid.nu1, marginal(jsi, 1))


def calibrate_crystal_length(
    pump: PumpSpec,
    crystal: CrystalSpec,
    grid: FrequencyGrid,
    target_fwhm_nm: float,
    center_lambda: float,
    bracket=(0.5, 10.0),
    xtol: float = 1e-6,
) -> float:
    """Crystal length (mm) whose signal marginal has the target FWHM.

    The target is converted to frequency with the linearised relation at
    ``center_lambda``. A marginal too broad for the grid counts as too wide.
    """
    target = bandwidth_nm_to_thz(target_fwhm_nm, center_lambda)
    span = grid.nu1[-1] - grid.nu1[0]

    def excess(length):
        try:
            return signal_fwhm_thz(pump, replace(crystal, length=length), grid) - target
        except NotMeasurable:
            return span

    lo, hi = bracket
    if np.sign(excess(lo)) == np.sign(excess(hi)):
        raise DomainError(f"target marginal FWHM {target_fwhm_nm} nm not bracketed by lengths {bracket} mm")
    return float(brentq(excess, lo, hi, xtol=xtol))


def misaligned_visibility(pump, crystal, grid, collection: CollectionSpec, delays, full_width=None) -> float:
    jsa = build_jsa(pump, crystal, grid, collection)
    filt = None if full_width is None else FilterSpec("tophat", None, full_width)
    return visibility(scan_hom(jsa, delays, BeamsplitterSpec(), filt))


def calibrate_waist(
    pump: PumpSpec,
    crystal: CrystalSpec,
    grid: FrequencyGrid,
    collection: CollectionSpec,
    target_visibility: float,
    delays,
    bracket=(50.0, 600.0),
    xtol: float = 1e-4,
) -> float:
    """Collection waist (um) giving ``target_visibility`` unfiltered at the collection tilt."""

    def excess(w0):
        return misaligned_visibility(pump, crystal, grid, replace(collection, waist_w0=w0), delays) - target_visibility

    lo, hi = bracket
    if np.sign(excess(lo)) == np.sign(excess(hi)):
        raise DomainError(f"target visibility {target_visibility} not bracketed by waists {bracket} um")
    return float(brentq(excess, lo, hi, xtol=xtol))


def waist_sweep(pump, crystal, grid, collection: CollectionSpec, waists, delays, narrow_width: float = 0.44):
    """Rows of ``(w0, unfiltered V, V at narrow_width)`` for a fixed tilt."""
    rows = []
    for w0 in waists:
        coll = replace(collection, waist_w0=float(w0))
        rows.append((float(w0), misaligned_visibility(pump, crystal, grid, coll, delays),
                     misaligned_visibility(pump, crystal, grid, coll, delays, narrow_width)))
    return np.array(rows)
