"""Joint spectral amplitude of a pulsed type-II quasi-phase-matched SPDC source.

The JSA is the product of a Gaussian pump envelope in the sum frequency and
the sinc phase-matching function of a periodically poled crystal, optionally
weighted by a misaligned single-mode collection on one output port.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import DomainError, InvalidArgument
from .spectral import (
    C_NM_THZ,
    FrequencyGrid,
    JointSpectralAmplitude,
    normalize,
)

_FWHM_TO_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class SellmeierSet:
    """Coefficients of ``n^2 = A + sum B_k/(1 - C_k/lam^2) - D*lam^2`` (lam in um)."""

    A: float
    B: tuple[float, ...]
    C: tuple[float, ...]
    D: float
    valid_um: tuple[float, float]
    axis: str = ""
    crystal: str = ""

    def __post_init__(self):
        if len(self.B) != len(self.C):
            raise InvalidArgument("Sellmeier B and C term lists differ in length")
        lo, hi = self.valid_um
        if not 0 < lo < hi:
            raise InvalidArgument(f"bad Sellmeier validity range {self.valid_um}")


@dataclass(frozen=True)
class PumpSpec:
    center_lambda: float  # nm
    fwhm_lambda: float  # nm
    shape: str = "gaussian"
    # which quantity the FWHM describes: the spectral power ("intensity") or the field ("amplitude")
    fwhm_basis: str = "intensity"

    def __post_init__(self):
        if not self.center_lambda > 0:
            raise InvalidArgument("pump center_lambda must be positive")
        if not 0 < self.fwhm_lambda < self.center_lambda:
            raise InvalidArgument("pump fwhm_lambda must lie in (0, center_lambda)")
        if self.shape != "gaussian":
            raise InvalidArgument(f"unsupported pump shape {self.shape!r}")
        if self.fwhm_basis not in ("intensity", "amplitude"):
            raise InvalidArgument(f"fwhm_basis must be 'intensity' or 'amplitude', got {self.fwhm_basis!r}")

    @property
    def center_nu(self) -> float:
        return C_NM_THZ / self.center_lambda

    @property
    def fwhm_nu(self) -> float:
        return C_NM_THZ * self.fwhm_lambda / self.center_lambda**2


@dataclass(frozen=True)
class CrystalSpec:
    length: float  # mm
    poling_period: float  # um
    sellmeier_pump: SellmeierSet
    sellmeier_signal: SellmeierSet
    sellmeier_idler: SellmeierSet

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgument("crystal length must be positive")
        if not self.poling_period > 0:
            raise InvalidArgument("poling period must be positive")


@dataclass(frozen=True)
class CollectionSpec:
    theta: float = 0.0  # degrees
    waist_w0: float = 286.7  # um, calibrated default
    tilted_port: str = "port2"
    bias_detuning: float = 0.0  # THz

    def __post_init__(self):
        if not self.theta >= 0:
            raise InvalidArgument("collection theta must be >= 0")
        if not self.waist_w0 > 0:
            raise InvalidArgument("collection waist_w0 must be positive")
        if self.tilted_port not in ("port1", "port2"):
            raise InvalidArgument(f"tilted_port must be 'port1' or 'port2', got {self.tilted_port!r}")


def load_sellmeier(path=None) -> dict[str, SellmeierSet]:
    """Read a Sellmeier data file; defaults to the bundled KTP sets keyed by axis."""
    if path is None:
        text = resources.files("homspec.data").joinpath("ktp_sellmeier.yaml").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = yaml.safe_load(text)
    crystal = doc.get("crystal", "")
    sets = {}
    for axis, coeffs in doc["axes"].items():
        k = 1
        B, C = [], []
        while f"B{k}" in coeffs:
            B.append(float(coeffs[f"B{k}"]))
            C.append(float(coeffs[f"C{k}"]))
            k += 1
        sets[axis] = SellmeierSet(
            A=float(coeffs["A"]),
            B=tuple(B),
            C=tuple(C),
            D=float(coeffs.get("D", 0.0)),
            valid_um=tuple(float(v) for v in coeffs["valid_um"]),
            axis=axis,
            crystal=crystal,
        )
    return sets


def ktp_crystal(length: float, poling_period: float = 46.15) -> CrystalSpec:
    """Type-II ppKTP: pump and signal (V) on the y axis, idler (H) on the z axis."""
    sets = load_sellmeier()
    return CrystalSpec(length, poling_period, sets["y"], sets["y"], sets["z"])


def _lam_um(s: SellmeierSet, lam_nm):
    lam = np.asarray(lam_nm, dtype=float) * 1e-3
    lo, hi = s.valid_um
    if np.any(~((lam >= lo) & (lam <= hi))):
        bad = lam[~((lam >= lo) & (lam <= hi))].ravel()[0] * 1e3
        raise DomainError(f"wavelength {bad:.3f} nm outside Sellmeier range {lo * 1e3:.0f}-{hi * 1e3:.0f} nm")
    return lam


def refractive_index(s: SellmeierSet, lam_nm):
    lam2 = _lam_um(s, lam_nm) ** 2
    n2 = s.A - s.D * lam2
    for b, c in zip(s.B, s.C):
        n2 = n2 + b / (1.0 - c / lam2)
    return np.sqrt(n2)


def group_index(s: SellmeierSet, lam_nm):
    """Group index ``n - lam*dn/dlam`` from the analytic derivative of the Sellmeier form."""
    lam = _lam_um(s, lam_nm)
    lam2 = lam**2
    n = refractive_index(s, lam_nm)
    dn2 = -2.0 * s.D * lam
    for b, c in zip(s.B, s.C):
        dn2 = dn2 - b * 2.0 * c / lam**3 / (1.0 - c / lam2) ** 2
    return n - lam * dn2 / (2.0 * n)


def wavenumber(s: SellmeierSet, nu_thz):
    """Wavenumber ``2*pi*n/lambda`` in rad/um."""
    lam_nm = C_NM_THZ / np.asarray(nu_thz, dtype=float)
    return 2.0 * np.pi * refractive_index(s, lam_nm) / (lam_nm * 1e-3)


def pump_envelope(p: PumpSpec, nu_sum):
    """Real Gaussian pump amplitude in the sum frequency, peak 1 at ``c/center_lambda``.

    With ``fwhm_basis="intensity"`` the squared envelope has the quoted FWHM;
    with ``"amplitude"`` the envelope itself does.
    """
    x = (np.asarray(nu_sum, dtype=float) - p.center_nu) / p.fwhm_nu
    power = 2.0 if p.fwhm_basis == "intensity" else 4.0
    return np.exp(-power * np.log(2.0) * x**2)


def phase_mismatch(c: CrystalSpec, nu1, nu2):
    """``k_p(nu1+nu2) - k_s(nu1) - k_i(nu2) + 2*pi/poling_period`` in rad/um.

    Signal ``nu1`` and idler ``nu2`` broadcast against each other.
    """
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    return (
        wavenumber(c.sellmeier_pump, nu1 + nu2)
        - wavenumber(c.sellmeier_signal, nu1)
        - wavenumber(c.sellmeier_idler, nu2)
        + 2.0 * np.pi / c.poling_period
    )


def phasematch_amplitude(c: CrystalSpec, nu1, nu2):
    """``sinc(dk*L/2)`` with ``sinc(x) = sin(x)/x``."""
    dk = phase_mismatch(c, nu1, nu2)
    return np.sinc(dk * c.length * 1e3 / (2.0 * np.pi))


def collection_amplitude(coll: CollectionSpec, lam_nm):
    """Field coupling of a Gaussian mode of waist ``w0`` into a fiber tilted by ``theta``."""
    lam_um = np.asarray(lam_nm, dtype=float) * 1e-3
    return np.exp(_log_collection(coll, lam_um))


def _log_collection(coll, lam_um):
    return -0.5 * (np.pi * coll.waist_w0 * np.deg2rad(coll.theta) / lam_um) ** 2


def tuned_poling_period(c: CrystalSpec, nu_degenerate: float) -> float:
    """Poling period that zeroes the phase mismatch at ``nu1 = nu2 = nu_degenerate``."""
    bare = (
        wavenumber(c.sellmeier_pump, 2.0 * nu_degenerate)
        - wavenumber(c.sellmeier_signal, nu_degenerate)
        - wavenumber(c.sellmeier_idler, nu_degenerate)
    )
    return float(-2.0 * np.pi / bare)


def build_jsa(
    p: PumpSpec,
    c: CrystalSpec,
    grid: FrequencyGrid,
    coll: CollectionSpec | None = None,
) -> JointSpectralAmplitude:
    """Normalized JSA on ``grid``.

    A nonzero ``coll.bias_detuning`` moves the JSA center to larger signal and
    smaller idler frequency by that amount; the pump argument is unchanged
    because the two shifts cancel in the sum. A tilted collection multiplies
    the axis of the photon entering ``coll.tilted_port`` (port1 carries the
    signal axis, port2 the idler axis) by its coupling amplitude.
    """
    n1, n2 = grid.mesh()
    bias = coll.bias_detuning if coll is not None else 0.0
    s1, s2 = n1 - bias, n2 + bias
    amp = pump_envelope(p, s1 + s2) * phasematch_amplitude(c, s1, s2)
    if coll is not None and coll.theta > 0:
        nu_axis = grid.nu1 if coll.tilted_port == "port1" else grid.nu2
        log_a = _log_collection(coll, C_NM_THZ / nu_axis * 1e-3)
        # constant offset drops out in normalization and keeps extreme tilts from underflowing
        a = np.exp(log_a - log_a.max())
        amp = amp * (a[:, None] if coll.tilted_port == "port1" else a[None, :])
    return normalize(JointSpectralAmplitude(grid, amp))


@dataclass(frozen=True)
class SourceSpec:
    pump: PumpSpec
    crystal: CrystalSpec
    collection: CollectionSpec | None = field(default=None)

    def jsa(self, grid: FrequencyGrid) -> JointSpectralAmplitude:
        return build_jsa(self.pump, self.crystal, grid, self.collection)
