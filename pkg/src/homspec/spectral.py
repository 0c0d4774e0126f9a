"""Frequency grids, joint spectral amplitude/intensity containers and Schmidt analysis.

Frequencies are ordinary frequencies in THz and times are in ps, so every
interference phase reads ``2*pi*dnu*dt`` with no stray factors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidArgument, NotMeasurable, NumericError

# speed of light in nm*THz
C_NM_THZ = 299792.458

_UNIFORM_RTOL = 1e-9
_SCHMIDT_CUTOFF = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def _check_axis(nu, name):
    if nu.ndim != 1 or nu.size < 2:
        raise InvalidArgument(f"{name} must be a 1-D axis with at least 2 samples")
    if not np.all(np.isfinite(nu)):
        raise InvalidArgument(f"{name} contains non-finite values")
    step = np.diff(nu)
    if np.any(step <= 0):
        raise InvalidArgument(f"{name} must be strictly ascending")
    d = (nu[-1] - nu[0]) / (nu.size - 1)
    if np.max(np.abs(step - d)) > _UNIFORM_RTOL * max(abs(nu[-1]), abs(nu[0]), d):
        raise InvalidArgument(f"{name} is not uniformly spaced")


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Uniform signal (``nu1``) and idler (``nu2``) frequency axes in THz."""

    nu1: np.ndarray
    nu2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nu1", _frozen(self.nu1))
        object.__setattr__(self, "nu2", _frozen(self.nu2))
        _check_axis(self.nu1, "nu1")
        _check_axis(self.nu2, "nu2")

    @property
    def n1(self) -> int:
        return self.nu1.size

    @property
    def n2(self) -> int:
        return self.nu2.size

    @property
    def d_nu1(self) -> float:
        return float((self.nu1[-1] - self.nu1[0]) / (self.n1 - 1))

    @property
    def d_nu2(self) -> float:
        return float((self.nu2[-1] - self.nu2[0]) / (self.n2 - 1))

    @property
    def cell_measure(self) -> float:
        return self.d_nu1 * self.d_nu2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def is_square(self) -> bool:
        """True when both axes are identical, so ``C(nu2, nu1)`` lives on the same grid."""
        return self.n1 == self.n2 and np.allclose(self.nu1, self.nu2, rtol=0, atol=1e-12 * abs(self.nu1).max())

    def mesh(self):
        return np.meshgrid(self.nu1, self.nu2, indexing="ij")

    def same_as(self, other: "FrequencyGrid") -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.nu1, other.nu1, rtol=1e-12, atol=0)
            and np.allclose(self.nu2, other.nu2, rtol=1e-12, atol=0)
        )


@dataclass(frozen=True, eq=False)
class JointSpectralAmplitude:
    grid: FrequencyGrid
    amp: np.ndarray

    def __post_init__(self):
        amp = _frozen(self.amp, dtype=complex)
        if amp.shape != self.grid.shape:
            raise InvalidArgument(f"amplitude shape {amp.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(amp)):
            raise InvalidArgument("amplitude contains non-finite entries")
        object.__setattr__(self, "amp", amp)

    @property
    def is_real(self) -> bool:
        return not np.any(self.amp.imag)

    def l2_measure(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2) * self.grid.cell_measure)

    def transposed(self) -> np.ndarray:
        """Exchange-swapped amplitude ``C(nu2, nu1)`` on the same grid."""
        if not self.grid.is_square:
            raise InvalidArgument("exchange transposition needs a square, axis-matched grid")
        return self.amp.T


@dataclass(frozen=True, eq=False)
class JointSpectralIntensity:
    grid: FrequencyGrid
    inten: np.ndarray

    def __post_init__(self):
        inten = _frozen(self.inten)
        if inten.shape != self.grid.shape:
            raise InvalidArgument(f"intensity shape {inten.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(inten)):
            raise InvalidArgument("intensity contains non-finite entries")
        if np.any(inten < 0):
            raise InvalidArgument("intensity must be nonnegative")
        object.__setattr__(self, "inten", inten)

    def l1_measure(self) -> float:
        return float(np.sum(self.inten) * self.grid.cell_measure)


@dataclass(frozen=True)
class SchmidtResult:
    coefficients: np.ndarray
    schmidt_number: float
    purity: float


def make_grid(center_nu: float, span_nu: float, n: int) -> FrequencyGrid:
    """Square grid of ``n`` samples per axis covering ``center_nu +- span_nu/2``."""
    if not span_nu > 0:
        raise InvalidArgument(f"span_nu must be positive, got {span_nu}")
    if int(n) != n or n < 2:
        raise InvalidArgument(f"n must be an integer >= 2, got {n}")
    axis = center_nu + np.linspace(-0.5 * span_nu, 0.5 * span_nu, int(n))
    return FrequencyGrid(axis, axis.copy())


def wavelength_to_frequency(lam_nm):
    """Vacuum wavelength (nm) to frequency (THz)."""
    lam = np.asarray(lam_nm, dtype=float)
    if np.any(~(lam > 0)):
        raise InvalidArgument("wavelength must be positive")
    return _scalar(C_NM_THZ / lam)


def frequency_to_wavelength(nu_thz):
    nu = np.asarray(nu_thz, dtype=float)
    if np.any(~(nu > 0)):
        raise InvalidArgument("frequency must be positive")
    return _scalar(C_NM_THZ / nu)


def bandwidth_nm_to_thz(delta_lambda_nm, center_lambda_nm):
    """Linearised bandwidth conversion ``dnu = c*dlambda/lambda**2``."""
    if np.any(~(np.asarray(center_lambda_nm) > 0)) or np.any(np.asarray(delta_lambda_nm) < 0):
        raise InvalidArgument("bandwidth must be >= 0 and center wavelength > 0")
    return _scalar(C_NM_THZ * np.asarray(delta_lambda_nm, dtype=float) / np.asarray(center_lambda_nm, dtype=float) ** 2)


def bandwidth_thz_to_nm(delta_nu_thz, center_lambda_nm):
    if np.any(~(np.asarray(center_lambda_nm) > 0)) or np.any(np.asarray(delta_nu_thz) < 0):
        raise InvalidArgument("bandwidth must be >= 0 and center wavelength > 0")
    return _scalar(np.asarray(delta_nu_thz, dtype=float) * np.asarray(center_lambda_nm, dtype=float) ** 2 / C_NM_THZ)


def normalize(obj):
    """Rescale a JSA to unit L2 measure or a JSI to unit L1 measure."""
    if isinstance(obj, JointSpectralAmplitude):
        total = obj.l2_measure()
        if not total > 0:
            raise DegenerateInput("cannot normalize an all-zero amplitude")
        return JointSpectralAmplitude(obj.grid, obj.amp / np.sqrt(total))
    if isinstance(obj, JointSpectralIntensity):
        total = obj.l1_measure()
        if not total > 0:
            raise DegenerateInput("cannot normalize an all-zero intensity")
        return JointSpectralIntensity(obj.grid, obj.inten / total)
    raise InvalidArgument(f"cannot normalize {type(obj).__name__}")


def intensity_of(jsa: JointSpectralAmplitude) -> JointSpectralIntensity:
    return JointSpectralIntensity(jsa.grid, np.abs(jsa.amp) ** 2)


def magnitude_jsa_from_jsi(jsi: JointSpectralIntensity) -> JointSpectralAmplitude:
    """Real, zero-phase amplitude ``sqrt(JSI)``; the only JSA an intensity measurement supports."""
    return JointSpectralAmplitude(jsi.grid, np.sqrt(jsi.inten))


def schmidt_decompose(jsa: JointSpectralAmplitude) -> SchmidtResult:
    """Schmidt coefficients of a sampled JSA.

    The grid measure is absorbed into the matrix before the SVD so that the
    coefficients do not depend on the sampling density. Coefficients below
    1e-10 are dropped before the Schmidt number ``K = 1/sum(lambda**4)`` is
    formed.
    """
    m = jsa.amp * np.sqrt(jsa.grid.cell_measure)
    if not np.all(np.isfinite(m)):
        raise NumericError("non-finite amplitude entries")
    try:
        s = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    norm = np.sqrt(np.sum(s**2))
    if not norm > 0:
        raise NumericError("amplitude has zero norm")
    s = s / norm
    s = s[s > _SCHMIDT_CUTOFF]
    s = s / np.sqrt(np.sum(s**2))
    k = 1.0 / float(np.sum(s**4))
    return SchmidtResult(coefficients=_frozen(s), schmidt_number=k, purity=1.0 / k)


def marginal(jsi: JointSpectralIntensity, axis: int) -> np.ndarray:
    """Marginal spectrum along axis 1 (signal) or 2 (idler)."""
    if axis == 1:
        return jsi.inten.sum(axis=1) * jsi.grid.d_nu2
    if axis == 2:
        return jsi.inten.sum(axis=0) * jsi.grid.d_nu1
    raise InvalidArgument(f"axis must be 1 or 2, got {axis}")


def fwhm(x, y) -> float:
    """Full width at half maximum by linear interpolation at the outermost crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise InvalidArgument("fwhm needs matching 1-D arrays with at least 3 samples")
    half = 0.5 * np.max(y)
    above = np.flatnonzero(y >= half)
    lo, hi = above[0], above[-1]
    if lo == 0 or hi == y.size - 1 or not np.max(y) > 0:
        raise NotMeasurable("curve does not fall below half maximum on both sides")
    x_lo = x[lo - 1] + (half - y[lo - 1]) * (x[lo] - x[lo - 1]) / (y[lo] - y[lo - 1])
    x_hi = x[hi] + (half - y[hi]) * (x[hi + 1] - x[hi]) / (y[hi + 1] - y[hi])
    return float(x_hi - x_lo)
