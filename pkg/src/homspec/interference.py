"""Frequency-resolved two-photon interference at a beamsplitter.

For a JSA ``C(nu1, nu2)`` with exchange partner ``C_T = C(nu2, nu1)`` and a
delay ``dt`` (ps) the output densities are

* coincidence (one photon per port, ``nu1`` at port 1):
  ``|T*C - R*C_T*exp(-2j*pi*(nu1-nu2)*dt)|**2``
* bunching, either port:
  ``(T*R/2) * |C + C_T*exp(-2j*pi*(nu1-nu2)*dt)|**2``

so that for a normalized JSA the three channels integrate to one pair and the
coincidence rate far from the dip is ``T**2 + R**2`` (1/2 for a balanced
splitter).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInput, InvalidArgument
from .spectral import FrequencyGrid, JointSpectralAmplitude, normalize

KINDS = ("coincidence", "bunch_port1", "bunch_port2")


@dataclass(frozen=True)
class BeamsplitterSpec:
    transmission: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.transmission <= 1.0:
            raise InvalidArgument(f"transmission must lie in [0, 1], got {self.transmission}")

    @property
    def reflection(self) -> float:
        return 1.0 - self.transmission


@dataclass(frozen=True, eq=False)
class InterferenceSpectrum:
    grid: FrequencyGrid
    inten: np.ndarray
    delta_t: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown spectrum kind {self.kind!r}")
        inten = np.array(self.inten, dtype=float)
        inten.setflags(write=False)
        object.__setattr__(self, "inten", inten)


@dataclass(frozen=True, eq=False)
class HomScan:
    delays: np.ndarray
    r_c: np.ndarray
    r_b1: np.ndarray
    r_b2: np.ndarray
    baseline: float
    r_c_err: np.ndarray | None = None
    baseline_err: float | None = None

    def __post_init__(self):
        n = len(self.delays)
        for name in ("r_c", "r_b1", "r_b2"):
            if len(getattr(self, name)) != n:
                raise InvalidArgument(f"{name} length differs from delays")


@dataclass(frozen=True, eq=False)
class FilterSpec:
    """Top-hat (square in both frequencies) or explicit per-cell weight mask."""

    kind: str = "tophat"
    center_nu: float | None = None
    full_width: float | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "tophat":
            if self.full_width is None or not self.full_width > 0:
                raise InvalidArgument("top-hat filter needs full_width > 0")
        elif self.kind == "mask":
            if self.mask is None:
                raise InvalidArgument("mask filter needs a weight matrix")
            m = np.asarray(self.mask, dtype=float)
            if np.any((m < 0) | (m > 1)) or not np.all(np.isfinite(m)):
                raise InvalidArgument("mask weights must lie in [0, 1]")
        else:
            raise InvalidArgument(f"unknown filter kind {self.kind!r}")

    def weights(self, grid: FrequencyGrid) -> np.ndarray:
        if self.kind == "mask":
            m = np.asarray(self.mask, dtype=float)
            if m.shape != grid.shape:
                raise InvalidArgument(f"mask shape {m.shape} does not match grid {grid.shape}")
            return m
        c1 = self.center_nu if self.center_nu is not None else 0.5 * (grid.nu1[0] + grid.nu1[-1])
        c2 = self.center_nu if self.center_nu is not None else 0.5 * (grid.nu2[0] + grid.nu2[-1])
        half = 0.5 * self.full_width
        tol = 1e-9 * max(grid.d_nu1, grid.d_nu2)
        m1 = np.abs(grid.nu1 - c1) <= half + tol
        m2 = np.abs(grid.nu2 - c2) <= half + tol
        return np.outer(m1, m2).astype(float)


def _exchange_pair(jsa):
    if not jsa.grid.is_square:
        raise InvalidArgument("interference needs a square, axis-matched grid")
    return jsa.amp, jsa.amp.T


def _phase(grid, delta_t):
    if not np.isfinite(delta_t):
        raise InvalidArgument("delta_t must be finite")
    dnu = grid.nu1[:, None] - grid.nu2[None, :]
    return np.exp(-2j * np.pi * dnu * delta_t)


def coincidence_spectrum(jsa: JointSpectralAmplitude, delta_t: float, bs: BeamsplitterSpec = BeamsplitterSpec()):
    c, ct = _exchange_pair(jsa)
    t, r = bs.transmission, bs.reflection
    inten = np.abs(t * c - r * ct * _phase(jsa.grid, delta_t)) ** 2
    return InterferenceSpectrum(jsa.grid, inten, float(delta_t), "coincidence")


def coincidence_spectrum_real(jsa_mag: JointSpectralAmplitude, delta_t: float, bs: BeamsplitterSpec = BeamsplitterSpec()):
    """Coincidence density for a real JSA, written with the cosine fringe explicitly."""
    if not jsa_mag.is_real:
        raise InvalidArgument("real-form interference needs a real amplitude")
    c, ct = _exchange_pair(jsa_mag)
    c, ct = c.real, ct.real
    t, r = bs.transmission, bs.reflection
    if not np.isfinite(delta_t):
        raise InvalidArgument("delta_t must be finite")
    dnu = jsa_mag.grid.nu1[:, None] - jsa_mag.grid.nu2[None, :]
    inten = t**2 * c**2 + r**2 * ct**2 - 2.0 * t * r * c * ct * np.cos(2.0 * np.pi * dnu * delta_t)
    return InterferenceSpectrum(jsa_mag.grid, np.maximum(inten, 0.0), float(delta_t), "coincidence")


def bunching_spectrum(jsa: JointSpectralAmplitude, delta_t: float, bs: BeamsplitterSpec = BeamsplitterSpec(), port: int = 1):
    if port not in (1, 2):
        raise InvalidArgument(f"port must be 1 or 2, got {port}")
    c, ct = _exchange_pair(jsa)
    t, r = bs.transmission, bs.reflection
    inten = 0.5 * t * r * np.abs(c + ct * _phase(jsa.grid, delta_t)) ** 2
    return InterferenceSpectrum(jsa.grid, inten, float(delta_t), f"bunch_port{port}")


def integrate_rate(spec: InterferenceSpectrum, filter: FilterSpec | np.ndarray | None = None) -> float:
    """Rate ``sum(filter * I) * dnu1 * dnu2``; no filter means all ones."""
    grid = spec.grid
    if filter is None:
        w = 1.0
    elif isinstance(filter, FilterSpec):
        w = filter.weights(grid)
    else:
        w = np.asarray(filter, dtype=float)
        if w.shape != grid.shape:
            raise InvalidArgument(f"filter shape {w.shape} does not match grid {grid.shape}")
    return float(np.sum(w * spec.inten) * grid.cell_measure)


def _weights(filter, grid):
    if filter is None:
        return np.ones(grid.shape)
    if isinstance(filter, FilterSpec):
        return filter.weights(grid)
    w = np.asarray(filter, dtype=float)
    if w.shape != grid.shape:
        raise InvalidArgument(f"filter shape {w.shape} does not match grid {grid.shape}")
    return w


def _integrated_rates(jsa, delays, bs, w):
    """Coincidence and per-port bunching rates for all delays via one matrix product."""
    c, ct = _exchange_pair(jsa)
    grid = jsa.grid
    t, r = bs.transmission, bs.reflection
    dm = grid.cell_measure
    p = np.sum(w * np.abs(c) ** 2) * dm
    pt = np.sum(w * np.abs(ct) ** 2) * dm
    x = w * c * np.conj(ct)
    # exp(+2j*pi*(nu1-nu2)*dt) = u(nu1) * conj(u(nu2))
    u = np.exp(2j * np.pi * np.outer(grid.nu1, delays))
    cross = np.real(np.sum(u * (x @ np.conj(u)), axis=0)) * dm
    r_c = t**2 * p + r**2 * pt - 2.0 * t * r * cross
    r_b = 0.5 * t * r * (p + pt + 2.0 * cross)
    baseline = t**2 * p + r**2 * pt
    return np.maximum(r_c, 0.0), np.maximum(r_b, 0.0), float(baseline)


def scan_hom(jsa: JointSpectralAmplitude, delays, bs: BeamsplitterSpec = BeamsplitterSpec(), filter=None) -> HomScan:
    """Integrated coincidence and bunching rates versus delay.

    The baseline is the analytic large-delay coincidence rate, where the
    interference term averages out.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or delays.size == 0 or not np.all(np.isfinite(delays)):
        raise InvalidArgument("delays must be a non-empty 1-D array of finite values")
    w = _weights(filter, jsa.grid)
    r_c, r_b, baseline = _integrated_rates(jsa, delays, bs, w)
    return HomScan(delays, r_c, r_b, r_b.copy(), baseline)


def dip_minimum(delays, rates) -> float:
    """Lowest rate, refined by a parabola through the lowest sample and its neighbours."""
    delays = np.asarray(delays, dtype=float)
    rates = np.asarray(rates, dtype=float)
    order = np.argsort(delays)
    delays, rates = delays[order], rates[order]
    i = int(np.argmin(rates))
    best = float(rates[i])
    if i == 0 or i == rates.size - 1:
        return best
    x0, x1, x2 = delays[i - 1 : i + 2]
    y0, y1, y2 = rates[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if not a > 0:
        return best
    xv = -b / (2.0 * a)
    yv = y1 + a * (xv - x1) ** 2 + (2 * a * x1 + b) * (xv - x1)
    return float(min(best, max(yv, 0.0)))


def visibility(scan: HomScan) -> float:
    """``(baseline - min r_c) / baseline``."""
    if not scan.baseline > 0:
        raise DegenerateInput("visibility undefined for a zero baseline")
    return (scan.baseline - dip_minimum(scan.delays, scan.r_c)) / scan.baseline


def visibility_vs_bandwidth(
    jsa: JointSpectralAmplitude,
    delays,
    widths,
    bs: BeamsplitterSpec = BeamsplitterSpec(),
    center_nu: float | None = None,
    reduction: float = 0.0,
) -> np.ndarray:
    """Visibility for centred top-hat post-selection filters of each full width.

    ``reduction`` scales every visibility by ``1 - reduction``, a global
    allowance for imperfections outside the model. Returns an ``(k, 2)`` array
    of ``(width, V)`` rows.
    """
    widths = np.asarray(widths, dtype=float)
    if widths.ndim != 1 or np.any(~(widths > 0)) or np.any(np.diff(widths) <= 0):
        raise InvalidArgument("widths must be positive and ascending")
    out = np.empty((widths.size, 2))
    for k, width in enumerate(widths):
        scan = scan_hom(jsa, delays, bs, FilterSpec("tophat", center_nu, width))
        out[k] = width, visibility(scan) * (1.0 - reduction)
    return out


def exchange_symmetrized(jsa: JointSpectralAmplitude) -> JointSpectralAmplitude:
    """``(C + C_T)/2``, renormalized: an exactly exchange-symmetric source."""
    c, ct = _exchange_pair(jsa)
    return normalize(JointSpectralAmplitude(jsa.grid, 0.5 * (c + ct)))


def write_scan(path, scan: HomScan) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        header = ["delay_ps", "r_c", "r_b1", "r_b2", "baseline"]
        if scan.r_c_err is not None:
            header.append("r_c_err")
        out.writerow(header)
        for i, d in enumerate(scan.delays):
            row = [repr(float(d)), repr(float(scan.r_c[i])), repr(float(scan.r_b1[i])), repr(float(scan.r_b2[i])), repr(float(scan.baseline))]
            if scan.r_c_err is not None:
                row.append(repr(float(scan.r_c_err[i])))
            out.writerow(row)
    return path


def read_scan(path) -> HomScan:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InvalidArgument(f"{path}: empty scan file")
    col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
    err = col("r_c_err") if "r_c_err" in rows[0] else None
    return HomScan(col("delay_ps"), col("r_c"), col("r_b1"), col("r_b2"), float(rows[0]["baseline"]), err)
