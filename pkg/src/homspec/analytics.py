"""Arrival-time to spectrum reconstruction, counting statistics and scan assembly."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import BaselineUndefined, DegenerateInput, InvalidArgument, NotMeasurable
from .interference import FilterSpec, HomScan, dip_minimum
from .spectral import C_NM_THZ, FrequencyGrid, JointSpectralIntensity, fwhm, normalize
from .spectrometer import CoincidenceHistogram, DispersionCurve, SpectrometerTopology, TimeTags, group_delay

CALIBRATION_VERSION = 1


@dataclass(frozen=True)
class CalibrationSet:
    """Per-channel dispersion curve and constant trigger-to-detector offset (ps)."""

    curves: dict[int, DispersionCurve]
    offsets: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.curves:
            raise InvalidArgument("calibration maps no channels")
        missing = set(self.offsets) - set(self.curves)
        if missing:
            raise InvalidArgument(f"offsets given for uncalibrated channels {sorted(missing)}")

    def curve(self, cid: int) -> DispersionCurve:
        if cid not in self.curves:
            raise InvalidArgument(f"channel {cid} has no calibration")
        return self.curves[cid]

    def offset(self, cid: int) -> float:
        return float(self.offsets.get(cid, 0.0))

    @classmethod
    def from_topology(cls, topo: SpectrometerTopology) -> "CalibrationSet":
        curves = {ch.id: topo.fiber(topo.port_of(ch.id)) for ch in topo.channels}
        return cls(curves, {ch.id: ch.offset_ps for ch in topo.channels})


def _curve_doc(d):
    return {
        "coefficients": list(d.coefficients),
        "lambda_ref_nm": d.lambda_ref,
        "valid_nm": list(d.valid_nm),
        "transmission": d.transmission,
    }


def write_calibration(path, cal: CalibrationSet) -> Path:
    """YAML calibration file: named fibers plus a channel -> (fiber, offset) table."""
    fibers, names, channels = {}, {}, {}
    for cid in sorted(cal.curves):
        d = cal.curves[cid]
        key = id(d)
        if key not in names:
            names[key] = d.label or f"fiber{len(fibers) + 1}"
            fibers[names[key]] = _curve_doc(d)
        channels[cid] = {"fiber": names[key], "offset_ps": cal.offset(cid)}
    doc = {"version": CALIBRATION_VERSION, "fibers": fibers, "channels": channels}
    path = Path(path)
    path.write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
    return path


def read_calibration(path) -> CalibrationSet:
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("version") != CALIBRATION_VERSION:
        raise InvalidArgument(f"{path}: unsupported calibration version")
    curves = {}
    for name, f in doc["fibers"].items():
        curves[name] = DispersionCurve(
            tuple(f["coefficients"]), float(f["lambda_ref_nm"]), tuple(f["valid_nm"]), name, float(f.get("transmission", 1.0))
        )
    chans, offsets = {}, {}
    for cid, c in doc["channels"].items():
        if c["fiber"] not in curves:
            raise InvalidArgument(f"{path}: channel {cid} references unknown fiber {c['fiber']!r}")
        chans[int(cid)] = curves[c["fiber"]]
        offsets[int(cid)] = float(c.get("offset_ps", 0.0))
    return CalibrationSet(chans, offsets)


def cell_time_intervals(nu, d: DispersionCurve, offset: float = 0.0):
    """Arrival-time interval ``(lo, hi)`` covered by each frequency cell centred on ``nu``.

    Cell edges are clipped to the calibration range, so a cell outside it
    has an empty interval.
    """
    nu = np.asarray(nu, dtype=float)
    step = (nu[-1] - nu[0]) / (nu.size - 1)
    edges = np.concatenate([nu - 0.5 * step, [nu[-1] + 0.5 * step]])
    lam = np.clip(C_NM_THZ / edges, *d.valid_nm)
    t = group_delay(d, lam) + offset
    return np.minimum(t[:-1], t[1:]), np.maximum(t[:-1], t[1:])


def remap_matrix(nu, d: DispersionCurve, offset: float, bin_edges) -> np.ndarray:
    """``M[k, b]``: fraction of time bin ``b`` falling inside frequency cell ``k``.

    Counts are taken as uniform in time within each bin, so an arrival-time
    histogram ``h`` maps to cell counts ``M @ h`` exactly, Jacobian included.
    """
    lo, hi = cell_time_intervals(nu, d, offset)
    e = np.asarray(bin_edges, dtype=float)
    width = np.diff(e)
    overlap = np.minimum(hi[:, None], e[None, 1:]) - np.maximum(lo[:, None], e[None, :-1])
    return np.clip(overlap, 0.0, None) / width[None, :]


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Counts per target cell plus bookkeeping; ``jsi`` is the normalized density."""

    grid: FrequencyGrid
    counts: np.ndarray
    total: float
    deposited: float
    out_of_range: float
    remap: tuple[np.ndarray, np.ndarray] | None = None
    hist: np.ndarray | None = None  # source histogram, axes in (nu1, nu2) order

    @property
    def density(self) -> np.ndarray:
        return self.counts / self.grid.cell_measure

    @property
    def jsi(self) -> JointSpectralIntensity:
        if not self.deposited > 0:
            raise DegenerateInput("nothing deposited on the target grid")
        return normalize(JointSpectralIntensity(self.grid, np.clip(self.density, 0.0, None)))

    def wavelength_density(self) -> np.ndarray:
        """Counts per nm^2, using the exact wavelength width of each cell."""
        return self.counts / np.outer(_cell_dlam(self.grid.nu1), _cell_dlam(self.grid.nu2))

    def variance(self, expected=None) -> np.ndarray:
        """Poisson variance of each cell, propagated through the shared time bins.

        ``expected`` is the mean histogram; the observed one stands in for it by default.
        """
        m1, m2 = self.remap
        h = self.hist if expected is None else np.asarray(expected, dtype=float)
        return (m1 * m1) @ h @ (m2 * m2).T


def _cell_dlam(nu):
    step = (nu[-1] - nu[0]) / (nu.size - 1)
    return C_NM_THZ / (nu - 0.5 * step) - C_NM_THZ / (nu + 0.5 * step)


def _axis_channels(pair):
    """Histogram axes in (nu1, nu2) order: the port-1 channel carries nu1."""
    a, b = pair
    swap = a >= 3 and b <= 2
    return (b, a, True) if swap else (a, b, False)


def reconstruct_jsi(h: CoincidenceHistogram, cal: CalibrationSet, target: FrequencyGrid) -> Reconstruction:
    """Map a coincidence histogram onto a frequency grid.

    Each time bin's content is spread uniformly over the bin and shared
    among the target cells by exact interval overlap of the mapped cell
    edges, so the result is a density with the dispersion Jacobian built in.
    Content that lands on no target cell is reported as ``out_of_range``.
    """
    c1, c2, swap = _axis_channels(h.pair)
    counts = np.asarray(h.counts, dtype=float)
    if swap:
        counts = counts.T
    e1 = h.origin + h.bin_width * np.arange(counts.shape[0] + 1)
    e2 = h.origin + h.bin_width * np.arange(counts.shape[1] + 1)
    m1 = remap_matrix(target.nu1, cal.curve(c1), cal.offset(c1), e1)
    m2 = remap_matrix(target.nu2, cal.curve(c2), cal.offset(c2), e2)
    cells = m1 @ counts @ m2.T
    total = float(counts.sum())
    deposited = float(cells.sum())
    return Reconstruction(target, cells, total, deposited, total - deposited, (m1, m2), counts)


@dataclass(frozen=True)
class RateModel:
    pair_rate: float  # pairs/s
    eta1: float
    eta2: float

    def __post_init__(self):
        if not self.pair_rate >= 0:
            raise InvalidArgument("pair_rate must be >= 0")
        for eta in (self.eta1, self.eta2):
            if not 0.0 <= eta <= 1.0:
                raise InvalidArgument("efficiencies must lie in [0, 1]")

    @classmethod
    def pulsed(cls, rep_rate_mhz: float, pair_prob: float, eta1: float, eta2: float) -> "RateModel":
        return cls(rep_rate_mhz * 1e6 * pair_prob, eta1, eta2)


def expected_coincidence_rate(m: RateModel) -> float:
    return m.pair_rate * m.eta1 * m.eta2


def bin_relative_uncertainty(rate: float, integration: float, bins_in_fwhm: float, hom_split: bool = False) -> float:
    """Relative Poisson error ``1/sqrt(N)`` of one spectral bin."""
    if not (rate > 0 and integration > 0 and bins_in_fwhm > 0):
        raise InvalidArgument("rate, integration and bins_in_fwhm must be positive")
    n = rate * integration / bins_in_fwhm
    if hom_split:
        n *= 0.5
    return float(n**-0.5)


def klyshko_efficiency(coincidences: float, heralding_singles: float) -> float:
    if not heralding_singles > 0:
        raise InvalidArgument("heralding singles must be positive")
    if not 0 <= coincidences <= heralding_singles:
        raise InvalidArgument("coincidences must lie in [0, singles]")
    return coincidences / heralding_singles


def klyshko_error(coincidences: float, heralding_singles: float) -> float:
    """Binomial standard error of the Klyshko estimate."""
    eta = klyshko_efficiency(coincidences, heralding_singles)
    return float(np.sqrt(eta * (1.0 - eta) / heralding_singles))


def klyshko_from_tags(tags: TimeTags, herald_channels, target_channels) -> tuple[int, int]:
    """``(coincidences, heralding singles)`` counted per pulse.

    A pulse heralds when any herald channel fired; it is a coincidence when
    any target channel fired as well.
    """
    herald = np.unique(tags.pulse[np.isin(tags.channel, list(herald_channels))])
    target = np.unique(tags.pulse[np.isin(tags.channel, list(target_channels))])
    return int(np.intersect1d(herald, target, assume_unique=True).size), int(herald.size)


def dip_width_estimate(delays, rates) -> float:
    """FWHM of the dip, measured on the scan inverted about its highest rate."""
    delays = np.asarray(delays, dtype=float)
    rates = np.asarray(rates, dtype=float)
    order = np.argsort(delays)
    depth = np.max(rates) - rates[order]
    if not np.max(depth) > 0:
        raise BaselineUndefined("flat scan: no dip to size the baseline wings")
    try:
        return fwhm(delays[order], depth)
    except NotMeasurable as exc:
        raise BaselineUndefined(f"dip width not measurable: {exc}") from exc


def scan_from_histograms(
    delays,
    histograms,
    cal: CalibrationSet,
    target: FrequencyGrid,
    filter: FilterSpec | None = None,
    dip_width: float | None = None,
    wing_factor: float = 3.0,
) -> HomScan:
    """Per-delay integrated coincidence counts from reconstructed spectra.

    ``histograms[k]`` is one histogram or a list of histograms (summed after
    reconstruction, e.g. all cross-port channel pairs) for ``delays[k]``.
    The baseline is the mean rate over delays with
    ``|dt| > wing_factor * dip_width``; ``dip_width`` defaults to an estimate
    from the scan itself. Errors are Poisson, propagated through the shared
    time bins.
    """
    delays = np.asarray(delays, dtype=float)
    if len(histograms) != delays.size:
        raise InvalidArgument("need one histogram set per delay")
    w = np.ones(target.shape) if filter is None else filter.weights(target)
    pairs = None
    rates = np.empty(delays.size)
    var = np.empty(delays.size)
    for k, hs in enumerate(histograms):
        hs = [hs] if isinstance(hs, CoincidenceHistogram) else list(hs)
        these = sorted(h.pair for h in hs)
        if pairs is None:
            pairs = these
        elif these != pairs:
            raise InvalidArgument(f"delay {delays[k]}: channel pairs {these} differ from {pairs}")
        r = v = 0.0
        for h in hs:
            rec = reconstruct_jsi(h, cal, target)
            m1, m2 = rec.remap
            r += float(np.sum(w * rec.counts))
            # each time bin contributes with weight (m1^T w m2)[a, b]
            g = m1.T @ w @ m2
            v += float(np.sum(rec.hist * g * g))
        rates[k], var[k] = r, v
    if not np.any(rates > 0):
        raise BaselineUndefined("all histograms are empty")
    width = dip_width if dip_width is not None else dip_width_estimate(delays, rates)
    wing = np.abs(delays) > wing_factor * width
    if wing.sum() < 2:
        raise BaselineUndefined(f"only {int(wing.sum())} delays beyond {wing_factor} x dip width {width:.4g} ps")
    baseline = float(rates[wing].mean())
    baseline_err = float(np.sqrt(var[wing].sum()) / wing.sum())
    zeros = np.zeros_like(rates)
    return HomScan(delays, rates, zeros, zeros.copy(), baseline, np.sqrt(var), baseline_err)


def visibility_with_error(scan: HomScan) -> tuple[float, float]:
    """Visibility and its 1-sigma error from the scan's rate and baseline errors."""
    if not scan.baseline > 0:
        raise DegenerateInput("visibility undefined for a zero baseline")
    m = dip_minimum(scan.delays, scan.r_c)
    v = (scan.baseline - m) / scan.baseline
    if scan.r_c_err is None:
        return v, float("nan")
    sm = float(scan.r_c_err[np.argmin(scan.r_c)])
    sb = scan.baseline_err or 0.0
    return v, float(np.hypot(sm / scan.baseline, m * sb / scan.baseline**2))
