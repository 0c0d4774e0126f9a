"""Dispersive-fiber spectrometer: group delay, detectors and a time-tag Monte Carlo.

Each beamsplitter output port feeds one long fiber whose chromatic
dispersion maps wavelength to arrival time, then a 50/50 split onto two
detector channels (port 1 -> channels 1, 2 on fiber A; port 2 -> channels
3, 4 on fiber B).
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateInput, DomainError, InvalidArgument
from .interference import BeamsplitterSpec, bunching_spectrum, coincidence_spectrum
from .rng import block_generator, uniforms
from .spectral import C_NM_THZ, JointSpectralAmplitude

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))
DEFAULT_BIN_PS = 16.0
BLOCK_PULSES = 2**20
_PAIR_CHUNK = 2**20


@dataclass(frozen=True)
class DispersionCurve:
    """Group delay ``t(lam) = sum_k coefficients[k] * (lam - lambda_ref)**k`` in ps, lam in nm."""

    coefficients: tuple[float, ...]
    lambda_ref: float
    valid_nm: tuple[float, float]
    label: str = ""
    transmission: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not 1 <= len(coeffs) <= 4:
            raise InvalidArgument("group delay polynomial must have degree <= 3")
        lo, hi = self.valid_nm
        if not 0 < lo < hi:
            raise InvalidArgument(f"bad validity range {self.valid_nm}")
        if not 0.0 <= self.transmission <= 1.0:
            raise InvalidArgument("fiber transmission must lie in [0, 1]")
        slope = np.polynomial.Polynomial(coeffs).deriv()
        ends = slope(np.array([lo, hi]) - self.lambda_ref)
        roots = slope.roots() if slope.degree() > 0 else np.array([])
        inside = [r.real + self.lambda_ref for r in roots if abs(r.imag) < 1e-12 and lo < r.real + self.lambda_ref < hi]
        if np.any(ends == 0) or np.sign(ends[0]) != np.sign(ends[1]) or inside:
            raise InvalidArgument("group delay must be strictly monotonic over the validity range")

    @property
    def poly(self) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial(self.coefficients)


def _in_range(d, lam):
    lam = np.asarray(lam, dtype=float)
    lo, hi = d.valid_nm
    if np.any(~((lam >= lo) & (lam <= hi))):
        raise DomainError(f"wavelength outside dispersion calibration range {lo}-{hi} nm")
    return lam


def group_delay(d: DispersionCurve, lam_nm):
    return d.poly(_in_range(d, lam_nm) - d.lambda_ref)


def dispersion_slope(d: DispersionCurve, lam_nm):
    """``dt/dlambda`` in ps/nm."""
    return d.poly.deriv()(_in_range(d, lam_nm) - d.lambda_ref)


def invert_group_delay(d: DispersionCurve, t_ps):
    """Wavelength (nm) whose group delay is ``t_ps``; bisection then Newton polish."""
    t = np.asarray(t_ps, dtype=float)
    lo, hi = d.valid_nm
    p = d.poly
    dp = p.deriv()
    t_lo, t_hi = p(lo - d.lambda_ref), p(hi - d.lambda_ref)
    sign = 1.0 if t_hi > t_lo else -1.0
    tmin, tmax = min(t_lo, t_hi), max(t_lo, t_hi)
    if np.any(~((t >= tmin) & (t <= tmax))):
        raise DomainError(f"arrival time outside invertible range {tmin:.3f}-{tmax:.3f} ps")
    a = np.full(t.shape, float(lo))
    b = np.full(t.shape, float(hi))
    for _ in range(60):
        m = 0.5 * (a + b)
        above = sign * (p(m - d.lambda_ref) - t) > 0
        b = np.where(above, m, b)
        a = np.where(above, a, m)
    x = 0.5 * (a + b)
    for _ in range(2):
        x = np.clip(x - (p(x - d.lambda_ref) - t) / dp(x - d.lambda_ref), lo, hi)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class DetectorChannel:
    id: int
    efficiency: float
    jitter_fwhm: float  # ps
    background_rate: float = 0.0  # counts/s
    offset_ps: float = 0.0  # trigger-to-detector delay

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise InvalidArgument(f"channel id must be 1..4, got {self.id}")
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidArgument("channel efficiency must lie in [0, 1]")
        if not self.jitter_fwhm > 0:
            raise InvalidArgument("jitter_fwhm must be positive")
        if not self.background_rate >= 0:
            raise InvalidArgument("background_rate must be >= 0")

    @property
    def jitter_sigma(self) -> float:
        return self.jitter_fwhm / FWHM_PER_SIGMA


@dataclass(frozen=True)
class SpectrometerTopology:
    """Port 1 -> fiber A -> channels 1, 2; port 2 -> fiber B -> channels 3, 4.

    ``coupling`` is an extra per-port power transmission (fiber connectors,
    polarization control) applied on top of the fiber transmission.
    """

    fiber_a: DispersionCurve
    fiber_b: DispersionCurve
    channels: tuple[DetectorChannel, ...]
    coupling: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        ids = sorted(ch.id for ch in self.channels)
        if ids != [1, 2, 3, 4]:
            raise InvalidArgument(f"topology needs four distinct channels 1..4, got {ids}")
        object.__setattr__(self, "channels", tuple(sorted(self.channels, key=lambda ch: ch.id)))
        if len(self.coupling) != 2 or not all(0.0 <= c <= 1.0 for c in self.coupling):
            raise InvalidArgument("coupling must be two values in [0, 1]")

    def channel(self, cid: int) -> DetectorChannel:
        if cid not in (1, 2, 3, 4):
            raise InvalidArgument(f"unknown channel {cid}")
        return self.channels[cid - 1]

    @staticmethod
    def port_of(cid: int) -> int:
        if cid not in (1, 2, 3, 4):
            raise InvalidArgument(f"unknown channel {cid}")
        return 1 if cid <= 2 else 2

    def fiber(self, port: int) -> DispersionCurve:
        return self.fiber_a if port == 1 else self.fiber_b

    def survival(self, cid: int) -> float:
        port = self.port_of(cid)
        return self.fiber(port).transmission * self.coupling[port - 1] * self.channel(cid).efficiency


def default_topology() -> SpectrometerTopology:
    """Two standard telecom fibers (1.3 km and 2.3 km) and four SNSPD channels."""
    valid = (1450.0, 1700.0)
    fiber_a = DispersionCurve((5000.0, 24.0, 0.037), 1570.0, valid, "A 1.3 km", 0.77)
    fiber_b = DispersionCurve((6500.0, 41.9, 0.065), 1570.0, valid, "B 2.3 km", 0.87)
    channels = (
        DetectorChannel(1, 0.87, 120.0, 300.0),
        DetectorChannel(2, 0.85, 150.0, 300.0),
        DetectorChannel(3, 0.67, 175.0, 300.0),
        DetectorChannel(4, 0.81, 150.0, 300.0),
    )
    return SpectrometerTopology(fiber_a, fiber_b, channels)


def singles_resolution(ch: DetectorChannel, d: DispersionCurve, at_lambda: float) -> float:
    """Single-photon spectral resolution ``jitter / |dt/dlambda|`` in nm."""
    slope = abs(float(dispersion_slope(d, at_lambda)))
    if slope == 0:
        raise DegenerateInput("zero dispersion slope")
    return ch.jitter_fwhm / slope


def coincidence_resolution(r1: float, r2: float) -> float:
    """Joint resolution of two channels, ``(r1**-2 + r2**-2)**-0.5``."""
    if not (r1 > 0 and r2 > 0):
        raise InvalidArgument("resolutions must be positive")
    return (r1**-2 + r2**-2) ** -0.5


def round_half_up(x: float, places: int = 1) -> float:
    """Decimal rounding with ties away from zero, as printed tables do."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class SourceRates:
    rep_rate: float = 76.0  # MHz
    pair_prob: float = 0.001  # pairs per pulse

    def __post_init__(self):
        if not self.rep_rate > 0:
            raise InvalidArgument("rep_rate must be positive")
        if not 0.0 <= self.pair_prob <= 1.0:
            raise InvalidArgument("pair_prob must lie in [0, 1]")

    @property
    def window_ps(self) -> float:
        return 1e6 / self.rep_rate


TAG_DTYPE = np.dtype([("channel", "u1"), ("pulse", "<u8"), ("offset_fs", "<i8")])


@dataclass(frozen=True, eq=False)
class TimeTags:
    """Ordered tag records plus run bookkeeping."""

    records: np.ndarray
    window_ps: float
    n_pulses: int = 0
    dropped: int = 0

    def __post_init__(self):
        rec = np.asarray(self.records)
        if rec.dtype != TAG_DTYPE:
            rec = rec.astype(TAG_DTYPE)
        object.__setattr__(self, "records", rec)

    def __len__(self):
        return self.records.size

    @property
    def channel(self):
        return self.records["channel"]

    @property
    def pulse(self):
        return self.records["pulse"]

    @property
    def offset_ps(self):
        return self.records["offset_fs"] * 1e-3


def _sort_records(rec):
    return rec[np.lexsort((rec["channel"], rec["offset_fs"], rec["pulse"]))]


def merge_timetags(parts) -> TimeTags:
    """Combine pulse-range shards into one ordered stream."""
    parts = list(parts)
    if not parts:
        raise InvalidArgument("nothing to merge")
    rec = _sort_records(np.concatenate([p.records for p in parts]))
    return TimeTags(rec, parts[0].window_ps, sum(p.n_pulses for p in parts), sum(p.dropped for p in parts))


def _outcome_table(jsa, delta_t, bs):
    spectra = [
        coincidence_spectrum(jsa, delta_t, bs).inten,
        bunching_spectrum(jsa, delta_t, bs, 1).inten,
        bunching_spectrum(jsa, delta_t, bs, 2).inten,
    ]
    cdf = np.cumsum(np.concatenate([s.ravel() for s in spectra]))
    if not cdf[-1] > 0:
        raise DegenerateInput("interference spectra carry no probability")
    return cdf / cdf[-1]


def _photon_tags(topo, port, nu, pulses, u_split, u_survive, u_jitter):
    """Tags of one photon per pulse entering ``port``; returns (channel, pulse, t, keep)."""
    fiber = topo.fiber(port)
    first, second = (1, 2) if port == 1 else (3, 4)
    cid = np.where(u_split < 0.5, first, second).astype(np.uint8)
    surv = np.array([0.0] + [topo.survival(c) for c in (1, 2, 3, 4)])[cid]
    sigma = np.array([0.0] + [ch.jitter_sigma for ch in topo.channels])[cid]
    offset = np.array([0.0] + [ch.offset_ps for ch in topo.channels])[cid]
    t = group_delay(fiber, C_NM_THZ / nu) + offset + sigma * ndtri(u_jitter)
    return cid, pulses, t, u_survive < surv


def _pair_records(jsa, cdf, topo, pulses, seed):
    grid = jsa.grid
    n1, n2 = grid.shape
    ua = uniforms(seed, pulses, 0)
    ub = uniforms(seed, pulses, 1)
    uc = uniforms(seed, pulses, 2)
    flat = np.minimum(np.searchsorted(cdf, ua[:, 0], side="right"), cdf.size - 1)
    kind, cell = np.divmod(flat, n1 * n2)
    i, j = np.divmod(cell, n2)
    nu1 = grid.nu1[i] + (ua[:, 1] - 0.5) * grid.d_nu1
    nu2 = grid.nu2[j] + (ua[:, 2] - 0.5) * grid.d_nu2
    # coincidence: nu1 -> port 1, nu2 -> port 2; bunching: both photons into one port
    port_a = np.where(kind == 2, 2, 1)
    port_b = np.where(kind == 1, 1, 2)
    tags = []
    for nu, port, us, uv, uj in ((nu1, port_a, ua[:, 3], ub[:, 0], ub[:, 1]), (nu2, port_b, ub[:, 2], ub[:, 3], uc[:, 0])):
        parts = []
        for p in (1, 2):
            sel = port == p
            parts.append(_photon_tags(topo, p, nu[sel], pulses[sel], us[sel], uv[sel], uj[sel]))
        tags.append(tuple(np.concatenate(x) for x in zip(*parts)))
    cid = np.concatenate([tags[0][0], tags[1][0]])
    pul = np.concatenate([tags[0][1], tags[1][1]])
    t = np.concatenate([tags[0][2], tags[1][2]])
    keep = np.concatenate([tags[0][3], tags[1][3]])
    cid, pul, t = cid[keep], pul[keep], t[keep]
    # two photons on one detector in one pulse register once, at the earlier time
    order = np.lexsort((t, cid, pul))
    cid, pul, t = cid[order], pul[order], t[order]
    first = np.ones(cid.size, dtype=bool)
    first[1:] = (pul[1:] != pul[:-1]) | (cid[1:] != cid[:-1])
    return cid[first], pul[first], t[first]


def simulate_timetags(
    jsa: JointSpectralAmplitude,
    delta_t: float,
    topo: SpectrometerTopology,
    bs: BeamsplitterSpec,
    rates: SourceRates,
    duration: float,
    seed: int,
    pulse_range: tuple[int, int] | None = None,
) -> TimeTags:
    """Forward Monte Carlo of the tag stream for ``duration`` seconds of pulses.

    Pair emission and background are drawn per block of ``BLOCK_PULSES``
    pulses from a generator keyed by ``(seed, block)``; every per-pair draw
    comes from the counter-based stream keyed by ``(seed, pulse, draw)``.
    Any block-aligned ``pulse_range`` therefore reproduces exactly the
    corresponding slice of the full run, so shards can be merged with
    :func:`merge_timetags`.
    """
    if not duration >= 0:
        raise InvalidArgument("duration must be >= 0")
    n_total = int(round(duration * rates.rep_rate * 1e6))
    start, stop = (0, n_total) if pulse_range is None else (int(pulse_range[0]), int(pulse_range[1]))
    if start % BLOCK_PULSES or not 0 <= start <= stop <= n_total:
        raise InvalidArgument(f"pulse_range must be block-aligned within [0, {n_total}]")
    window = rates.window_ps
    cdf = _outcome_table(jsa, delta_t, bs) if rates.pair_prob > 0 and stop > start else None

    pair_pulses, bg = [], []
    for block in range(start // BLOCK_PULSES, -(-stop // BLOCK_PULSES)):
        b0 = block * BLOCK_PULSES
        b1 = min(b0 + BLOCK_PULSES, stop)
        nb = b1 - b0
        g = block_generator(seed, block)
        k = g.binomial(nb, rates.pair_prob)
        pair_pulses.append(b0 + np.sort(g.choice(nb, size=k, replace=False)).astype(np.uint64))
        for ch in topo.channels:
            m = g.poisson(ch.background_rate * nb / (rates.rep_rate * 1e6))
            pul = b0 + g.integers(0, nb, size=m).astype(np.uint64)
            bg.append((np.full(m, ch.id, dtype=np.uint8), pul, g.uniform(0.0, window, size=m)))

    pulses = np.concatenate(pair_pulses) if pair_pulses else np.zeros(0, np.uint64)
    cids, puls, ts = [], [], []
    for c0 in range(0, pulses.size, _PAIR_CHUNK):
        c, p, t = _pair_records(jsa, cdf, topo, pulses[c0 : c0 + _PAIR_CHUNK], seed)
        cids.append(c)
        puls.append(p)
        ts.append(t)
    for c, p, t in bg:
        cids.append(c)
        puls.append(p)
        ts.append(t)
    if cids:
        cid, pul, t = np.concatenate(cids), np.concatenate(puls), np.concatenate(ts)
    else:
        cid, pul, t = np.zeros(0, np.uint8), np.zeros(0, np.uint64), np.zeros(0)
    inside = (t >= 0) & (t < window)
    rec = np.empty(int(inside.sum()), dtype=TAG_DTYPE)
    rec["channel"] = cid[inside]
    rec["pulse"] = pul[inside]
    rec["offset_fs"] = np.rint(t[inside] * 1e3).astype(np.int64)
    return TimeTags(_sort_records(rec), window, stop - start, int((~inside).sum()))


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Counts over ``(t_i, t_j)`` bins; bin ``k`` spans ``origin + k*bin_width`` onward."""

    pair: tuple[int, int]
    counts: np.ndarray
    bin_width: float = DEFAULT_BIN_PS
    origin: float = 0.0
    dropped_multi: int = 0
    outside: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise InvalidArgument("histogram counts must be 2-D")
        if not self.bin_width > 0:
            raise InvalidArgument("bin_width must be positive")
        if np.any(counts < 0):
            raise InvalidArgument("histogram counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def edges(self, axis: int) -> np.ndarray:
        n = self.counts.shape[axis]
        return self.origin + self.bin_width * np.arange(n + 1)

    def centers(self, axis: int) -> np.ndarray:
        e = self.edges(axis)
        return 0.5 * (e[:-1] + e[1:])

    def __add__(self, other: "CoincidenceHistogram") -> "CoincidenceHistogram":
        if other.pair != self.pair or other.counts.shape != self.counts.shape or other.bin_width != self.bin_width or other.origin != self.origin:
            raise InvalidArgument("histograms are not on the same binning")
        return CoincidenceHistogram(
            self.pair, self.counts + other.counts, self.bin_width, self.origin,
            self.dropped_multi + other.dropped_multi, self.outside + other.outside,
        )


def _n_bins(tags, bin_width, origin, n_bins):
    if n_bins is None:
        n_bins = int(np.ceil((tags.window_ps - origin) / bin_width))
    if n_bins < 1:
        raise InvalidArgument("histogram needs at least one bin")
    return n_bins


def _check_ordered(tags):
    if tags.pulse.size > 1 and np.any(tags.pulse[1:] < tags.pulse[:-1]):
        raise InvalidArgument("tags must be ordered by pulse index")


def _single_tag_pulses(tags, cid):
    sel = tags.channel == cid
    pulses, counts = np.unique(tags.pulse[sel], return_counts=True)
    return pulses, counts


def accumulate_coincidences(tags: TimeTags, pair, bin_width: float = DEFAULT_BIN_PS, origin: float = 0.0, n_bins=None) -> CoincidenceHistogram:
    """2-D arrival-time histogram of pulses with exactly one tag on each channel of ``pair``.

    Pulses where both channels fired but either fired more than once are
    dropped and counted in ``dropped_multi``; coincidences falling outside the
    histogram range are counted in ``outside``.
    """
    a, b = (int(c) for c in pair)
    for c in (a, b):
        if c not in (1, 2, 3, 4):
            raise InvalidArgument(f"unknown channel {c} in pair")
    if a == b:
        raise InvalidArgument("a coincidence pair needs two distinct channels")
    if not bin_width > 0:
        raise InvalidArgument("bin_width must be positive")
    _check_ordered(tags)
    n = _n_bins(tags, bin_width, origin, n_bins)
    pa, ca = _single_tag_pulses(tags, a)
    pb, cb = _single_tag_pulses(tags, b)
    both, ia, ib = np.intersect1d(pa, pb, assume_unique=True, return_indices=True)
    good = (ca[ia] == 1) & (cb[ib] == 1)
    keep = both[good]
    ta = _offsets_for(tags, a, keep)
    tb = _offsets_for(tags, b, keep)
    ka = np.floor((ta - origin) / bin_width).astype(np.int64)
    kb = np.floor((tb - origin) / bin_width).astype(np.int64)
    ok = (ka >= 0) & (ka < n) & (kb >= 0) & (kb < n)
    counts = np.bincount(ka[ok] * n + kb[ok], minlength=n * n).reshape(n, n)
    return CoincidenceHistogram((a, b), counts, float(bin_width), float(origin), int((~good).sum()), int((~ok).sum()))


def _offsets_for(tags, cid, pulses):
    sel = (tags.channel == cid) & np.isin(tags.pulse, pulses)
    return tags.offset_ps[sel]


def coincident_pulses(tags: TimeTags, pair) -> np.ndarray:
    """Pulses that carry exactly one tag on each channel of ``pair``."""
    pa, ca = _single_tag_pulses(tags, pair[0])
    pb, cb = _single_tag_pulses(tags, pair[1])
    both, ia, ib = np.intersect1d(pa, pb, assume_unique=True, return_indices=True)
    return both[(ca[ia] == 1) & (cb[ib] == 1)]


def arrival_histogram(tags: TimeTags, channel: int, bin_width: float = DEFAULT_BIN_PS, origin: float = 0.0, n_bins=None, pulses=None) -> np.ndarray:
    """1-D arrival-time histogram of one channel, optionally restricted to ``pulses``."""
    n = _n_bins(tags, bin_width, origin, n_bins)
    sel = tags.channel == channel
    if pulses is not None:
        sel &= np.isin(tags.pulse, pulses)
    k = np.floor((tags.offset_ps[sel] - origin) / bin_width).astype(np.int64)
    k = k[(k >= 0) & (k < n)]
    return np.bincount(k, minlength=n)


def singles_counts(tags: TimeTags) -> dict[int, int]:
    return {c: int(np.sum(tags.channel == c)) for c in (1, 2, 3, 4)}
