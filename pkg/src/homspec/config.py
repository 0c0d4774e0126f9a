"""Run configuration: a YAML document validated into typed model objects."""
from __future__ import annotations

import os
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field

from .interference import BeamsplitterSpec
from .source import CollectionSpec, CrystalSpec, PumpSpec, SourceSpec, load_sellmeier
from .spectral import C_NM_THZ, FrequencyGrid, make_grid
from .spectrometer import DetectorChannel, DispersionCurve, SourceRates, SpectrometerTopology, default_topology

OUTPUT_ENV = "HOMSPEC_OUTPUT_DIR"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PumpConfig(_Strict):
    center_lambda_nm: float = Field(gt=0)
    fwhm_nm: float = Field(gt=0)
    fwhm_basis: Literal["intensity", "amplitude"] = "intensity"


class CrystalConfig(_Strict):
    length_mm: float = Field(gt=0)
    poling_period_um: float = Field(gt=0)
    sellmeier_file: str | None = None
    pump_axis: str = "y"
    signal_axis: str = "y"
    idler_axis: str = "z"


class CollectionConfig(_Strict):
    theta_deg: float = Field(default=0.0, ge=0)
    waist_um: float = Field(default=286.7, gt=0)
    tilted_port: Literal["port1", "port2"] = "port2"
    bias_thz: float = 0.0


class SourceConfig(_Strict):
    pump: PumpConfig
    crystal: CrystalConfig
    collection: CollectionConfig = CollectionConfig()


class GridConfig(_Strict):
    center_lambda_nm: float = Field(gt=0)
    span_thz: float = Field(gt=0)
    n: int = Field(ge=2)


class FiberConfig(_Strict):
    coefficients: list[float] = Field(min_length=1, max_length=4)
    lambda_ref_nm: float
    valid_nm: tuple[float, float]
    transmission: float = Field(default=1.0, ge=0, le=1)


class ChannelConfig(_Strict):
    id: int = Field(ge=1, le=4)
    efficiency: float = Field(ge=0, le=1)
    jitter_fwhm_ps: float = Field(gt=0)
    background_rate: float = Field(default=0.0, ge=0)
    offset_ps: float = 0.0


class TopologyConfig(_Strict):
    fiber_a: FiberConfig
    fiber_b: FiberConfig
    channels: list[ChannelConfig] = Field(min_length=4, max_length=4)
    coupling: tuple[float, float] = (1.0, 1.0)


class RatesConfig(_Strict):
    rep_rate_mhz: float = Field(default=76.0, gt=0)
    pair_prob: float = Field(default=0.001, ge=0, le=1)


class ScanConfig(_Strict):
    delays_ps: list[float] | None = None
    start_ps: float = -3.0
    stop_ps: float = 3.0
    n: int = Field(default=121, ge=1)

    def delays(self) -> np.ndarray:
        if self.delays_ps is not None:
            return np.asarray(self.delays_ps, dtype=float)
        return np.linspace(self.start_ps, self.stop_ps, self.n)


class FiltersConfig(_Strict):
    widths_thz: list[float] = [0.44, 15.0]
    reduction: float = Field(default=0.0, ge=0, lt=1)


class SpectrometerConfig(_Strict):
    delta_t_ps: float = 0.0
    duration_s: float = Field(default=1.0, ge=0)
    bin_width_ps: float = Field(default=16.0, gt=0)


class BeamsplitterConfig(_Strict):
    transmission: float = Field(default=0.5, ge=0, le=1)


class RunConfig(_Strict):
    source: SourceConfig
    grid: GridConfig
    beamsplitter: BeamsplitterConfig = BeamsplitterConfig()
    topology: TopologyConfig | None = None
    rates: RatesConfig = RatesConfig()
    scan: ScanConfig = ScanConfig()
    filters: FiltersConfig = FiltersConfig()
    spectrometer: SpectrometerConfig = SpectrometerConfig()
    seed: int = Field(default=0, ge=0, lt=2**64)
    output: str = "out"

    def with_overrides(self, **changes) -> "RunConfig":
        return self.model_copy(update=changes)

    # builders for the domain objects

    def pump(self) -> PumpSpec:
        p = self.source.pump
        return PumpSpec(p.center_lambda_nm, p.fwhm_nm, fwhm_basis=p.fwhm_basis)

    def crystal(self) -> CrystalSpec:
        c = self.source.crystal
        sets = load_sellmeier(c.sellmeier_file)
        return CrystalSpec(c.length_mm, c.poling_period_um, sets[c.pump_axis], sets[c.signal_axis], sets[c.idler_axis])

    def collection(self, bias: float | None = None) -> CollectionSpec:
        c = self.source.collection
        return CollectionSpec(c.theta_deg, c.waist_um, c.tilted_port, c.bias_thz if bias is None else bias)

    def source_spec(self, bias: float | None = None) -> SourceSpec:
        return SourceSpec(self.pump(), self.crystal(), self.collection(bias))

    def frequency_grid(self) -> FrequencyGrid:
        g = self.grid
        return make_grid(C_NM_THZ / g.center_lambda_nm, g.span_thz, g.n)

    def bs(self) -> BeamsplitterSpec:
        return BeamsplitterSpec(self.beamsplitter.transmission)

    def spectrometer_topology(self) -> SpectrometerTopology:
        if self.topology is None:
            return default_topology()
        t = self.topology

        def fiber(f, label):
            return DispersionCurve(tuple(f.coefficients), f.lambda_ref_nm, tuple(f.valid_nm), label, f.transmission)

        chans = tuple(DetectorChannel(c.id, c.efficiency, c.jitter_fwhm_ps, c.background_rate, c.offset_ps) for c in t.channels)
        return SpectrometerTopology(fiber(t.fiber_a, "A"), fiber(t.fiber_b, "B"), chans, tuple(t.coupling))

    def source_rates(self) -> SourceRates:
        return SourceRates(self.rates.rep_rate_mhz, self.rates.pair_prob)

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output)


def load_config(path) -> RunConfig:
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return RunConfig.model_validate(doc)


def reference_config() -> RunConfig:
    """Bundled configuration of the reference source and spectrometer, calibrated values included."""
    text = resources.files("homspec.data").joinpath("reference.yaml").read_text(encoding="utf-8")
    return RunConfig.model_validate(yaml.safe_load(text))
