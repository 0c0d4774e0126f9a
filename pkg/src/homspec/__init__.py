"""Spectrally resolved two-photon interference: SPDC source model, HOM spectra,
dispersive-fiber spectrometer Monte Carlo and reconstruction."""
from .errors import (
    BaselineUndefined,
    DegenerateInput,
    DomainError,
    HomspecError,
    InvalidArgument,
    NotMeasurable,
    NumericError,
)
from .interference import (
    BeamsplitterSpec,
    FilterSpec,
    HomScan,
    InterferenceSpectrum,
    bunching_spectrum,
    coincidence_spectrum,
    coincidence_spectrum_real,
    integrate_rate,
    scan_hom,
    visibility,
    visibility_vs_bandwidth,
)
from .config import RunConfig, load_config, reference_config
from .source import CollectionSpec, CrystalSpec, PumpSpec, SourceSpec, build_jsa, ktp_crystal
from .spectral import (
    FrequencyGrid,
    JointSpectralAmplitude,
    JointSpectralIntensity,
    make_grid,
    schmidt_decompose,
)

__version__ = "0.1.0"
