"""Direct sampling reconstruction of elastic moment-tensor point sources."""

from .elastic_model import LameParameters, MomentTensorSource, SourceConfiguration
from .synth_data import (
    CauchyDataset,
    FrequencyLadder,
    MeasurementGeometry,
    NoiseSpec,
    add_noise,
    build_geometry,
    frequency_ladder,
    generate_cauchy_data,
)
from .imaging import DirectionQuadrature, IndicatorValue, direction_quadrature, indicator
from .recon import SamplingGrid, evaluate_field, extract_peaks, refine_peaks, read_tensors, build_report

__version__ = "0.1.0"
