"""Geomorphon landform analysis, perceived terrain realism scoring and
synthetic terrain generation."""

from .geomorphon import (
    CLASS_NAMES,
    FEATURE_NAMES,
    GeomorphonClass,
    GeomorphonHistogram,
    GeomorphonMap,
    GeomorphonParams,
    classify_cell,
    classify_map,
    geomorphon_histogram,
    histogram,
    ternary_pattern,
)
from .metric import Calibration, load_calibration, normalize_features, ptrm_score, save_calibration
from .raster import HeightField, fill_voids, hillshade, load_dem, resample, save_dem
from . import corpus, samples, stats, synth

__version__ = "0.1.0"
