"""Perceived Terrain Realism Metric (PTRM).

The score is an affine function of min-max normalized geomorphon coverages::

    raw = (intercept + sum(weights[i] * features[i])) / divisor

clamped to [0, 1] unless the calibration disables clamping.  Two calibrations
ship with the package: ``ptrm-main`` (the published model) and
``ptrm-validation`` (the average of five 80:20 refits).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .geomorphon import CLASS_NAMES, GeomorphonHistogram, GeomorphonParams

BUILTIN_CALIBRATIONS = ("ptrm-main", "ptrm-validation")


class CalibrationError(ValueError):
    pass


def _vec10(values, name):
    arr = np.array(values, dtype=np.float64)
    if arr.shape != (10,):
        raise CalibrationError(f"{name} must have 10 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CalibrationError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Calibration:
    name: str
    intercept: float
    weights: np.ndarray
    divisor: float
    feature_min: np.ndarray = field(default_factory=lambda: np.zeros(10))
    feature_max: np.ndarray = field(default_factory=lambda: np.ones(10))
    clamp: bool = True
    geomorphon: GeomorphonParams = GeomorphonParams()
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "weights", _vec10(self.weights, "weights"))
        object.__setattr__(self, "feature_min", _vec10(self.feature_min, "feature_min"))
        object.__setattr__(self, "feature_max", _vec10(self.feature_max, "feature_max"))
        if not math.isfinite(self.intercept):
            raise CalibrationError("intercept must be finite")
        if not (math.isfinite(self.divisor) and self.divisor > 0):
            raise CalibrationError(f"divisor must be positive, got {self.divisor}")
        if np.any(self.feature_max < self.feature_min):
            raise CalibrationError("feature_max must be >= feature_min componentwise")
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "divisor", float(self.divisor))
        object.__setattr__(self, "clamp", bool(self.clamp))

    def __eq__(self, other):
        if not isinstance(other, Calibration):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def self_consistent(self) -> "Calibration":
        """Copy whose divisor maps the all-ones feature vector to exactly 1."""
        # the all-ones numerator: intercept + sum(weights)
        divisor = float(self.weights.sum()) + self.intercept
        if divisor <= 0:
            raise CalibrationError("intercept + sum(weights) is not positive")
        return replace(self, divisor=divisor, name=f"{self.name}+self-consistent")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "intercept": self.intercept,
            "weights": [float(w) for w in self.weights],
            "divisor": self.divisor,
            "feature_min": [float(v) for v in self.feature_min],
            "feature_max": [float(v) for v in self.feature_max],
            "clamp": self.clamp,
            "geomorphon": self.geomorphon.to_dict(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Calibration":
        required = ("name", "intercept", "weights", "divisor", "feature_min", "feature_max",
                    "clamp", "geomorphon")
        missing = [k for k in required if k not in doc]
        if missing:
            raise CalibrationError(f"calibration missing fields: {missing}")
        if not isinstance(doc["clamp"], bool):
            raise CalibrationError("clamp must be a boolean")
        geo = doc["geomorphon"]
        try:
            params = GeomorphonParams(geo["search_radius_cells"], geo["flatness_deg"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CalibrationError(f"bad geomorphon block: {exc}") from None
        try:
            return cls(
                name=str(doc["name"]),
                intercept=float(doc["intercept"]),
                weights=doc["weights"],
                divisor=float(doc["divisor"]),
                feature_min=doc["feature_min"],
                feature_max=doc["feature_max"],
                clamp=doc["clamp"],
                geomorphon=params,
                provenance=str(doc.get("provenance", "")),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, CalibrationError):
                raise
            raise CalibrationError(str(exc)) from None


def load_calibration(name_or_path) -> Calibration:
    """Load a built-in calibration by name or a calibration JSON file."""
    if str(name_or_path) in BUILTIN_CALIBRATIONS:
        text = resources.files("terrain_toolkit.data").joinpath(f"{name_or_path}.json").read_text()
    else:
        text = Path(name_or_path).read_text()
    try:
        # Python's json accepts NaN/Infinity literals; reject them here.
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{name_or_path}: invalid JSON: {exc}") from None
    return Calibration.from_dict(doc)


def _reject_constant(token):
    raise CalibrationError(f"non-finite number {token} in calibration")


def save_calibration(cal: Calibration, path) -> None:
    Path(path).write_text(json.dumps(cal.to_dict(), indent=2) + "\n")


def normalize_features(hist, cal: Calibration, clip: bool = True) -> np.ndarray:
    """Min-max scale a coverage vector against the calibration bounds.

    Components with a degenerate range (max == min) map to 0.
    """
    g = hist.coverage if isinstance(hist, GeomorphonHistogram) else np.asarray(hist, dtype=np.float64)
    lo, hi = cal.feature_min, cal.feature_max
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (g - lo) / safe, 0.0)
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return out


def raw_score(features, cal: Calibration) -> float:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (10,) or not np.all(np.isfinite(features)):
        raise ValueError("features must be 10 finite values")
    return (cal.intercept + float(np.dot(cal.weights, features))) / cal.divisor


def ptrm_score(features, cal: Calibration) -> float:
    raw = raw_score(features, cal)
    if cal.clamp:
        return min(1.0, max(0.0, raw))
    return raw


def score_histogram(hist, cal: Calibration) -> float:
    return ptrm_score(normalize_features(hist, cal), cal)


def feature_table(hists) -> np.ndarray:
    """Stack coverage vectors into an n x 10 matrix."""
    rows = [h.coverage if isinstance(h, GeomorphonHistogram) else np.asarray(h, float) for h in hists]
    return np.vstack(rows) if rows else np.zeros((0, 10))


def describe_weights(cal: Calibration) -> dict:
    return dict(zip(CLASS_NAMES, map(float, cal.weights)))
