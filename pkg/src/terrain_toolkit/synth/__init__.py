"""Seeded generators for the six synthetic terrain categories.

``noise`` (SP), ``ridged`` (SR), ``fbm`` (SM), ``thermal`` (ST), ``fluvial``
(SF) and ``coastal`` (SC).  The eroded categories start from a gradient-noise
surface of the same seed, built with the category's own noise parameters.
Category defaults live in ``defaults.json``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..raster import HeightField
from .erosion import (
    ErosionInstability,
    FluvialLedger,
    FluvialResult,
    erode_coastal,
    erode_fluvial,
    erode_thermal,
    run_coastal,
    run_fluvial,
)
from .noise import diamond_square, noise_surface, ridged_surface

CATEGORIES = ("noise", "ridged", "fbm", "thermal", "fluvial", "coastal")
CATEGORY_TAGS = {"noise": "SP", "ridged": "SR", "fbm": "SM", "thermal": "ST",
                 "fluvial": "SF", "coastal": "SC"}


def _load_defaults():
    text = resources.files(__package__).joinpath("defaults.json").read_text()
    return json.loads(text)


DEFAULTS = _load_defaults()
DEFAULTS_VERSION = DEFAULTS["version"]

_NOISE_KEYS = ("octaves", "lacunarity", "gain", "wavelength_m", "relief_m")
_FLUVIAL_KEYS = ("iterations", "rain_rate", "capacity_k", "dissolve_k", "deposit_k",
                 "evaporation", "dt", "min_tilt", "erosion_depth", "boundary")


def category_defaults(category: str) -> dict:
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}; expected one of {CATEGORIES}")
    params = dict(DEFAULTS["common"])
    params.update(DEFAULTS["categories"].get(category, {}))
    return params


@dataclass(frozen=True)
class SynthSpec:
    category: str
    seed: int = 0
    size: int = 512
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = category_defaults(self.category)
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters for {self.category}: {sorted(unknown)}")
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "seed", int(self.seed))
        self.validate()

    def validate(self) -> None:
        p = self.params
        if self.size < 33:
            raise ValueError("size must be >= 33")
        if self.category == "fbm":
            if (self.size - 1) & (self.size - 2):
                raise ValueError("fbm size must be 2**k + 1")
        if p["octaves"] < 1 or int(p["octaves"]) != p["octaves"]:
            raise ValueError("octaves must be an integer >= 1")
        if p["cell_size"] <= 0 or p["relief_m"] <= 0 or p["wavelength_m"] <= 0:
            raise ValueError("cell_size, relief_m and wavelength_m must be positive")
        if "talus_deg" in p and not 0 < p["talus_deg"] < 90:
            raise ValueError("talus_deg must lie in (0, 90)")
        if p.get("iterations", 0) < 0:
            raise ValueError("iterations must be >= 0")
        if "sea_level_fraction" in p and not 0 <= p["sea_level_fraction"] <= 1:
            raise ValueError("sea_level_fraction must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"category": self.category, "seed": self.seed, "size": self.size,
                "params": dict(self.params), "defaults_version": DEFAULTS_VERSION}

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthSpec":
        return cls(doc["category"], doc.get("seed", 0), doc.get("size", 512), doc.get("params", {}))

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _noise_args(spec):
    p = spec.params
    return dict(octaves=int(p["octaves"]), lacunarity=p["lacunarity"], gain=p["gain"],
                wavelength_m=p["wavelength_m"], relief_m=p["relief_m"])


def _base(spec):
    return HeightField(noise_surface(spec.size, spec.params["cell_size"], spec.seed,
                                     **_noise_args(spec)), spec.params["cell_size"])


def gen_noise(spec: SynthSpec) -> HeightField:
    return _base(spec)


def gen_ridged(spec: SynthSpec) -> HeightField:
    z = ridged_surface(spec.size, spec.params["cell_size"], spec.seed, **_noise_args(spec))
    return HeightField(z, spec.params["cell_size"])


def gen_fbm(spec: SynthSpec) -> HeightField:
    p = spec.params
    z = diamond_square(spec.size, spec.seed, roughness=p["roughness"], sigma_m=p["sigma_m"],
                       corners=p.get("corners"))
    return HeightField(z, p["cell_size"])


def gen_thermal(spec: SynthSpec) -> HeightField:
    p = spec.params
    return erode_thermal(_base(spec), p["talus_deg"], int(p["iterations"]), p["thermal_rate"])


def _fluvial_kwargs(p):
    return {k: p[k] for k in _FLUVIAL_KEYS if k in p and k != "iterations"}


def gen_fluvial(spec: SynthSpec) -> HeightField:
    p = spec.params
    return erode_fluvial(_base(spec), int(p["iterations"]), **_fluvial_kwargs(p))


def gen_coastal(spec: SynthSpec) -> HeightField:
    p = spec.params
    return erode_coastal(_base(spec), p["sea_level_fraction"], p["band_m"], int(p["iterations"]),
                         **_fluvial_kwargs(p))


_GENERATORS = {"noise": gen_noise, "ridged": gen_ridged, "fbm": gen_fbm,
               "thermal": gen_thermal, "fluvial": gen_fluvial, "coastal": gen_coastal}


def generate(spec_or_category, seed: int = 0, size: int = 512, **params) -> HeightField:
    """Generate a terrain from a :class:`SynthSpec` or a category name."""
    if isinstance(spec_or_category, SynthSpec):
        spec = spec_or_category
    else:
        spec = SynthSpec(spec_or_category, seed, size, params)
    return _GENERATORS[spec.category](spec)


__all__ = [
    "CATEGORIES", "CATEGORY_TAGS", "DEFAULTS_VERSION", "ErosionInstability", "FluvialLedger",
    "FluvialResult", "SynthSpec", "category_defaults", "diamond_square", "erode_coastal",
    "erode_fluvial", "erode_thermal", "gen_coastal", "gen_fbm", "gen_fluvial", "gen_noise",
    "gen_ridged", "gen_thermal", "generate", "noise_surface", "ridged_surface", "run_coastal",
    "run_fluvial",
]
