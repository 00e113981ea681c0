"""Geomorphon landform classification.

Each cell looks along the eight compass directions up to ``search_radius_cells``
and records whether the terrain is predominantly higher (+1), lower (-1) or
level (0).  The counts of higher and lower directions index a 9x9 decision
table yielding one of ten landform classes.

Along a ray the elevation angles are clamped at the horizon: the zenith side
uses ``max(0, max angle)`` and the nadir side ``min(0, min angle)``.  Their
sum, compared against the flatness threshold, gives the ternary code.  This is
the rule used by r.geomorphon and its WhiteboxTools port.
"""
from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster import HeightField, default_threads, read_pgm8, write_pgm8


class GeomorphonClass(enum.IntEnum):
    """Landform classes in canonical feature-vector order (least to most frequent)."""

    DEPRESSION = 0
    SUMMIT = 1
    FLAT = 2
    VALLEY = 3
    RIDGE = 4
    HOLLOW = 5
    SPUR = 6
    SHOULDER = 7
    SLOPE = 8
    FOOTSLOPE = 9

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def dual(self) -> "GeomorphonClass":
        """Class obtained when the terrain is turned upside down."""
        return GeomorphonClass(_DUAL[self])


CLASS_NAMES = tuple(c.label for c in GeomorphonClass)
FEATURE_NAMES = tuple(f"G_{name}" for name in CLASS_NAMES)
UNCLASSIFIED = -1

_DUAL = np.array([1, 0, 2, 4, 3, 6, 5, 9, 8, 7], dtype=np.int8)

# RGB colours of the r.geomorphon legend.
CLASS_COLORS = {
    GeomorphonClass.DEPRESSION: (0, 0, 56),
    GeomorphonClass.SUMMIT: (56, 0, 0),
    GeomorphonClass.FLAT: (220, 220, 220),
    GeomorphonClass.VALLEY: (0, 0, 255),
    GeomorphonClass.RIDGE: (200, 0, 0),
    GeomorphonClass.HOLLOW: (180, 230, 20),
    GeomorphonClass.SPUR: (250, 210, 60),
    GeomorphonClass.SHOULDER: (255, 80, 20),
    GeomorphonClass.SLOPE: (255, 255, 60),
    GeomorphonClass.FOOTSLOPE: (60, 250, 150),
}


def _build_table() -> np.ndarray:
    G = GeomorphonClass
    FL, PK, RI, SH, SP, SL, HL, FS, VL, PT = (G.FLAT, G.SUMMIT, G.RIDGE, G.SHOULDER, G.SPUR,
                                              G.SLOPE, G.HOLLOW, G.FOOTSLOPE, G.VALLEY,
                                              G.DEPRESSION)
    # rows: number of lower directions; columns: number of higher directions
    rows = [
        [FL, FL, FL, FS, FS, VL, VL, VL, PT],
        [FL, FL, FS, FS, FS, VL, VL, VL],
        [FL, SH, SL, SL, HL, HL, VL],
        [SH, SH, SL, SL, SL, HL],
        [SH, SH, SP, SL, SL],
        [RI, RI, SP, SP],
        [RI, RI, RI],
        [RI, RI],
        [PK],
    ]
    table = np.full((9, 9), UNCLASSIFIED, dtype=np.int8)
    for n_minus, row in enumerate(rows):
        table[n_minus, :len(row)] = [int(c) for c in row]
    table.setflags(write=False)
    return table


LOOKUP_TABLE = _build_table()

# N, NE, E, SE, S, SW, W, NW as (row, col) steps.
DIRECTIONS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


@dataclass(frozen=True)
class GeomorphonParams:
    search_radius_cells: int = 2
    flatness_deg: float = 1.0

    def __post_init__(self):
        if int(self.search_radius_cells) != self.search_radius_cells or self.search_radius_cells < 1:
            raise ValueError("search_radius_cells must be an integer >= 1")
        if not 0 <= self.flatness_deg < 90:
            raise ValueError("flatness_deg must lie in [0, 90)")
        object.__setattr__(self, "search_radius_cells", int(self.search_radius_cells))
        object.__setattr__(self, "flatness_deg", float(self.flatness_deg))

    def to_dict(self) -> dict:
        return {"search_radius_cells": self.search_radius_cells, "flatness_deg": self.flatness_deg}


@dataclass(frozen=True, eq=False)
class GeomorphonMap:
    """Per-cell class indices; border cells hold ``UNCLASSIFIED`` (-1)."""

    classes: np.ndarray
    border_margin: int

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    @property
    def width(self) -> int:
        return self.classes.shape[1]

    @property
    def classified(self) -> np.ndarray:
        return self.classes != UNCLASSIFIED

    def interior(self) -> np.ndarray:
        m = self.border_margin
        return self.classes[m:self.height - m, m:self.width - m]

    def dual(self) -> "GeomorphonMap":
        out = self.classes.copy()
        mask = out != UNCLASSIFIED
        out[mask] = _DUAL[out[mask]]
        return GeomorphonMap(out, self.border_margin)

    def __eq__(self, other):
        if not isinstance(other, GeomorphonMap):
            return NotImplemented
        return self.border_margin == other.border_margin and np.array_equal(self.classes, other.classes)


@dataclass(frozen=True, eq=False)
class GeomorphonHistogram:
    coverage: np.ndarray
    classified_count: int = 0

    def __post_init__(self):
        cov = np.array(self.coverage, dtype=np.float64)
        if cov.shape != (10,):
            raise ValueError("coverage must have 10 components")
        cov.setflags(write=False)
        object.__setattr__(self, "coverage", cov)

    def __getitem__(self, key):
        if isinstance(key, str):
            key = CLASS_NAMES.index(key.removeprefix("G_"))
        return float(self.coverage[key])

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, map(float, self.coverage)))


def _check_field(field: HeightField, L: int) -> None:
    if field.has_voids:
        raise ValueError("field contains voids; apply raster.fill_voids first")
    if field.height <= 2 * L or field.width <= 2 * L:
        raise ValueError(f"field {field.width}x{field.height} too small for search radius {L}")


def ternary_pattern(field: HeightField, cell: tuple[int, int], params: GeomorphonParams = GeomorphonParams()) -> np.ndarray:
    """Ternary code (N, NE, E, SE, S, SW, W, NW) of a single interior cell."""
    L = params.search_radius_cells
    r, c = cell
    if field.has_voids:
        raise ValueError("field contains voids; apply raster.fill_voids first")
    if not (L <= r < field.height - L and L <= c < field.width - L):
        raise ValueError(f"cell {cell} lies inside the {L}-cell border margin")
    z = field.elevations
    out = np.zeros(8, dtype=np.int8)
    for i, (dr, dc) in enumerate(DIRECTIONS):
        step = field.cell_size * np.hypot(dr, dc)
        angles = [np.degrees(np.arctan((z[r + k * dr, c + k * dc] - z[r, c]) / (k * step)))
                  for k in range(1, L + 1)]
        total = max(0.0, max(angles)) + min(0.0, min(angles))
        if total > params.flatness_deg:
            out[i] = 1
        elif total < -params.flatness_deg:
            out[i] = -1
    return out


def classify_cell(pattern) -> GeomorphonClass:
    pattern = np.asarray(pattern)
    if pattern.shape != (8,) or not np.isin(pattern, (-1, 0, 1)).all():
        raise ValueError("pattern must be eight values in {-1, 0, +1}")
    n_plus = int((pattern == 1).sum())
    n_minus = int((pattern == -1).sum())
    return GeomorphonClass(int(LOOKUP_TABLE[n_minus, n_plus]))


def _classify_rows(z, cell_size, L, t, r0, r1):
    """Classes for interior rows r0..r1-1 (absolute indices)."""
    W = z.shape[1]
    center = z[r0:r1, L:W - L]
    n_plus = np.zeros(center.shape, dtype=np.int8)
    n_minus = np.zeros(center.shape, dtype=np.int8)
    for dr, dc in DIRECTIONS:
        step = cell_size * np.hypot(dr, dc)
        hi = np.zeros(center.shape)
        lo = np.zeros(center.shape)
        for k in range(1, L + 1):
            ring = z[r0 + k * dr:r1 + k * dr, L + k * dc:W - L + k * dc]
            ratio = (ring - center) / (k * step)
            np.maximum(hi, ratio, out=hi)
            np.minimum(lo, ratio, out=lo)
        # atan is monotone, so it is applied once to the extreme ratios.
        total = np.degrees(np.arctan(hi)) + np.degrees(np.arctan(lo))
        n_plus += total > t
        n_minus += total < -t
    return LOOKUP_TABLE[n_minus, n_plus]


def classify_map(field: HeightField, params: GeomorphonParams = GeomorphonParams(),
                 threads: int | None = 1) -> GeomorphonMap:
    """Classify every cell at least ``search_radius_cells`` away from the border.

    Row bands are processed by ``threads`` workers; the output is identical
    for any worker count.
    """
    L = params.search_radius_cells
    _check_field(field, L)
    threads = default_threads(threads)
    z = field.elevations
    H, W = z.shape
    classes = np.full((H, W), UNCLASSIFIED, dtype=np.int8)
    bounds = np.linspace(L, H - L, min(threads * 4, H - 2 * L) + 1).astype(int)
    bands = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def work(band):
        a, b = band
        classes[a:b, L:W - L] = _classify_rows(z, field.cell_size, L, params.flatness_deg, a, b)

    if threads == 1:
        for band in bands:
            work(band)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bands))
    return GeomorphonMap(classes, L)


def histogram(gmap: GeomorphonMap) -> GeomorphonHistogram:
    """Normalized class coverage over the classified cells."""
    valid = gmap.classes[gmap.classified]
    if valid.size == 0:
        raise ValueError("map has no classified cells")
    counts = np.bincount(valid.astype(np.int64), minlength=10)
    return GeomorphonHistogram(counts / valid.size, int(valid.size))


def geomorphon_histogram(field: HeightField, params: GeomorphonParams = GeomorphonParams(),
                         threads: int | None = 1) -> GeomorphonHistogram:
    return histogram(classify_map(field, params, threads))


def legend() -> dict:
    """PGM index -> class name and colour; index 0 marks unclassified cells."""
    entries = {"0": {"name": "unclassified", "color": [0, 0, 0]}}
    for cls in GeomorphonClass:
        entries[str(int(cls) + 1)] = {"name": cls.label, "color": list(CLASS_COLORS[cls])}
    return entries


def legend_path(path) -> Path:
    return Path(str(path) + ".legend.json")


def save_map(gmap: GeomorphonMap, path) -> None:
    """8-bit indexed PGM (class index + 1, 0 = unclassified) plus a JSON legend."""
    write_pgm8(path, (gmap.classes.astype(np.int16) + 1).astype(np.uint8))
    legend_path(path).write_text(json.dumps({"border_margin": gmap.border_margin,
                                             "legend": legend()}, indent=2))


def load_map(path) -> GeomorphonMap:
    idx = read_pgm8(path).astype(np.int16) - 1
    if idx.max(initial=-1) > 9:
        raise ValueError(f"{path}: class index out of range")
    margin = 0
    side = legend_path(path)
    if side.exists():
        margin = int(json.loads(side.read_text())["border_margin"])
    return GeomorphonMap(idx.astype(np.int8), margin)


def save_histogram(hist: GeomorphonHistogram, path, params: GeomorphonParams | None = None) -> None:
    doc = {"classes": list(CLASS_NAMES), "coverage": [float(v) for v in hist.coverage],
           "classified_cells": hist.classified_count}
    if params is not None:
        doc["geomorphon"] = params.to_dict()
    Path(path).write_text(json.dumps(doc, indent=2))


def load_histogram(path) -> GeomorphonHistogram:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, list):
        return GeomorphonHistogram(doc)
    return GeomorphonHistogram(doc["coverage"], int(doc.get("classified_cells", 0)))
