"""Bundled real-terrain sample set.

Two public elevation grids are shipped in ``data/real_samples.npz`` (see
``data/README.md`` for their origin):

* ``jacksboro`` -- a 3 arc-second DEM of the Jacksboro fault area, Tennessee.
* ``topobathy`` -- a coarse (~2.5 km) topography/bathymetry grid of the Puget
  Sound region.

:func:`real_samples` cuts overlapping windows out of both grids (Jacksboro at
200 m and 90 m cells, topobathy at its native spacing) and returns them as
height fields, ready for geomorphon analysis.
"""
from __future__ import annotations

import math
from functools import lru_cache
from importlib import resources

import numpy as np

from .raster import HeightField, bilinear

EARTH_M_PER_DEG = 111_320.0


@lru_cache(maxsize=1)
def _arrays():
    with resources.files("terrain_toolkit.data").joinpath("real_samples.npz").open("rb") as fh:
        data = np.load(fh)
        return {k: np.array(data[k]) for k in data.files}


def jacksboro(cell_size: float = 200.0) -> HeightField:
    """Jacksboro DEM resampled to square cells of ``cell_size`` meters."""
    a = _arrays()
    z = a["jacksboro"].astype(np.float64)
    dlat, dlon = a["jacksboro_spacing_deg"]
    lat = math.radians(float(np.mean(a["jacksboro_lat"])))
    dy = dlat * EARTH_M_PER_DEG
    dx = dlon * EARTH_M_PER_DEG * math.cos(lat)
    shape = (round(z.shape[0] * dy / cell_size), round(z.shape[1] * dx / cell_size))
    return HeightField(bilinear(z, shape), cell_size)


def topobathy() -> HeightField:
    """Topobathy grid at its native (approximately square) spacing."""
    a = _arrays()
    lat = np.radians(a["topobathy_lat"].astype(np.float64))
    dy = float(np.mean(np.diff(a["topobathy_lat"]))) * EARTH_M_PER_DEG
    dx = float(np.mean(np.diff(a["topobathy_lon"]))) * EARTH_M_PER_DEG * float(np.cos(lat).mean())
    return HeightField(a["topobathy"].astype(np.float64), math.sqrt(dx * dy))


def windows(field: HeightField, size: int, stride: int):
    """Yield ``((row, col), sub_field)`` for overlapping square windows."""
    z = field.elevations
    for r in range(0, field.height - size + 1, stride):
        for c in range(0, field.width - size + 1, stride):
            yield (r, c), HeightField(z[r:r + size, c:c + size], field.cell_size)


def real_samples() -> list[tuple[str, HeightField]]:
    """Identifiers and height fields of every bundled real window."""
    out = []
    sources = (
        ("jacksboro200", jacksboro(200.0), 64, 28),
        ("jacksboro90", jacksboro(90.0), 96, 64),
        ("topobathy", topobathy(), 48, 21),
    )
    for name, field, size, stride in sources:
        for (r, c), sub in windows(field, size, stride):
            out.append((f"{name}_r{r:03d}_c{c:03d}", sub))
    return out
