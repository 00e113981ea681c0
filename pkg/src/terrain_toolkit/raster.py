"""Height fields and DEM file formats.

A :class:`HeightField` is a north-up elevation raster: row 0 is the northern
edge, column 0 the western edge.  Void cells carry ``NaN`` in ``elevations``
and ``True`` in ``void_mask``.

Supported on-disk formats:

* SRTM ``.hgt`` -- headerless big-endian int16 squares, void sentinel -32768.
* ESRI ASCII grid -- ``ncols/nrows/xllcorner/yllcorner/cellsize/NODATA_value``.
* 16-bit binary PGM (P5, maxval 65535) plus a JSON sidecar ``{min_m, max_m}``.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

HGT_VOID = -32768
# One arc-second of latitude, meters.
ARCSEC_M = 30.87
DEFAULT_CELL_SIZE = 200.0
DEFAULT_SIZE = 512

FORMATS = ("srtm_hgt", "esri_ascii", "pgm16")
_SUFFIXES = {".hgt": "srtm_hgt", ".asc": "esri_ascii", ".pgm": "pgm16"}


class DEMFormatError(ValueError):
    """Raised when a DEM file is malformed for its declared format."""


@dataclass(frozen=True, eq=False)
class HeightField:
    """Immutable elevation raster in meters.

    ``elevations`` has shape ``(height, width)``; ``void_mask`` defaults to the
    NaN cells of ``elevations``.
    """

    elevations: np.ndarray
    cell_size: float = DEFAULT_CELL_SIZE
    void_mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        z = np.array(self.elevations, dtype=np.float64, copy=True)
        if z.ndim != 2 or z.size == 0:
            raise ValueError(f"elevations must be a non-empty 2D array, got shape {z.shape}")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.void_mask is None:
            mask = ~np.isfinite(z)
        else:
            mask = np.array(self.void_mask, dtype=bool, copy=True)
            if mask.shape != z.shape:
                raise ValueError("void_mask shape does not match elevations")
            if not np.all(np.isfinite(z[~mask])):
                raise ValueError("non-void elevations must be finite")
        z[mask] = np.nan
        z.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "elevations", z)
        object.__setattr__(self, "void_mask", mask)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def height(self) -> int:
        return self.elevations.shape[0]

    @property
    def width(self) -> int:
        return self.elevations.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.elevations.shape

    @property
    def has_voids(self) -> bool:
        return bool(self.void_mask.any())

    def __eq__(self, other):
        if not isinstance(other, HeightField):
            return NotImplemented
        return (
            self.cell_size == other.cell_size
            and self.shape == other.shape
            and np.array_equal(self.void_mask, other.void_mask)
            and np.array_equal(self.elevations, other.elevations, equal_nan=True)
        )

    def __repr__(self):
        return (f"HeightField({self.width}x{self.height}, cell_size={self.cell_size:g} m, "
                f"voids={int(self.void_mask.sum())})")

    def negated(self) -> "HeightField":
        return HeightField(-self.elevations, self.cell_size, self.void_mask)


def _infer_format(path, fmt):
    if fmt is not None:
        if fmt not in FORMATS:
            raise ValueError(f"unknown DEM format {fmt!r}; expected one of {FORMATS}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix not in _SUFFIXES:
        raise ValueError(f"cannot infer DEM format from {path!r}; pass format explicitly")
    return _SUFFIXES[suffix]


def load_dem(path, format: str | None = None) -> HeightField:
    """Read a DEM file; ``format`` is inferred from the suffix when omitted."""
    fmt = _infer_format(path, format)
    if fmt == "srtm_hgt":
        return _load_hgt(path)
    if fmt == "esri_ascii":
        return _load_ascii(path)
    return _load_pgm16(path)


def save_dem(field: HeightField, path, format: str | None = None) -> None:
    fmt = _infer_format(path, format)
    if fmt == "esri_ascii":
        _save_ascii(field, path)
    elif fmt == "pgm16":
        _save_pgm16(field, path)
    else:
        raise ValueError("writing srtm_hgt is not supported; use esri_ascii or pgm16")


def _load_hgt(path) -> HeightField:
    raw = Path(path).read_bytes()
    if len(raw) % 2:
        raise DEMFormatError(f"{path}: odd byte count {len(raw)} for 16-bit samples")
    n = math.isqrt(len(raw) // 2)
    if n * n * 2 != len(raw) or n < 2:
        raise DEMFormatError(f"{path}: {len(raw)} bytes is not a square grid of int16 samples")
    samples = np.frombuffer(raw, dtype=">i2").reshape(n, n)
    mask = samples == HGT_VOID
    z = samples.astype(np.float64)
    # 1201 samples span one degree at 3", 3601 at 1".
    cell = 3600.0 / (n - 1) * ARCSEC_M
    return HeightField(z, cell, mask)


_ASCII_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter",
               "cellsize", "nodata_value")


def _load_ascii(path) -> HeightField:
    with open(path) as fh:
        text = fh.read()
    tokens = text.split()
    header = {}
    i = 0
    while i + 1 < len(tokens) and tokens[i].lower() in _ASCII_KEYS:
        key = tokens[i].lower()
        try:
            header[key] = float(tokens[i + 1])
        except ValueError:
            if key == "nodata_value":
                raise DEMFormatError(f"{path}: cannot parse NODATA_value {tokens[i + 1]!r}") from None
            raise DEMFormatError(f"{path}: bad header value {tokens[i]} {tokens[i + 1]!r}") from None
        i += 2
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise DEMFormatError(f"{path}: missing header field {key}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    if ncols != header["ncols"] or nrows != header["nrows"] or ncols < 1 or nrows < 1:
        raise DEMFormatError(f"{path}: invalid grid dimensions")
    body = tokens[i:]
    if len(body) != ncols * nrows:
        raise DEMFormatError(f"{path}: expected {ncols * nrows} values, found {len(body)}")
    try:
        z = np.array([float(v) for v in body], dtype=np.float64).reshape(nrows, ncols)
    except ValueError as exc:
        raise DEMFormatError(f"{path}: {exc}") from None
    nodata = header.get("nodata_value")
    mask = ~np.isfinite(z)
    if nodata is not None:
        mask |= z == nodata
    if header["cellsize"] <= 0:
        raise DEMFormatError(f"{path}: cellsize must be positive")
    return HeightField(z, header["cellsize"], mask)


def _nodata_for(field: HeightField) -> float:
    nodata = -9999.0
    valid = field.elevations[~field.void_mask]
    while np.any(valid == nodata):
        nodata = nodata * 10 - 9
    return nodata


def _save_ascii(field: HeightField, path) -> None:
    nodata = _nodata_for(field)
    z = np.where(field.void_mask, nodata, field.elevations)
    lines = [
        f"ncols {field.width}",
        f"nrows {field.height}",
        "xllcorner 0",
        "yllcorner 0",
        f"cellsize {field.cell_size!r}",
        f"NODATA_value {nodata!r}",
    ]
    # repr() is the shortest string that round-trips a float64 exactly.
    lines.extend(" ".join(repr(float(v)) for v in row) for row in z)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def _save_pgm16(field: HeightField, path) -> None:
    if field.has_voids:
        raise ValueError("pgm16 cannot represent voids; run fill_voids first")
    z = field.elevations
    lo, hi = float(z.min()), float(z.max())
    if hi > lo:
        q = np.rint((z - lo) / (hi - lo) * 65535.0)
    else:
        q = np.zeros_like(z)
    data = q.astype(">u2").tobytes()
    header = f"P5\n{field.width} {field.height}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + data)
    sidecar = {"min_m": lo, "max_m": hi, "cell_size_m": field.cell_size}
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2))


def _read_pnm_header(raw: bytes, magic: bytes, path):
    if not raw.startswith(magic):
        raise DEMFormatError(f"{path}: not a binary {magic.decode()} file")
    fields, pos = [], len(magic)
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in b"\n\r":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DEMFormatError(f"{path}: truncated header")
        try:
            fields.append(int(raw[start:pos]))
        except ValueError:
            raise DEMFormatError(f"{path}: malformed header token {raw[start:pos]!r}") from None
    # Exactly one whitespace byte separates the header from the raster.
    return fields, pos + 1


def _load_pgm16(path) -> HeightField:
    raw = Path(path).read_bytes()
    (width, height, maxval), offset = _read_pnm_header(raw, b"P5", path)
    if maxval != 65535:
        raise DEMFormatError(f"{path}: expected maxval 65535, got {maxval}")
    expected = width * height * 2
    if len(raw) - offset != expected:
        raise DEMFormatError(f"{path}: expected {expected} raster bytes, found {len(raw) - offset}")
    q = np.frombuffer(raw, dtype=">u2", offset=offset).reshape(height, width).astype(np.float64)
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        lo, hi = float(meta["min_m"]), float(meta["max_m"])
        cell = float(meta.get("cell_size_m", DEFAULT_CELL_SIZE))
    else:
        lo, hi, cell = 0.0, 65535.0, DEFAULT_CELL_SIZE
    z = lo + q / 65535.0 * (hi - lo)
    return HeightField(z, cell)


def write_pgm8(path, image: np.ndarray) -> None:
    """Write a 2D uint8 array as a binary PGM (P5, maxval 255)."""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("write_pgm8 expects a 2D uint8 array")
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + image.tobytes())


def read_pgm8(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (width, height, maxval), offset = _read_pnm_header(raw, b"P5", path)
    if maxval > 255:
        raise DEMFormatError(f"{path}: not an 8-bit PGM")
    return np.frombuffer(raw, dtype=np.uint8, offset=offset, count=width * height).reshape(height, width).copy()


def _sample_positions(n_in: int, n_out: int) -> np.ndarray:
    # Pixel-center alignment: output center i maps to input coordinate (i + 0.5) * scale - 0.5.
    return (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5


def _footprint_ranges(n_in, n_out):
    scale = n_in / n_out
    pos = _sample_positions(n_in, n_out)
    lo = np.floor(pos).astype(int)
    start = np.minimum(np.floor(np.arange(n_out) * scale).astype(int), lo)
    stop = np.maximum(np.ceil((np.arange(n_out) + 1) * scale).astype(int) - 1, lo + 1)
    return np.clip(start, 0, n_in - 1), np.clip(stop, 0, n_in - 1)


def bilinear(z: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resampling of a void-free array to ``shape`` (edge-clamped)."""
    h_in, w_in = z.shape
    h_out, w_out = shape
    ry = np.clip(_sample_positions(h_in, h_out), 0, h_in - 1)
    rx = np.clip(_sample_positions(w_in, w_out), 0, w_in - 1)
    y0 = np.minimum(np.floor(ry).astype(int), h_in - 2) if h_in > 1 else np.zeros(h_out, int)
    x0 = np.minimum(np.floor(rx).astype(int), w_in - 2) if w_in > 1 else np.zeros(w_out, int)
    y1 = np.minimum(y0 + 1, h_in - 1)
    x1 = np.minimum(x0 + 1, w_in - 1)
    fy = (ry - y0)[:, None]
    fx = (rx - x0)[None, :]
    top = z[np.ix_(y0, x0)] * (1 - fx) + z[np.ix_(y0, x1)] * fx
    bottom = z[np.ix_(y1, x0)] * (1 - fx) + z[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def resample(field: HeightField, target: int = DEFAULT_SIZE) -> HeightField:
    """Bilinearly resample ``field`` to ``target`` x ``target`` cells.

    The new cell size spreads the input's east-west extent over ``target``
    cells.  An output cell becomes void when its footprint, or any of its four
    interpolation supports, touches an input void.
    """
    if int(target) != target or target < 2:
        raise ValueError(f"target must be an integer >= 2, got {target}")
    target = int(target)
    mask = field.void_mask
    z = np.where(mask, 0.0, field.elevations)
    out = bilinear(z, (target, target))
    if mask.any():
        # Summed-area table answers "any void in rectangle" per output cell.
        sat = np.zeros((field.height + 1, field.width + 1), dtype=np.int64)
        sat[1:, 1:] = mask.cumsum(0).cumsum(1)
        r0, r1 = _footprint_ranges(field.height, target)
        c0, c1 = _footprint_ranges(field.width, target)
        R0, C0 = np.meshgrid(r0, c0, indexing="ij")
        R1, C1 = np.meshgrid(r1 + 1, c1 + 1, indexing="ij")
        counts = sat[R1, C1] - sat[R0, C1] - sat[R1, C0] + sat[R0, C0]
        out_mask = counts > 0
    else:
        out_mask = np.zeros((target, target), dtype=bool)
    cell = field.width * field.cell_size / target
    return HeightField(np.where(out_mask, np.nan, out), cell, out_mask)


def fill_voids(field: HeightField) -> HeightField:
    """Replace every void with the elevation of its nearest non-void cell."""
    mask = field.void_mask
    if not mask.any():
        return field
    if mask.all():
        raise ValueError("cannot fill a field that is entirely void")
    _, (iy, ix) = ndimage.distance_transform_edt(mask, return_indices=True)
    return HeightField(field.elevations[iy, ix], field.cell_size)


def hillshade(field: HeightField, azimuth: float = 315.0, altitude: float = 45.0) -> np.ndarray:
    """Lambertian hillshade as a uint8 raster; voids render as 0.

    ``azimuth`` is clockwise from north, ``altitude`` above the horizon, both
    in degrees.  Normals come from central differences (one-sided at edges).
    """
    z = field.elevations
    if z.shape[0] < 2 or z.shape[1] < 2:
        dz_drow = np.zeros_like(z)
        dz_dcol = np.zeros_like(z)
    else:
        dz_drow, dz_dcol = np.gradient(z, field.cell_size)
    dz_dx = dz_dcol
    dz_dy = -dz_drow  # rows run north to south
    az, alt = math.radians(azimuth), math.radians(altitude)
    light = (math.sin(az) * math.cos(alt), math.cos(az) * math.cos(alt), math.sin(alt))
    norm = np.sqrt(dz_dx ** 2 + dz_dy ** 2 + 1.0)
    shade = (-dz_dx * light[0] - dz_dy * light[1] + light[2]) / norm
    shade = np.clip(shade, 0.0, 1.0)
    out = np.rint(shade * 255.0)
    out[~np.isfinite(out) | field.void_mask] = 0
    return out.astype(np.uint8)


def describe(field: HeightField) -> dict:
    """Summary statistics used by ``dem info``."""
    valid = field.elevations[~field.void_mask]
    info = {
        "width": field.width,
        "height": field.height,
        "cell_size_m": field.cell_size,
        "voids": int(field.void_mask.sum()),
    }
    if valid.size:
        info.update(min_m=float(valid.min()), max_m=float(valid.max()), mean_m=float(valid.mean()))
    return info


def default_threads(threads: int | None = None) -> int:
    """Resolve a worker count: explicit value, then TERRAIN_TOOLKIT_THREADS, then 1."""
    if threads is None:
        env = os.environ.get("TERRAIN_TOOLKIT_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads
