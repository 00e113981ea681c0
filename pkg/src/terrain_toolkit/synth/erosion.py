"""Thermal, fluvial (virtual pipe) and coastal erosion on height fields.

All updates are Jacobi style: every cell reads the previous iteration's
state, so results do not depend on traversal order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..raster import HeightField

# (row, col) neighbour offsets, 8-connected.
NEIGHBORS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
GRAVITY = 9.81


class ErosionInstability(RuntimeError):
    """Raised when an erosion step produces non-finite values."""


def _shift(a, dr, dc, fill):
    """out[r, c] = a[r + dr, c + dc], ``fill`` outside the grid."""
    out = np.full_like(a, fill)
    h, w = a.shape
    rs, re = max(0, -dr), min(h, h - dr)
    cs, ce = max(0, -dc), min(w, w - dc)
    out[rs:re, cs:ce] = a[rs + dr:re + dr, cs + dc:ce + dc]
    return out


def _inside(shape, dr, dc):
    return _shift(np.ones(shape, dtype=bool), dr, dc, False)


def _require_void_free(field):
    if field.has_voids:
        raise ValueError("field contains voids; apply raster.fill_voids first")


def erode_thermal(field: HeightField, talus_deg: float = 30.0, iterations: int = 100,
                  rate: float = 0.5) -> HeightField:
    """Relax slopes steeper than the talus angle.

    A cell whose drop to some neighbours exceeds ``d * tan(talus)`` sends out
    ``rate * max_excess / 2`` of material, split among those neighbours in
    proportion to their excess.  With ``rate = 1`` the steepest pair lands
    exactly at repose.  Material never leaves the grid.
    """
    _require_void_free(field)
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if not 0 < talus_deg < 90:
        raise ValueError("talus_deg must lie in (0, 90)")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    z = np.array(field.elevations, dtype=np.float64)
    tan_t = math.tan(math.radians(talus_deg))
    inside = [_inside(z.shape, dr, dc) for dr, dc in NEIGHBORS]
    limits = [field.cell_size * math.hypot(dr, dc) * tan_t for dr, dc in NEIGHBORS]
    for _ in range(iterations):
        excess = np.empty((8,) + z.shape)
        for k, (dr, dc) in enumerate(NEIGHBORS):
            drop = z - _shift(z, dr, dc, 0.0)
            excess[k] = np.where(inside[k], drop - limits[k], 0.0)
        np.maximum(excess, 0.0, out=excess)
        total = excess.sum(axis=0)
        if not total.any():
            break
        moved = 0.5 * rate * excess.max(axis=0)
        share = np.divide(moved, total, out=np.zeros_like(total), where=total > 0)
        z -= moved
        for k, (dr, dc) in enumerate(NEIGHBORS):
            # material sent by cell (r - dr, c - dc) along direction k lands on (r, c)
            z += _shift(excess[k] * share, -dr, -dc, 0.0)
    return HeightField(z, field.cell_size)


@dataclass(frozen=True)
class FluvialLedger:
    """Material bookkeeping in cubic meters (height x cell area)."""

    initial: float
    rock: float
    suspended: float
    outflow: float

    @property
    def imbalance(self) -> float:
        """Relative mismatch ``|initial - (rock + suspended + outflow)| / |initial|``."""
        total = self.rock + self.suspended + self.outflow
        return abs(self.initial - total) / max(abs(self.initial), 1e-300)


@dataclass(frozen=True, eq=False)
class FluvialResult:
    field: HeightField
    water: np.ndarray
    sediment: np.ndarray
    ledger: FluvialLedger


def run_fluvial(field: HeightField, iterations: int = 200, rain_rate: float = 0.01,
                capacity_k: float = 0.3, dissolve_k: float = 0.1, deposit_k: float = 0.01,
                evaporation: float = 0.01, dt: float = 0.5, min_tilt: float = 0.01,
                erosion_depth: float = 0.5, boundary: str = "closed",
                active: np.ndarray | None = None, settle: bool = True) -> FluvialResult:
    """Virtual-pipe water routing with capacity-limited erosion and deposition.

    Each iteration adds ``rain_rate`` meters of water per cell, updates pipe
    fluxes to the four axis neighbours from hydraulic head differences, moves
    water and suspended sediment along those fluxes, erodes where the load is
    below capacity ``capacity_k * sin(tilt) * speed`` and deposits where above,
    then evaporates a fraction ``evaporation`` of the water.

    ``active`` restricts erosion and deposition to a mask; terrain outside it
    is untouched, and sediment carried out of the mask (or, with open
    boundaries, off the grid) is booked as outflow.  With ``settle`` the
    sediment still in suspension at the end is deposited in place.
    """
    _require_void_free(field)
    for name, value in (("rain_rate", rain_rate), ("capacity_k", capacity_k),
                        ("dissolve_k", dissolve_k), ("deposit_k", deposit_k),
                        ("evaporation", evaporation), ("min_tilt", min_tilt)):
        if value < 0:
            raise ValueError(f"{name} must be non-negative")
    if dt <= 0 or iterations < 0:
        raise ValueError("dt must be positive and iterations non-negative")
    if evaporation * dt > 1:
        raise ValueError("evaporation * dt must not exceed 1")
    if boundary not in ("closed", "open"):
        raise ValueError("boundary must be 'closed' or 'open'")
    if dissolve_k * dt > 1 or deposit_k * dt > 1:
        raise ValueError("dissolve_k * dt and deposit_k * dt must not exceed 1")

    l = field.cell_size
    area = l * l
    original = field.elevations
    b = np.array(original, dtype=np.float64)
    shape = b.shape
    d = np.zeros(shape)
    s = np.zeros(shape)
    act = np.ones(shape, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    if act.shape != shape:
        raise ValueError("active mask shape does not match the field")
    # pipes: W, E, N, S as (row, col) offsets
    pipes = ((0, -1), (0, 1), (-1, 0), (1, 0))
    inside = [_inside(shape, dr, dc) for dr, dc in pipes]
    # sediment lands only on active cells; anything carried off the grid or
    # out of the active set leaves the system and is booked as outflow
    lands = [_shift(act, dr, dc, False) for dr, dc in pipes]
    flux = np.zeros((4,) + shape)
    initial = float(b.sum()) * area
    outflow = 0.0

    for _ in range(iterations if rain_rate > 0 else 0):
        d += rain_rate * dt
        head = b + d
        for k, (dr, dc) in enumerate(pipes):
            if boundary == "open":
                nb_head = np.where(inside[k], _shift(head, dr, dc, 0.0), b)
            else:
                nb_head = _shift(head, dr, dc, 0.0)
            dh = head - nb_head
            f = np.maximum(0.0, flux[k] + dt * GRAVITY * l * dh)
            if boundary == "closed":
                f[~inside[k]] = 0.0
            flux[k] = f
        out_total = flux.sum(axis=0)
        volume = d * area
        scale = np.divide(volume, out_total * dt, out=np.ones(shape), where=out_total * dt > volume)
        flux *= np.minimum(1.0, scale)

        # fraction of each cell's water leaving through each pipe this step
        frac = np.divide(flux * dt, volume, out=np.zeros_like(flux), where=volume > 0)
        inflow = np.zeros(shape)
        sed_in = np.zeros(shape)
        sed_out = np.zeros(shape)
        for k, (dr, dc) in enumerate(pipes):
            inflow += _shift(flux[k], -dr, -dc, 0.0)
            moving = s * frac[k]
            sed_out += moving
            outflow += float(np.where(lands[k], 0.0, moving).sum()) * area
            sed_in += _shift(np.where(lands[k], moving, 0.0), -dr, -dc, 0.0)
        d_new = np.maximum(d + dt * (inflow - flux.sum(axis=0)) / area, 0.0)

        # velocity from the mean flux through the cell
        fW, fE, fN, fS = flux
        dwx = (_shift(fE, 0, -1, 0.0) - fW + fE - _shift(fW, 0, 1, 0.0)) / 2.0
        dwy = (_shift(fS, -1, 0, 0.0) - fN + fS - _shift(fN, 1, 0, 0.0)) / 2.0
        mean_d = 0.5 * (d + d_new)
        denom = mean_d * l
        u = np.divide(dwx, denom, out=np.zeros(shape), where=denom > 1e-12)
        v = np.divide(dwy, denom, out=np.zeros(shape), where=denom > 1e-12)
        speed = np.hypot(u, v)

        s = s - sed_out + sed_in
        d = d_new

        gy, gx = np.gradient(b, l)
        grad = np.hypot(gx, gy)
        tilt = np.maximum(grad / np.sqrt(1.0 + grad * grad), min_tilt)
        depth_factor = np.clip(d / erosion_depth, 0.0, 1.0) if erosion_depth > 0 else 1.0
        capacity = capacity_k * tilt * speed * depth_factor
        gap = capacity - s
        erode = np.where(gap > 0, dissolve_k * dt * gap, 0.0)
        deposit = np.where(gap < 0, deposit_k * dt * -gap, 0.0)
        change = np.where(act, erode - deposit, 0.0)
        b -= change
        s += change
        d *= 1.0 - evaporation * dt

        if not (np.isfinite(b).all() and np.isfinite(d).all() and np.isfinite(s).all()):
            raise ErosionInstability("fluvial step produced non-finite values; reduce dt or rates")

    suspended = s
    if settle:
        b = b + s
        suspended = np.zeros(shape)
    b = np.where(act, b, original)
    ledger = FluvialLedger(initial, float(b.sum()) * area, float(suspended.sum()) * area, outflow)
    return FluvialResult(HeightField(b, field.cell_size), d, suspended, ledger)


def erode_fluvial(field: HeightField, iterations: int = 200, rain_rate: float = 0.01,
                  capacity_k: float = 0.3, dissolve_k: float = 0.1, deposit_k: float = 0.01,
                  evaporation: float = 0.01, **kwargs) -> HeightField:
    return run_fluvial(field, iterations, rain_rate, capacity_k, dissolve_k, deposit_k,
                       evaporation, **kwargs).field


def coastal_band(field: HeightField, sea_level_fraction: float, band_m: float):
    """Sea level and the mask of cells within ``band_m`` of it."""
    if not 0 <= sea_level_fraction <= 1:
        raise ValueError("sea_level_fraction must lie in [0, 1]")
    if band_m < 0:
        raise ValueError("band_m must be non-negative")
    z = field.elevations
    lo, hi = float(z.min()), float(z.max())
    sea = lo + sea_level_fraction * (hi - lo)
    if band_m == 0:
        return sea, np.zeros(z.shape, dtype=bool)
    return sea, np.abs(z - sea) <= band_m


def run_coastal(field: HeightField, sea_level_fraction: float = 0.3, band_m: float = 100.0,
                iterations: int = 200, **fluvial_kwargs) -> FluvialResult:
    _require_void_free(field)
    _, mask = coastal_band(field, sea_level_fraction, band_m)
    if not mask.any():
        ledger = FluvialLedger(float(field.elevations.sum()) * field.cell_size ** 2,
                               float(field.elevations.sum()) * field.cell_size ** 2, 0.0, 0.0)
        zeros = np.zeros(field.shape)
        return FluvialResult(field, zeros, zeros, ledger)
    return run_fluvial(field, iterations, active=mask, **fluvial_kwargs)


def erode_coastal(field: HeightField, sea_level_fraction: float = 0.3, band_m: float = 100.0,
                  iterations: int = 200, **fluvial_kwargs) -> HeightField:
    """Hydraulic erosion restricted to cells within ``band_m`` of sea level."""
    return run_coastal(field, sea_level_fraction, band_m, iterations, **fluvial_kwargs).field
