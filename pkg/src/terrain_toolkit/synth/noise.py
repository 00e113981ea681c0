"""Seeded gradient noise, ridged noise and diamond-square fBm surfaces."""
from __future__ import annotations

import numpy as np

# Bounds for one octave of 2D gradient noise with unit gradients and quintic fade,
# measured per lattice unit: |dn/du| <= sqrt(2) * 2 * max fade' + 1, max fade' = 15/8.
FADE_SLOPE_MAX = 15.0 / 8.0
AXIS_DERIVATIVE_BOUND = np.sqrt(2.0) * 2.0 * FADE_SLOPE_MAX + 1.0
GRADIENT_NORM_BOUND = np.sqrt(2.0) * 4.0 * FADE_SLOPE_MAX + 1.0


def rng_for(seed: int) -> np.random.Generator:
    """PCG64 generator from any 64-bit integer (negative seeds wrap)."""
    return np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)


def _fade(t):
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def gradient_noise(shape, frequency, rng: np.random.Generator) -> np.ndarray:
    """One octave of gradient (Perlin-style) noise.

    ``frequency`` is lattice cells per raster cell.  The lattice is offset by a
    random sub-cell shift so octaves do not share zero crossings.
    """
    h, w = shape
    offset = rng.random(2)
    ys = (np.arange(h) + 0.5) * frequency + offset[0]
    xs = (np.arange(w) + 0.5) * frequency + offset[1]
    ny = int(np.floor(ys[-1])) + 2
    nx = int(np.floor(xs[-1])) + 2
    theta = rng.random((ny, nx)) * (2.0 * np.pi)
    gy, gx = np.sin(theta), np.cos(theta)

    iy = np.floor(ys).astype(int)
    ix = np.floor(xs).astype(int)
    fy = (ys - iy)[:, None]
    fx = (xs - ix)[None, :]
    Y0, X0 = np.meshgrid(iy, ix, indexing="ij")

    def corner(dy, dx):
        Y, X = Y0 + dy, X0 + dx
        return gy[Y, X] * (fy - dy) + gx[Y, X] * (fx - dx)

    u, v = _fade(fx), _fade(fy)
    top = corner(0, 0) * (1 - u) + corner(0, 1) * u
    bottom = corner(1, 0) * (1 - u) + corner(1, 1) * u
    return top * (1 - v) + bottom * v


def _normalize(z, relief):
    lo, hi = z.min(), z.max()
    if hi == lo:
        return np.zeros_like(z)
    return (z - lo) / (hi - lo) * relief


def octave_sum(shape, base_frequency, octaves, lacunarity, gain, rng, transform=None):
    total = np.zeros(shape)
    amp, freq = 1.0, base_frequency
    for _ in range(octaves):
        n = gradient_noise(shape, freq, rng)
        if transform is not None:
            n = transform(n)
        total += amp * n
        amp *= gain
        freq *= lacunarity
    return total


def noise_surface(size, cell_size, seed, octaves=6, lacunarity=2.0, gain=0.5,
                  wavelength_m=25_000.0, relief_m=1500.0):
    """Multi-octave gradient noise rescaled to ``[0, relief_m]``."""
    freq = cell_size / wavelength_m
    z = octave_sum((size, size), freq, octaves, lacunarity, gain, rng_for(seed))
    return _normalize(z, relief_m)


def ridged_surface(size, cell_size, seed, octaves=6, lacunarity=2.0, gain=0.5,
                   wavelength_m=25_000.0, relief_m=1500.0):
    """Sum of ``1 - |n|`` octaves rescaled to ``[0, relief_m]``."""
    freq = cell_size / wavelength_m
    z = octave_sum((size, size), freq, octaves, lacunarity, gain, rng_for(seed),
                   transform=lambda n: 1.0 - np.abs(n))
    return _normalize(z, relief_m)


def diamond_square(size, seed, roughness=0.8, sigma_m=500.0, corners=None):
    """Midpoint-displacement fBm on a ``2**k + 1`` grid.

    Displacements at subdivision level ``j`` have standard deviation
    ``sigma_m * 2**(-j * roughness)``; corner values are either drawn from the
    generator or taken verbatim from ``corners`` (NW, NE, SW, SE).
    """
    k = int(round(np.log2(size - 1))) if size > 1 else -1
    if size < 3 or 2 ** k + 1 != size:
        raise ValueError(f"diamond-square needs size 2**k + 1, got {size}")
    rng = rng_for(seed)
    z = np.zeros((size, size))
    if corners is None:
        corners = rng.normal(0.0, sigma_m, 4)
    z[0, 0], z[0, -1], z[-1, 0], z[-1, -1] = corners
    step = size - 1
    scale = sigma_m
    while step > 1:
        half = step // 2
        scale *= 2.0 ** (-roughness)
        # diamond: centres of squares
        c = z[0:-1:step, 0:-1:step] + z[0:-1:step, step::step] + z[step::step, 0:-1:step] + z[step::step, step::step]
        n = c.shape
        z[half::step, half::step] = c / 4.0 + rng.normal(0.0, scale, n)
        # square: edge midpoints, averaging the available neighbours
        pad = np.pad(z, half, mode="constant", constant_values=np.nan)
        for r0, c0 in ((0, half), (half, 0)):
            rows = np.arange(r0, size, step)
            cols = np.arange(c0, size, step)
            R, C = np.meshgrid(rows + half, cols + half, indexing="ij")
            nbrs = np.stack([pad[R - half, C], pad[R + half, C], pad[R, C - half], pad[R, C + half]])
            mean = np.nanmean(nbrs, axis=0)
            z[np.ix_(rows, cols)] = mean + rng.normal(0.0, scale, mean.shape)
        step = half
    return z
