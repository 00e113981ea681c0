import json

import numpy as np
import pytest

from terrain_toolkit import geomorphon as g
from terrain_toolkit import synth
from terrain_toolkit.synth import SynthSpec, generate, noise


class TestSpec:
    def test_defaults_merged(self):
        spec = SynthSpec("thermal", 3, 65)
        assert spec.params["talus_deg"] == synth.DEFAULTS["categories"]["thermal"]["talus_deg"]
        assert spec.params["cell_size"] == 200.0

    def test_round_trip(self, tmp_path):
        spec = SynthSpec("coastal", -5, 65, {"band_m": 80.0})
        doc = spec.to_dict()
        assert doc["defaults_version"] == synth.DEFAULTS_VERSION
        (tmp_path / "s.json").write_text(json.dumps(doc))
        assert SynthSpec.from_json(tmp_path / "s.json") == spec

    @pytest.mark.parametrize("category,size,params", [
        ("noise", 32, {}),
        ("noise", 64, {"octaves": 0}),
        ("noise", 64, {"octaves": 1.5}),
        ("thermal", 64, {"talus_deg": 90.0}),
        ("thermal", 64, {"talus_deg": 0.0}),
        ("fluvial", 64, {"iterations": -1}),
        ("coastal", 64, {"sea_level_fraction": 1.5}),
        ("fbm", 64, {}),
        ("noise", 64, {"relief_m": 0.0}),
        ("noise", 64, {"no_such_param": 1}),
        ("lava", 64, {}),
    ])
    def test_invalid(self, category, size, params):
        with pytest.raises(ValueError):
            SynthSpec(category, 0, size, params)


@pytest.mark.parametrize("category", synth.CATEGORIES)
def test_deterministic_finite(category):
    a = generate(category, seed=42, size=65)
    b = generate(category, seed=42, size=65)
    assert a.elevations.tobytes() == b.elevations.tobytes()
    assert a.shape == (65, 65) and not a.has_voids
    assert np.isfinite(a.elevations).all()


def test_negative_and_large_seeds():
    a = generate("noise", seed=-1, size=33)
    b = generate("noise", seed=2**64 - 1, size=33)
    assert np.array_equal(a.elevations, b.elevations)


@pytest.mark.parametrize("pair", range(20))
def test_noise_seeds_differ(pair):
    a = generate("noise", seed=2 * pair, size=64).elevations
    b = generate("noise", seed=2 * pair + 1, size=64).elevations
    assert np.mean(a != b) >= 0.01


@pytest.mark.parametrize("category", ["noise", "ridged"])
def test_relief_range(category):
    z = generate(category, seed=7, size=64, relief_m=900.0).elevations
    assert z.min() == 0.0 and z.max() == pytest.approx(900.0) and z.max() <= 900.0


@pytest.mark.parametrize("seed", range(5))
def test_single_octave_gradient_bound(seed):
    size, cell, wl, relief = 96, 200.0, 4000.0, 1000.0
    z = generate("noise", seed=seed, size=size, octaves=1, wavelength_m=wl, relief_m=relief).elevations
    freq = cell / wl
    raw = noise.gradient_noise((size, size), freq, noise.rng_for(seed))
    scale = relief / (raw.max() - raw.min())  # meters per noise unit
    # one raster step moves freq lattice units, so |dz| per cell is bounded
    axis = noise.AXIS_DERIVATIVE_BOUND * freq * scale
    assert np.abs(np.diff(z, axis=0)).max() <= axis
    assert np.abs(np.diff(z, axis=1)).max() <= axis
    gy, gx = np.gradient(z)
    assert np.hypot(gx, gy).max() <= noise.GRADIENT_NORM_BOUND * freq * scale


def test_gradient_noise_unit_scale():
    n = noise.gradient_noise((64, 64), 0.25, noise.rng_for(0))
    assert np.abs(n).max() <= np.sqrt(2) / 2 + 1e-12


def test_ridged_has_more_ridges():
    kw = dict(octaves=6, gain=0.5)
    for seed in range(10):
        r = g.geomorphon_histogram(generate("ridged", seed=seed, size=129, **kw))["ridge"]
        n = g.geomorphon_histogram(generate("noise", seed=seed, size=129, **kw))["ridge"]
        assert r > n


class TestFbm:
    def test_corners_kept(self):
        corners = [10.0, -20.0, 30.0, 5.5]
        z = generate("fbm", seed=1, size=33, corners=corners).elevations
        assert [z[0, 0], z[0, -1], z[-1, 0], z[-1, -1]] == corners

    @pytest.mark.parametrize("size", [2, 31, 34, 100])
    def test_bad_size(self, size):
        with pytest.raises(ValueError):
            noise.diamond_square(size, 0)

    @pytest.mark.parametrize("H", [0.3, 0.5, 0.8])
    def test_increment_scaling(self, H):
        lags = np.array([1, 2, 4, 8, 16])
        var = np.zeros(lags.size)
        for seed in range(20):
            z = generate("fbm", seed=seed, size=257, roughness=H).elevations
            for i, h in enumerate(lags):
                d = np.concatenate([(z[:, h:] - z[:, :-h]).ravel(), (z[h:] - z[:-h]).ravel()])
                var[i] += d.var()
        slope = np.polyfit(np.log(lags), np.log(var), 1)[0]
        assert slope == pytest.approx(2 * H, rel=0.30)


def test_eroded_categories_start_from_noise():
    spec = SynthSpec("thermal", 5, 65, {"iterations": 0})
    base = noise.noise_surface(65, 200.0, 5, octaves=6, lacunarity=2.0, gain=spec.params["gain"],
                               wavelength_m=25000.0, relief_m=1500.0)
    assert np.array_equal(generate(spec).elevations, base)


def test_generate_accepts_spec():
    spec = SynthSpec("ridged", 9, 40)
    assert generate(spec) == generate("ridged", seed=9, size=40)
