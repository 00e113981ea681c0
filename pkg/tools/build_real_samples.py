"""Rebuild data/real_samples.npz from matplotlib's bundled sample data.

Needs matplotlib (tool-only dependency).  Elevations are stored as int16;
the topobathy grid is integral in the source, so nothing is lost.
"""
from pathlib import Path

import matplotlib.cbook as cbook
import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "terrain_toolkit" / "data" / "real_samples.npz"


def main():
    dem = cbook.get_sample_data("jacksboro_fault_dem.npz")
    tb = cbook.get_sample_data("topobathy.npz")
    topo = tb["topo"]
    assert np.array_equal(topo, np.round(topo)), "topobathy is no longer integral"
    np.savez_compressed(
        OUT,
        jacksboro=dem["elevation"].astype(np.int16),
        jacksboro_spacing_deg=np.array([float(dem["dy"]), float(dem["dx"])]),
        jacksboro_lat=np.array([float(dem["ymin"]), float(dem["ymax"])]),
        topobathy=topo.astype(np.int16),
        topobathy_lat=tb["latitude"],
        topobathy_lon=tb["longitude"],
    )
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
