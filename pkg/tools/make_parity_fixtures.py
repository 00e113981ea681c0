"""Regenerate the geomorphon parity fixtures in tests/fixtures/parity/.

Each fixture is a DEM (ESRI ASCII) plus the landform raster produced for it
by the WhiteboxTools ``geomorphons`` tool, a port of GRASS r.geomorphon,
stored verbatim as whitebox form codes (1 flat ... 10 pit, 0 on the border).
Needs ``pip install whitebox-workflows``; the package itself does not.

    python tools/make_parity_fixtures.py
"""
import json
import tempfile
from pathlib import Path

import numpy as np
import whitebox_workflows as wbw

from terrain_toolkit import samples
from terrain_toolkit.synth import generate

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "parity"

# (name, L, t) cases per DEM
CASES = {
    "jacksboro200": [(2, 1.0), (3, 1.0), (5, 2.0)],
    "topobathy": [(2, 1.0), (4, 0.5)],
    "noise80": [(2, 1.0), (3, 3.0)],
    "fbm65": [(2, 1.0), (6, 1.0)],
}


def dems():
    js = samples.jacksboro(200.0)
    yield "jacksboro200", js.elevations[40:136, 100:196], js.cell_size
    tb = samples.topobathy()
    yield "topobathy", tb.elevations, tb.cell_size
    yield "noise80", generate("noise", seed=11, size=80).elevations, 200.0
    yield "fbm65", generate("fbm", seed=5, size=65).elevations, 200.0


def write_asc(path, z, cs):
    h, w = z.shape
    lines = [f"ncols {w}", f"nrows {h}", "xllcorner 0.0", "yllcorner 0.0",
             f"cellsize {cs!r}", "NODATA_value -9999"]
    lines += [" ".join(repr(float(v)) for v in row) for row in z]
    Path(path).write_text("\n".join(lines) + "\n")


def read_codes(path):
    text = Path(path).read_text().splitlines()
    header = {}
    i = 0
    while text[i].split()[0].lower() in ("ncols", "nrows", "xllcorner", "yllcorner", "xllcenter",
                                         "yllcenter", "cellsize", "nodata_value"):
        k, v = text[i].split()[:2]
        header[k.lower()] = float(v)
        i += 1
    grid = np.array([[float(v) for v in row.split()] for row in text[i:] if row.strip()])
    grid[grid == header.get("nodata_value", -32768)] = 0
    return grid.astype(int)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    wbe = wbw.WbEnvironment()
    index = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, z, cs in dems():
            dem_path = OUT / f"{name}.asc"
            write_asc(dem_path, z, cs)
            raster = wbe.read_raster(str(dem_path))
            for L, t in CASES[name]:
                out = wbe.geomorphons(raster, search_distance=L, flatness_threshold=t,
                                      flatness_distance=0, skip_distance=0, output_forms=True,
                                      analyze_residuals=False)
                tmp_out = Path(tmp) / "forms.asc"
                wbe.write_raster(out, str(tmp_out))
                codes = read_codes(tmp_out)
                golden = f"{name}_L{L}_t{t:g}.txt"
                np.savetxt(OUT / golden, codes, fmt="%d")
                index.append({"dem": dem_path.name, "golden": golden, "search_radius_cells": L,
                              "flatness_deg": t})
                print(golden)
    (OUT / "index.json").write_text(json.dumps(index, indent=2) + "\n")


if __name__ == "__main__":
    main()
