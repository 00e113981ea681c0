"""Regenerate the shipped calibration files.

The weights, intercepts and divisors are the published constants, copied
verbatim.  Only the normalization bounds are computed here: the per-feature
min and max coverage over the bundled real-terrain windows, classified with
the default geomorphon parameters.

    python tools/build_calibrations.py
"""
from pathlib import Path

import numpy as np

from terrain_toolkit import geomorphon, metric, samples

BOUNDS_VERSION = 1
DATA = Path(__file__).resolve().parents[1] / "src" / "terrain_toolkit" / "data"

PUBLISHED = {
    "ptrm-main": dict(
        intercept=-38.02,
        weights=[3.55, 1.75, 25.12, 9.61, 7.59, 6.71, 9.02, 7.31, 28.95, 7.63],
        divisor=69.96),
    "ptrm-validation": dict(
        intercept=-38.44,
        weights=[3.61, 1.77, 25.40, 9.71, 7.65, 6.77, 9.14, 7.40, 29.26, 7.69],
        divisor=69.22),
}


def real_bounds(params):
    rows = [geomorphon.geomorphon_histogram(f, params).coverage for _, f in samples.real_samples()]
    table = np.vstack(rows)
    return table.min(axis=0), table.max(axis=0), len(rows)


def main():
    params = geomorphon.GeomorphonParams()
    lo, hi, n = real_bounds(params)
    for name, consts in PUBLISHED.items():
        cal = metric.Calibration(
            name=name, feature_min=np.round(lo, 12), feature_max=np.round(hi, 12),
            clamp=True, geomorphon=params,
            provenance=(f"bounds v{BOUNDS_VERSION}: per-feature min/max coverage over {n} "
                        f"bundled real-terrain windows (L={params.search_radius_cells}, "
                        f"t={params.flatness_deg}); coefficients published verbatim"),
            **consts)
        metric.save_calibration(cal, DATA / f"{name}.json")
        print(f"wrote {name}.json")


if __name__ == "__main__":
    main()
