"""Freeze independent reference values for the statistics tests.

scipy.stats is the oracle here only; the package computes its own p-values.
Writes tests/fixtures/stats_oracle.json.

    python tools/make_stats_oracle.py
"""
import json
from pathlib import Path

import numpy as np
from scipy import special, stats

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "stats_oracle.json"


def main():
    rng = np.random.default_rng(20240611)
    a = [19.1, 20.3, 21.5, 18.7, 22.0, 20.9, 19.8]
    b = [17.4, 18.9, 19.2, 16.8, 18.1, 20.0]
    before = [72.0, 68.5, 80.1, 75.3, 66.2, 71.8, 79.4, 70.0]
    after = [70.2, 67.9, 77.5, 74.9, 65.0, 70.1, 76.8, 69.7]
    big_a = np.round(rng.normal(0.6, 0.2, 150), 4).tolist()
    big_b = np.round(np.array(big_a) - rng.normal(0.25, 0.15, 150), 4).tolist()

    ttests = []
    for name, x, y in (("textbook", a, b), ("small_paired", before, after), ("n150", big_a, big_b)):
        modes = ["welch", "pooled"] + (["paired"] if len(x) == len(y) else [])
        for mode in modes:
            if mode == "paired":
                r = stats.ttest_rel(x, y)
                df = len(x) - 1
            else:
                r = stats.ttest_ind(x, y, equal_var=(mode == "pooled"))
                df = float(r.df)
            ttests.append({"name": name, "mode": mode, "a": x, "b": y, "t": float(r.statistic),
                           "df": float(df), "p": float(r.pvalue)})

    groups3 = [[24.5, 23.5, 26.4, 27.1, 29.9], [28.4, 34.2, 29.5, 32.2, 30.1],
               [26.1, 28.3, 24.3, 26.2, 27.8]]
    groups4 = [np.round(rng.normal(m, 1.0, n), 3).tolist()
               for m, n in ((0.0, 12), (0.4, 9), (0.9, 15), (0.1, 7))]
    anova = []
    for name, groups in (("three_group", groups3), ("four_group", groups4)):
        r = stats.f_oneway(*groups)
        anova.append({"name": name, "groups": groups, "F": float(r.statistic),
                      "df_between": len(groups) - 1,
                      "df_within": sum(map(len, groups)) - len(groups), "p": float(r.pvalue)})

    fdist = [{"F": f, "d1": d1, "d2": d2, "p": float(stats.f.sf(f, d1, d2))}
             for f, d1, d2 in ((153.5276, 10, 588), (2.5, 3, 20), (0.7, 5, 12), (4.2, 1, 40))]
    tdist = [{"t": t, "df": df, "p": float(2 * stats.t.sf(abs(t), df))}
             for t, df in ((17.91, 283), (22.59, 149), (2.1, 9), (0.3, 3.5), (-1.7, 25))]
    beta = [{"x": x, "a": a_, "b": b_, "value": float(special.betainc(a_, b_, x))}
            for x, a_, b_ in ((0.3, 2.0, 3.0), (0.9, 0.5, 0.5), (0.05, 10.0, 1.5), (0.5, 200.0, 190.0),
                              (0.999, 3.0, 0.7))]
    doc = {"generator": "scipy " + __import__("scipy").__version__, "ttests": ttests,
           "anova": anova, "f_sf": fdist, "t_two_tailed": tdist, "betainc": beta}
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
