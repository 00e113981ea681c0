"""A simulated perception study, end to end.

Simulated raters make two-alternative forced choices between corpus
terrains whose "true" realism follows the shipped model plus noise.  Votes
are aggregated into normalized scores, attached to a corpus report, and a
new calibration is fitted to them.  The fit is then checked against the
scores it was trained on.
"""
import argparse
import tempfile
from pathlib import Path

import numpy as np

from terrain_toolkit import corpus, metric, stats
from terrain_toolkit.stats import VoteRecord


def simulate_votes(truth: dict, n_votes: int, rng) -> list:
    """Bradley-Terry style raters: P(left wins) = sigmoid(k * (q_left - q_right))."""
    ids = sorted(truth)
    votes = []
    for i in range(n_votes):
        left, right = rng.choice(ids, 2, replace=False)
        p_left = 1.0 / (1.0 + np.exp(-8.0 * (truth[left] - truth[right])))
        votes.append(VoteRecord(left, right, "left" if rng.random() < p_left else "right", f"r{i % 70:02d}"))
    return votes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="keep the corpus, votes and report here")
    ap.add_argument("--seeds", type=int, default=6)
    ap.add_argument("--size", type=int, default=65)
    ap.add_argument("--votes", type=int, default=4000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(2024)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(args.out or tmp)
        manifest = corpus.write_synthetic_corpus(out / "corpus", ["noise", "ridged", "fbm", "thermal"],
                                                 seeds=range(args.seeds), size=args.size)
        report = corpus.batch_score(manifest)
        print(f"scored {len(report.rows)} terrains, {len(report.failures)} failures")

        main_cal = metric.load_calibration("ptrm-main")
        truth = {r.id: r.ptrm + rng.normal(0, 0.02) for r in report.rows}
        votes = simulate_votes(truth, args.votes, rng)
        stats.write_votes(votes, out / "votes.csv")
        ranks = stats.rank_from_votes(votes)
        stats.write_ranks(ranks, out / "ranks.csv")
        r = stats.pearson([truth[i] for i in ranks.ids], [ranks.normalized_score[i] for i in ranks.ids])
        print(f"{len(votes)} votes; Pearson(latent realism, vote score) = {r:.3f}")

        # fit weights to the vote scores, keeping the shipped bounds so features mean the same thing
        scored = corpus.with_measured_scores(report, ranks.normalized_score)
        corpus.emit_report(scored, out / "report.csv")
        cal, fit = corpus.refit_calibration(scored, bounds=main_cal, name="simulated-study")
        metric.save_calibration(cal, out / "refit.json")
        print(f"refit: R2={fit.r_squared:.3f}, std error {fit.std_error:.3f}, rank {fit.rank}, n={fit.n}")

        pred = [metric.score_histogram(np.array(row.coverage), cal) for row in scored.rows]
        meas = [row.measured_score for row in scored.rows]
        print(f"Pearson(refit prediction, vote score) = {stats.pearson(pred, meas):.3f}")
        by_cat: dict = {}
        for row, p in zip(scored.rows, pred):
            by_cat.setdefault(row.category, []).append((row.measured_score, p))
        print(f"\n{'tag':<4} {'vote score':>10} {'refit':>7}")
        for tag, pairs in sorted(by_cat.items()):
            m, p = np.mean(pairs, axis=0)
            print(f"{tag:<4} {m:10.3f} {p:7.3f}")


if __name__ == "__main__":
    main()
