import json
import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from terrain_toolkit import stats
from terrain_toolkit.stats import DegenerateVarianceError, StatsError, VoteRecord

from conftest import FIXTURES

ORACLE = json.loads((FIXTURES / "stats_oracle.json").read_text())
PLANTED_W = np.array([3.55, 1.75, 25.12, 9.61, 7.59, 6.71, 9.02, 7.31, 28.95, 7.63]) / 10
PLANTED_B = -3.802


def votes(*triples):
    return [VoteRecord(a, b, c) for a, b, c in triples]


class TestRanking:
    def test_cycle(self):
        v = votes(*([("A", "B", "left")] * 5 + [("B", "C", "left")] * 3 + [("C", "A", "left")] * 2))
        t = stats.rank_from_votes(v)
        assert t.win_count == {"A": 5, "B": 3, "C": 2}
        assert t.normalized_score == {"A": 1.0, "B": 0.6, "C": 0.4}

    def test_single(self):
        t = stats.rank_from_votes(votes(("B", "A", "right")))
        assert t.normalized_score == {"A": 1.0, "B": 0.0}

    def test_round_robin_equal(self):
        t = stats.rank_from_votes(votes(("A", "B", "left"), ("B", "C", "left"), ("C", "A", "left")))
        assert set(t.normalized_score.values()) == {1.0}

    def test_permutation_invariant(self, rng):
        ids = list("ABCDEFG")
        v = [VoteRecord(*rng.choice(ids, 2, replace=False), rng.choice(["left", "right"]))
             for _ in range(200)]
        base = stats.rank_from_votes(v)
        for _ in range(5):
            assert stats.rank_from_votes(list(rng.permutation(v))) == base
        assert max(base.normalized_score.values()) == 1.0

    def test_errors(self):
        with pytest.raises(StatsError):
            stats.rank_from_votes([])
        with pytest.raises(StatsError):
            VoteRecord("A", "A", "left")
        with pytest.raises(StatsError):
            VoteRecord("A", "B", "middle")

    def test_csv_round_trip(self, tmp_path):
        v = votes(("t1", "t2", "left"), ("t2", "t3", "RIGHT"), ("t3", "t1", "left"))
        stats.write_votes(v, tmp_path / "v.csv")
        assert (tmp_path / "v.csv").read_text().splitlines()[0] == "left_id,right_id,choice,rater_id"
        back = stats.read_votes(tmp_path / "v.csv")
        assert back == v
        t = stats.rank_from_votes(back)
        stats.write_ranks(t, tmp_path / "r.csv")
        assert stats.read_ranks(tmp_path / "r.csv") == t

    @pytest.mark.parametrize("text", ["a,b,c\nx,y,left\n", "left_id,right_id,choice,rater_id\nx,y\n",
                                      "left_id,right_id,choice,rater_id\nx,x,left,r\n"])
    def test_bad_csv(self, tmp_path, text):
        (tmp_path / "v.csv").write_text(text)
        with pytest.raises(StatsError):
            stats.read_votes(tmp_path / "v.csv")


class TestPearson:
    def test_examples(self):
        x = np.arange(10.0)
        assert stats.pearson(x, 2 * x + 1) == pytest.approx(1.0, abs=1e-15)
        assert stats.pearson(x, -x) == pytest.approx(-1.0, abs=1e-15)
        assert stats.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / math.sqrt(2 * 14 / 3), abs=1e-12)
        assert stats.pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.98198, abs=1e-5)

    @given(arrays(np.float64, 12, elements=st.floats(-100, 100)),
           arrays(np.float64, 12, elements=st.floats(-100, 100)),
           st.floats(0.1, 10), st.floats(-50, 50))
    def test_properties(self, x, y, a, b):
        if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
            return
        r = stats.pearson(x, y)
        assert -1 <= r <= 1
        assert stats.pearson(y, x) == pytest.approx(r, abs=1e-12)
        assert stats.pearson(a * x + b, y) == pytest.approx(r, abs=1e-9)

    def test_errors(self):
        with pytest.raises(DegenerateVarianceError):
            stats.pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(StatsError):
            stats.pearson([1, 2], [1, 2, 3])
        with pytest.raises(StatsError):
            stats.pearson([1], [1])


class TestRegression:
    def planted(self, rng, n, sigma=0.0):
        X = rng.uniform(0, 1, (n, 10))
        y = PLANTED_B + X @ PLANTED_W + rng.normal(0, sigma, n) * (sigma > 0)
        return X, y

    def test_noiseless_recovery(self, rng):
        X, y = self.planted(rng, 200)
        fit = stats.fit_mlr(X, y)
        assert np.abs(fit.coefficients - PLANTED_W).max() <= 1e-8
        assert abs(fit.intercept - PLANTED_B) <= 1e-8
        assert fit.r_squared == pytest.approx(1.0)

    def test_noisy_recovery(self, rng):
        X, y = self.planted(rng, 600, 0.01)
        t0 = time.perf_counter()
        fit = stats.fit_mlr(X, y)
        assert time.perf_counter() - t0 < 1.0
        assert np.all(np.abs(fit.coefficients / PLANTED_W - 1) <= 0.05)
        assert fit.r_squared > 0.95
        assert fit.std_error == pytest.approx(0.01, rel=0.15)
        assert (fit.df_model, fit.df_resid) == (10, 589)
        assert fit.p_value < 1e-100

    def test_constant_scores(self, rng):
        X = rng.uniform(0, 1, (40, 10))
        fit = stats.fit_mlr(X, np.full(40, 0.37))
        assert np.abs(fit.coefficients).max() <= 1e-12
        assert fit.intercept == pytest.approx(0.37, abs=1e-12)
        assert fit.r_squared == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_residual_identities(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(50, 10))
        y = rng.normal(size=50)
        fit = stats.fit_mlr(X, y)
        A = np.column_stack([np.ones(50), X])
        assert np.abs(A.T @ fit.residuals).max() <= 1e-8
        assert abs(fit.residuals.mean()) <= 1e-9
        ss_res = float(fit.residuals @ fit.residuals)
        ss_tot = float(((y - y.mean()) ** 2).sum())
        assert fit.r_squared == 1 - ss_res / ss_tot

    def test_rank_deficient_reported(self, rng):
        X = rng.uniform(0, 1, (30, 10))
        X[:, 4] = 2 * X[:, 1] - X[:, 7]
        with pytest.raises(stats.RankDeficientError) as err:
            stats.fit_mlr(X, rng.normal(size=30))
        assert len(err.value.columns) == 1
        assert err.value.columns[0] in ("x1", "x4", "x7")

    def test_simplex_features_collinear_with_intercept(self, rng):
        G = rng.dirichlet(np.ones(10), 40)
        with pytest.raises(stats.RankDeficientError):
            stats.fit_mlr(G, rng.normal(size=40))
        fit = stats.fit_mlr(G, rng.normal(size=40), on_rank_deficient="min_norm")
        assert fit.rank == 10 and fit.df_model == 9
        A = np.column_stack([np.ones(40), G])
        assert np.abs(A.T @ fit.residuals).max() <= 1e-8

    def test_too_few(self, rng):
        with pytest.raises(StatsError):
            stats.fit_mlr(rng.normal(size=(11, 10)), rng.normal(size=11))

    def test_shape_mismatch(self, rng):
        with pytest.raises(StatsError):
            stats.fit_mlr(rng.normal(size=(20, 10)), rng.normal(size=19))

    def test_to_dict(self, rng):
        X, y = self.planted(rng, 30, 0.01)
        d = stats.fit_mlr(X, y).to_dict()
        assert len(d["coefficients"]) == 10 and 0 <= d["r_squared"] <= 1


class TestIncompleteBeta:
    @pytest.mark.parametrize("case", ORACLE["betainc"], ids=lambda c: f"{c['x']}-{c['a']}-{c['b']}")
    def test_oracle(self, case):
        assert stats.regularized_beta(case["x"], case["a"], case["b"]) == pytest.approx(case["value"], abs=1e-10)

    @given(st.floats(0.001, 0.999), st.floats(0.1, 50), st.floats(0.1, 50))
    def test_reflection(self, x, a, b):
        lhs = stats.regularized_beta(x, a, b)
        assert 0 <= lhs <= 1
        assert lhs == pytest.approx(1 - stats.regularized_beta(1 - x, b, a), abs=1e-9)

    def test_edges(self):
        assert stats.regularized_beta(0.0, 2, 3) == 0.0
        assert stats.regularized_beta(1.0, 2, 3) == 1.0
        with pytest.raises(ValueError):
            stats.regularized_beta(1.5, 2, 3)

    @pytest.mark.parametrize("case", ORACLE["t_two_tailed"], ids=lambda c: f"t{c['t']}")
    def test_t_tail(self, case):
        assert stats.t_two_tailed_p(case["t"], case["df"]) == pytest.approx(case["p"], abs=1e-4)

    @pytest.mark.parametrize("case", ORACLE["f_sf"], ids=lambda c: f"F{c['F']}")
    def test_f_tail(self, case):
        assert stats.f_upper_p(case["F"], case["d1"], case["d2"]) == pytest.approx(case["p"], abs=1e-4)


class TestTTest:
    @pytest.mark.parametrize("case", ORACLE["ttests"], ids=lambda c: f"{c['name']}-{c['mode']}")
    def test_oracle(self, case):
        r = stats.welch_t_test(case["a"], case["b"], case["mode"])
        assert r.t == pytest.approx(case["t"], abs=1e-4)
        assert r.df == pytest.approx(case["df"], abs=1e-4)
        assert r.p_two_tailed == pytest.approx(case["p"], abs=1e-4)

    @pytest.mark.parametrize("mode", ["welch", "pooled", "paired"])
    def test_identical(self, mode):
        a = [1.0, 2.5, 3.0, 7.0]
        r = stats.welch_t_test(a, a, mode)
        assert r.t == 0 and r.p_two_tailed == 1.0

    def test_paired_constant_difference(self):
        with pytest.raises(DegenerateVarianceError):
            stats.welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6], "paired")

    def test_paired_df(self, rng):
        a = rng.normal(size=150)
        assert stats.welch_t_test(a, a + rng.normal(0.1, 1, 150), "paired").df == 149

    def test_errors(self):
        with pytest.raises(StatsError):
            stats.welch_t_test([1.0], [1.0, 2.0])
        with pytest.raises(StatsError):
            stats.welch_t_test([1, 2, 3], [1, 2], "paired")
        with pytest.raises(ValueError):
            stats.welch_t_test([1, 2], [3, 4], "bayes")


class TestAnova:
    @pytest.mark.parametrize("case", ORACLE["anova"], ids=lambda c: c["name"])
    def test_oracle(self, case):
        r = stats.anova_oneway(case["groups"])
        assert r.F == pytest.approx(case["F"], abs=1e-4)
        assert (r.df_between, r.df_within) == (case["df_between"], case["df_within"])
        assert r.p == pytest.approx(case["p"], abs=1e-4)

    @pytest.mark.parametrize("seed", range(10))
    def test_two_groups_equal_pooled_t_squared(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(0, 1, 13), rng.normal(0.5, 2, 9)
        F = stats.anova_oneway([a, b]).F
        t = stats.welch_t_test(a, b, "pooled").t
        assert F == pytest.approx(t * t, rel=1e-9, abs=1e-9)
        assert stats.anova_oneway([a, b]).p == pytest.approx(stats.welch_t_test(a, b, "pooled").p_two_tailed, abs=1e-9)

    def test_constant_groups(self):
        with pytest.raises(DegenerateVarianceError):
            stats.anova_oneway([[2.0, 2.0], [2.0, 2.0, 2.0]])

    def test_insufficient(self):
        with pytest.raises(StatsError):
            stats.anova_oneway([[1, 2, 3]])
        with pytest.raises(StatsError):
            stats.anova_oneway([[1, 2, 3], [4]])
