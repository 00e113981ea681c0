"""Vote aggregation, correlation, regression refit and significance tests.

p-values come from a self-contained regularized incomplete beta function
(continued fraction, modified Lentz), so the module needs nothing beyond
numpy and scipy's linear algebra.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

VOTE_HEADER = ("left_id", "right_id", "choice", "rater_id")
RANK_HEADER = ("id", "win_count", "normalized_score")
BETA_TOL = 1e-10
_BETA_MAX_ITER = 10_000


class StatsError(ValueError):
    """Input that a statistic cannot be computed from."""


class DegenerateVarianceError(StatsError):
    """A variance that the statistic divides by is zero."""


class RankDeficientError(StatsError):
    """Design matrix columns are linearly dependent."""

    def __init__(self, message, columns):
        super().__init__(message)
        self.columns = tuple(columns)


# ---------------------------------------------------------------- votes

@dataclass(frozen=True)
class VoteRecord:
    left_id: str
    right_id: str
    choice: str
    rater_id: str = ""

    def __post_init__(self):
        choice = str(self.choice).strip().lower()
        if choice not in ("left", "right"):
            raise StatsError(f"choice must be 'left' or 'right', got {self.choice!r}")
        if self.left_id == self.right_id:
            raise StatsError(f"vote compares {self.left_id!r} with itself")
        object.__setattr__(self, "choice", choice)

    @property
    def winner(self) -> str:
        return self.left_id if self.choice == "left" else self.right_id


@dataclass(frozen=True)
class RankTable:
    """Win counts and max-normalized scores, keyed by terrain id (sorted)."""

    win_count: dict
    normalized_score: dict

    @property
    def ids(self) -> list:
        return list(self.win_count)

    def rows(self):
        for tid in self.win_count:
            yield tid, self.win_count[tid], self.normalized_score[tid]


def rank_from_votes(votes: Iterable[VoteRecord]) -> RankTable:
    """Tally one point per won comparison and divide by the best tally."""
    votes = list(votes)
    if not votes:
        raise StatsError("no votes to rank")
    wins: dict = {}
    for v in votes:
        wins.setdefault(v.left_id, 0)
        wins.setdefault(v.right_id, 0)
        wins[v.winner] += 1
    ordered = {k: wins[k] for k in sorted(wins)}
    top = max(ordered.values())
    scores = {k: c / top for k, c in ordered.items()}
    return RankTable(ordered, scores)


def read_votes(path) -> list[VoteRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != VOTE_HEADER:
            raise StatsError(f"{path}: expected header {','.join(VOTE_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise StatsError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                out.append(VoteRecord(*(c.strip() for c in row)))
            except StatsError as exc:
                raise StatsError(f"{path}:{lineno}: {exc}") from None
        return out


def write_votes(votes: Iterable[VoteRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VOTE_HEADER)
        for v in votes:
            w.writerow((v.left_id, v.right_id, v.choice, v.rater_id))


def write_ranks(table: RankTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RANK_HEADER)
        for tid, count, score in table.rows():
            w.writerow((tid, count, repr(float(score))))


def read_ranks(path) -> RankTable:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RANK_HEADER:
            raise StatsError(f"{path}: expected header {','.join(RANK_HEADER)}")
        wins, scores = {}, {}
        for row in reader:
            wins[row["id"]] = int(row["win_count"])
            scores[row["id"]] = float(row["normalized_score"])
    return RankTable(wins, scores)


# ---------------------------------------------------------- correlation

def _vector(x, name):
    arr = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise StatsError(f"{name} contains non-finite values")
    return arr


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = _vector(x, "x"), _vector(y, "y")
    if x.size != y.size:
        raise StatsError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise StatsError("pearson needs at least two observations")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateVarianceError("pearson undefined for zero-variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------- incomplete beta

def _betacf(a, b, x):
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETA_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_tailed_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return regularized_beta(df / (df + t * t), 0.5 * df, 0.5)


def f_upper_p(f: float, d1: float, d2: float) -> float:
    if math.isinf(f):
        return 0.0
    if f <= 0:
        return 1.0
    return regularized_beta(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1)


# ------------------------------------------------------------ t-tests

@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p_two_tailed: float
    mode: str


def _ratio(num, var, what):
    if var == 0:
        if num == 0:
            return 0.0
        raise DegenerateVarianceError(f"{what} variance is zero; t is unbounded")
    return num / math.sqrt(var)


def welch_t_test(a, b, mode: str = "welch") -> TTestResult:
    """Two-sample t-test.

    ``mode`` is ``"welch"`` (unequal variances, Welch-Satterthwaite df),
    ``"pooled"`` (equal variances, df = n_a + n_b - 2) or ``"paired"``
    (df = n - 1 over the differences).  Zero variance with a zero mean
    difference gives t = 0, p = 1; with a nonzero difference it raises
    :class:`DegenerateVarianceError`.
    """
    a, b = _vector(a, "a"), _vector(b, "b")
    if a.size < 2 or b.size < 2:
        raise StatsError("each sample needs at least two observations")
    if mode == "paired":
        if a.size != b.size:
            raise StatsError("paired test needs equal-length samples")
        d = a - b
        n = d.size
        t = _ratio(float(d.mean()), float(d.var(ddof=1)) / n, "paired difference")
        df = float(n - 1)
    elif mode in ("welch", "pooled"):
        na, nb = a.size, b.size
        va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
        diff = float(a.mean() - b.mean())
        if mode == "pooled":
            df = float(na + nb - 2)
            sp = ((na - 1) * va + (nb - 1) * vb) / df
            t = _ratio(diff, sp * (1.0 / na + 1.0 / nb), "pooled")
        else:
            se2 = va / na + vb / nb
            t = _ratio(diff, se2, "sample")
            if se2 == 0:
                df = float(na + nb - 2)
            else:
                df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    else:
        raise ValueError(f"unknown mode {mode!r}; expected welch, pooled or paired")
    return TTestResult(t, df, t_two_tailed_p(t, df), mode)


# -------------------------------------------------------------- ANOVA

@dataclass(frozen=True)
class AnovaResult:
    F: float
    df_between: int
    df_within: int
    p: float


def anova_oneway(groups) -> AnovaResult:
    groups = [_vector(g, f"group {i}") for i, g in enumerate(groups)]
    if len(groups) < 2:
        raise StatsError("ANOVA needs at least two groups")
    if any(g.size < 2 for g in groups):
        raise StatsError("every group needs at least two observations")
    allv = np.concatenate(groups)
    grand = allv.mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    dfb = len(groups) - 1
    dfw = allv.size - len(groups)
    if ss_within == 0:
        raise DegenerateVarianceError("within-group variance is zero")
    F = (ss_between / dfb) / (ss_within / dfw)
    return AnovaResult(float(F), dfb, dfw, f_upper_p(F, dfb, dfw))


# --------------------------------------------------------- regression

@dataclass(frozen=True, eq=False)
class RegressionFit:
    intercept: float
    coefficients: np.ndarray
    r_squared: float
    std_error: float
    residuals: np.ndarray
    f_statistic: float
    df_model: int
    df_resid: int
    p_value: float
    rank: int
    n: int

    def to_dict(self) -> dict:
        def num(v):
            return float(v) if math.isfinite(v) else None
        return {
            "intercept": self.intercept,
            "coefficients": [float(c) for c in self.coefficients],
            "r_squared": self.r_squared,
            "std_error": num(self.std_error),
            "f_statistic": num(self.f_statistic),
            "df_model": self.df_model,
            "df_resid": self.df_resid,
            "p_value": num(self.p_value),
            "rank": self.rank,
            "n": self.n,
        }


def _column_name(j):
    return "intercept" if j == 0 else f"x{j - 1}"


def fit_mlr(features, scores, on_rank_deficient: str = "raise") -> RegressionFit:
    """Least-squares fit of ``scores ~ 1 + features`` by pivoted QR.

    A rank-deficient design raises :class:`RankDeficientError` naming the
    dependent columns, unless ``on_rank_deficient="min_norm"``, which returns
    the minimum-norm least-squares solution instead (useful when the features
    are coverage fractions that sum to a constant).
    """
    X = np.asarray(features, dtype=np.float64)
    y = _vector(scores, "scores")
    if X.ndim != 2:
        raise StatsError("features must be an n x k matrix")
    n, k = X.shape
    if y.size != n:
        raise StatsError(f"{n} feature rows but {y.size} scores")
    if not np.all(np.isfinite(X)):
        raise StatsError("features contain non-finite values")
    if n <= k + 1:
        raise StatsError(f"need more than {k + 1} observations, got {n}")
    if on_rank_deficient not in ("raise", "min_norm"):
        raise ValueError("on_rank_deficient must be 'raise' or 'min_norm'")

    A = np.column_stack([np.ones(n), X])
    Q, R, piv = linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum())
    if rank == A.shape[1]:
        beta = np.empty(A.shape[1])
        beta[piv] = linalg.solve_triangular(R, Q.T @ y)
    elif on_rank_deficient == "raise":
        cols = sorted(int(j) for j in piv[rank:])
        raise RankDeficientError(
            "design matrix is rank deficient; dependent columns: "
            + ", ".join(_column_name(j) for j in cols), [_column_name(j) for j in cols])
    else:
        beta = linalg.lstsq(A, y, cond=None, lapack_driver="gelsd")[0]

    fitted = A @ beta
    resid = y - fitted
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    r2 = 0.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    df_model = rank - 1
    df_resid = n - rank
    std_error = math.sqrt(ss_res / df_resid)
    ss_reg = max(ss_tot - ss_res, 0.0)
    if df_model == 0 or (ss_reg == 0 and ss_res == 0):
        F, p = math.nan, math.nan
    elif ss_res == 0:
        F, p = math.inf, 0.0
    else:
        F = (ss_reg / df_model) / (ss_res / df_resid)
        p = f_upper_p(F, df_model, df_resid)
    resid.setflags(write=False)
    coefs = beta[1:].copy()
    coefs.setflags(write=False)
    return RegressionFit(float(beta[0]), coefs, r2, std_error, resid, F, df_model, df_resid, p,
                         rank, n)


__all__ = [
    "AnovaResult", "DegenerateVarianceError", "RankDeficientError", "RankTable", "RegressionFit",
    "StatsError", "TTestResult", "VoteRecord", "anova_oneway", "f_upper_p", "fit_mlr", "pearson",
    "rank_from_votes", "read_ranks", "read_votes", "regularized_beta", "t_two_tailed_p",
    "welch_t_test", "write_ranks", "write_votes",
]
