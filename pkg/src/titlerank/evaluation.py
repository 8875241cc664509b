"""Pairwise accuracy under k-fold cross-validation, with paired t-tests."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .pairing import PostPair

Scorer = Callable[[str], float]


@dataclass(frozen=True)
class FoldReport:
    fold_index: int
    train_size: int
    test_size: int
    accuracy: float


@dataclass(frozen=True)
class SignificanceResult:
    mean_diff: float
    t_statistic: float
    p_value: float
    significant_at_05: bool


def score_titles(scorer, titles: Sequence[str]) -> np.ndarray:
    if hasattr(scorer, "score_many"):
        return np.asarray(scorer.score_many(titles), dtype=np.float64)
    return np.array([scorer(t) for t in titles], dtype=np.float64)


def pairwise_accuracy(scorer, pairs: Sequence[PostPair]) -> float:
    """Fraction of pairs where the winner strictly outscores the loser."""
    if not pairs:
        raise ValueError("cannot compute accuracy over zero pairs")
    s = score_titles(scorer, [p.winner.title for p in pairs] + [p.loser.title for p in pairs])
    n = len(pairs)
    return float(np.mean(s[:n] > s[n:]))


def kfold_indices(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """One seeded shuffle, then k contiguous test slices (sizes differ by at most 1)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"need at least k={k} pairs, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    return np.array_split(order, k)


def kfold_cv(
    pairs: Sequence[PostPair],
    fit: Callable[[list[PostPair]], Scorer],
    k: int = 5,
    seed: int = 0,
    n_jobs: int = 1,
) -> list[FoldReport]:
    """Retrain from scratch on each fold's complement and score its test slice.

    ``fit`` maps a list of training pairs to a scorer.
    """
    folds = kfold_indices(len(pairs), k, seed)

    def run(i):
        test_idx = folds[i]
        test_set = set(test_idx.tolist())
        train = [pairs[j] for j in range(len(pairs)) if j not in test_set]
        test = [pairs[j] for j in test_idx]
        scorer = fit(train)
        return FoldReport(i, len(train), len(test), pairwise_accuracy(scorer, test))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(run, range(k)))
    return [run(i) for i in range(k)]


def summarize(reports: Sequence[FoldReport]) -> tuple[float, float]:
    acc = np.array([r.accuracy for r in reports])
    return float(acc.mean()), float(acc.std(ddof=1)) if len(acc) > 1 else 0.0


def write_report(reports: Sequence[FoldReport], path: str | Path) -> None:
    mean, std = summarize(reports)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["fold", "train_size", "test_size", "accuracy"])
        for r in reports:
            w.writerow([r.fold_index, r.train_size, r.test_size, f"{r.accuracy:.6f}"])
        w.writerow(["mean", "", "", f"{mean:.6f}"])
        w.writerow(["stddev", "", "", f"{std:.6f}"])


# ----------------------------------------------------------------- t-test


def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-16) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
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


def student_t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> SignificanceResult:
    """Two-sided paired t-test on per-fold differences ``a - b``.

    Zero variance of the differences gives p = 0 if their mean is nonzero
    and p = 1 if it is zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length samples with at least 2 entries")
    d = a - b
    n = d.size
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            t, p = 0.0, 1.0
        else:
            t, p = math.copysign(math.inf, mean), 0.0
    else:
        t = mean / (sd / math.sqrt(n))
        p = student_t_sf_two_sided(t, n - 1)
    return SignificanceResult(mean, t, p, p < alpha)
