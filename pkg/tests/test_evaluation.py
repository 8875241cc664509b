import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings, strategies as st

from titlerank.evaluation import (
    FoldReport,
    betainc_regularized,
    kfold_cv,
    kfold_indices,
    paired_t_test,
    pairwise_accuracy,
    student_t_sf_two_sided,
    summarize,
    write_report,
)
from titlerank.pairing import make_pair

from conftest import make_post


def pairs_from(titles):
    return [make_pair(make_post(2 * i, 100, 1000 + i, w), make_post(2 * i + 1, 10, 1000 + i, l))
            for i, (w, l) in enumerate(titles)]


class TestAccuracy:
    def test_perfect_and_inverted(self):
        pairs = pairs_from([("aaa", "b"), ("cccc", "dd")])
        assert pairwise_accuracy(len, pairs) == 1.0
        assert pairwise_accuracy(lambda t: -len(t), pairs) == 0.0

    def test_ties_are_wrong(self):
        assert pairwise_accuracy(lambda t: 1.0, pairs_from([("a", "b")])) == 0.0

    def test_empty(self):
        with pytest.raises(ValueError):
            pairwise_accuracy(len, [])

    def test_sign_flip(self, rng):
        # tie-free scorer: accuracy(-s) = 1 - accuracy(s)
        table = {}
        pairs = pairs_from([(f"w{i}", f"l{i}") for i in range(50)])
        for p in pairs:
            table[p.winner.title], table[p.loser.title] = rng.normal(size=2)
        a = pairwise_accuracy(table.__getitem__, pairs)
        b = pairwise_accuracy(lambda t: -table[t], pairs)
        assert a + b == pytest.approx(1.0, abs=1e-12)


class TestFolds:
    @pytest.mark.parametrize("n,k", [(10, 5), (11, 5), (103, 5), (7, 3)])
    def test_partition(self, n, k):
        folds = kfold_indices(n, k, seed=1)
        assert len(folds) == k
        assert sorted(np.concatenate(folds).tolist()) == list(range(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1

    def test_seeded(self):
        assert all(np.array_equal(a, b) for a, b in zip(kfold_indices(50, 5, 3), kfold_indices(50, 5, 3)))

    def test_too_few(self):
        with pytest.raises(ValueError):
            kfold_indices(3, 5)

    def test_cv_trains_on_complement(self):
        pairs = pairs_from([(f"win{i}", f"l{i}") for i in range(20)])
        seen = []

        def fit(train):
            seen.append({p.winner.id for p in train})
            return len

        reports = kfold_cv(pairs, fit, k=5)
        assert [r.train_size for r in reports] == [16] * 5
        assert [r.accuracy for r in reports] == [1.0] * 5
        held_out = [{p.winner.id for p in pairs} - s for s in seen]
        assert set().union(*held_out) == {p.winner.id for p in pairs}

    def test_parallel_matches_serial(self):
        pairs = pairs_from([(f"w{'x' * (i % 3)}", f"l{i}") for i in range(20)])
        assert kfold_cv(pairs, lambda tr: len, n_jobs=3) == kfold_cv(pairs, lambda tr: len)

    def test_report_csv(self, tmp_path):
        reports = [FoldReport(i, 8, 2, a) for i, a in enumerate([0.5, 1.0])]
        write_report(reports, tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "fold,train_size,test_size,accuracy"
        assert lines[-2] == "mean,,,0.750000"
        assert summarize(reports) == (0.75, pytest.approx(math.sqrt(0.125)))


class TestTTest:
    def test_known_example(self):
        a = [0.88, 0.87, 0.89, 0.86, 0.88]
        b = [0.84, 0.85, 0.83, 0.86, 0.84]
        r = paired_t_test(a, b)
        ref = scipy.stats.ttest_rel(a, b)
        assert r.t_statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert r.p_value == pytest.approx(ref.pvalue, abs=1e-9)
        assert r.significant_at_05

    def test_outlier_not_significant(self):
        a = [0.90, 0.90, 0.90, 0.90, 0.99]
        b = [0.90, 0.90, 0.90, 0.90, 0.60]
        r = paired_t_test(a, b)
        assert r.p_value == pytest.approx(scipy.stats.ttest_rel(a, b).pvalue, abs=1e-9)
        assert not r.significant_at_05

    def test_zero_variance(self):
        r = paired_t_test([0.9] * 5, [0.8] * 5)
        assert r.p_value == 0.0 and r.t_statistic == math.inf
        r = paired_t_test([0.9] * 5, [0.9] * 5)
        assert (r.t_statistic, r.p_value) == (0.0, 1.0)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=12))
    def test_against_scipy(self, rows):
        a, b = np.array(rows).T
        d = a - b
        if np.std(d, ddof=1) < 1e-6:
            return
        r = paired_t_test(a, b)
        ref = scipy.stats.ttest_rel(a, b)
        assert r.t_statistic == pytest.approx(ref.statistic, rel=1e-9, abs=1e-9)
        assert r.p_value == pytest.approx(ref.pvalue, abs=1e-9)
        swapped = paired_t_test(b, a)
        assert swapped.t_statistic == -r.t_statistic and swapped.p_value == r.p_value

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            paired_t_test([1.0], [2.0])
        with pytest.raises(ValueError):
            paired_t_test([1.0, 2.0], [1.0])


class TestSpecialFunctions:
    @pytest.mark.parametrize("a,b", [(0.5, 0.5), (2.0, 0.5), (1.5, 0.5), (10.0, 3.0), (50.0, 0.5)])
    def test_betainc(self, a, b):
        for x in np.linspace(0, 1, 41):
            assert betainc_regularized(a, b, x) == pytest.approx(scipy.special.betainc(a, b, x), abs=1e-12)

    def test_t_survival(self):
        for df in (1, 2, 4, 9, 30):
            for t in (0.0, 0.3, 1.0, 2.776, 10.0, -3.0):
                ref = 2 * scipy.stats.t.sf(abs(t), df)
                assert student_t_sf_two_sided(t, df) == pytest.approx(ref, abs=1e-12)
