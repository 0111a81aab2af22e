"""Scores checked against exhaustive matching and plug-in entropy formulas."""

import numpy as np
import pytest

from deepkm.metrics import MetricsReport, accuracy, contingency_table, evaluate, hungarian, nmi
from helpers import brute_force_accuracy, brute_force_min_assignment, nmi_direct


class TestContingency:
    def test_hand_counts(self):
        pred = [0, 0, 1, 1, 1]
        truth = [0, 1, 1, 1, 0]
        counts = contingency_table(pred, truth)
        assert counts.tolist() == [[1, 1], [1, 2]]

    def test_skipped_ids_become_zero_rows(self):
        counts = contingency_table([0, 2], [0, 1])
        assert counts.shape == (3, 2)
        assert counts[1].tolist() == [0, 0]


class TestHungarian:
    def test_two_by_two(self):
        perm = hungarian(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert perm.tolist() == [1, 0]

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            cost = rng.standard_normal((6, 6))
            perm = hungarian(cost)
            achieved = cost[np.arange(6), perm].sum()
            best, _ = brute_force_min_assignment(cost)
            assert achieved == pytest.approx(best, abs=1e-12)

    def test_result_is_a_permutation(self):
        cost = np.random.default_rng(1).standard_normal((7, 7))
        perm = hungarian(cost)
        assert sorted(perm.tolist()) == list(range(7))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            hungarian(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        cost = np.array([[0.0, np.inf], [1.0, 0.0]])
        with pytest.raises(ValueError):
            hungarian(cost)


class TestAccuracy:
    def test_identical_labelings(self):
        acc, mapping = accuracy([0, 1, 2, 0], [0, 1, 2, 0])
        assert acc == 1.0
        assert mapping == {0: 0, 1: 1, 2: 2}

    def test_renamed_clusters_still_perfect(self):
        acc, mapping = accuracy([0, 0, 1, 1], [1, 1, 0, 0])
        assert acc == 1.0
        assert mapping == {0: 1, 1: 0}

    def test_uninformative_crossing(self):
        acc, _ = accuracy([0, 0, 1, 1], [0, 1, 0, 1])
        assert acc == 0.5

    def test_matches_exhaustive_mapping_search(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(4, 13))
            pred = rng.integers(0, 4, size=n)
            truth = rng.integers(0, 3, size=n)
            acc, _ = accuracy(pred, truth)
            assert acc == pytest.approx(brute_force_accuracy(pred, truth), abs=1e-12)

    def test_more_clusters_than_labels(self):
        pred = [0, 1, 2, 2]
        truth = [0, 0, 1, 1]
        acc, _ = accuracy(pred, truth)
        assert acc == pytest.approx(brute_force_accuracy(pred, truth), abs=1e-12)
        assert acc == 0.75  # one of clusters 0/1 must go unmatched

    def test_fewer_clusters_than_labels(self):
        pred = [0, 0, 0, 0]
        truth = [0, 1, 2, 3]
        acc, _ = accuracy(pred, truth)
        assert acc == 0.25

    def test_mapping_achieves_reported_score(self):
        rng = np.random.default_rng(3)
        pred = rng.integers(0, 5, size=40)
        truth = rng.integers(0, 4, size=40)
        acc, mapping = accuracy(pred, truth)
        agree = sum(1 for p, t in zip(pred, truth) if mapping[int(p)] == int(t))
        assert agree / 40 == pytest.approx(acc, abs=1e-12)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([0, 1], [0])

    def test_rejects_negative_labels(self):
        with pytest.raises(ValueError):
            accuracy([0, -1], [0, 1])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestNmi:
    def test_identical_labelings_score_one(self):
        labels = [0, 1, 2, 0, 1, 2, 1]
        assert nmi(labels, labels) == 1.0

    def test_renaming_scores_one(self):
        assert nmi([0, 0, 1, 1, 2], [2, 2, 0, 0, 1]) == 1.0

    def test_constant_prediction_scores_zero(self):
        assert nmi([0, 0, 0, 0], [0, 1, 0, 1]) == 0.0

    def test_both_constant_scores_zero(self):
        # 0/0 convention
        assert nmi([0, 0, 0], [0, 0, 0]) == 0.0

    def test_matches_plugin_formula(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(5, 40))
            pred = rng.integers(0, 4, size=n)
            truth = rng.integers(0, 5, size=n)
            assert nmi(pred, truth) == pytest.approx(nmi_direct(pred, truth), abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(5)
        pred = rng.integers(0, 3, size=30)
        truth = rng.integers(0, 4, size=30)
        assert nmi(pred, truth) == pytest.approx(nmi(truth, pred), abs=1e-15)

    def test_invariant_to_relabeling(self):
        rng = np.random.default_rng(6)
        pred = rng.integers(0, 4, size=25)
        truth = rng.integers(0, 3, size=25)
        renamed = np.array([3, 2, 0, 1])[pred]  # permute cluster ids
        assert nmi(renamed, truth) == pytest.approx(nmi(pred, truth), abs=1e-15)

    def test_bounded(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            pred = rng.integers(0, 6, size=20)
            truth = rng.integers(0, 6, size=20)
            score = nmi(pred, truth)
            assert 0.0 <= score <= 1.0


class TestEvaluate:
    def test_bundles_both_scores(self):
        rng = np.random.default_rng(8)
        pred = rng.integers(0, 3, size=30)
        truth = rng.integers(0, 3, size=30)
        report = evaluate(pred, truth)
        assert isinstance(report, MetricsReport)
        acc, mapping = accuracy(pred, truth)
        assert report.acc == acc
        assert report.nmi == nmi(pred, truth)
        assert report.mapping == mapping
