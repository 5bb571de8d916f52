"""Confusion counting and metric aggregation against a brute-force oracle."""

from fractions import Fraction

import numpy as np
import numpy.testing as npt
import pytest

from cmfuse.errors import UsageError
from cmfuse.metrics import confusion, evaluate

RNG = np.random.default_rng(424242)


def oracle_counts(y_true, y_pred, n_classes):
    """Direct pairwise counting, no numpy."""
    cm = [[0] * n_classes for _ in range(n_classes)]
    for t, p in zip(y_true, y_pred):
        cm[t][p] += 1
    return cm


def oracle_metrics(cm):
    """Per-class and support-weighted metrics with exact rationals."""
    n = len(cm)
    total = sum(sum(row) for row in cm)
    per_class = []
    wp = wr = wf = Fraction(0)
    for c in range(n):
        tp = cm[c][c]
        support = sum(cm[c])
        predicted = sum(cm[r][c] for r in range(n))
        p = Fraction(tp, predicted) if predicted else Fraction(0)
        r = Fraction(tp, support) if support else Fraction(0)
        f = 2 * p * r / (p + r) if p + r > 0 else Fraction(0)
        per_class.append((float(p), float(r), float(f), support))
        wp += support * p
        wr += support * r
        wf += support * f
    acc = Fraction(sum(cm[c][c] for c in range(n)), total)
    return per_class, float(wp / total), float(wr / total), float(wf / total), float(acc)


class TestConfusion:
    def test_perfect_predictions_are_diagonal(self):
        y = [0, 1, 2, 1, 0, 2, 2]
        cm = confusion(y, y, 3)
        assert np.all(cm == np.diag(np.diag(cm)))
        assert cm.sum() == len(y)

    def test_single_offdiagonal_count(self):
        cm = confusion([2], [5], 7)
        assert cm[2, 5] == 1 and cm.sum() == 1

    def test_matches_counting_oracle(self):
        y_true = RNG.integers(0, 7, size=1000).tolist()
        y_pred = RNG.integers(0, 7, size=1000).tolist()
        npt.assert_array_equal(confusion(y_true, y_pred, 7),
                               oracle_counts(y_true, y_pred, 7))

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            confusion([0, 1], [0], 2)

    def test_label_out_of_range(self):
        with pytest.raises(UsageError):
            confusion([0], [5], 2)


class TestEvaluate:
    def test_perfect_diagonal_all_ones(self):
        rep = evaluate(np.diag([4, 3, 8]))
        assert rep.accuracy == 1.0
        assert rep.weighted_precision == rep.weighted_recall == rep.weighted_f1 == 1.0
        for pc in rep.per_class:
            assert pc.precision == pc.recall == pc.f1 == 1.0

    def test_zero_support_class_gets_zeros_and_no_weight(self):
        cm = np.array([[5, 0, 0],
                       [0, 5, 0],
                       [0, 0, 0]])
        rep = evaluate(cm)
        assert rep.per_class[2].precision == 0.0
        assert rep.per_class[2].recall == 0.0
        assert rep.per_class[2].f1 == 0.0
        assert rep.per_class[2].support == 0
        assert rep.accuracy == 1.0
        assert rep.weighted_f1 == 1.0

    def test_weighted_recall_equals_accuracy_exactly(self):
        # the identity that pins support-weighted (not macro) averaging:
        # an aggregate whose recall column equals its accuracy column is
        # only consistent with support weights
        for _ in range(50):
            y_true = RNG.integers(0, 7, size=200).tolist()
            y_pred = RNG.integers(0, 7, size=200).tolist()
            rep = evaluate(confusion(y_true, y_pred, 7))
            assert rep.weighted_recall == rep.accuracy

    def test_f1_between_precision_and_recall(self):
        for _ in range(30):
            cm = RNG.integers(0, 20, size=(5, 5))
            rep = evaluate(cm)
            for pc in rep.per_class:
                if pc.precision + pc.recall > 0:
                    assert min(pc.precision, pc.recall) - 1e-15 <= pc.f1
                    assert pc.f1 <= max(pc.precision, pc.recall) + 1e-15

    def test_self_confusion_is_perfect(self):
        y = RNG.integers(0, 4, size=100).tolist()
        rep = evaluate(confusion(y, y, 4))
        assert rep.accuracy == 1.0 and rep.weighted_f1 == 1.0

    def test_matches_brute_force_oracle_exactly(self):
        y_true = RNG.integers(0, 7, size=1000).tolist()
        y_pred = np.where(RNG.random(1000) < 0.7, y_true,
                          RNG.integers(0, 7, size=1000)).tolist()
        cm = confusion(y_true, y_pred, 7)
        rep = evaluate(cm)
        per_class, wp, wr, wf, acc = oracle_metrics(cm.tolist())
        for pc, (p, r, f, s) in zip(rep.per_class, per_class):
            assert pc.precision == p and pc.recall == r
            assert pc.f1 == f and pc.support == s
        assert rep.weighted_precision == wp
        assert rep.weighted_recall == wr
        assert rep.weighted_f1 == wf
        assert rep.accuracy == acc

    def test_empty_matrix_rejected(self):
        with pytest.raises(UsageError):
            evaluate(np.zeros((3, 3), dtype=np.int64))
