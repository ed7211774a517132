"""Tests for classification metrics and their table formatting."""

import numpy as np
import pytest

from teflow.errors import DataError
from teflow.metrics import (
    LOWER_IS_BETTER,
    METRIC_COLUMNS,
    ConfusionMatrix,
    MetricsReport,
    confusion,
    evaluate,
    format_metric,
    report,
    roc_auc,
    tally_best,
)

import oracles


# ---------------------------------------------------------------------------
# confusion counts
# ---------------------------------------------------------------------------

class TestConfusion:
    def test_hand_example(self):
        cm = confusion([0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0])
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (1, 1, 1, 1)
        assert cm.total == 4

    def test_threshold_tie_predicts_positive(self):
        cm = confusion([0.5, 0.5], [1, 0])
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == (1, 1, 0, 0)

    def test_extreme_thresholds(self):
        p = [0.0, 0.3, 0.7, 1.0]
        y = [0, 1, 0, 1]
        all_pos = confusion(p, y, threshold=0.0)
        assert (all_pos.tp, all_pos.fp, all_pos.tn, all_pos.fn) == (2, 2,
                                                                    0, 0)
        all_neg = confusion(p, y, threshold=1.0 + 1e-9)
        assert (all_neg.tp, all_neg.fp, all_neg.tn, all_neg.fn) == (0, 0,
                                                                    2, 2)

    def test_randomized_counts_match_a_plain_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 60))
            p = rng.random(n)
            y = rng.integers(0, 2, n)
            thr = float(rng.random())
            cm = confusion(p, y, thr)
            tp = sum(1 for pi, yi in zip(p, y) if pi >= thr and yi == 1)
            fp = sum(1 for pi, yi in zip(p, y) if pi >= thr and yi == 0)
            fn = sum(1 for pi, yi in zip(p, y) if pi < thr and yi == 1)
            tn = sum(1 for pi, yi in zip(p, y) if pi < thr and yi == 0)
            assert (cm.tp, cm.fp, cm.fn, cm.tn) == (tp, fp, fn, tn)
            assert cm.total == n

    def test_validation(self):
        with pytest.raises(DataError):
            confusion([0.5, 0.5], [1])
        with pytest.raises(DataError):
            confusion([[0.5]], [[1]])
        with pytest.raises(DataError):
            confusion([1.2], [1])
        with pytest.raises(DataError):
            confusion([-0.1], [0])
        with pytest.raises(DataError):
            confusion([0.5], [2])

    def test_container_validation(self):
        with pytest.raises(DataError):
            ConfusionMatrix(tp=-1, tn=0, fp=0, fn=0)
        with pytest.raises(DataError):
            ConfusionMatrix(tp=1.5, tn=0, fp=0, fn=0)
        cm = ConfusionMatrix(tp=np.int64(2), tn=1, fp=0, fn=0)
        assert cm.total == 3


# ---------------------------------------------------------------------------
# rate report
# ---------------------------------------------------------------------------

class TestReport:
    def test_hand_rates_to_1e12(self):
        rep = report(ConfusionMatrix(tp=3, tn=2, fp=1, fn=2))
        assert rep.acc == pytest.approx(0.625, abs=1e-12)
        assert rep.tpr == pytest.approx(0.6, abs=1e-12)
        assert rep.tnr == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert rep.ppv == pytest.approx(0.75, abs=1e-12)
        assert rep.for_rate == pytest.approx(0.5, abs=1e-12)
        assert rep.ba == pytest.approx((0.6 + 2.0 / 3.0) / 2.0, abs=1e-12)
        assert rep.f1 == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert rep.auc is None

    def test_perfect_classifier(self):
        rep = report(ConfusionMatrix(tp=5, tn=7, fp=0, fn=0))
        assert rep.acc == 1.0 and rep.tpr == 1.0 and rep.tnr == 1.0
        assert rep.ppv == 1.0 and rep.f1 == 1.0 and rep.ba == 1.0
        assert rep.for_rate == 0.0

    def test_ppv_undefined_while_for_defined(self):
        # Nothing predicted positive: precision is 0/0 but the false
        # omission rate still has a denominator.
        rep = report(ConfusionMatrix(tp=0, tn=3, fp=0, fn=2))
        assert rep.ppv is None
        assert rep.for_rate == pytest.approx(0.4)
        assert rep.tpr == 0.0
        assert rep.f1 == 0.0

    def test_single_class_leaves_one_side_undefined(self):
        rep = report(ConfusionMatrix(tp=4, tn=0, fp=0, fn=1))
        assert rep.tnr is None and rep.ba is None
        assert rep.tpr == pytest.approx(0.8)
        empty = report(ConfusionMatrix(tp=0, tn=0, fp=0, fn=0))
        assert all(getattr(empty, n) is None for n in METRIC_COLUMNS[:-1])

    def test_identities_on_random_counts(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            tp, tn, fp, fn = (int(v) for v in rng.integers(0, 20, 4))
            rep = report(ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn))
            if rep.tpr is not None and rep.tnr is not None:
                assert rep.ba == pytest.approx((rep.tpr + rep.tnr) / 2,
                                               abs=1e-12)
                # Accuracy is a prevalence-weighted mean of the rates.
                assert (min(rep.tpr, rep.tnr) - 1e-12 <= rep.acc
                        <= max(rep.tpr, rep.tnr) + 1e-12)
            if rep.ppv is not None and rep.tpr is not None \
                    and rep.ppv + rep.tpr > 0:
                harmonic = 2 * rep.ppv * rep.tpr / (rep.ppv + rep.tpr)
                assert rep.f1 == pytest.approx(harmonic, abs=1e-12)
            for name in METRIC_COLUMNS[:-1]:
                value = getattr(rep, name)
                assert value is None or 0.0 <= value <= 1.0

    def test_report_container_validation(self):
        with pytest.raises(DataError):
            MetricsReport(acc=1.2, tpr=None, tnr=None, ppv=None,
                          for_rate=None, ba=None, f1=None)
        rep = report(ConfusionMatrix(tp=1, tn=1, fp=0, fn=0))
        withauc = rep.with_auc(0.75)
        assert withauc.auc == 0.75
        assert rep.auc is None  # original untouched
        assert set(withauc.as_dict()) == set(METRIC_COLUMNS)


# ---------------------------------------------------------------------------
# ROC-AUC
# ---------------------------------------------------------------------------

class TestRocAuc:
    def test_perfectly_separated(self):
        assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_all_tied_scores_give_half(self):
        assert roc_auc([0.5] * 6, [0, 1, 0, 1, 0, 1]) == 0.5

    def test_single_tie_counts_one_half(self):
        # One positive at 0.7, negatives at 0.7 and 0.3: one win, one tie.
        assert roc_auc([0.7, 0.7, 0.3], [1, 0, 0]) == 0.75

    def test_matches_pairwise_oracle_exactly(self):
        rng = np.random.default_rng(2)
        for trial in range(25):
            n = int(rng.integers(5, 200))
            # Coarse grid scores force plenty of exact ties.
            scores = rng.integers(0, 8, n) / 8.0
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert roc_auc(scores, labels) == oracles.pairwise_auc(scores,
                                                                   labels)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(3)
        scores = rng.integers(0, 10, 80) / 10.0
        labels = rng.integers(0, 2, 80)
        base = roc_auc(scores, labels)
        assert roc_auc(0.5 * scores, labels) == base
        assert roc_auc(np.exp(scores), labels) == base
        assert roc_auc(scores * 100.0 - 37.0, labels) == base

    def test_label_swap_mirrors_auc(self):
        rng = np.random.default_rng(4)
        scores = rng.random(60)
        labels = rng.integers(0, 2, 60)
        labels[0], labels[1] = 0, 1
        assert roc_auc(scores, 1 - labels) == pytest.approx(
            1.0 - roc_auc(scores, labels), abs=1e-12)

    def test_null_scores_near_half(self):
        rng = np.random.default_rng(5)
        scores = rng.random(20000)
        labels = rng.integers(0, 2, 20000)
        assert roc_auc(scores, labels) == pytest.approx(0.5, abs=0.02)

    def test_needs_both_classes(self):
        with pytest.raises(DataError):
            roc_auc([0.2, 0.8], [1, 1])
        with pytest.raises(DataError):
            roc_auc([0.2, 0.8], [0, 0])

    def test_validation(self):
        with pytest.raises(DataError):
            roc_auc([0.2, 0.8], [1])
        with pytest.raises(DataError):
            roc_auc([0.2, 0.8], [1, 2])

    def test_evaluate_combines_report_and_auc(self):
        rng = np.random.default_rng(6)
        p = rng.random(40)
        y = rng.integers(0, 2, 40)
        y[:2] = (0, 1)
        rep = evaluate(p, y)
        direct = report(confusion(p, y))
        assert rep.auc == roc_auc(p, y)
        for name in METRIC_COLUMNS[:-1]:
            assert getattr(rep, name) == getattr(direct, name)


# ---------------------------------------------------------------------------
# formatting and tallies
# ---------------------------------------------------------------------------

class TestFormatting:
    def test_percentages_two_decimals(self):
        assert format_metric("acc", 0.625) == "62.50"
        assert format_metric("tpr", 1.0) == "100.00"
        assert format_metric("for_rate", 0.0) == "0.00"
        assert format_metric("ba", 2.0 / 3.0) == "66.67"

    def test_auc_four_decimals(self):
        assert format_metric("auc", 0.5) == "0.5000"
        assert format_metric("auc", 0.73256) == "0.7326"

    def test_undefined(self):
        assert format_metric("ppv", None) == "undefined"
        assert format_metric("auc", None) == "undefined"


class TestTallyBest:
    def test_column_winners_counted(self):
        a = MetricsReport(acc=0.9, tpr=0.8, tnr=0.7, ppv=0.6,
                          for_rate=0.2, ba=0.75, f1=0.7, auc=0.9)
        b = MetricsReport(acc=0.8, tpr=0.9, tnr=0.7, ppv=0.7,
                          for_rate=0.1, ba=0.8, f1=0.8, auc=0.85)
        counts = tally_best([a, b])
        # a wins acc and auc and shares tnr; b wins the other five and
        # shares tnr. Lower is better only for the false omission rate.
        assert counts == [3, 6]

    def test_undefined_never_wins_or_blocks(self):
        a = MetricsReport(acc=None, tpr=0.5, tnr=None, ppv=None,
                          for_rate=None, ba=None, f1=None, auc=None)
        b = MetricsReport(acc=0.1, tpr=0.4, tnr=None, ppv=None,
                          for_rate=None, ba=None, f1=None, auc=None)
        # acc: only b defined, b wins. tpr: a wins. tnr..auc: nobody.
        assert tally_best([a, b]) == [1, 1]

    def test_all_undefined_column_is_skipped(self):
        empty = report(ConfusionMatrix(tp=0, tn=0, fp=0, fn=0))
        assert tally_best([empty, empty]) == [0, 0]

    def test_lower_is_better_only_for_false_omission(self):
        assert LOWER_IS_BETTER == {"for_rate"}
