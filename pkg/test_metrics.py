"""
Tests for the confusion matrix, classification report, ROC-AUC and their file formats
"""

import numpy as np
import pytest

from exceptions import DegenerateClass, LengthMismatch
from models import AverageMetrics, ClassificationReport, ClassMetrics, EmotionLabel
from services.metrics_service import MetricsService
from templates import ReportTemplates

A, B = 0, 1


def one_hot_scores(labels):
    scores = np.zeros((len(labels), 8))
    scores[np.arange(len(labels)), labels] = 1.0
    return scores


def test_perfect_predictions():
    labels = list(range(8)) * 2
    report = MetricsService.build_report(labels, labels, one_hot_scores(labels))
    assert report.accuracy == 1.0
    assert all(m.precision == m.recall == m.f1 == 1.0 for m in report.classes)
    assert all(m.auc == 1.0 for m in report.classes)
    assert report.macro.auc == report.weighted.auc == 1.0


def test_perfect_two_sample_report_renders_hundreds():
    report = MetricsService.build_report([A, B], [A, B], one_hot_scores([A, B]))
    text = MetricsService.render_report(report)
    lines = text.splitlines()
    assert lines[2].split() == ["Anger", "100", "100", "100", "1", "100.00"]
    assert lines[4].split() == ["Calm", "0", "0", "0", "0", "-"]
    assert lines[11].split() == ["accuracy", "100", "2"]
    assert lines[12].split() == ["macro", "avg", "25", "25", "25", "2", "100.00"]
    assert lines[13].split() == ["weighted", "avg", "100", "100", "100", "2", "100.00"]


def test_report_row_order_and_layout():
    report = MetricsService.build_report([A, B, 2], [A, B, 2], one_hot_scores([A, B, 2]))
    lines = MetricsService.render_report(report).splitlines()
    assert len(lines) == 14
    assert lines[0].split() == ["Precision", "Recall", "F1-Score", "Support", "AUC-Score"]
    assert lines[1] == "" and lines[10] == ""
    assert [line.split()[0] for line in lines[2:10]] == [label.display_name for label in EmotionLabel]
    assert len(lines[2]) == ReportTemplates.NAME_WIDTH + 5 * ReportTemplates.COLUMN_WIDTH


def test_empty_input():
    cm = MetricsService.confusion_matrix([], [])
    assert cm.total == 0
    report = MetricsService.precision_recall_f1(cm)
    assert report.accuracy == 0.0
    assert report.macro.f1 == 0.0 and report.weighted.f1 == 0.0


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        MetricsService.confusion_matrix([A, B], [A])
    with pytest.raises(LengthMismatch):
        MetricsService.roc_auc_ovr(np.zeros((3, 8)), [A, B])


def test_small_confusion_matrix():
    cm = MetricsService.confusion_matrix([A, A, B], [A, B, B])
    assert cm.counts[A][:2] == [1, 1]
    assert cm.counts[B][:2] == [0, 1]
    assert cm.total == 3

    report = MetricsService.precision_recall_f1(cm)
    anger, anxiety = report.classes[A], report.classes[B]
    assert (anger.precision, anger.recall) == (1.0, 0.5)
    assert anger.f1 == pytest.approx(2 / 3)
    assert (anxiety.precision, anxiety.recall) == (0.5, 1.0)
    assert report.accuracy == pytest.approx(2 / 3)


def test_normalize_rows():
    cm = MetricsService.confusion_matrix([A, A], [A, B])
    rows = MetricsService.normalize_rows(cm)
    assert rows[A][:2] == [50.0, 50.0]
    assert rows[B] == [0.0] * 8
    thirds = MetricsService.normalize_rows(MetricsService.confusion_matrix([A, A, A], [A, A, B]))
    assert thirds[A][:2] == [66.67, 33.33]


def test_two_class_report():
    expected = [A] * 6 + [B] * 6
    predicted = [A] * 5 + [B] + [A] * 2 + [B] * 4
    report = MetricsService.precision_recall_f1(MetricsService.confusion_matrix(expected, predicted))
    anger, anxiety = report.classes[A], report.classes[B]
    assert anger.precision == pytest.approx(5 / 7)
    assert anger.recall == pytest.approx(5 / 6)
    assert anxiety.precision == pytest.approx(4 / 5)
    assert anxiety.recall == pytest.approx(4 / 6)
    assert report.accuracy == 0.75
    assert report.macro.precision == pytest.approx((5 / 7 + 4 / 5) / 8)
    assert report.weighted.support == 12


def test_macro_average_counts_absent_classes_as_zero():
    report = MetricsService.precision_recall_f1(MetricsService.confusion_matrix([A, B], [A, B]))
    assert [m.f1 for m in report.classes] == [1.0, 1.0] + [0.0] * 6
    assert report.macro.precision == report.macro.recall == report.macro.f1 == 0.25
    assert report.weighted.f1 == 1.0


def test_macro_average_is_rendered_half_up():
    f1_values = np.array([96, 95, 95, 94, 94, 94, 94, 94]) / 100
    assert ReportTemplates.format_percent(float(np.mean(f1_values))) == "95"
    assert ReportTemplates.format_percent(0.9449) == "94"
    assert ReportTemplates.format_auc(0.99805) == "99.81"


def test_accuracy_equals_weighted_recall(rng):
    expected = rng.integers(0, 8, 200)
    predicted = np.where(rng.random(200) < 0.6, expected, rng.integers(0, 8, 200))
    report = MetricsService.precision_recall_f1(MetricsService.confusion_matrix(expected, predicted))
    assert report.weighted.recall == pytest.approx(report.accuracy, rel=1e-12)


def test_auc_examples():
    positives = np.array([False, False, True, True])
    assert MetricsService.class_auc([0.1, 0.4, 0.35, 0.8], positives) == 0.75
    assert MetricsService.class_auc([0.1, 0.2, 0.3, 0.4], positives) == 1.0
    assert MetricsService.class_auc([0.5, 0.5, 0.5, 0.5], positives) == 0.5
    assert MetricsService.class_auc([0.4, 0.3, 0.2, 0.1], positives) == 0.0


def test_auc_is_invariant_under_monotone_transforms(rng):
    scores = rng.random(50)
    positives = rng.random(50) < 0.4
    base = MetricsService.class_auc(scores, positives)
    assert MetricsService.class_auc(3 * np.exp(scores) + 1, positives) == pytest.approx(base, abs=1e-15)


def test_degenerate_class_auc():
    with pytest.raises(DegenerateClass):
        MetricsService.class_auc([0.2, 0.3], [True, True])
    per_class, macro, weighted = MetricsService.roc_auc_ovr(one_hot_scores([A, B, A]), [A, B, A])
    assert per_class[A] == per_class[B] == 1.0
    assert per_class[2:] == [None] * 6
    assert macro == weighted == 1.0


def test_roc_curve_points():
    scores = np.zeros((4, 8))
    scores[:, A] = [0.1, 0.4, 0.35, 0.8]
    points = MetricsService.roc_curve_points(scores, [B, B, A, A], A)
    assert points[0] == (float("inf"), 0.0, 0.0)
    assert points[-1] == (0.1, 1.0, 1.0)
    thresholds = [t for t, _, _ in points]
    assert thresholds == sorted(thresholds, reverse=True)
    assert points[1] == (0.8, 0.0, 0.5)


def test_report_csv_round_trip():
    report = ClassificationReport(
        classes=[ClassMetrics(label=label, precision=0.1 * i, recall=1 / 3, f1=0.25, support=i,
                              auc=None if i == 2 else 0.9)
                 for i, label in enumerate(EmotionLabel)],
        accuracy=0.7,
        macro=AverageMetrics(precision=0.5, recall=0.4, f1=0.45, support=28, auc=0.9),
        weighted=AverageMetrics(precision=0.6, recall=0.7, f1=0.65, support=28, auc=None),
    )
    text = MetricsService.report_to_csv(report)
    assert text.splitlines()[0] == "row,precision,recall,f1,support,auc"
    assert "accuracy,,,0.7,28," in text.splitlines()
    assert MetricsService.report_from_csv(text) == report


def test_confusion_csv_shape():
    cm = MetricsService.confusion_matrix([A, A, A, 5], [A, A, B, 5])
    lines = MetricsService.confusion_to_csv(cm).splitlines()
    assert len(lines) == 9
    assert all(len(line.split(",")) == 9 for line in lines)
    assert lines[0].startswith("expected,Anger,Anxiety")
    assert lines[1].split(",")[:3] == ["Anger", "66.67", "33.33"]
    assert lines[6].split(",")[6] == "100.00"


def test_roc_csv_skips_degenerate_classes():
    text = MetricsService.roc_to_csv(one_hot_scores([A, B, A]), [A, B, A])
    classes = {line.split(",")[0] for line in text.splitlines()[1:]}
    assert classes == {"Anger", "Anxiety"}


def counted_report(expected, predicted):
    """Per-class (precision, recall, f1) by direct counting"""
    rows = []
    for c in range(8):
        tp = sum(1 for e, p in zip(expected, predicted) if e == c and p == c)
        n_pred = sum(1 for p in predicted if p == c)
        n_true = sum(1 for e in expected if e == c)
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_true if n_true else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        rows.append((precision, recall, f1))
    return rows


def enumerated_auc(scores, positives):
    """Fraction of (positive, negative) pairs ranked correctly, ties count half"""
    pos = [s for s, is_pos in zip(scores, positives) if is_pos]
    neg = [s for s, is_pos in zip(scores, positives) if not is_pos]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_metrics_match_counting_oracles():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 51))
        expected = rng.integers(0, 8, n).tolist()
        predicted = rng.integers(0, 8, n).tolist()
        # Coarse scores so ties actually occur
        scores = rng.integers(0, 5, (n, 8)) / 4.0

        report = MetricsService.precision_recall_f1(MetricsService.confusion_matrix(expected, predicted))
        counted = counted_report(expected, predicted)
        for metrics, (precision, recall, f1) in zip(report.classes, counted):
            assert metrics.precision == pytest.approx(precision, abs=1e-12)
            assert metrics.recall == pytest.approx(recall, abs=1e-12)
            assert metrics.f1 == pytest.approx(f1, abs=1e-12)
        assert report.macro.f1 == pytest.approx(sum(f1 for _, _, f1 in counted) / 8, abs=1e-12)
        assert report.accuracy == pytest.approx(sum(e == p for e, p in zip(expected, predicted)) / n, abs=1e-12)

        per_class, _, _ = MetricsService.roc_auc_ovr(scores, expected)
        for c, auc in enumerate(per_class):
            positives = [e == c for e in expected]
            if all(positives) or not any(positives):
                assert auc is None
            else:
                assert auc == pytest.approx(enumerated_auc(scores[:, c], positives), abs=1e-12)
