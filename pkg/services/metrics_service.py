import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from exceptions import DegenerateClass, LengthMismatch, ManifestFormatError
from models import (CLASS_COUNT, AverageMetrics, ClassificationReport, ClassMetrics, ConfusionMatrix,
                    EmotionLabel)
from templates import ReportTemplates

logger = logging.getLogger(__name__)

RocPoint = Tuple[float, float, float]


class MetricsService:
    """Confusion matrix, classification report and one-vs-rest ROC-AUC"""

    @staticmethod
    def confusion_matrix(expected: Sequence[int], predicted: Sequence[int],
                         classes: int = CLASS_COUNT) -> ConfusionMatrix:
        if len(expected) != len(predicted):
            raise LengthMismatch(f"{len(expected)} expected labels but {len(predicted)} predictions")
        counts = np.zeros((classes, classes), dtype=np.int64)
        if len(expected):
            np.add.at(counts, (np.asarray(expected, dtype=np.int64), np.asarray(predicted, dtype=np.int64)), 1)
        return ConfusionMatrix(counts=counts.tolist())

    @staticmethod
    def row_proportions(cm: ConfusionMatrix) -> np.ndarray:
        """Unrounded row percentages; all-zero rows stay zero"""
        counts = np.asarray(cm.counts, dtype=np.float64)
        totals = counts.sum(axis=1, keepdims=True)
        return np.divide(100.0 * counts, totals, out=np.zeros_like(counts), where=totals > 0)

    @staticmethod
    def normalize_rows(cm: ConfusionMatrix) -> List[List[float]]:
        """Row percentages rounded half-up to 2 decimals"""
        return [[float(ReportTemplates.half_up(v, 2)) for v in row] for row in MetricsService.row_proportions(cm)]

    @staticmethod
    def precision_recall_f1(cm: ConfusionMatrix) -> ClassificationReport:
        """
        Per-class precision, recall and F1 plus accuracy and averages, AUC left empty

        0/0 cells resolve to 0 with a warning. Macro averages run over the classes that
        occur in either the expected or the predicted labels.
        """
        counts = np.asarray(cm.counts, dtype=np.int64)
        support = counts.sum(axis=1)
        predicted = counts.sum(axis=0)
        total = int(counts.sum())

        classes = []
        for c in range(counts.shape[0]):
            tp = int(counts[c, c])
            label = EmotionLabel(c)
            if predicted[c] == 0 and support[c] > 0:
                logger.warning(f"Precision of {label.display_name} is 0/0 (never predicted); reported as 0")
            if support[c] == 0 and predicted[c] > 0:
                logger.warning(f"Recall of {label.display_name} is 0/0 (no samples); reported as 0")
            precision = tp / predicted[c] if predicted[c] else 0.0
            recall = tp / support[c] if support[c] else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            classes.append(ClassMetrics(label=label, precision=float(precision), recall=float(recall),
                                        f1=float(f1), support=int(support[c])))

        # Unweighted over all 8 classes; 0/0 cells count as 0
        def _macro(field: str) -> float:
            return float(np.mean([getattr(m, field) for m in classes]))

        def _weighted(field: str) -> float:
            return sum(getattr(m, field) * m.support for m in classes) / total if total else 0.0

        return ClassificationReport(
            classes=classes,
            accuracy=float(np.trace(counts)) / total if total else 0.0,
            macro=AverageMetrics(precision=_macro("precision"), recall=_macro("recall"), f1=_macro("f1"),
                                 support=total),
            weighted=AverageMetrics(precision=_weighted("precision"), recall=_weighted("recall"),
                                    f1=_weighted("f1"), support=total),
        )

    @staticmethod
    def class_auc(scores: np.ndarray, positives: np.ndarray) -> float:
        """Mann-Whitney AUC with average ranks for ties"""
        scores = np.asarray(scores, dtype=np.float64)
        positives = np.asarray(positives, dtype=bool)
        n_pos = int(positives.sum())
        n_neg = positives.size - n_pos
        if n_pos == 0 or n_neg == 0:
            raise DegenerateClass(f"AUC needs positives and negatives, got {n_pos} and {n_neg}")

        _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
        ends = np.cumsum(counts)
        average_rank = (ends - counts + 1 + ends) / 2.0
        rank_sum = average_rank[inverse.reshape(-1)][positives].sum()
        return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))

    @staticmethod
    def roc_auc_ovr(scores: np.ndarray, expected: Sequence[int]
                    ) -> Tuple[List[Optional[float]], Optional[float], Optional[float]]:
        """
        One-vs-rest AUC per class

        Args:
            scores: [N, classes] probabilities or any monotone score
            expected: N true labels

        Returns:
            (per-class AUC with None for degenerate classes, macro AUC, support-weighted AUC)
        """
        scores = np.asarray(scores, dtype=np.float64)
        expected = np.asarray(expected, dtype=np.int64)
        if scores.shape[0] != expected.size:
            raise LengthMismatch(f"{scores.shape[0]} score rows but {expected.size} labels")

        per_class: List[Optional[float]] = []
        for c in range(scores.shape[1]):
            try:
                per_class.append(MetricsService.class_auc(scores[:, c], expected == c))
            except DegenerateClass as e:
                logger.warning(f"AUC of {EmotionLabel(c).display_name} undefined: {e.message}")
                per_class.append(None)

        defined = [(auc, int(np.sum(expected == c))) for c, auc in enumerate(per_class) if auc is not None]
        if not defined:
            return per_class, None, None
        macro = float(np.mean([auc for auc, _ in defined]))
        weighted = sum(auc * n for auc, n in defined) / sum(n for _, n in defined)
        return per_class, macro, float(weighted)

    @staticmethod
    def roc_curve_points(scores: np.ndarray, expected: Sequence[int], label: int) -> List[RocPoint]:
        """(threshold, fpr, tpr) for each distinct score, descending, starting at (inf, 0, 0)"""
        column = np.asarray(scores, dtype=np.float64)[:, label]
        positives = np.asarray(expected, dtype=np.int64) == label
        n_pos = int(positives.sum())
        n_neg = positives.size - n_pos
        if n_pos == 0 or n_neg == 0:
            raise DegenerateClass(f"ROC of {EmotionLabel(label).display_name} needs positives and negatives")

        points: List[RocPoint] = [(float("inf"), 0.0, 0.0)]
        for threshold in np.unique(column)[::-1]:
            selected = column >= threshold
            points.append((float(threshold),
                           float(np.sum(selected & ~positives)) / n_neg,
                           float(np.sum(selected & positives)) / n_pos))
        return points

    @staticmethod
    def build_report(expected: Sequence[int], predicted: Sequence[int],
                     scores: np.ndarray) -> ClassificationReport:
        cm = MetricsService.confusion_matrix(expected, predicted)
        report = MetricsService.precision_recall_f1(cm)
        per_class, macro_auc, weighted_auc = MetricsService.roc_auc_ovr(scores, expected)
        classes = [m.model_copy(update={"auc": auc}) for m, auc in zip(report.classes, per_class)]
        return report.model_copy(update={
            "classes": classes,
            "macro": report.macro.model_copy(update={"auc": macro_auc}),
            "weighted": report.weighted.model_copy(update={"auc": weighted_auc}),
        })

    @staticmethod
    def render_report(report: ClassificationReport) -> str:
        """Fixed-width text table: integer percentages, AUC with 2 decimals"""
        pct, auc = ReportTemplates.format_percent, ReportTemplates.format_auc
        total = report.weighted.support
        lines = [ReportTemplates.report_header(), ""]
        for m in report.classes:
            lines.append(ReportTemplates.report_row(
                m.label.display_name, [pct(m.precision), pct(m.recall), pct(m.f1), str(m.support), auc(m.auc)]))
        lines.append("")
        lines.append(ReportTemplates.report_row("accuracy", ["", "", pct(report.accuracy), str(total), ""]))
        for name, avg in (("macro avg", report.macro), ("weighted avg", report.weighted)):
            lines.append(ReportTemplates.report_row(
                name, [pct(avg.precision), pct(avg.recall), pct(avg.f1), str(avg.support), auc(avg.auc)]))
        return "\n".join(lines) + "\n"

    @staticmethod
    def report_to_csv(report: ClassificationReport) -> str:
        """Machine-readable twin of the text report; floats keep full precision"""

        def _auc(value: Optional[float]) -> str:
            return "" if value is None else repr(value)

        lines = [ReportTemplates.REPORT_CSV_HEADER]
        for m in report.classes:
            lines.append(f"{m.label.display_name},{m.precision!r},{m.recall!r},{m.f1!r},{m.support},{_auc(m.auc)}")
        lines.append(f"accuracy,,,{report.accuracy!r},{report.weighted.support},")
        for name, avg in (("macro avg", report.macro), ("weighted avg", report.weighted)):
            lines.append(f"{name},{avg.precision!r},{avg.recall!r},{avg.f1!r},{avg.support},{_auc(avg.auc)}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def report_from_csv(text: str) -> ClassificationReport:
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines or lines[0] != ReportTemplates.REPORT_CSV_HEADER:
            raise ManifestFormatError(f"expected header {ReportTemplates.REPORT_CSV_HEADER!r}")

        def _auc(value: str) -> Optional[float]:
            return float(value) if value else None

        classes, averages, accuracy = [], {}, 0.0
        for line in lines[1:]:
            row, precision, recall, f1, support, auc = line.split(",")
            if row == "accuracy":
                accuracy = float(f1)
            elif row in ("macro avg", "weighted avg"):
                averages[row] = AverageMetrics(precision=float(precision), recall=float(recall), f1=float(f1),
                                               support=int(support), auc=_auc(auc))
            else:
                classes.append(ClassMetrics(label=EmotionLabel.parse(row), precision=float(precision),
                                            recall=float(recall), f1=float(f1), support=int(support),
                                            auc=_auc(auc)))
        return ClassificationReport(classes=classes, accuracy=accuracy,
                                    macro=averages["macro avg"], weighted=averages["weighted avg"])

    @staticmethod
    def confusion_to_csv(cm: ConfusionMatrix) -> str:
        """Row-normalized percentages, 2 decimals; rows expected, columns predicted"""
        names = [EmotionLabel(c).display_name for c in range(len(cm.counts))]
        lines = ["expected," + ",".join(names)]
        for name, row in zip(names, MetricsService.row_proportions(cm)):
            lines.append(name + "," + ",".join(str(ReportTemplates.half_up(v, 2)) for v in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def roc_to_csv(scores: np.ndarray, expected: Sequence[int]) -> str:
        """``class,threshold,fpr,tpr`` for every class with both positives and negatives"""
        lines = [ReportTemplates.ROC_CSV_HEADER]
        for c in range(np.asarray(scores).shape[1]):
            try:
                points = MetricsService.roc_curve_points(scores, expected, c)
            except DegenerateClass:
                continue
            name = EmotionLabel(c).display_name
            lines.extend(f"{name},{t:.6g},{fpr:.6g},{tpr:.6g}" for t, fpr, tpr in points)
        return "\n".join(lines) + "\n"
