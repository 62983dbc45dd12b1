"""
Text layouts for reports, manifests and logs
"""

from decimal import Decimal, ROUND_HALF_UP
from typing import List, Optional


class ReportTemplates:
    """Class containing all fixed text layouts used by the toolkit"""

    MANIFEST_HEADER = "audio_path,image_path,corpus,raw_label,label,split,is_augmented"
    EPOCH_LOG_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc"
    REPORT_CSV_HEADER = "row,precision,recall,f1,support,auc"
    ROC_CSV_HEADER = "class,threshold,fpr,tpr"

    NAME_WIDTH = 14
    COLUMN_WIDTH = 11

    REPORT_COLUMNS = ["Precision", "Recall", "F1-Score", "Support", "AUC-Score"]

    @staticmethod
    def half_up(value: float, places: int = 0) -> Decimal:
        """Round half-up after absorbing binary representation noise"""
        exact = Decimal(f"{value:.9f}")
        quantum = Decimal(1).scaleb(-places)
        return exact.quantize(quantum, rounding=ROUND_HALF_UP)

    @staticmethod
    def format_percent(value: Optional[float]) -> str:
        """A [0, 1] score as an integer percentage, the way the classification report shows it"""
        if value is None:
            return "-"
        return str(ReportTemplates.half_up(100.0 * value))

    @staticmethod
    def format_auc(value: Optional[float]) -> str:
        if value is None:
            return "-"
        return str(ReportTemplates.half_up(100.0 * value, 2))

    @staticmethod
    def report_row(name: str, cells: List[str]) -> str:
        return name.ljust(ReportTemplates.NAME_WIDTH) + "".join(
            cell.rjust(ReportTemplates.COLUMN_WIDTH) for cell in cells
        )

    @staticmethod
    def report_header() -> str:
        return ReportTemplates.report_row("", ReportTemplates.REPORT_COLUMNS)

    @staticmethod
    def distribution_row(name: str, count: int, percentage: float) -> str:
        return f"{name.ljust(ReportTemplates.NAME_WIDTH)}{count:>7} ({percentage:.2f}%)"

    @staticmethod
    def prediction_line(path: str, label: str, probabilities: List[float], class_names: List[str]) -> str:
        distribution = " ".join(f"{name}={p:.4f}" for name, p in zip(class_names, probabilities))
        return f"{path}: {label} | {distribution}"
