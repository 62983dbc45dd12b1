import logging

import click
import numpy as np

from commands.common import load_manifest, require_split, run_command
from config import PipelineContext
from exceptions import EmptySplit, IoFailure, MissingStage
from models import CommandResult, Split
from services.checkpoint_service import CheckpointService
from services.metrics_service import MetricsService
from services.training_service import TrainingService
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("evaluate")
def run_evaluate(pctx: PipelineContext) -> CommandResult:
    """
    Score the test split with the trained checkpoint

    Writes report.txt, report.csv, confusion.csv and roc.csv into output_dir and
    prints the text report.
    """
    cfg = pctx.config()
    manifest = load_manifest(pctx)
    require_split(manifest, "evaluate")
    checkpoint_path = pctx.resolve(cfg.checkpoint_path)
    if not checkpoint_path.exists():
        raise MissingStage("no checkpoint; run train first", path=str(checkpoint_path))
    network = CheckpointService.to_network(CheckpointService.load_checkpoint(checkpoint_path))

    x_test, expected, _ = TrainingService.load_split(manifest, Split.TEST, pctx.manifest_dir)
    if len(expected) == 0:
        raise EmptySplit("the test split is empty", path=pctx.manifest_path)

    scores = np.concatenate([
        network.predict_proba(TrainingService.as_input(x_test[start:start + cfg.batch_size]))
        for start in range(0, len(expected), cfg.batch_size)
    ])
    predicted = np.argmax(scores, axis=1)

    report = MetricsService.build_report(expected, predicted, scores)
    text = MetricsService.render_report(report)
    cm = MetricsService.confusion_matrix(expected, predicted)

    output_dir = pctx.resolve(cfg.output_dir)
    artifacts = {
        "report.txt": text,
        "report.csv": MetricsService.report_to_csv(report),
        "confusion.csv": MetricsService.confusion_to_csv(cm),
        "roc.csv": MetricsService.roc_to_csv(scores, expected),
    }
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        for name, content in artifacts.items():
            (output_dir / name).write_text(content, encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write evaluation output: {e.strerror}", path=str(output_dir))

    return CommandResult(
        success=True,
        data={"accuracy": report.accuracy, "samples": len(expected), "output": text},
        message=f"Evaluated {len(expected)} test images, accuracy {report.accuracy:.4f}",
    )


@click.command("evaluate")
@click.pass_obj
def command(pctx: PipelineContext):
    """Classification report, confusion matrix and ROC points for the test split"""
    run_command(run_evaluate, pctx)
