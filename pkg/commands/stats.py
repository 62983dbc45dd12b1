import logging

import click

from commands.common import load_manifest, run_command
from config import PipelineContext
from models import CommandResult, EmotionLabel, Split
from services.dataset_service import DatasetService
from templates import ReportTemplates
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("stats")
def run_stats(pctx: PipelineContext) -> CommandResult:
    """Class distribution of the original records and per-split counts"""
    manifest = load_manifest(pctx)
    distribution = DatasetService.class_distribution(manifest)
    splits = DatasetService.split_counts(manifest)

    lines = [ReportTemplates.distribution_row(label.display_name, distribution.counts[label],
                                              distribution.percentages[label]) for label in EmotionLabel]
    lines.append(ReportTemplates.distribution_row("Total", distribution.total, 100.0 if distribution.total else 0.0))
    lines.append("")
    lines.extend(f"{split.value.ljust(ReportTemplates.NAME_WIDTH)}{splits[split]:>7}" for split in Split)

    return CommandResult(
        success=True,
        data={"total": distribution.total, "output": "\n".join(lines) + "\n"},
        message=f"Manifest holds {distribution.total} original records",
    )


@click.command("stats")
@click.pass_obj
def command(pctx: PipelineContext):
    """Show the class distribution and split sizes"""
    run_command(run_stats, pctx)
