import logging

import click

from commands.common import load_manifest, run_command
from config import PipelineContext
from models import CommandResult, Split
from services.dataset_service import DatasetService
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("split")
def run_split(pctx: PipelineContext) -> CommandResult:
    """Stratified test/val/train assignment; an already split manifest is left alone unless --force"""
    cfg = pctx.config()
    manifest = load_manifest(pctx)

    if any(r.split != Split.UNASSIGNED for r in manifest.records) and not pctx.force:
        counts = DatasetService.split_counts(manifest)
        return CommandResult(success=True, data={"output": _counts_line(counts)},
                             message="Manifest is already split; use --force to redo it")

    manifest, problems = DatasetService.split_dataset(DatasetService.reset_splits(manifest), cfg.seed)
    DatasetService.write_manifest(manifest, pctx.manifest_path)
    counts = DatasetService.split_counts(manifest)
    return CommandResult(
        success=True,
        data={"output": _counts_line(counts), "warnings": [str(p) for p in problems]},
        message=f"Split manifest with seed {cfg.seed}",
    )


def _counts_line(counts) -> str:
    return f"train {counts[Split.TRAIN]}, val {counts[Split.VAL]}, test {counts[Split.TEST]}\n"


@click.command("split")
@click.pass_obj
def command(pctx: PipelineContext):
    """Assign records to train, validation and test splits"""
    run_command(run_split, pctx)
