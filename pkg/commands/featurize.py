import logging

import click

from commands.common import load_manifest, parallel_map, run_command
from config import PipelineContext
from models import CommandResult
from services.dataset_service import DatasetService
from services.feature_service import FeatureService
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("featurize")
def run_featurize(pctx: PipelineContext, dump_mel: bool = False) -> CommandResult:
    """
    Render every original record to a 64x64 PPM

    Existing images are kept unless --force; a failed file keeps an empty image_path
    and is listed in the failure summary.
    """
    cfg = pctx.config()
    manifest = load_manifest(pctx)
    filterbank = FeatureService.build_filterbank(cfg)
    images_dir = pctx.relative(pctx.resolve(cfg.images_dir))

    def featurize(record):
        image_path = record.image_path or FeatureService.image_path_for(record, images_dir)
        target = pctx.resolve(image_path)
        if target.exists() and not pctx.force:
            return record.model_copy(update={"image_path": image_path}), "skipped", None
        success, _, error = FeatureService.featurize_file(pctx.resolve(record.audio_path), target, cfg,
                                                          filterbank, label=record.label, dump_mel=dump_mel)
        if not success:
            return record.model_copy(update={"image_path": None}), "failed", error
        return record.model_copy(update={"image_path": image_path}), "written", None

    originals = [r for r in manifest.records if not r.is_augmented]
    outcomes = parallel_map(featurize, originals, cfg.workers, desc="featurize")

    updated = iter(outcomes)
    records = [record if record.is_augmented else next(updated)[0] for record in manifest.records]
    DatasetService.write_manifest(manifest.model_copy(update={"records": records}), pctx.manifest_path)

    tally = {"written": 0, "skipped": 0, "failed": 0}
    for _, status, _ in outcomes:
        tally[status] += 1
    failures = [error for _, status, error in outcomes if status == "failed"]
    summary = f"featurized {tally['written']}, skipped {tally['skipped']}, failed {tally['failed']}"
    return CommandResult(
        success=True,
        data={**tally, "output": summary + "\n"},
        message=f"Featurize: {summary}",
        failures=failures,
    )


@click.command("featurize")
@click.option("--dump-mel", is_flag=True, help="Also write each mel spectrogram as CSV next to its image")
@click.pass_obj
def command(pctx: PipelineContext, dump_mel):
    """Render mel-spectrogram images for every manifest record"""
    run_command(run_featurize, pctx, dump_mel=dump_mel)
