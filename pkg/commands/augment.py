import logging
from itertools import groupby

import click

from commands.common import load_manifest, parallel_map, require_split, run_command
from config import PipelineContext
from exceptions import FserError, MissingStage
from models import CommandResult, DatasetManifest, Split
from services.augment_service import AugmentService
from services.dataset_service import DatasetService
from services.imaging_service import ImagingService
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("augment")
def run_augment(pctx: PipelineContext) -> CommandResult:
    """
    Append variants_per_image augmented copies of every original training image

    Augmented rows already present are kept unless --force, which regenerates them.
    """
    cfg = pctx.config()
    manifest = load_manifest(pctx)
    require_split(manifest, "augment")

    if any(r.is_augmented for r in manifest.records) and not pctx.force:
        return CommandResult(success=True, data={"output": f"{len(manifest.records)} records, augmentation kept\n"},
                             message="Manifest already holds augmented records; use --force to regenerate")

    originals = DatasetManifest(records=manifest.originals(), seed=manifest.seed)
    augment_cfg = cfg.augment_config()
    plan = AugmentService.plan_augmented_records(originals, augment_cfg)

    def augment(group):
        image_index, entries = group
        entries = list(entries)
        source = entries[0][2]
        if not source.image_path:
            raise MissingStage("training record has no image; run featurize first", path=source.audio_path)
        written, failures = [], []
        try:
            image = ImagingService.read_ppm(pctx.resolve(source.image_path), label=source.label)
        except FserError as e:
            return written, [f"{type(e).__name__}: {e}"]
        for _, k, _, record in entries:
            params = AugmentService.sample_params(augment_cfg, image_index, k)
            try:
                ImagingService.write_ppm(AugmentService.apply(image, params), pctx.resolve(record.image_path))
                written.append(record)
            except FserError as e:
                failures.append(f"{type(e).__name__}: {e}")
        return written, failures

    groups = [(index, list(entries)) for index, entries in groupby(plan, key=lambda entry: entry[0])]
    outcomes = parallel_map(augment, groups, cfg.workers, desc="augment")

    augmented = [record for written, _ in outcomes for record in written]
    failures = [failure for _, failed in outcomes for failure in failed]
    manifest = DatasetService.attach_augmented(originals, augmented)
    DatasetService.write_manifest(manifest, pctx.manifest_path)

    train_rows = len(manifest.in_split(Split.TRAIN))
    return CommandResult(
        success=True,
        data={"augmented": len(augmented), "output": f"augmented {len(augmented)}, train rows {train_rows}\n"},
        message=f"Wrote {len(augmented)} augmented images",
        failures=failures,
    )


@click.command("augment")
@click.pass_obj
def command(pctx: PipelineContext):
    """Generate shifted, zoomed and flipped variants of the training images"""
    run_command(run_augment, pctx)
