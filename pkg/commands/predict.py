import logging
from typing import List, Optional

import click

from commands.common import run_command
from config import PipelineContext
from exceptions import FserError, MissingStage
from models import CommandResult, EmotionLabel
from services.checkpoint_service import CheckpointService
from services.feature_service import FeatureService
from services.network_service import NetworkService
from templates import ReportTemplates
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("predict")
def run_predict(pctx: PipelineContext, wav_paths: List[str], checkpoint: Optional[str] = None) -> CommandResult:
    """Print the 8-class distribution and argmax label for each WAV"""
    cfg = pctx.config()
    checkpoint_path = pctx.resolve(checkpoint or cfg.checkpoint_path)
    if not checkpoint_path.exists():
        raise MissingStage("no checkpoint; run train first", path=str(checkpoint_path))
    network = CheckpointService.to_network(CheckpointService.load_checkpoint(checkpoint_path))
    filterbank = FeatureService.build_filterbank(cfg)
    class_names = [label.display_name for label in EmotionLabel]

    lines, failures = [], []
    for path in wav_paths:
        try:
            image, _ = FeatureService.wav_to_image(path, cfg, filterbank)
        except FserError as e:
            failures.append(f"{type(e).__name__}: {e}")
            continue
        prediction = NetworkService.predict(network, [image])[0]
        lines.append(ReportTemplates.prediction_line(path, prediction.label.display_name,
                                                     prediction.probabilities, class_names))

    return CommandResult(
        success=True,
        data={"output": "".join(line + "\n" for line in lines)},
        message=f"Predicted {len(lines)} of {len(wav_paths)} files",
        failures=failures,
    )


@click.command("predict")
@click.argument("wav_paths", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--checkpoint", default=None, type=click.Path(dir_okay=False),
              help="Checkpoint to load instead of checkpoint_path")
@click.pass_obj
def command(pctx: PipelineContext, wav_paths, checkpoint):
    """Classify WAV files with the trained network"""
    run_command(run_predict, pctx, list(wav_paths), checkpoint=checkpoint)
