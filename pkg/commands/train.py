import logging

import click

from commands.common import load_manifest, require_split, run_command
from config import PipelineContext
from models import CommandResult, EpochLog
from services.checkpoint_service import CheckpointService
from services.network_service import NetworkService
from services.training_service import TrainingService
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


@log_stage_timing("train")
def run_train(pctx: PipelineContext, resume: bool = False) -> CommandResult:
    """
    Train the FSER network, checkpointing and logging after every epoch

    With resume, training continues from the stored checkpoint's epoch, parameters
    and dropout generator state up to the configured epoch count.
    """
    cfg = pctx.config()
    manifest = load_manifest(pctx)
    require_split(manifest, "train")
    checkpoint_path = pctx.resolve(cfg.checkpoint_path)
    epoch_log_path = pctx.resolve(cfg.epoch_log_path)

    start_epoch = 0
    if resume and checkpoint_path.exists():
        checkpoint = CheckpointService.load_checkpoint(checkpoint_path)
        network = CheckpointService.to_network(checkpoint)
        start_epoch = checkpoint.epoch
        logger.info(f"Resuming from epoch {start_epoch} of {checkpoint_path}")
    else:
        network = NetworkService.build_fser_network(cfg.seed)
        TrainingService.write_epoch_log([], epoch_log_path)

    def on_epoch(log: EpochLog) -> None:
        CheckpointService.save_checkpoint(CheckpointService.from_network(network, log.epoch), checkpoint_path)
        TrainingService.write_epoch_log([log], epoch_log_path, append=True)

    logs = TrainingService.train(network, manifest, cfg.train_config(), pctx.manifest_dir,
                                 start_epoch=start_epoch, on_epoch=on_epoch, progress=True)
    if not logs:
        CheckpointService.save_checkpoint(CheckpointService.from_network(network, start_epoch), checkpoint_path)

    output = "".join(TrainingService.epoch_log_line(log) + "\n" for log in logs[-1:])
    return CommandResult(
        success=True,
        data={"epochs": len(logs), "output": output},
        message=f"Trained epochs {start_epoch + 1}..{cfg.epochs}, checkpoint at {checkpoint_path}",
    )


@click.command("train")
@click.option("--resume", is_flag=True, help="Continue from the checkpoint at checkpoint_path")
@click.pass_obj
def command(pctx: PipelineContext, resume):
    """Train the network on the train split"""
    run_command(run_train, pctx, resume=resume)
