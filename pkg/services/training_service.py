import logging
import math
import sys
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from exceptions import EmptySplit, MissingStage
from models import IMAGE_SIZE, DatasetManifest, EpochLog, SampleRecord, Split, TrainConfig
from services.imaging_service import PPM_MAXVAL, ImagingService
from services.network_service import Network
from services.nn_layers import one_hot, softmax_cross_entropy
from templates import ReportTemplates
from utils.timing_logger import stage_timing_logger

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
EpochCallback = Callable[[EpochLog], None]


class TrainingService:
    """Mini-batch SGD over the manifest's train split"""

    @staticmethod
    def load_split(manifest: DatasetManifest, split: Split,
                   base_dir: PathLike) -> Tuple[np.ndarray, np.ndarray, List[SampleRecord]]:
        """
        Read every image of one split

        Returns:
            (uint8 batch [N, 3, 64, 64], integer labels [N], records in manifest order)
        """
        records = manifest.in_split(split)
        batch = np.zeros((len(records), 3, IMAGE_SIZE, IMAGE_SIZE), dtype=np.uint8)
        for i, record in enumerate(records):
            if not record.image_path:
                raise MissingStage(f"record has no image in the {split.value} split; run featurize first",
                                   path=record.audio_path)
            image = ImagingService.read_ppm(Path(base_dir) / record.image_path, label=record.label)
            batch[i] = np.round(image.pixels * PPM_MAXVAL).astype(np.uint8).transpose(2, 0, 1)
        labels = np.array([int(r.label) for r in records], dtype=np.int64)
        return batch, labels, records

    @staticmethod
    def as_input(x: np.ndarray) -> np.ndarray:
        """Byte-valued batches are rescaled to the float pixels read_ppm would give"""
        if x.dtype == np.uint8:
            return x / PPM_MAXVAL
        return np.asarray(x, dtype=np.float64)

    @staticmethod
    def train_step(network: Network, x: np.ndarray, targets: np.ndarray, learning_rate: float,
                   training: bool = True) -> Tuple[float, np.ndarray]:
        """One forward/backward/update on a batch; returns (loss before the update, logits)"""
        logits = network.forward(x, training=training)
        loss, dlogits = softmax_cross_entropy(logits, targets)
        network.backward(dlogits)
        network.sgd_step(learning_rate)
        return loss, logits

    @staticmethod
    def evaluate_loss(network: Network, x: np.ndarray, labels: np.ndarray,
                      batch_size: int = 64) -> Tuple[float, float]:
        """Eval-mode mean loss and accuracy; NaN for an empty set"""
        if len(labels) == 0:
            return math.nan, math.nan
        total_loss = 0.0
        correct = 0
        for start in range(0, len(labels), batch_size):
            xb, yb = TrainingService.as_input(x[start:start + batch_size]), labels[start:start + batch_size]
            logits = network.forward(xb, training=False)
            loss, _ = softmax_cross_entropy(logits, one_hot(yb, network.class_count))
            total_loss += loss * len(yb)
            correct += int(np.sum(np.argmax(logits, axis=1) == yb))
        return total_loss / len(labels), correct / len(labels)

    @staticmethod
    def epoch_order(seed: int, epoch: int, n: int, shuffle: bool = True) -> np.ndarray:
        """Visiting order of the train set for one epoch, keyed by (seed, epoch)"""
        if not shuffle:
            return np.arange(n)
        return np.random.default_rng([seed, epoch]).permutation(n)

    @staticmethod
    def train_arrays(network: Network, x_train: np.ndarray, y_train: np.ndarray,
                     x_val: np.ndarray, y_val: np.ndarray, cfg: TrainConfig,
                     start_epoch: int = 0, on_epoch: Optional[EpochCallback] = None,
                     progress: bool = False) -> List[EpochLog]:
        """
        Train in place from epoch ``start_epoch + 1`` through ``cfg.epochs``

        Train loss and accuracy are batch-size weighted means of the training-mode
        forward passes of the epoch; validation runs with dropout disabled.

        Args:
            network: Network to update
            x_train, y_train: Train batch [N, 3, 64, 64] and labels [N]
            x_val, y_val: Validation batch and labels, may be empty
            cfg: Batch size, learning rate, epoch count, shuffle seed
            start_epoch: Epochs already completed (resume)
            on_epoch: Called after each epoch with its log row
            progress: Show a tqdm bar on stderr

        Returns:
            One EpochLog per epoch run
        """
        n_train = len(y_train)
        if n_train == 0:
            raise EmptySplit("the train split is empty")
        if len(y_val) == 0:
            logger.warning("Validation split is empty; val_loss and val_acc are recorded as NaN")

        logs: List[EpochLog] = []
        timings = []
        epochs = range(start_epoch + 1, cfg.epochs + 1)
        for epoch in tqdm(epochs, desc="train", unit="epoch", file=sys.stderr, disable=not progress):
            started = time.time()
            order = TrainingService.epoch_order(cfg.seed, epoch, n_train, cfg.shuffle)
            total_loss = 0.0
            correct = 0
            for start in range(0, n_train, cfg.batch_size):
                index = order[start:start + cfg.batch_size]
                xb, yb = TrainingService.as_input(x_train[index]), y_train[index]
                loss, logits = TrainingService.train_step(network, xb, one_hot(yb, network.class_count),
                                                          cfg.learning_rate)
                total_loss += loss * len(index)
                correct += int(np.sum(np.argmax(logits, axis=1) == yb))

            val_loss, val_acc = TrainingService.evaluate_loss(network, x_val, y_val, cfg.batch_size)
            log = EpochLog(epoch=epoch, train_loss=total_loss / n_train, train_acc=correct / n_train,
                           val_loss=val_loss, val_acc=val_acc)
            logs.append(log)
            duration = time.time() - started
            logger.info(f"Epoch {epoch}/{cfg.epochs}: loss={log.train_loss:.4f} acc={log.train_acc:.4f} "
                        f"val_loss={log.val_loss:.4f} val_acc={log.val_acc:.4f}")
            stage_timing_logger.log_stage(stage="train_epoch", duration=duration, items=n_train,
                                          epoch=epoch, train_loss=log.train_loss, val_acc=log.val_acc)
            timings.append({**log.model_dump(), "duration_seconds": duration})
            if on_epoch:
                on_epoch(log)

        stage_timing_logger.log_epoch_summary(timings)
        return logs

    @staticmethod
    def train(network: Network, manifest: DatasetManifest, cfg: TrainConfig, base_dir: PathLike,
              start_epoch: int = 0, on_epoch: Optional[EpochCallback] = None,
              progress: bool = False) -> List[EpochLog]:
        """Train on the manifest's train split (augmented rows included), validating on its val split"""
        if not any(r.split != Split.UNASSIGNED for r in manifest.records):
            raise MissingStage("manifest has no split assignment; run split first")
        x_train, y_train, _ = TrainingService.load_split(manifest, Split.TRAIN, base_dir)
        x_val, y_val, _ = TrainingService.load_split(manifest, Split.VAL, base_dir)
        logger.info(f"Training on {len(y_train)} images, validating on {len(y_val)}")
        return TrainingService.train_arrays(network, x_train, y_train, x_val, y_val, cfg,
                                            start_epoch=start_epoch, on_epoch=on_epoch, progress=progress)

    @staticmethod
    def epoch_log_line(log: EpochLog) -> str:
        return f"{log.epoch},{log.train_loss:.6f},{log.train_acc:.6f},{log.val_loss:.6f},{log.val_acc:.6f}"

    @staticmethod
    def write_epoch_log(logs: Sequence[EpochLog], path: PathLike, append: bool = False) -> None:
        """CSV ``epoch,train_loss,train_acc,val_loss,val_acc``; append keeps earlier rows on resume"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [TrainingService.epoch_log_line(log) for log in logs]
        if append and path.exists():
            with path.open("a", encoding="utf-8", newline="\n") as handle:
                handle.writelines(line + "\n" for line in lines)
            return
        path.write_text("\n".join([ReportTemplates.EPOCH_LOG_HEADER] + lines) + "\n", encoding="utf-8")


