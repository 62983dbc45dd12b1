import logging
import time
import json
import os
from datetime import datetime
from typing import Dict, Any, Optional, List
from functools import wraps


class StageTimingLogger:
    """Logger for pipeline stage and training epoch timings"""

    def __init__(self, log_dir: Optional[str] = None):
        self.log_dir = log_dir or os.getenv("FSER_LOG_DIR", "logs")
        self.log_file = os.path.join(self.log_dir, "fser-timing.log")
        self._logger: Optional[logging.Logger] = None

    @property
    def logger(self) -> logging.Logger:
        if self._logger is None:
            self._logger = self._setup_logger()
        return self._logger

    def _setup_logger(self) -> logging.Logger:
        """Set up the timing logger; the file is created on first use"""
        os.makedirs(self.log_dir, exist_ok=True)

        logger = logging.getLogger("fser_timing")
        logger.setLevel(logging.INFO)

        # Prevent duplicate handlers
        if not logger.handlers:
            handler = logging.FileHandler(self.log_file, encoding="utf-8")
            handler.setLevel(logging.INFO)
            formatter = logging.Formatter(
                "%(asctime)s | %(levelname)s | %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S"
            )
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.propagate = False

        return logger

    def log_stage(self,
                  stage: str,
                  duration: float,
                  items: Optional[int] = None,
                  success: bool = True,
                  error_message: Optional[str] = None,
                  **extra_data) -> None:
        """
        Log one pipeline stage with timing and counts

        Args:
            stage: Command or service step name
            duration: Time taken in seconds
            items: Number of records/images/batches processed
            success: Whether the stage succeeded
            error_message: Error message if it failed
            extra_data: Additional data to log
        """
        log_data = {
            "stage": stage,
            "duration_seconds": round(duration, 3),
            "duration_ms": round(duration * 1000, 1),
            "success": success,
            "timestamp": datetime.now().isoformat()
        }

        if items is not None:
            log_data["items"] = items
            log_data["items_per_second"] = round(items / duration, 2) if duration > 0 else 0

        if error_message:
            log_data["error"] = error_message

        log_data.update(extra_data)

        status = "SUCCESS" if success else "FAILED"
        message_parts = [
            f"Stage [{status}]",
            f"Stage: {stage}",
            f"Duration: {log_data['duration_seconds']}s"
        ]
        if items is not None:
            message_parts.append(f"Items: {items}")
        if error_message:
            message_parts.append(f"Error: {error_message}")

        log_message = " | ".join(message_parts)
        payload = json.dumps(log_data, separators=(",", ":"), default=str)
        if success:
            self.logger.info(f"{log_message} | Data: {payload}")
        else:
            self.logger.error(f"{log_message} | Data: {payload}")

    def log_epoch_summary(self, epochs: List[Dict[str, Any]]) -> None:
        """Log a summary over the epochs of one training run"""
        if not epochs:
            return

        total_duration = sum(e.get("duration_seconds", 0) for e in epochs)
        summary = {
            "training_summary": True,
            "epochs": len(epochs),
            "total_duration_seconds": round(total_duration, 3),
            "average_epoch_seconds": round(total_duration / len(epochs), 3),
            "final_train_loss": epochs[-1].get("train_loss"),
            "final_val_acc": epochs[-1].get("val_acc"),
            "timestamp": datetime.now().isoformat()
        }
        self.logger.info(f"Training Summary | {json.dumps(summary, separators=(',', ':'), default=str)}")


# Global logger instance
stage_timing_logger = StageTimingLogger()


def log_stage_timing(stage: Optional[str] = None):
    """
    Decorator that logs how long a command took

    Usage:
        @log_stage_timing("featurize")
        def cmd_featurize(...):
            ...

    A returned CommandResult-like object with ``success``/``error`` attributes
    is reflected in the log line.
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            stage_name = stage or func.__name__
            start_time = time.time()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                stage_timing_logger.log_stage(
                    stage=stage_name,
                    duration=time.time() - start_time,
                    success=False,
                    error_message=str(e)
                )
                raise

            stage_timing_logger.log_stage(
                stage=stage_name,
                duration=time.time() - start_time,
                success=getattr(result, "success", True),
                error_message=getattr(result, "error", None)
            )
            return result

        return wrapper

    return decorator
