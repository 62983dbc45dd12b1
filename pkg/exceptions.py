import logging
import sys
import traceback
from typing import Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ITEM_FAILURES = 1
EXIT_PIPELINE_ERROR = 2
EXIT_INTERNAL_ERROR = 3


class FserError(Exception):
    """Base class for every domain failure raised by the toolkit"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# audio_io
class MalformedHeader(FserError):
    pass


class UnsupportedEncoding(FserError):
    pass


class EmptyData(FserError):
    pass


# dsp
class NonPowerOfTwoLength(FserError):
    pass


class ClipTooShort(FserError):
    pass


class DegenerateBand(FserError):
    pass


# imaging
class IoFailure(FserError):
    pass


class DimensionMismatch(FserError):
    pass


# dataset
class UnknownLabel(FserError):
    pass


class ClassTooSmall(FserError):
    pass


class ManifestFormatError(FserError):
    pass


# nn
class ShapeMismatch(FserError):
    pass


class MissingForwardCache(FserError):
    pass


class EmptySplit(FserError):
    pass


class BadMagic(FserError):
    pass


class VersionMismatch(FserError):
    pass


class Truncated(FserError):
    pass


# metrics
class LengthMismatch(FserError):
    pass


class DegenerateClass(FserError):
    pass


# cli
class MissingStage(FserError):
    pass


class ConfigError(FserError):
    pass


def handle_pipeline_error(exc: FserError) -> int:
    """Top-level handler for domain errors that abort a command"""
    logger.error(f"{type(exc).__name__}: {exc}")
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_PIPELINE_ERROR


def handle_unexpected_error(exc: Exception) -> int:
    """Top-level handler for anything that is not a domain error"""
    logger.error(f"Unhandled exception: {str(exc)}\n{traceback.format_exc()}")
    print("error: internal error, see log for details", file=sys.stderr)
    return EXIT_INTERNAL_ERROR
