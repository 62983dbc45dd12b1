import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, TypeVar

import click
from tqdm import tqdm

from config import PipelineContext
from exceptions import (EXIT_ITEM_FAILURES, EXIT_OK, FserError, MissingStage, handle_pipeline_error,
                        handle_unexpected_error)
from models import CommandResult, DatasetManifest, Split
from services.dataset_service import DatasetService

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def load_manifest(pctx: PipelineContext) -> DatasetManifest:
    path = Path(pctx.manifest_path)
    if not path.exists():
        raise MissingStage("manifest not found; run index first", path=str(path))
    return DatasetService.read_manifest(path)


def require_split(manifest: DatasetManifest, stage: str) -> None:
    if not manifest.records or all(r.split == Split.UNASSIGNED for r in manifest.records):
        raise MissingStage(f"{stage} needs a split manifest; run split first")


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: int, desc: str = "") -> List[R]:
    """Ordered map, threaded when workers > 1, with a tqdm bar on stderr"""
    items = list(items)
    with tqdm(total=len(items), desc=desc, unit="item", file=sys.stderr, disable=not desc) as bar:
        def tracked(item: T) -> R:
            result = func(item)
            bar.update(1)
            return result

        if workers <= 1:
            return [tracked(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(tracked, items))


def emit(result: CommandResult) -> int:
    """Print command output and the failure summary; return the exit code"""
    output = (result.data or {}).get("output")
    if output:
        click.echo(output, nl=False)
    if result.failures:
        click.echo(f"{len(result.failures)} item(s) failed:", err=True)
        for failure in result.failures:
            click.echo(f"  {failure}", err=True)
    logger.info(result.message)
    return EXIT_ITEM_FAILURES if result.failures or not result.success else EXIT_OK


def run_command(func: Callable[..., CommandResult], *args, **kwargs) -> None:
    """Run a command body and exit with the code its outcome maps to"""
    ctx = click.get_current_context()
    try:
        result = func(*args, **kwargs)
    except FserError as e:
        code = handle_pipeline_error(e)
    except Exception as e:
        code = handle_unexpected_error(e)
    else:
        code = emit(result)
    ctx.exit(code)
