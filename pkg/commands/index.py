import logging
from typing import List, Tuple

import click
from pydantic import ValidationError

from commands.common import run_command
from config import PipelineContext
from exceptions import ConfigError, ManifestFormatError
from helpers.corpus_helper import CorpusHelper
from models import CommandResult, Corpus, DatasetManifest
from services.dataset_service import DatasetService
from utils.timing_logger import log_stage_timing

logger = logging.getLogger(__name__)


def parse_corpus_option(value: str) -> Tuple[Corpus, str]:
    name, sep, directory = value.partition("=")
    if not sep or not directory:
        raise ConfigError(f"expected NAME=DIR, got {value!r}")
    try:
        return Corpus(name.strip().lower()), directory.strip()
    except ValueError:
        raise ConfigError(f"unknown corpus {name!r}; expected one of {', '.join(c.value for c in Corpus)}")


@log_stage_timing("index")
def run_index(pctx: PipelineContext, corpora: List[str]) -> CommandResult:
    """
    Build a fresh manifest from local corpus directories

    Audio paths are stored relative to the manifest's directory.
    """
    helper = CorpusHelper()
    records, failures = [], []
    for option in corpora:
        corpus, directory = parse_corpus_option(option)
        indexed, corpus_failures = helper.index_corpus(directory, corpus)
        failures.extend(corpus_failures)
        for absolute, record in indexed:
            records.append(record.model_copy(update={"audio_path": pctx.relative(absolute)}))

    try:
        manifest = DatasetManifest(records=records)
    except ValidationError as e:
        raise ManifestFormatError(f"cannot build manifest: {e}", path=pctx.manifest_path)
    DatasetService.write_manifest(manifest, pctx.manifest_path)

    return CommandResult(
        success=True,
        data={"records": len(records), "output": f"indexed {len(records)} files\n"},
        message=f"Indexed {len(records)} files into {pctx.manifest_path}",
        failures=failures,
    )


@click.command("index")
@click.option("--corpus", "corpora", multiple=True, required=True, metavar="NAME=DIR",
              help="Corpus name (emodb, emovo, savee, ravdess, other) and its directory")
@click.pass_obj
def command(pctx: PipelineContext, corpora):
    """Scan corpus directories and write the manifest"""
    run_command(run_index, pctx, list(corpora))
