import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import click
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from exceptions import ConfigError
from models import PipelineConfig
from utils.config_parser import ConfigFileParser

# Load environment variables
load_dotenv()

# Configure logging; stdout is reserved for command output
logging.basicConfig(
    level=os.getenv("FSER_LOG_LEVEL", "INFO").upper(),
    format="%(levelname)s:%(name)s:%(message)s",
    handlers=[logging.StreamHandler(sys.stderr)],
)
logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent


class EnvConfig:
    """Configuration class for environment-level settings"""

    def __init__(self):
        self.log_level = os.getenv("FSER_LOG_LEVEL", "INFO").upper()
        self.log_dir = os.getenv("FSER_LOG_DIR", "logs")
        self.mapping_path = os.getenv("FSER_MAPPING_PATH", str(PROJECT_ROOT / "data" / "label_mapping.csv"))
        self.filename_codes_path = os.getenv(
            "FSER_FILENAME_CODES_PATH", str(PROJECT_ROOT / "data" / "filename_codes.csv")
        )


# Global configuration instance
env_config = EnvConfig()


def load_pipeline_config(config_path: Optional[str] = None,
                         overrides: Optional[List[str]] = None,
                         seed: Optional[int] = None) -> PipelineConfig:
    """
    Build the pipeline configuration: defaults < config file < command-line flags

    Args:
        config_path: Optional ``key = value`` file
        overrides: ``key=value`` strings from ``--set``
        seed: Value of ``--seed`` if given

    Returns:
        Validated PipelineConfig
    """
    values = {}
    if config_path:
        try:
            raw = Path(config_path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}", path=config_path)
        success, parsed, error = ConfigFileParser.parse(raw)
        if not success:
            raise ConfigError(error, path=config_path)
        values.update(parsed)

    for override in overrides or []:
        try:
            key, value = ConfigFileParser.parse_override(override)
        except ValueError as e:
            raise ConfigError(f"bad --set value: {e}")
        values[key] = value

    if seed is not None:
        values["seed"] = seed

    unknown = sorted(set(values) - set(PipelineConfig.model_fields))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}", path=config_path)

    # None-valued optional keys may be spelled "none" in files
    for key, value in list(values.items()):
        if isinstance(value, str) and value.lower() == "none":
            values[key] = None

    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}", path=config_path)


class PipelineContext(BaseModel):
    """Global CLI options shared by every command"""

    manifest_path: str = Field(..., description="Manifest CSV")
    config_path: Optional[str] = None
    seed: Optional[int] = None
    force: bool = False
    overrides: List[str] = Field(default_factory=list)

    @property
    def manifest_dir(self) -> Path:
        return Path(self.manifest_path).resolve().parent

    def resolve(self, path: str) -> Path:
        """Resolve a manifest-relative or config-relative path"""
        candidate = Path(path)
        return candidate if candidate.is_absolute() else self.manifest_dir / candidate

    def relative(self, path: Path) -> str:
        """Express a path relative to the manifest directory, POSIX separators"""
        return Path(os.path.relpath(Path(path).resolve(), self.manifest_dir)).as_posix()

    def config(self) -> PipelineConfig:
        return load_pipeline_config(self.config_path, self.overrides, self.seed)


def create_cli() -> click.Group:
    """Create and configure the command-line application"""

    @click.group(help="Speech emotion recognition from mel-spectrogram images")
    @click.option("--manifest", "manifest_path", default="manifest.csv", show_default=True,
                  type=click.Path(dir_okay=False), help="Dataset manifest CSV")
    @click.option("--config", "config_path", default=None,
                  type=click.Path(exists=True, dir_okay=False), help="key = value config file")
    @click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the config seed")
    @click.option("--force", is_flag=True, help="Recompute outputs that already exist")
    @click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override one config key")
    @click.pass_context
    def cli(ctx, manifest_path, config_path, seed, force, overrides):
        ctx.obj = PipelineContext(
            manifest_path=manifest_path,
            config_path=config_path,
            seed=seed,
            force=force,
            overrides=list(overrides),
        )

    return cli


def get_logger():
    """Get the configured logger"""
    return logger


def get_env_config() -> EnvConfig:
    """Get the environment configuration instance"""
    return env_config
