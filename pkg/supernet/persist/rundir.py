# supernet/persist/rundir.py

import hashlib
import json
import logging
import shutil
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, Field

from supernet import __version__
from supernet.persist.config import ExperimentConfig
from supernet.settings import get_settings

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class InputFile(BaseModel):
    path: str
    sha256: str


class RunManifest(BaseModel):
    """What a run read and which seeds it used; written as manifest.json."""

    command: str
    version: str = __version__
    config: str = Field(..., description="Path of the config file the run was started with")
    inputs: List[InputFile] = Field(default_factory=list)
    seeds: Dict[str, int] = Field(default_factory=dict)
    settings: Dict[str, Any] = Field(default_factory=dict)
    extra: Dict[str, Any] = Field(default_factory=dict)


def sha256_of(path: PathLike) -> str:
    """Hex digest of the file, read in chunks."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def config_inputs(config: ExperimentConfig) -> List[Path]:
    """Every input file the config refers to."""
    names = ("images", "labels", "test_images", "test_labels", "path", "test_path")
    paths = [getattr(config.data, name) for name in names if getattr(config.data, name, None) is not None]
    if config.supernet is not None:
        paths.extend(config.supernet.branches)
    return paths


def seeds_of(config: ExperimentConfig) -> Dict[str, int]:
    """Every seed the run depends on, keyed by where it comes from."""
    seeds = {"train": config.train.seed, "split": config.data.split.seed}
    if config.data.kind == "synth":
        seeds["synth"] = config.data.seed
    if config.snapshot is not None:
        seeds["snapshot"] = config.snapshot_config().train.seed
    return seeds


def prepare_run_dir(
    command: str,
    config_path: PathLike,
    config: ExperimentConfig,
    inputs: Sequence[PathLike] = (),
    output_dir: Optional[PathLike] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Create the run directory, copy the config file verbatim to config.toml
    and write manifest.json with the command, input hashes, seeds and settings.

    Parameters:
    - command (str): Subcommand name recorded in the manifest.
    - inputs (list of paths): Checkpoints read by the command, hashed next to
      the data files of the config.
    - output_dir (path, optional): Overrides ``config.output_dir``.
    - extra (dict, optional): Command-specific facts, such as the analyzed split.

    Returns:
    - Path: The run directory.
    """
    run_dir = Path(output_dir or config.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(config_path, run_dir / "config.toml")
    files = [*config_inputs(config), *inputs]
    manifest = RunManifest(
        command=command,
        config=str(config_path),
        inputs=[InputFile(path=str(p), sha256=sha256_of(p)) for p in files],
        seeds=seeds_of(config),
        settings=get_settings().model_dump(),
        extra=extra or {},
    )
    (run_dir / "manifest.json").write_text(json.dumps(manifest.model_dump(), indent=2) + "\n")
    logger.info(f"Run directory {run_dir} ready for {command}")
    return run_dir
