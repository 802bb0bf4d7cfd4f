# tests/e2e/conftest.py

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]

FMNIST_FILES = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]


def cli_process(*argv, timeout=600, **env):
    """
    Run ``python main.py`` as a separate process from the repository root.

    Parameters:
    - argv: command-line arguments (paths are converted with str).
    - timeout: seconds before the run is killed.
    - env: extra environment variables.

    Returns:
    - (exit code, parsed stdout summary or None, parsed stderr error or None)
    """
    completed = subprocess.run(
        [sys.executable, "main.py", *[str(a) for a in argv]],
        cwd=REPO_ROOT,
        capture_output=True,
        text=True,
        timeout=timeout,
        env={**os.environ, "SNET_LOG_LEVEL": "WARNING", **env},
    )
    out_lines = completed.stdout.strip().splitlines()
    err_lines = [line for line in completed.stderr.strip().splitlines() if line.startswith("{")]
    summary = json.loads(out_lines[-1]) if out_lines else None
    error = json.loads(err_lines[-1]) if err_lines else None
    return completed.returncode, summary, error


def write_fmnist_config(path: Path, files, output_dir: Path, body: str) -> Path:
    """Experiment file reading the Fashion-MNIST IDX files, with ``body`` appended after [data]."""
    path.write_text(
        f'output_dir = "{output_dir.as_posix()}"\n'
        "[data]\n"
        'kind = "idx"\n'
        f'images = "{files["train-images-idx3-ubyte"].as_posix()}"\n'
        f'labels = "{files["train-labels-idx1-ubyte"].as_posix()}"\n'
        f'test_images = "{files["t10k-images-idx3-ubyte"].as_posix()}"\n'
        f'test_labels = "{files["t10k-labels-idx1-ubyte"].as_posix()}"\n'
        + body
    )
    return path


@pytest.fixture(scope="session")
def fmnist_dir():
    """Directory holding the four Fashion-MNIST IDX files; the tests using it skip without SNET_FMNIST_DIR."""
    location = os.environ.get("SNET_FMNIST_DIR")
    if not location:
        pytest.skip("SNET_FMNIST_DIR is not set")
    path = Path(location)
    files = {}
    for name in FMNIST_FILES:
        candidates = [path / name, path / f"{name}.gz"]
        found = next((c for c in candidates if c.exists()), None)
        if found is None:
            pytest.skip(f"{name} not found in {path}")
        files[name] = found
    return files


@pytest.fixture
def fmnist_config(tmp_path, fmnist_dir):
    """Factory writing a Fashion-MNIST experiment file whose run directory is tmp_path / "run"."""

    def write(body, name="fmnist.toml"):
        return write_fmnist_config(tmp_path / name, fmnist_dir, tmp_path / "run", body)

    return write


@pytest.fixture
def run_cli():
    return cli_process
