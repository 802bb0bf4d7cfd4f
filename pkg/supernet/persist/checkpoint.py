# supernet/persist/checkpoint.py

"""
Binary checkpoint format.

Layout:
- 5 bytes: magic ``SNET1``
- 4 bytes: header length H, unsigned little-endian
- H bytes: UTF-8 JSON header
- payload: every array of the header's manifest, in manifest order, as
  little-endian floats of the header's ``dtype`` (``<f8`` by default, ``<f4``
  on request), row-major

The header holds ``version`` (1), ``kind`` (``network`` or ``supernet``),
the spec(s) needed to rebuild the model, ``dtype`` and ``arrays``: a list of
``{"name", "shape"}`` entries. ``<f8`` files round-trip bitwise.
"""

import json
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, List, Literal, Tuple, Union

import numpy as np
from pydantic import ValidationError

from supernet.ensemble import SuperNetModel
from supernet.errors import FormatError
from supernet.network import LayerSpec, ModelParams, NetworkSpec

logger = logging.getLogger(__name__)

MAGIC = b"SNET1"
VERSION = 1
PREFIX_SIZE = len(MAGIC) + 4
DTYPES = ("<f8", "<f4")

PathLike = Union[str, Path]
Dtype = Literal["<f8", "<f4"]


def _manifest(prefix: str, params: ModelParams) -> List[Tuple[str, np.ndarray]]:
    arrays = []
    for index, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays.append((f"{prefix}W{index}", w))
        arrays.append((f"{prefix}b{index}", b))
    return arrays


def _write(path: PathLike, header: Dict[str, Any], arrays: List[Tuple[str, np.ndarray]], dtype: str) -> None:
    if dtype not in DTYPES:
        raise FormatError(f"unsupported element type {dtype!r}; expected one of {DTYPES}")
    header = {
        "version": VERSION,
        **header,
        "dtype": dtype,
        "arrays": [{"name": name, "shape": list(array.shape)} for name, array in arrays],
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(array, dtype=dtype).tobytes() for _, array in arrays)
    Path(path).write_bytes(MAGIC + struct.pack("<I", len(encoded)) + encoded + payload)
    logger.info(f"Saved {header['kind']} checkpoint to {path} ({len(arrays)} arrays, {dtype})")


def _read(path: PathLike) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if len(raw) < PREFIX_SIZE:
        raise FormatError(f"{path}: file too short for a checkpoint prefix", offset=len(raw))
    if raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:len(MAGIC)]!r}", offset=0)
    (header_len,) = struct.unpack("<I", raw[len(MAGIC) : PREFIX_SIZE])
    header_end = PREFIX_SIZE + header_len
    if len(raw) < header_end:
        raise FormatError(f"{path}: header of {header_len} bytes is truncated", offset=len(raw))
    try:
        header = json.loads(raw[PREFIX_SIZE:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: header is not valid JSON: {exc}", offset=PREFIX_SIZE) from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header must be a JSON object", offset=PREFIX_SIZE)
    if header.get("version") != VERSION:
        raise FormatError(f"{path}: unsupported version {header.get('version')!r}", offset=PREFIX_SIZE)
    dtype = header.get("dtype")
    if dtype not in DTYPES:
        raise FormatError(f"{path}: unsupported element type {dtype!r}", offset=PREFIX_SIZE)

    itemsize = np.dtype(dtype).itemsize
    arrays: Dict[str, np.ndarray] = {}
    offset = header_end
    for entry in header.get("arrays", []):
        try:
            shape = tuple(int(d) for d in entry["shape"])
            name = str(entry["name"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed array manifest entry {entry!r}", offset=PREFIX_SIZE) from exc
        size = math.prod(shape) * itemsize
        if offset + size > len(raw):
            raise FormatError(f"{path}: payload truncated inside array {name!r}", offset=len(raw))
        values = np.frombuffer(raw, dtype=dtype, count=math.prod(shape), offset=offset)
        arrays[name] = values.astype(np.float64).reshape(shape)
        offset += size
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} bytes after the last array", offset=offset)
    return header, arrays


def _params(arrays: Dict[str, np.ndarray], prefix: str, num_layers: int, path: PathLike) -> ModelParams:
    try:
        return ModelParams(
            [arrays[f"{prefix}W{i}"] for i in range(num_layers)],
            [arrays[f"{prefix}b{i}"] for i in range(num_layers)],
        )
    except KeyError as exc:
        raise FormatError(f"{path}: manifest is missing array {exc.args[0]!r}") from exc


def save_model(params: ModelParams, spec: NetworkSpec, path: PathLike, dtype: Dtype = "<f8") -> None:
    """
    Write one network as an SNET1 checkpoint.

    Parameters:
    - dtype (str): ``"<f8"`` (lossless) or ``"<f4"``.
    """
    params.check_against(spec)
    _write(path, {"kind": "network", "spec": spec.model_dump()}, _manifest("", params), dtype)


def save_supernet(model: SuperNetModel, path: PathLike, dtype: Dtype = "<f8") -> None:
    """Every branch (spec and parameters, heads included) plus the merged layer."""
    arrays = []
    for index, (_, params) in enumerate(model.branches):
        arrays.extend(_manifest(f"branch{index}.", params))
    arrays.extend(_manifest("head.", model.head_params()))
    header = {
        "kind": "supernet",
        "branches": [spec.model_dump() for spec, _ in model.branches],
        "head_layer": model.head_layer.model_dump(),
    }
    _write(path, header, arrays, dtype)


def _rebuild(header: Dict[str, Any], arrays: Dict[str, np.ndarray], path: PathLike):
    try:
        if header.get("kind") == "network":
            spec = NetworkSpec.model_validate(header["spec"])
            params = _params(arrays, "", spec.num_layers, path)
            params.check_against(spec)
            return params, spec
        if header.get("kind") == "supernet":
            branches = []
            for index, raw_spec in enumerate(header["branches"]):
                spec = NetworkSpec.model_validate(raw_spec)
                params = _params(arrays, f"branch{index}.", spec.num_layers, path)
                params.check_against(spec)
                branches.append((spec, params))
            head = _params(arrays, "head.", 1, path)
            return SuperNetModel(
                branches=branches,
                head_weight=head.weights[0],
                head_bias=head.biases[0],
                head_layer=LayerSpec.model_validate(header["head_layer"]),
            )
    except (KeyError, ValidationError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: header does not describe a valid model: {exc}") from exc
    raise FormatError(f"{path}: unknown checkpoint kind {header.get('kind')!r}")


def load_model(path: PathLike) -> Tuple[ModelParams, NetworkSpec]:
    """
    Read a single-network checkpoint.

    Raises:
    - FormatError: on a bad magic or version, a truncated or oversized
      payload, a manifest that disagrees with the spec, or a SuperNet file.
    """
    header, arrays = _read(path)
    if header.get("kind") != "network":
        raise FormatError(f"{path}: expected a network checkpoint, found {header.get('kind')!r}")
    return _rebuild(header, arrays, path)


def load_supernet(path: PathLike) -> SuperNetModel:
    """
    Read a SuperNet checkpoint.

    Raises:
    - FormatError: if the file is corrupt or holds a single network.
    """
    header, arrays = _read(path)
    if header.get("kind") != "supernet":
        raise FormatError(f"{path}: expected a supernet checkpoint, found {header.get('kind')!r}")
    return _rebuild(header, arrays, path)


def load_checkpoint(path: PathLike) -> Union[Tuple[ModelParams, NetworkSpec], SuperNetModel]:
    """Load whichever kind of model ``path`` holds."""
    header, arrays = _read(path)
    return _rebuild(header, arrays, path)
