# supernet/datasets/idx.py

"""
IDX reader for the MNIST / Fashion-MNIST distribution files.

Layout (big endian):
    0000  u32  magic: 0x00000803 for images, 0x00000801 for labels
               (the low byte is the number of dimensions)
    0004  u32  dimension sizes, one per dimension
    ....  u8   payload, row-major
"""

import gzip
import logging
import math
import struct
from pathlib import Path
from typing import Tuple

import numpy as np

from supernet.datasets.core import Dataset
from supernet.errors import FormatError

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as handle:
        return handle.read()


def parse_idx(raw: bytes, expected_magic: int, what: str) -> Tuple[Tuple[int, ...], np.ndarray]:
    """Validate an IDX blob and return its dimensions and uint8 payload."""
    if len(raw) < 4:
        raise FormatError(f"{what}: truncated magic number", offset=len(raw))
    (magic,) = struct.unpack_from(">I", raw, 0)
    if magic != expected_magic:
        raise FormatError(f"{what}: bad magic 0x{magic:08X}, expected 0x{expected_magic:08X}", offset=0)
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{what}: truncated dimension header", offset=len(raw))
    dims = struct.unpack_from(f">{ndim}I", raw, 4)
    size = math.prod(dims)
    if len(raw) < header + size:
        raise FormatError(f"{what}: payload truncated, expected {size} bytes after the header", offset=len(raw))
    if len(raw) > header + size:
        raise FormatError(f"{what}: {len(raw) - header - size} unexpected trailing bytes", offset=header + size)
    return dims, np.frombuffer(raw, dtype=np.uint8, count=size, offset=header)


def load_idx(images_path, labels_path, num_classes: int = 10, name: str = None) -> Dataset:
    """
    Load an IDX image/label pair.

    Pixels are flattened row-major and scaled to [0, 1] by dividing by 255.
    Gzip-compressed files (``.gz``) are read transparently.

    Raises:
    - FormatError: bad magic, truncated payload, a label out of range, or
      different example counts in the two files; the message gives the byte offset.

    Example:
    images 00 00 08 03 | 1 2 2 | 00 FF 80 40  ->  features [[0, 1, 128/255, 64/255]]
    """
    image_dims, pixels = parse_idx(_read(images_path), IMAGE_MAGIC, "images")
    (label_count,), labels = parse_idx(_read(labels_path), LABEL_MAGIC, "labels")
    count = image_dims[0]
    if count != label_count:
        raise FormatError(f"{count} images but {label_count} labels", offset=4)
    out_of_range = np.flatnonzero(labels >= num_classes)
    if out_of_range.size:
        raise FormatError(f"label {labels[out_of_range[0]]} is not below {num_classes}", offset=8 + int(out_of_range[0]))

    features = pixels.reshape(count, math.prod(image_dims[1:])).astype(np.float64) / 255.0
    dataset = Dataset(features, labels.astype(np.int64), num_classes, name or Path(images_path).name)
    logger.info(f"Loaded {dataset}")
    return dataset
