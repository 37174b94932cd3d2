"""Embeddings looked up from a file written by an external language model.

File layout, all little-endian:

    header  magic b"MFEM", version u32, d u32, count u32
    record  caption_hash u64, n u32, then n*d float32

caption_hash is the first 8 bytes of sha256(caption UTF-8), read little-endian.
"""

from __future__ import annotations

import hashlib
import logging
import struct

import numpy as np
import torch

from midiforge.encoders.interface import CaptionEmbedding, TextEncoder
from midiforge.errors import EmbeddingFileError, MissingEmbedding

logger = logging.getLogger(__name__)

MAGIC = b"MFEM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_RECORD = struct.Struct("<QI")


def caption_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def write_embedding_file(path: str, entries: dict[str, np.ndarray]) -> None:
    """Write caption -> (n, d) matrices. All matrices share d."""
    dims = {np.asarray(m).shape[1] for m in entries.values()}
    if len(dims) > 1:
        raise EmbeddingFileError(f"embeddings disagree on dimension: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, dim, len(entries)))
        for text, matrix in entries.items():
            arr = np.ascontiguousarray(matrix, dtype="<f4")
            if arr.ndim != 2 or arr.shape[0] < 1:
                raise EmbeddingFileError(f"embedding for {text!r} must be a non-empty n x d matrix")
            f.write(_RECORD.pack(caption_hash(text), arr.shape[0]))
            f.write(arr.tobytes())


def read_embedding_file(path: str) -> tuple[int, dict[int, np.ndarray]]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise EmbeddingFileError(f"cannot read embedding file {path}: {e}") from e
    if len(data) < _HEADER.size:
        raise EmbeddingFileError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise EmbeddingFileError(f"{path}: not an embedding file")
    if version != VERSION:
        raise EmbeddingFileError(f"{path}: unsupported version {version}")
    pos = _HEADER.size
    table: dict[int, np.ndarray] = {}
    for _ in range(count):
        if pos + _RECORD.size > len(data):
            raise EmbeddingFileError(f"{path}: truncated record header")
        key, n = _RECORD.unpack_from(data, pos)
        pos += _RECORD.size
        size = n * dim * 4
        if n < 1 or pos + size > len(data):
            raise EmbeddingFileError(f"{path}: bad record for hash {key:016x}")
        matrix = np.frombuffer(data, dtype="<f4", count=n * dim, offset=pos).reshape(n, dim)
        if not np.isfinite(matrix).all():
            raise EmbeddingFileError(f"{path}: non-finite values for hash {key:016x}")
        table[key] = matrix
        pos += size
    logger.debug("loaded %d embeddings (d=%d) from %s", len(table), dim, path)
    return dim, table


class PrecomputedEncoder(TextEncoder):
    def __init__(self, path: str):
        self.path = path
        self._dim, self._table = read_embedding_file(path)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def trainable(self) -> bool:
        return False

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, text: str) -> bool:
        return caption_hash(text) in self._table

    def encode(self, text: str) -> CaptionEmbedding:
        matrix = self._table.get(caption_hash(text))
        if matrix is None:
            raise MissingEmbedding(text)
        return CaptionEmbedding.full(torch.from_numpy(matrix.copy()))
