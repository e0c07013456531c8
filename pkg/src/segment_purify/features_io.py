"""Binary reader/writer for per-frame descriptor files (SPFD format).

Layout, little-endian throughout: magic ``SPFD``, u32 version, u32 dim,
u32 n_rows, then n_rows records of (u32 frame_index, dim x f32). Local
channels may store many rows per frame (one per descriptor); dense channels
store at most one row per sampled frame.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SPFD"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass
class FeatureStream:
    """Per-frame descriptor rows for one channel of one video."""

    kind: str  # "local" or "dense"
    frame_indices: np.ndarray  # (n_rows,) int64, 1-based
    vectors: np.ndarray  # (n_rows, dim) float32

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_rows(self) -> int:
        return self.vectors.shape[0]

    def validate(self, n_frames: int, name: str = "") -> None:
        if self.n_rows and (
            self.frame_indices.min() < 1 or self.frame_indices.max() > n_frames
        ):
            raise ValueError(
                f"channel {name!r}: frame indices outside [1, {n_frames}]"
            )
        if self.kind == "dense" and self.n_rows:
            if len(np.unique(self.frame_indices)) != self.n_rows:
                raise ValueError(
                    f"channel {name!r}: dense stream has duplicate frame rows"
                )


def write_descriptors(path, frame_indices, vectors) -> None:
    """Write descriptor rows to an SPFD file."""
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    frame_indices = np.asarray(frame_indices)
    if vectors.ndim != 2:
        raise ValueError("vectors must be 2-D (n_rows, dim)")
    if frame_indices.shape != (vectors.shape[0],):
        raise ValueError("frame_indices length must match vectors rows")
    n_rows, dim = vectors.shape
    if dim < 1:
        raise ValueError("descriptor dim must be >= 1")
    rows = np.empty(n_rows, dtype=_row_dtype(dim))
    rows["frame"] = frame_indices
    rows["vec"] = vectors
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, n_rows))
        fh.write(rows.tobytes())


def read_descriptors(path):
    """Read an SPFD file; returns (frame_indices int64, vectors float32)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, dim, n_rows = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a descriptor file (bad magic)")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if dim < 1:
            raise ValueError(f"{path}: invalid dim {dim}")
        payload = fh.read()
    dtype = _row_dtype(dim)
    expected = n_rows * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(
            f"{path}: expected {expected} payload bytes, found {len(payload)}"
        )
    rows = np.frombuffer(payload, dtype=dtype, count=n_rows)
    return rows["frame"].astype(np.int64), rows["vec"].reshape(n_rows, dim).copy()


def read_stream(path, kind: str) -> FeatureStream:
    frames, vectors = read_descriptors(path)
    return FeatureStream(kind=kind, frame_indices=frames, vectors=vectors)


def _row_dtype(dim: int) -> np.dtype:
    return np.dtype([("frame", "<u4"), ("vec", "<f4", (dim,))])
