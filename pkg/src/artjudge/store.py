"""Embedding matrices and their on-disk binary format (AJEM).

Layout, all integers little-endian:

    magic   4 bytes  b"AJEM"
    version u16      currently 1
    flags   u8       bit 0: rows are unit-normalized (within 1e-4)
    dim     u32
    count   u64
    comment u32 length + UTF-8 bytes   (free-form, e.g. encoder provenance)
    ids     count x (u32 length + UTF-8 bytes)
    payload count x dim float32, row-major

The payload round-trips bit-identically: whatever float32 bits go in come
back out. Math helpers accumulate in float64 regardless of storage dtype.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimMismatchError, FormatError, ZeroVectorError

MAGIC = b"AJEM"
VERSION = 1
_FLAG_NORMALIZED = 0x01
UNIT_NORM_TOL = 1e-4


@dataclass
class EmbeddingMatrix:
    """Named rows of float32 vectors, optionally known to be unit-norm."""

    ids: tuple[str, ...]
    data: np.ndarray
    normalized: bool = False
    comment: str = ""
    _row_of: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise FormatError(f"embedding data must be 2-d, got shape {arr.shape}")
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        self.data = arr
        self.ids = tuple(str(i) for i in self.ids)
        if len(self.ids) != arr.shape[0]:
            raise FormatError(f"{len(self.ids)} ids for {arr.shape[0]} rows")
        self._row_of = {}
        for idx, name in enumerate(self.ids):
            if name in self._row_of:
                raise FormatError(f"duplicate embedding id {name!r}")
            self._row_of[name] = idx

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __contains__(self, name: str) -> bool:
        return name in self._row_of

    def row(self, name: str) -> int:
        try:
            return self._row_of[name]
        except KeyError:
            raise FormatError(f"unknown embedding id {name!r}") from None

    def vector(self, name: str) -> np.ndarray:
        return self.data[self.row(name)]

    def take(self, names: list[str] | tuple[str, ...]) -> np.ndarray:
        """Rows for `names`, in order, as one (len, dim) view-copy."""
        return self.data[[self.row(n) for n in names]]


def is_unit_norm(data: np.ndarray, tol: float = UNIT_NORM_TOL) -> bool:
    if data.shape[0] == 0:
        return True
    norms = np.linalg.norm(data.astype(np.float64), axis=1)
    return bool(np.all(np.abs(norms - 1.0) <= tol))


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Unit-length copy of `vec` (float64 math). Zero vectors are an error."""
    v = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ZeroVectorError("cannot normalize a zero vector")
    return v / norm


def normalize_matrix(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Row-normalized copy; rows stay float32, normalized flag set."""
    rows = matrix.data.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms < 1e-12):
        bad = matrix.ids[int(np.argmin(norms))]
        raise ZeroVectorError(f"zero-norm row {bad!r}")
    rows = rows / norms[:, None]
    return EmbeddingMatrix(ids=matrix.ids, data=rows.astype(np.float32),
                           normalized=True, comment=matrix.comment)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with float64 accumulation."""
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise DimMismatchError(f"cosine over shapes {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na < 1e-12 or nb < 1e-12:
        raise ZeroVectorError("cosine undefined for zero vectors")
    return float(np.dot(va, vb) / (na * nb))


def _write_str(out: bytearray, text: str) -> None:
    raw = text.encode("utf-8")
    out += struct.pack("<I", len(raw))
    out += raw


def write_store(matrix: EmbeddingMatrix, path: str | Path) -> None:
    out = bytearray()
    out += MAGIC
    flags = _FLAG_NORMALIZED if matrix.normalized else 0
    out += struct.pack("<HBIQ", VERSION, flags, matrix.dim, matrix.count)
    _write_str(out, matrix.comment)
    for name in matrix.ids:
        _write_str(out, name)
    payload = np.ascontiguousarray(matrix.data, dtype="<f4")
    out += payload.tobytes()
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, blob: bytes, name: str):
        self.blob = blob
        self.pos = 0
        self.name = name

    def pull(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(f"{self.name}: truncated (wanted {n} bytes at offset {self.pos})")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def pull_str(self) -> str:
        (length,) = struct.unpack("<I", self.pull(4))
        raw = self.pull(length)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.name}: invalid UTF-8 in id table ({exc})") from None


def read_store(path: str | Path) -> EmbeddingMatrix:
    p = Path(path)
    try:
        blob = p.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"embedding store not found: {p}") from None
    r = _Reader(blob, p.name)
    if r.pull(4) != MAGIC:
        raise FormatError(f"{p.name}: bad magic, not an AJEM store")
    version, flags, dim, count = struct.unpack("<HBIQ", r.pull(15))
    if version != VERSION:
        raise FormatError(f"{p.name}: unsupported version {version}")
    comment = r.pull_str()
    ids = tuple(r.pull_str() for _ in range(count))
    payload = r.pull(count * dim * 4)
    if r.pos != len(blob):
        raise FormatError(f"{p.name}: {len(blob) - r.pos} trailing bytes")
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    return EmbeddingMatrix(ids=ids, data=data,
                           normalized=bool(flags & _FLAG_NORMALIZED), comment=comment)
