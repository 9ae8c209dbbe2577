"""AJEM store serialization.

AJEM is the binary interchange format the downstream engine reads. One file
holds a named float32 matrix:

    magic   4 bytes  b"AJEM"
    version u16      currently 1
    flags   u8       bit 0: rows are unit-normalized
    dim     u32
    count   u64
    comment u32 length + UTF-8 bytes
    ids     count x (u32 length + UTF-8 bytes)
    payload count x dim float32, row-major

All integers little-endian. The payload is written verbatim from the float32
rows, so a file round-trips bit-identically.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"AJEM"
VERSION = 1
FLAG_NORMALIZED = 0x01


@dataclass(frozen=True)
class Store:
    """An id-keyed float32 matrix ready to serialize."""

    ids: tuple[str, ...]
    rows: np.ndarray
    normalized: bool = True
    comment: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.rows)
        if arr.ndim != 2:
            raise FormatError(f"store rows must be 2-d, got shape {arr.shape}")
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        object.__setattr__(self, "rows", np.ascontiguousarray(arr))
        ids = tuple(str(i) for i in self.ids)
        object.__setattr__(self, "ids", ids)
        if len(ids) != arr.shape[0]:
            raise FormatError(f"{len(ids)} ids for {arr.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise FormatError("duplicate ids in store")

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def pack_store(store: Store) -> bytes:
    flags = FLAG_NORMALIZED if store.normalized else 0
    parts = [
        MAGIC,
        struct.pack("<HBIQ", VERSION, flags, store.dim, store.count),
        _pack_str(store.comment),
    ]
    parts.extend(_pack_str(name) for name in store.ids)
    parts.append(np.ascontiguousarray(store.rows, dtype="<f4").tobytes())
    return b"".join(parts)


def write_store(store: Store, path: str | Path) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(pack_store(store))


class _Cursor:
    def __init__(self, blob: bytes, label: str):
        self.blob = blob
        self.pos = 0
        self.label = label

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.blob):
            raise FormatError(f"{self.label}: truncated at offset {self.pos} (wanted {n} bytes)")
        chunk = self.blob[self.pos:end]
        self.pos = end
        return chunk

    def take_str(self) -> str:
        (length,) = struct.unpack("<I", self.take(4))
        raw = self.take(length)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.label}: invalid UTF-8 string ({exc})") from None


def read_store(path: str | Path) -> Store:
    p = Path(path)
    try:
        blob = p.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"store not found: {p}") from None
    cur = _Cursor(blob, p.name)
    if cur.take(4) != MAGIC:
        raise FormatError(f"{p.name}: bad magic, not an AJEM store")
    version, flags, dim, count = struct.unpack("<HBIQ", cur.take(15))
    if version != VERSION:
        raise FormatError(f"{p.name}: unsupported version {version}")
    comment = cur.take_str()
    ids = tuple(cur.take_str() for _ in range(count))
    payload = cur.take(count * dim * 4)
    if cur.pos != len(blob):
        raise FormatError(f"{p.name}: {len(blob) - cur.pos} trailing bytes")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    return Store(ids=ids, rows=rows,
                 normalized=bool(flags & FLAG_NORMALIZED), comment=comment)
